"""Exception hierarchy shared across the package."""


class ZkGraphError(Exception):
    """Base class for every error raised by this package."""


# --- field arithmetic ---

class InversionOfZero(ZkGraphError):
    """Multiplicative inverse of the zero element was requested."""


class WrongLength(ZkGraphError):
    """Byte string has the wrong length for the requested conversion."""


# --- constraint system ---

class RowsNotPowerOfTwo(ZkGraphError):
    """Table row count must be a power of two."""


class UnknownColumn(ZkGraphError):
    """A declaration or assignment referenced a column the table does not have."""


class BadArity(ZkGraphError):
    """Lookup input tuple arity does not match the table tuple arity."""


class TooManyRows(ZkGraphError):
    """More values supplied than the column has rows."""


class BadGate(ZkGraphError):
    """Gate violates the rotation or degree limits."""


class CommitmentsMissing(ZkGraphError):
    """Challenge derivation was attempted without the full commitment list."""


class ChallengesMissing(ZkGraphError):
    """A permutation argument was checked before challenges were derived."""


class DivisionByZeroDenominator(ZkGraphError):
    """A running-product denominator vanished (and retries were exhausted)."""


# --- graph store ---

class ParseError(ZkGraphError):
    """CSV ingestion failed; carries the offending 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DanglingEdge(ZkGraphError):
    """Edge endpoint does not exist in the node table."""


class DuplicateNodeId(ZkGraphError):
    """Node identifier occurs more than once."""


class TargetTooSmall(ZkGraphError):
    """Padding target is below the current row count."""


class IdOutOfRange(ZkGraphError):
    """Identifier falls outside the configured id width (or hits a reserved value)."""


# --- operators ---

class UnknownNode(ZkGraphError):
    """Query referenced a node id absent from the database."""


class SentinelCollision(ZkGraphError):
    """An input id collides with a reserved sentinel value."""


class DmaxTooSmall(ZkGraphError):
    """Some true shortest-path distance reaches or exceeds the distance bound."""


class PathNotFound(ZkGraphError):
    """No path exists for the requested reachability/last-hop witness."""


class UnsupportedInput(ZkGraphError):
    """Operator cannot be applied to the given input shape."""


# --- planner ---

class PlanSyntaxError(ZkGraphError):
    """Plan text failed to parse; carries 1-based line and column."""

    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class UnknownOperator(ZkGraphError):
    """Plan names an operator kind that does not exist."""


class UnboundInput(ZkGraphError):
    """Plan node references an input that no prior node or table provides."""


class UnboundParam(ZkGraphError):
    """Plan references a $parameter that was not supplied."""


class RowBudgetExceeded(ZkGraphError):
    """An operator's rows exceed the budget the plan allows for its region."""


# --- bundles ---

class MalformedBundle(ZkGraphError):
    """Attestation bundle bytes do not parse."""
