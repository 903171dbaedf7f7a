"""PLONKish constraint tables with a direct satisfiability checker.

A table is a power-of-two grid of field cells organised into advice
(private witness), fixed (public circuit description) and instance
(public I/O) columns.  Four constraint kinds are supported:

* gates      -- selector-activated polynomial identities over a row and
                its neighbours (rotations wrap cyclically),
* lookups    -- every selected input tuple must occur among the rows of
                designated table columns,
* perms      -- randomized multiset equality of two column pairs, via
                tuple compression ``c0 + alpha * c1`` and a running
                product accumulator driven by a second challenge beta,
* copies     -- cell-to-cell equality (wiring between regions), plus
                bindings of instance cells to declared public values.

``check_satisfied`` evaluates all of it semantically rather than
building a polynomial IOP: no vanishing argument, no commitment
openings.  The satisfiability semantics are exactly what a SNARK
backend would prove; the backend seam is the pair (column hash
commitments, Fiat-Shamir challenge transcript), which a real
polynomial-commitment backend could replace without touching any
circuit construction in this package.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field as dc_field
from typing import Callable, Iterable, NamedTuple, Sequence

from .errors import (
    BadArity,
    BadGate,
    ChallengesMissing,
    CommitmentsMissing,
    DivisionByZeroDenominator,
    RowsNotPowerOfTwo,
    TooManyRows,
    UnknownColumn,
)
from .field import MODULUS, cells_to_bytes, fe_from_bytes_wide

DOMAIN_TAG = b"ZKGRAPH/v1"
COLUMN_COMMIT_TAG = b"c"
MAX_ROTATION = 2
MAX_GATE_DEGREE = 5  # after selector multiplication
MAX_BETA_RETRIES = 4


class ColumnKind(enum.IntEnum):
    ADVICE = 0
    FIXED = 1
    INSTANCE = 2


class ColumnId(NamedTuple):
    kind: ColumnKind
    index: int

    def label(self) -> str:
        return f"{self.kind.name.lower()}[{self.index}]"


# ---------------------------------------------------------------------------
# gate expressions
# ---------------------------------------------------------------------------

class Expr:
    """Polynomial expression over table cells; supports +, -, *."""

    def __add__(self, other):
        return _Bin("+", self, _wrap(other))

    def __radd__(self, other):
        return _Bin("+", _wrap(other), self)

    def __sub__(self, other):
        return _Bin("-", self, _wrap(other))

    def __rsub__(self, other):
        return _Bin("-", _wrap(other), self)

    def __mul__(self, other):
        return _Bin("*", self, _wrap(other))

    def __rmul__(self, other):
        return _Bin("*", _wrap(other), self)

    def degree(self) -> int:
        raise NotImplementedError

    def columns(self) -> set[ColumnId]:
        raise NotImplementedError

    def max_rotation(self) -> int:
        raise NotImplementedError


class Cell(Expr):
    __slots__ = ("column", "rotation")

    def __init__(self, column: ColumnId, rotation: int = 0):
        self.column = column
        self.rotation = rotation

    def degree(self):
        return 1

    def columns(self):
        return {self.column}

    def max_rotation(self):
        return abs(self.rotation)

    def __repr__(self):
        return f"{self.column.label()}@{self.rotation:+d}" if self.rotation else self.column.label()


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: int):
        self.value = value % MODULUS

    def degree(self):
        return 0

    def columns(self):
        return set()

    def max_rotation(self):
        return 0

    def __repr__(self):
        return str(self.value)


class _Bin(Expr):
    __slots__ = ("op", "lhs", "rhs")

    def __init__(self, op: str, lhs: Expr, rhs: Expr):
        self.op = op
        self.lhs = lhs
        self.rhs = rhs

    def degree(self):
        dl, dr = self.lhs.degree(), self.rhs.degree()
        return dl + dr if self.op == "*" else max(dl, dr)

    def columns(self):
        return self.lhs.columns() | self.rhs.columns()

    def max_rotation(self):
        return max(self.lhs.max_rotation(), self.rhs.max_rotation())

    def __repr__(self):
        return f"({self.lhs!r} {self.op} {self.rhs!r})"


def _wrap(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, int):
        return Const(x)
    raise TypeError(f"cannot use {type(x).__name__} in a gate expression")


def compile_expr(expr: Expr, columns: dict[ColumnId, list[int]], n_rows: int) -> Callable[[int], int]:
    """Build a row -> value closure with columns pre-resolved."""
    if isinstance(expr, Const):
        v = expr.value
        return lambda row: v
    if isinstance(expr, Cell):
        col = columns[expr.column]
        rot = expr.rotation
        if rot == 0:
            return lambda row: col[row]
        return lambda row: col[(row + rot) % n_rows]
    assert isinstance(expr, _Bin)
    f = compile_expr(expr.lhs, columns, n_rows)
    g = compile_expr(expr.rhs, columns, n_rows)
    if expr.op == "+":
        return lambda row: (f(row) + g(row)) % MODULUS
    if expr.op == "-":
        return lambda row: (f(row) - g(row)) % MODULUS
    return lambda row: (f(row) * g(row)) % MODULUS


# ---------------------------------------------------------------------------
# declarations
# ---------------------------------------------------------------------------

@dataclass
class Gate:
    name: str
    selector: ColumnId
    expr: Expr


@dataclass
class LookupDecl:
    name: str
    input_exprs: list[Expr]
    table_cols: list[ColumnId]
    selector: ColumnId | None = None


@dataclass
class PermutationDecl:
    name: str
    left: tuple[ColumnId, ColumnId]
    right: tuple[ColumnId, ColumnId]
    z_col: ColumnId
    left_selector: ColumnId | None = None
    right_selector: ColumnId | None = None


@dataclass(frozen=True)
class CellRef:
    column: ColumnId
    row: int


@dataclass
class Failure:
    kind: str  # gate | lookup | perm | copy | instance
    index: int
    row: int
    detail: str

    def as_tuple(self):
        return (self.kind, self.index, self.row, self.detail)


@dataclass
class VerdictReport:
    satisfied: bool
    failures: list[Failure] = dc_field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {"satisfied": self.satisfied, "failures": [f.as_tuple() for f in self.failures]},
            separators=(",", ":"),
        )

    def summary(self, limit: int = 10) -> str:
        if self.satisfied:
            return "satisfied"
        lines = [f"{len(self.failures)} constraint failure(s):"]
        for f in self.failures[:limit]:
            lines.append(f"  [{f.kind} #{f.index} row {f.row}] {f.detail}")
        if len(self.failures) > limit:
            lines.append(f"  ... and {len(self.failures) - limit} more")
        return "\n".join(lines)


def build_running_product(c1: Sequence[int], c2: Sequence[int], beta: int) -> list[int]:
    """Accumulator z with z[0]=1 and z[i+1] = z[i] * (c1[i]+beta)/(c2[i]+beta).

    If the two sequences are equal as multisets the final entry is 1.
    Raises DivisionByZeroDenominator when some c2[i] + beta vanishes.
    """
    if len(c1) != len(c2):
        raise ValueError("running product sides must have equal length")
    z = [1]
    acc = 1
    for a, b in zip(c1, c2):
        den = (b + beta) % MODULUS
        if den == 0:
            raise DivisionByZeroDenominator(f"c2 entry {b} with beta {beta}")
        acc = acc * (a + beta) % MODULUS * pow(den, MODULUS - 2, MODULUS) % MODULUS
        z.append(acc)
    return z


# ---------------------------------------------------------------------------
# the table
# ---------------------------------------------------------------------------

class ConstraintTable:
    """Mutable during construction/assignment, then checked as a whole."""

    def __init__(self, n_rows: int):
        if n_rows < 1 or (n_rows & (n_rows - 1)) != 0:
            raise RowsNotPowerOfTwo(f"n_rows {n_rows} is not a power of two")
        self.n_rows = n_rows
        self.columns: dict[ColumnId, list[int]] = {}
        self.decl_order: list[ColumnId] = []
        self.gates: list[Gate] = []
        self.lookups: list[LookupDecl] = []
        self.perms: list[PermutationDecl] = []
        self.copies: list[tuple[CellRef, CellRef]] = []
        self.instance_bindings: list[tuple[ColumnId, int, int]] = []
        self.challenges: list[int] = []
        self.challenge_retry: int = 0
        self._kind_counts = {k: 0 for k in ColumnKind}
        self._nonzero_cache: dict[ColumnId, list[int]] = {}

    # --- column declaration & assignment ---

    def _add_column(self, kind: ColumnKind) -> ColumnId:
        col = ColumnId(kind, self._kind_counts[kind])
        self._kind_counts[kind] += 1
        self.columns[col] = [0] * self.n_rows
        self.decl_order.append(col)
        return col

    def add_advice(self) -> ColumnId:
        return self._add_column(ColumnKind.ADVICE)

    def add_fixed(self, values: Sequence[int] | None = None) -> ColumnId:
        col = self._add_column(ColumnKind.FIXED)
        if values is not None:
            self.assign_column(col, values)
        return col

    def add_instance(self) -> ColumnId:
        return self._add_column(ColumnKind.INSTANCE)

    def _require(self, col: ColumnId):
        if col not in self.columns:
            raise UnknownColumn(col.label())

    def assign_column(self, col: ColumnId, values: Sequence[int]):
        """Write values from row 0; later rows keep their prior content."""
        self._require(col)
        if len(values) > self.n_rows:
            raise TooManyRows(f"{len(values)} values into {self.n_rows} rows")
        dest = self.columns[col]
        for i, v in enumerate(values):
            dest[i] = v % MODULUS
        self._nonzero_cache.pop(col, None)

    def set_cell(self, col: ColumnId, row: int, value: int):
        self._require(col)
        if row >= self.n_rows:
            raise TooManyRows(f"row {row} out of {self.n_rows}")
        self.columns[col][row] = value % MODULUS
        self._nonzero_cache.pop(col, None)

    def cell(self, col: ColumnId, row: int) -> int:
        return self.columns[col][row]

    # --- constraint declaration ---

    def add_gate(self, name: str, selector: ColumnId, expr: Expr) -> Gate:
        self._require(selector)
        if selector.kind != ColumnKind.FIXED:
            raise BadGate(f"gate '{name}' selector must be a fixed column")
        for c in expr.columns():
            self._require(c)
        if expr.max_rotation() > MAX_ROTATION:
            raise BadGate(f"gate '{name}' rotation exceeds +/-{MAX_ROTATION}")
        if expr.degree() + 1 > MAX_GATE_DEGREE:
            raise BadGate(f"gate '{name}' degree {expr.degree()}+1 exceeds {MAX_GATE_DEGREE}")
        gate = Gate(name, selector, expr)
        self.gates.append(gate)
        return gate

    def add_lookup(
        self,
        name: str,
        input_exprs: Sequence[Expr],
        table_cols: Sequence[ColumnId],
        selector: ColumnId | None = None,
    ) -> LookupDecl:
        if len(input_exprs) != len(table_cols):
            raise BadArity(f"lookup '{name}': {len(input_exprs)} inputs vs {len(table_cols)} table columns")
        for c in table_cols:
            self._require(c)
        for e in input_exprs:
            for c in e.columns():
                self._require(c)
        if selector is not None:
            self._require(selector)
        decl = LookupDecl(name, [_wrap(e) for e in input_exprs], list(table_cols), selector)
        self.lookups.append(decl)
        return decl

    def add_permutation(
        self,
        name: str,
        left: tuple[ColumnId, ColumnId],
        right: tuple[ColumnId, ColumnId],
        z_col: ColumnId,
        left_selector: ColumnId | None = None,
        right_selector: ColumnId | None = None,
    ) -> PermutationDecl:
        for c in (*left, *right, z_col):
            self._require(c)
        if z_col.kind != ColumnKind.ADVICE:
            raise BadGate(f"permutation '{name}' accumulator must be an advice column")
        for s in (left_selector, right_selector):
            if s is not None:
                self._require(s)
        decl = PermutationDecl(name, tuple(left), tuple(right), z_col, left_selector, right_selector)
        self.perms.append(decl)
        return decl

    def add_copy(self, a: CellRef, b: CellRef):
        self._require(a.column)
        self._require(b.column)
        self.copies.append((a, b))

    def bind_instance(self, col: ColumnId, row: int, value: int):
        self._require(col)
        if col.kind != ColumnKind.INSTANCE:
            raise BadGate("instance binding requires an instance column")
        self.set_cell(col, row, value)
        self.instance_bindings.append((col, row, value % MODULUS))

    # --- commitments & challenges ---

    def commit_column(self, col: ColumnId) -> bytes:
        self._require(col)
        header = COLUMN_COMMIT_TAG + bytes([col.kind]) + col.index.to_bytes(2, "little")
        return hashlib.sha256(header + cells_to_bytes(self.columns[col])).digest()

    def commit_columns(self) -> list[bytes]:
        """One 32-byte hash per column, in declaration order."""
        return [self.commit_column(c) for c in self.decl_order]

    def _accumulator_columns(self) -> set[ColumnId]:
        return {p.z_col for p in self.perms}

    def derive_challenges(self, commitments: Sequence[bytes]) -> tuple[int, int]:
        """Fiat-Shamir (alpha, beta) from the column commitments.

        Accumulator columns are excluded from the transcript because
        their content depends on beta (the multi-phase commitment
        seam).  Beta is re-derived with an incremented retry counter
        while any permutation denominator vanishes, up to
        MAX_BETA_RETRIES, after which derivation fails hard.
        """
        if len(commitments) != len(self.decl_order):
            raise CommitmentsMissing(
                f"need {len(self.decl_order)} column commitments, got {len(commitments)}"
            )
        skip = self._accumulator_columns()
        state = hashlib.sha256(DOMAIN_TAG).digest()
        for col, com in zip(self.decl_order, commitments):
            if col in skip:
                continue
            state = hashlib.sha256(state + com).digest()
        alpha = fe_from_bytes_wide(hashlib.sha256(state + b"alpha").digest())
        state = hashlib.sha256(state + b"alpha").digest()
        beta = None
        retry = 0
        for attempt in range(MAX_BETA_RETRIES + 1):
            candidate = fe_from_bytes_wide(
                hashlib.sha256(state + b"beta" + attempt.to_bytes(4, "little")).digest()
            )
            if not self._any_vanishing_denominator(alpha, candidate):
                beta, retry = candidate, attempt
                break
        if beta is None:
            raise DivisionByZeroDenominator(
                f"all {MAX_BETA_RETRIES + 1} beta candidates hit a zero denominator"
            )
        self.challenges = [alpha, beta]
        self.challenge_retry = retry
        return alpha, beta

    def _any_vanishing_denominator(self, alpha: int, beta: int) -> bool:
        for pm in self.perms:
            r0 = self.columns[pm.right[0]]
            r1 = self.columns[pm.right[1]]
            for row in self._selected_rows(pm.right_selector):
                if (r0[row] + alpha * r1[row] + beta) % MODULUS == 0:
                    return True
        return False

    def assign_accumulators(self):
        """Fill every permutation's z column from the derived challenges."""
        if self.perms and len(self.challenges) < 2:
            raise ChallengesMissing("derive challenges before assigning accumulators")
        for pm in self.perms:
            c1 = self._compressed(pm.left, pm.left_selector)
            c2 = self._compressed(pm.right, pm.right_selector)
            if len(c1) != len(c2):
                # Unequal selected counts cannot satisfy the argument;
                # leave the accumulator at its default so the check reports it.
                continue
            z = build_running_product(c1, c2, self.challenges[1])
            self.assign_column(pm.z_col, z[: self.n_rows])

    def _compressed(self, cols: tuple[ColumnId, ColumnId], selector: ColumnId | None) -> list[int]:
        alpha = self.challenges[0]
        c0 = self.columns[cols[0]]
        c1 = self.columns[cols[1]]
        return [(c0[r] + alpha * c1[r]) % MODULUS for r in self._selected_rows(selector)]

    # --- row selection helpers ---

    def _selected_rows(self, selector: ColumnId | None) -> list[int] | range:
        if selector is None:
            return range(self.n_rows)
        cached = self._nonzero_cache.get(selector)
        if cached is None:
            col = self.columns[selector]
            cached = [r for r in range(self.n_rows) if col[r]]
            self._nonzero_cache[selector] = cached
        return cached

    # --- the checker ---

    def check_satisfied(self) -> VerdictReport:
        """Evaluate every constraint; returns the full failure list."""
        if self.perms and len(self.challenges) < 2:
            raise ChallengesMissing("permutations declared but challenges not derived")
        failures: list[Failure] = []
        failures.extend(self._check_gates())
        failures.extend(self._check_lookups())
        failures.extend(self._check_perms())
        failures.extend(self._check_copies())
        failures.extend(self._check_instance())
        return VerdictReport(not failures, failures)

    def _check_gates(self) -> Iterable[Failure]:
        for gi, gate in enumerate(self.gates):
            sel = self.columns[gate.selector]
            evaluate = compile_expr(gate.expr, self.columns, self.n_rows)
            for row in self._selected_rows(gate.selector):
                if sel[row] * evaluate(row) % MODULUS:
                    yield Failure("gate", gi, row, f"{gate.name}: nonzero at row {row}")

    def _check_lookups(self) -> Iterable[Failure]:
        for li, lk in enumerate(self.lookups):
            table = set(zip(*(self.columns[c] for c in lk.table_cols))) if lk.table_cols else set()
            evaluators = [compile_expr(e, self.columns, self.n_rows) for e in lk.input_exprs]
            for row in self._selected_rows(lk.selector):
                tup = tuple(ev(row) for ev in evaluators)
                if tup not in table:
                    yield Failure("lookup", li, row, f"{lk.name}: tuple {tup} not in table")

    def _check_perms(self) -> Iterable[Failure]:
        beta = self.challenges[1] if len(self.challenges) > 1 else 0
        for pi, pm in enumerate(self.perms):
            c1 = self._compressed(pm.left, pm.left_selector)
            c2 = self._compressed(pm.right, pm.right_selector)
            if len(c1) != len(c2):
                yield Failure(
                    "perm", pi, -1,
                    f"{pm.name}: selected row counts differ ({len(c1)} vs {len(c2)})",
                )
                continue
            z = self.columns[pm.z_col]
            if z[0] != 1:
                yield Failure("perm", pi, 0, f"{pm.name}: accumulator does not start at 1")
                continue
            m = len(c1)
            broken = False
            # Multiplication-only step check: z[k+1]*(c2[k]+b) == z[k]*(c1[k]+b),
            # with a virtual wraparound boundary when the accumulator fills the table.
            for k in range(m):
                num = (c1[k] + beta) % MODULUS
                den = (c2[k] + beta) % MODULUS
                if k + 1 < self.n_rows:
                    if z[k + 1] * den % MODULUS != z[k] * num % MODULUS:
                        yield Failure("perm", pi, k, f"{pm.name}: running product step {k} broken")
                        broken = True
                        break
                else:  # k + 1 == m == n_rows: final value must wrap to 1
                    if z[k] * num % MODULUS != den:
                        yield Failure(
                            "perm", pi, m,
                            f"{pm.name}: final accumulator != 1 (multisets differ)",
                        )
                        broken = True
            if broken:
                continue
            if m < self.n_rows and z[m] != 1:
                yield Failure(
                    "perm", pi, m,
                    f"{pm.name}: final accumulator != 1 (multisets differ)",
                )
            # accumulator cells past the boundary must stay zeroed; they are
            # outside the challenge transcript, so they would otherwise be
            # the only tamperable cells a re-verification could not see
            for row in range(m + 1, self.n_rows):
                if z[row]:
                    yield Failure("perm", pi, row, f"{pm.name}: accumulator tail not zeroed")
                    break

    def _check_copies(self) -> Iterable[Failure]:
        for ci, (a, b) in enumerate(self.copies):
            va = self.columns[a.column][a.row]
            vb = self.columns[b.column][b.row]
            if va != vb:
                yield Failure(
                    "copy", ci, a.row,
                    f"{a.column.label()}[{a.row}]={va} != {b.column.label()}[{b.row}]={vb}",
                )

    def _check_instance(self) -> Iterable[Failure]:
        for ii, (col, row, value) in enumerate(self.instance_bindings):
            actual = self.columns[col][row]
            if actual != value:
                yield Failure(
                    "instance", ii, row,
                    f"{col.label()}[{row}]={actual} != declared public value {value}",
                )

    # --- metadata for cost reports ---

    def stats(self) -> dict[str, int]:
        return {
            "n_rows": self.n_rows,
            "columns": len(self.decl_order),
            "gates": len(self.gates),
            "lookups": len(self.lookups),
            "perms": len(self.perms),
            "copies": len(self.copies),
        }


def build_table(n_rows: int) -> ConstraintTable:
    return ConstraintTable(n_rows)


def next_pow2(n: int) -> int:
    if n <= 1:
        return 1
    return 1 << (n - 1).bit_length()
