"""Layout context and shared gadgets for operator circuits.

Operators are built in two phases so the verifier can reconstruct the
exact circuit without any witness:

* build phase  -- a pure function of public shape numbers (row extents,
  bounds, parameters): declares columns, fixed content, selectors,
  gates, lookups and permutations;
* assign phase -- fills advice columns from the operator witness.

Every advice column that serves as a lookup-table side is zero-beyond-
extent constrained (tail gates), because lookup tables span the whole
row space of the table: an unconstrained tail cell would let a prover
plant arbitrary tuples.  The reserved dummy tuple (0, ..., 0) that the
tails produce is also what masked (selector-disabled) lookup inputs
resolve to, so the two conventions are one mechanism.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .cs import Cell, ColumnId, ConstraintTable, Expr, next_pow2
from .field import MODULUS


@dataclass
class RegionLog:
    name: str
    rows: int


class LayoutContext:
    """Wraps a table under construction; owns shared fixed structures."""

    def __init__(self, table: ConstraintTable, b_id: int):
        self.table = table
        self.b_id = b_id
        self.regions: list[RegionLog] = []
        self._range_tables: dict[int, ColumnId] = {}
        self._positions: dict[int, ColumnId] = {}
        self._selectors: dict[tuple[int, int], ColumnId] = {}
        self._op_counter = 0

    # --- accounting ---

    def log_region(self, name: str, rows: int):
        self.regions.append(RegionLog(name, rows))

    def total_rows(self) -> int:
        return sum(r.rows for r in self.regions)

    def next_op_tag(self, kind: str) -> str:
        tag = f"op{self._op_counter}:{kind}"
        self._op_counter += 1
        return tag

    # --- shared fixed structures ---

    def selector(self, start: int, stop: int) -> ColumnId:
        """Fixed 0/1 column active on rows [start, stop); cached."""
        stop = min(stop, self.table.n_rows)
        start = min(start, stop)
        key = (start, stop)
        if key not in self._selectors:
            vals = [0] * self.table.n_rows
            for r in range(start, stop):
                vals[r] = 1
            self._selectors[key] = self.table.add_fixed(vals)
        return self._selectors[key]

    def range_table(self, length: int) -> ColumnId:
        """Fixed column holding 0..length-1 (a lookup proves membership)."""
        if length not in self._range_tables:
            if length > self.table.n_rows:
                raise ValueError(f"range table of {length} rows exceeds table height {self.table.n_rows}")
            self._range_tables[length] = self.table.add_fixed(list(range(length)))
            self.log_region(f"shared:range[{length}]", length)
        return self._range_tables[length]

    def id_range_table(self) -> ColumnId:
        return self.range_table(1 << self.b_id)

    def position_column(self, length: int) -> ColumnId:
        """Fixed column holding 0..length-1 used as a position index."""
        if length not in self._positions:
            self._positions[length] = self.table.add_fixed(list(range(length)))
        return self._positions[length]

    # --- column helpers ---

    def advice(self) -> ColumnId:
        return self.table.add_advice()

    def table_advice(self, extent: int, name: str, tail_value: int = 0) -> ColumnId:
        """Advice column with its tail [extent, n_rows) pinned to a constant.

        Required for any advice column referenced as a lookup table: an
        unconstrained tail cell would let a prover plant table tuples.
        """
        col = self.table.add_advice()
        tail = self.selector(extent, self.table.n_rows)
        expr = Cell(col) - tail_value if tail_value else Cell(col)
        self.table.add_gate(f"{name}/tail", tail, expr)
        if tail_value:
            vals = self.table.columns[col]
            for r in range(extent, self.table.n_rows):
                vals[r] = tail_value % MODULUS
        return col

    # --- gadgets ---

    def boolean(self, sel: ColumnId, name: str, col: ColumnId):
        self.table.add_gate(f"{name}/bool", sel, Cell(col) * (1 - Cell(col)))

    def is_zero(self, sel: ColumnId, name: str, expr: Expr, flag: ColumnId, inv: ColumnId):
        """flag = 1 iff expr == 0, with inverse witness for the nonzero case."""
        self.boolean(sel, name, flag)
        self.table.add_gate(f"{name}/zero", sel, Cell(flag) * expr)
        self.table.add_gate(f"{name}/nonzero", sel, (1 - Cell(flag)) * (expr * Cell(inv) - 1))

    def mask(self, sel: ColumnId, name: str, flag_expr: Expr, source: Expr, masked: ColumnId):
        """masked = flag * source on selected rows (flag must be boolean)."""
        self.table.add_gate(f"{name}/mask", sel, Cell(masked) - flag_expr * source)

    def range_check(self, sel: ColumnId, name: str, expr: Expr, length: int):
        """Selected rows must have expr in [0, length)."""
        self.table.add_lookup(f"{name}/range", [expr], [self.range_table(length)], sel)

    def le_flag(self, sel: ColumnId, name: str, flag: ColumnId, lhs: Expr, rhs: Expr, length: int):
        """flag = 1 iff lhs <= rhs, both sides bounded below length.

        Encoded as one lookup: flag picks which difference must be
        non-negative (rhs-lhs when set, lhs-rhs-1 when clear).
        """
        self.boolean(sel, name, flag)
        probe = Cell(flag) * (rhs - lhs) + (1 - Cell(flag)) * (lhs - rhs - 1)
        self.table.add_lookup(f"{name}/cmp", [probe], [self.range_table(length)], sel)

    def running_sum(
        self,
        name: str,
        extent: int,
        item: Expr,
        total: Expr,
        acc: ColumnId,
    ):
        """Constrain acc to prefix-sums of item over [0, extent); final == total."""
        first = self.selector(0, 1)
        self.table.add_gate(f"{name}/sum-first", first, Cell(acc) - item)
        if extent > 1:
            step = self.selector(1, extent)
            self.table.add_gate(f"{name}/sum-step", step, Cell(acc) - Cell(acc, -1) - item)
        last = self.selector(extent - 1, extent)
        self.table.add_gate(f"{name}/sum-total", last, Cell(acc) - total)


# --- witness-side helpers matching the gadgets ---

def iszero_witness(values: list[int]) -> tuple[list[int], list[int]]:
    """(flags, inverses) for the is_zero gadget over the given expr values."""
    flags, invs = [], []
    for v in values:
        v %= MODULUS
        if v == 0:
            flags.append(1)
            invs.append(0)
        else:
            flags.append(0)
            invs.append(pow(v, MODULUS - 2, MODULUS))
    return flags, invs


def prefix_sums(items: list[int]) -> list[int]:
    acc, out = 0, []
    for v in items:
        acc = (acc + v) % MODULUS
        out.append(acc)
    return out


def plan_n_rows(max_span: int) -> int:
    """Table height: strictly above the largest span so that a zero tail
    always exists (masked lookups resolve to the all-zero dummy tuple)."""
    return next_pow2(max_span + 1)
