"""Relational primitives: pair canonicalization, order-by/limit-k, filtering.

Canonicalization proves (low, high) = (min, max) of each input pair
with three per-row constraints: an order range check plus sum and
product invariants (two quadratics with equal coefficients share their
root set, so the pair is preserved; the order check fixes which root
goes where).  Identifier widths are bounded far below the modulus, so
the sum/product can never wrap.

Top-k marks rows with complementary flags, proves the flag count with
a running sum, anchors the threshold value inside the flagged multiset
via a sentinel-masked lookup table, and range-compares every row
against the threshold on the side its flag dictates.  Ties make
several flaggings valid; all are accepted.

Filters force per-row predicate flags (is-zero gadget for equality,
comparison flags for one-sided ranges) and bind the output to the
flag-masked payload with a permutation.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..cs import Cell, ColumnId, Const
from ..errors import IdOutOfRange, UnsupportedInput
from ..field import MODULUS
from ..layout import LayoutContext, iszero_witness, prefix_sums
from .regions import OutputHandle

_VALUE_SENTINEL = MODULUS - 1  # masks unflagged rows of the threshold table


# ---------------------------------------------------------------------------
# bidirectional canonicalization
# ---------------------------------------------------------------------------

@dataclass
class CanonShape:
    n_pairs: int
    used: int

    def rows(self) -> int:
        return self.n_pairs


@dataclass
class CanonWitness:
    ea: list[int]
    eb: list[int]
    low: list[int]
    high: list[int]
    used: int

    def shape(self) -> CanonShape:
        return CanonShape(len(self.ea), self.used)


def canonicalize_witness(ea: list[int], eb: list[int], b_id: int, used: int | None = None) -> CanonWitness:
    limit = 1 << b_id
    for v in (*ea, *eb):
        if not 0 <= v < limit:
            raise IdOutOfRange(f"id {v} outside [0, 2^{b_id})")
    low = [min(a, b) for a, b in zip(ea, eb)]
    high = [max(a, b) for a, b in zip(ea, eb)]
    return CanonWitness(list(ea), list(eb), low, high, len(ea) if used is None else used)


@dataclass
class CanonRegion:
    shape: CanonShape
    low: ColumnId
    high: ColumnId
    output: OutputHandle


def build_canonicalize(ctx: LayoutContext, shape: CanonShape, in_cols: tuple[ColumnId, ColumnId]) -> CanonRegion:
    # static overflow check: ids sum below 2^(b+1) and multiply below 2^(2b)
    if 2 * ctx.b_id + 1 >= 63:
        raise UnsupportedInput(f"b_id {ctx.b_id} leaves no headroom under the modulus")
    tag = ctx.next_op_tag("canon")
    t = ctx.table
    n = shape.n_pairs
    sel = ctx.selector(0, n)
    ea, eb = in_cols
    low = ctx.table_advice(shape.used, f"{tag}/low")
    high = ctx.table_advice(shape.used, f"{tag}/high")
    ctx.range_check(sel, f"{tag}/order", Cell(high) - Cell(low), 1 << ctx.b_id)
    t.add_gate(f"{tag}/sum", sel, Cell(ea) + Cell(eb) - Cell(low) - Cell(high))
    t.add_gate(f"{tag}/product", sel, Cell(ea) * Cell(eb) - Cell(low) * Cell(high))
    ctx.log_region(f"{tag}/pairs", n)
    return CanonRegion(shape, low, high, OutputHandle((low, high), n, shape.used))


def assign_canonicalize(ctx: LayoutContext, region: CanonRegion, w: CanonWitness):
    ctx.table.assign_column(region.low, w.low)
    ctx.table.assign_column(region.high, w.high)


def canonicalize_circuit(ctx, witness: CanonWitness, in_cols) -> CanonRegion:
    region = build_canonicalize(ctx, witness.shape(), in_cols)
    assign_canonicalize(ctx, region, witness)
    return region


# ---------------------------------------------------------------------------
# order-by / limit-k
# ---------------------------------------------------------------------------

@dataclass
class TopKShape:
    n_in: int
    used_in: int
    k: int
    descending: bool

    def rows(self) -> int:
        # aux spans + output + accumulator
        return 3 * self.n_in + self.n_in + (self.used_in + 1)


@dataclass
class TopKWitness:
    keys: list[int]
    values: list[int]
    is_k: list[int]
    is_nk: list[int]
    count: list[int]
    val_k: int
    flagged_table: list[int]
    masked_keys: list[int]
    masked_values: list[int]
    out_pairs: list[tuple[int, int]]
    k: int
    descending: bool
    used_in: int

    def shape(self) -> TopKShape:
        return TopKShape(len(self.keys), self.used_in, self.k, self.descending)


def topk_witness(
    keys: list[int],
    values: list[int],
    k: int,
    descending: bool = True,
    used_in: int | None = None,
    b_id: int = 16,
) -> TopKWitness:
    used = len(keys) if used_in is None else used_in
    if not 1 <= k <= used:
        raise UnsupportedInput(f"k={k} outside [1, {used}]")
    limit = 1 << b_id
    for v in values[:used]:
        if v >= limit:
            raise UnsupportedInput(f"value {v} exceeds the {b_id}-bit comparison range")
    # sort by value with original row order breaking ties
    order = sorted(range(used), key=lambda i: (-values[i], i) if descending else (values[i], i))
    chosen = set(order[:k])
    val_k = values[order[k - 1]]
    is_k = [1 if i in chosen else 0 for i in range(len(keys))]
    is_nk = [0 if i in chosen else 1 for i in range(used)] + [0] * (len(keys) - used)
    flagged = [
        values[i] if is_k[i] else _VALUE_SENTINEL
        for i in range(used)
    ]
    masked_k = [f * x for f, x in zip(is_k, keys)]
    masked_v = [f * x for f, x in zip(is_k, values)]
    out = [(keys[i], values[i]) for i in range(used) if is_k[i]]
    return TopKWitness(
        list(keys), list(values), is_k, is_nk, prefix_sums(is_k[:used]),
        val_k, flagged, masked_k, masked_v, out, k, descending, used,
    )


@dataclass
class TopKRegion:
    shape: TopKShape
    is_k: ColumnId
    is_nk: ColumnId
    count: ColumnId
    threshold: ColumnId
    flagged_table: ColumnId
    masked_keys: ColumnId
    masked_values: ColumnId
    out_key: ColumnId
    out_val: ColumnId
    z: ColumnId
    output: OutputHandle


def build_topk(ctx: LayoutContext, shape: TopKShape, in_cols: tuple[ColumnId, ColumnId]) -> TopKRegion:
    tag = ctx.next_op_tag("topk")
    t = ctx.table
    used = shape.used_in
    sel = ctx.selector(0, used)
    key_col, val_col = in_cols

    is_k = ctx.advice()
    is_nk = ctx.advice()
    ctx.boolean(sel, f"{tag}/is-k", is_k)
    t.add_gate(f"{tag}/partition", sel, Cell(is_k) + Cell(is_nk) - 1)
    count = ctx.advice()
    ctx.running_sum(f"{tag}/cardinality", used, Cell(is_k), Const(shape.k), count)

    # constant threshold column, anchored inside the flagged multiset
    vk = ctx.advice()
    if used > 1:
        step = ctx.selector(1, used)
        t.add_gate(f"{tag}/threshold-const", step, Cell(vk) - Cell(vk, -1))
    fv = ctx.table_advice(used, f"{tag}/flagged-values", tail_value=_VALUE_SENTINEL)
    t.add_gate(
        f"{tag}/flagged-def", sel,
        Cell(fv) - Cell(is_k) * Cell(val_col) - (1 - Cell(is_k)) * Const(_VALUE_SENTINEL),
    )
    t.add_lookup(f"{tag}/threshold-flagged", [Cell(vk)], [fv], ctx.selector(0, 1))

    # flagged rows compare on one side of the threshold, the rest on the other
    if shape.descending:
        probe = Cell(is_k) * (Cell(val_col) - Cell(vk)) + Cell(is_nk) * (Cell(vk) - Cell(val_col))
    else:
        probe = Cell(is_k) * (Cell(vk) - Cell(val_col)) + Cell(is_nk) * (Cell(val_col) - Cell(vk))
    t.add_lookup(f"{tag}/threshold-cmp", [probe], [ctx.id_range_table()], sel)

    vkey = ctx.advice()
    vval = ctx.advice()
    out_key = ctx.table_advice(shape.k, f"{tag}/out_key")
    out_val = ctx.table_advice(shape.k, f"{tag}/out_val")
    z = ctx.advice()
    ctx.mask(sel, f"{tag}/masked_key", Cell(is_k), Cell(key_col), vkey)
    ctx.mask(sel, f"{tag}/masked_val", Cell(is_k), Cell(val_col), vval)
    t.add_permutation(f"{tag}/output", (vkey, vval), (out_key, out_val), z, sel, sel)

    ctx.log_region(f"{tag}/aux", 3 * shape.n_in)
    ctx.log_region(f"{tag}/out", shape.n_in)
    ctx.log_region(f"{tag}/acc", used + 1)
    return TopKRegion(
        shape, is_k, is_nk, count, vk, fv, vkey, vval, out_key, out_val, z,
        OutputHandle((out_key, out_val), shape.n_in, shape.k),
    )


def assign_topk(ctx: LayoutContext, region: TopKRegion, w: TopKWitness):
    t = ctx.table
    t.assign_column(region.is_k, w.is_k)
    t.assign_column(region.is_nk, w.is_nk)
    t.assign_column(region.count, w.count)
    t.assign_column(region.threshold, [w.val_k] * w.used_in)
    t.assign_column(region.flagged_table, w.flagged_table)
    t.assign_column(region.masked_keys, w.masked_keys)
    t.assign_column(region.masked_values, w.masked_values)
    t.assign_column(region.out_key, [p[0] for p in w.out_pairs])
    t.assign_column(region.out_val, [p[1] for p in w.out_pairs])


def orderby_limitk_circuit(ctx, witness: TopKWitness, in_cols) -> TopKRegion:
    region = build_topk(ctx, witness.shape(), in_cols)
    assign_topk(ctx, region, witness)
    return region


# ---------------------------------------------------------------------------
# property filter
# ---------------------------------------------------------------------------

@dataclass
class FilterShape:
    n_in: int
    predicate: str  # "eq" | "le" | "ge"
    target: int
    out_used: int
    join_prop: str | None = None  # node property joined via the payload's second column

    def rows(self) -> int:
        extra = self.n_in if self.join_prop else 0
        return self.n_in + extra + self.n_in + (self.n_in + 1)


@dataclass
class FilterWitness:
    payload_a: list[int]
    payload_b: list[int]
    prop_values: list[int]   # the filtered value per row (joined or direct)
    flags: list[int]
    flag_inv: list[int]      # equality mode only
    masked_a: list[int]
    masked_b: list[int]
    out_pairs: list[tuple[int, int]]
    predicate: str
    target: int
    join_prop: str | None = None

    def shape(self) -> FilterShape:
        return FilterShape(
            len(self.payload_a), self.predicate, self.target,
            len(self.out_pairs), self.join_prop,
        )


def filter_witness(
    payload_a: list[int],
    payload_b: list[int],
    prop_values: list[int],
    predicate: str,
    target: int,
    join_prop: str | None = None,
) -> FilterWitness:
    if predicate not in ("eq", "le", "ge"):
        raise UnsupportedInput(f"unknown predicate '{predicate}'")
    if predicate == "eq" and target == 0:
        raise UnsupportedInput("equality target 0 collides with dummy rows")
    if predicate == "eq":
        flags, invs = iszero_witness([(v - target) for v in prop_values])
    else:
        invs = [0] * len(prop_values)
        if predicate == "le":
            flags = [1 if v <= target else 0 for v in prop_values]
        else:
            flags = [1 if v >= target else 0 for v in prop_values]
    masked_a = [f * a for f, a in zip(flags, payload_a)]
    masked_b = [f * b for f, b in zip(flags, payload_b)]
    out = [
        (a, b) for f, a, b in zip(flags, payload_a, payload_b)
        if f and (a, b) != (0, 0)
    ]
    return FilterWitness(
        list(payload_a), list(payload_b), list(prop_values), flags, invs,
        masked_a, masked_b, out, predicate, target, join_prop,
    )


@dataclass
class FilterRegion:
    shape: FilterShape
    prop: ColumnId | None   # joined property column (None when filtering a payload column)
    flag: ColumnId
    flag_inv: ColumnId | None
    masked_a: ColumnId
    masked_b: ColumnId
    out_a: ColumnId
    out_b: ColumnId
    z: ColumnId
    output: OutputHandle


def build_filter(
    ctx: LayoutContext,
    shape: FilterShape,
    payload_cols: tuple[ColumnId, ColumnId],
    value_col: ColumnId | None = None,
    node_table: tuple[ColumnId, ColumnId] | None = None,
) -> FilterRegion:
    tag = ctx.next_op_tag("filter")
    t = ctx.table
    n = shape.n_in
    sel = ctx.selector(0, n)
    pa, pb = payload_cols

    if shape.join_prop is not None:
        if node_table is None:
            raise UnsupportedInput("joined filter needs the (node id, property) table")
        prop = ctx.advice()
        t.add_lookup(f"{tag}/prop-join", [Cell(pb), Cell(prop)], list(node_table), sel)
        value = Cell(prop)
    else:
        if value_col is None:
            raise UnsupportedInput("direct filter needs an aligned value column")
        prop = None
        value = Cell(value_col)

    flag = ctx.advice()
    inv = None
    if shape.predicate == "eq":
        inv = ctx.advice()
        ctx.is_zero(sel, f"{tag}/match", value - Const(shape.target), flag, inv)
    elif shape.predicate == "le":
        ctx.le_flag(sel, f"{tag}/match", flag, value, Const(shape.target), 1 << ctx.b_id)
    else:  # ge
        ctx.le_flag(sel, f"{tag}/match", flag, Const(shape.target), value, 1 << ctx.b_id)

    va = ctx.advice()
    vb = ctx.advice()
    out_a = ctx.table_advice(shape.out_used, f"{tag}/out_a")
    out_b = ctx.table_advice(shape.out_used, f"{tag}/out_b")
    z = ctx.advice()
    ctx.mask(sel, f"{tag}/masked_a", Cell(flag), Cell(pa), va)
    ctx.mask(sel, f"{tag}/masked_b", Cell(flag), Cell(pb), vb)
    t.add_permutation(f"{tag}/output", (va, vb), (out_a, out_b), z, sel, sel)

    if shape.join_prop:
        ctx.log_region(f"{tag}/prop", n)
    ctx.log_region(f"{tag}/aux", n)
    ctx.log_region(f"{tag}/out", n)
    ctx.log_region(f"{tag}/acc", n + 1)
    return FilterRegion(
        shape, prop, flag, inv, va, vb, out_a, out_b, z,
        OutputHandle((out_a, out_b), n, shape.out_used),
    )


def assign_filter(ctx: LayoutContext, region: FilterRegion, w: FilterWitness):
    t = ctx.table
    if region.prop is not None:
        t.assign_column(region.prop, w.prop_values)
    t.assign_column(region.flag, w.flags)
    if region.flag_inv is not None:
        t.assign_column(region.flag_inv, w.flag_inv)
    t.assign_column(region.masked_a, w.masked_a)
    t.assign_column(region.masked_b, w.masked_b)
    t.assign_column(region.out_a, [p[0] for p in w.out_pairs])
    t.assign_column(region.out_b, [p[1] for p in w.out_pairs])


def filter_circuit(ctx, witness: FilterWitness, payload_cols, value_col=None, node_table=None) -> FilterRegion:
    region = build_filter(ctx, witness.shape(), payload_cols, value_col, node_table)
    assign_filter(ctx, region, witness)
    return region
