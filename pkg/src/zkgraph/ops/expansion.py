"""Expansion operators: single-source (edge-list and CSR) and set-based.

Witness generation executes the traversal natively; the circuit then
establishes two facts about the claimed output table:

* completeness -- a flag column marks exactly the qualifying edge rows
  (forced both ways: a match gate pins flagged rows, an inverse-witness
  gate pins unflagged rows, and for set expansion the flag is the
  is-zero indicator of ``source - greatest_lower_bound``);
* correctness  -- a randomized permutation argument proves the output
  multiset equals the flag-masked edge multiset.  Masked rows and the
  output's padding rows both resolve to the reserved dummy pair (0, 0),
  which keeps both permutation sides at the same public extent without
  leaking the true result size into the circuit shape.

The CSR variant additionally proves the row-pointer segment selection
(position lookups plus range-derived binary selectors), which is what
makes it strictly costlier than the edge-list variant.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from ..cs import Cell, CellRef, ColumnId, Const
from ..errors import SentinelCollision, UnknownNode, UnsupportedInput
from ..layout import LayoutContext, iszero_witness
from ..store import GraphDb, max_sentinel, to_csr
from .regions import DbRegion, OutputHandle

# ---------------------------------------------------------------------------
# single-source, edge-list format
# ---------------------------------------------------------------------------

@dataclass
class SingleExpansionShape:
    id_s: int
    n_edges: int
    out_used: int

    def rows(self) -> int:
        # aux span + output span + accumulator span
        return self.n_edges + self.n_edges + (self.n_edges + 1)


@dataclass
class SingleExpansionWitness:
    id_s: int
    src: list[int]
    dst: list[int]
    flags: list[int]
    nonmatch_inv: list[int]
    masked_src: list[int]
    masked_dst: list[int]
    out_pairs: list[tuple[int, int]]

    def shape(self) -> SingleExpansionShape:
        return SingleExpansionShape(self.id_s, len(self.src), len(self.out_pairs))


def expand_single_witness(db: GraphDb, id_s: int) -> SingleExpansionWitness:
    if db.nodes.row_of(id_s) is None:
        raise UnknownNode(f"node {id_s} not in database")
    return expansion_witness_from_pairs(db.edges.src, db.edges.dst, id_s)


def expansion_witness_from_pairs(src: list[int], dst: list[int], id_s: int) -> SingleExpansionWitness:
    flags, invs = iszero_witness([(a - id_s) for a in src])
    masked_src = [f * a for f, a in zip(flags, src)]
    masked_dst = [f * b for f, b in zip(flags, dst)]
    out_pairs = [(a, b) for f, a, b in zip(flags, src, dst) if f]
    return SingleExpansionWitness(id_s, list(src), list(dst), flags, invs, masked_src, masked_dst, out_pairs)


@dataclass
class SingleExpansionRegion:
    shape: SingleExpansionShape
    in_src: ColumnId
    in_dst: ColumnId
    flag: ColumnId
    inv: ColumnId
    masked_src: ColumnId
    masked_dst: ColumnId
    out_src: ColumnId
    out_dst: ColumnId
    z: ColumnId
    output: OutputHandle


def build_expand_single(
    ctx: LayoutContext,
    shape: SingleExpansionShape,
    in_cols: tuple[ColumnId, ColumnId],
) -> SingleExpansionRegion:
    tag = ctx.next_op_tag("expand_single")
    n = shape.n_edges
    t = ctx.table
    sel = ctx.selector(0, n)
    a, b = in_cols
    flag = ctx.advice()
    inv = ctx.advice()
    va = ctx.advice()
    vb = ctx.advice()
    out_s = ctx.table_advice(shape.out_used, f"{tag}/out_src")
    out_t = ctx.table_advice(shape.out_used, f"{tag}/out_dst")
    z = ctx.advice()

    ctx.is_zero(sel, f"{tag}/flag", Cell(a) - Const(shape.id_s), flag, inv)
    ctx.mask(sel, f"{tag}/masked_src", Cell(flag), Cell(a), va)
    ctx.mask(sel, f"{tag}/masked_dst", Cell(flag), Cell(b), vb)
    t.add_permutation(f"{tag}/output", (va, vb), (out_s, out_t), z, sel, sel)

    ctx.log_region(f"{tag}/aux", n)
    ctx.log_region(f"{tag}/out", n)
    ctx.log_region(f"{tag}/acc", n + 1)
    return SingleExpansionRegion(
        shape, a, b, flag, inv, va, vb, out_s, out_t, z,
        OutputHandle((out_s, out_t), n, shape.out_used),
    )


def assign_expand_single(ctx: LayoutContext, region: SingleExpansionRegion, w: SingleExpansionWitness):
    t = ctx.table
    t.assign_column(region.flag, w.flags)
    t.assign_column(region.inv, w.nonmatch_inv)
    t.assign_column(region.masked_src, w.masked_src)
    t.assign_column(region.masked_dst, w.masked_dst)
    t.assign_column(region.out_src, [p[0] for p in w.out_pairs])
    t.assign_column(region.out_dst, [p[1] for p in w.out_pairs])


def expand_single_circuit(ctx: LayoutContext, witness: SingleExpansionWitness, in_cols) -> SingleExpansionRegion:
    region = build_expand_single(ctx, witness.shape(), in_cols)
    assign_expand_single(ctx, region, witness)
    return region


# ---------------------------------------------------------------------------
# single-source, CSR format
# ---------------------------------------------------------------------------

@dataclass
class CsrExpansionShape:
    id_s: int
    n_nodes: int
    n_edges: int
    out_used: int

    def rows(self) -> int:
        n = self.n_edges
        # params + two bound broadcasts + selector aux + output + accumulator
        return 3 + 2 * n + n + n + (n + 1)


@dataclass
class CsrExpansionWitness:
    id_s: int
    idx_s: int
    l_s: int
    r_s: int
    ge_flags: list[int]
    lt_flags: list[int]
    in_range: list[int]
    masked_src: list[int]
    masked_dst: list[int]
    out_pairs: list[tuple[int, int]]
    n_nodes: int
    n_edges: int

    def shape(self) -> CsrExpansionShape:
        return CsrExpansionShape(self.id_s, self.n_nodes, self.n_edges, len(self.out_pairs))


def expand_single_csr_witness(db: GraphDb, id_s: int) -> CsrExpansionWitness:
    idx = db.nodes.row_of(id_s)
    if idx is None:
        raise UnknownNode(f"node {id_s} not in database")
    csr = to_csr(db)
    l_s, r_s = csr.row[idx], csr.row[idx + 1]
    n = len(csr.col)
    ge = [1 if l_s <= k else 0 for k in range(n)]
    lt = [1 if k < r_s else 0 for k in range(n)]
    inr = [g * l for g, l in zip(ge, lt)]
    ms = [f * id_s for f in inr]
    mt = [f * c for f, c in zip(inr, csr.col)]
    out = [(id_s, csr.col[k]) for k in range(l_s, r_s)]
    return CsrExpansionWitness(id_s, idx, l_s, r_s, ge, lt, inr, ms, mt, out, len(db.nodes), n)


@dataclass
class CsrExpansionRegion:
    shape: CsrExpansionShape
    params: ColumnId  # rows 0..2: idx_s, l_s, r_s
    lo_bound: ColumnId
    hi_bound: ColumnId
    ge: ColumnId
    lt: ColumnId
    in_range: ColumnId
    masked_src: ColumnId
    masked_dst: ColumnId
    out_src: ColumnId
    out_dst: ColumnId
    z: ColumnId
    output: OutputHandle


def build_expand_single_csr(ctx: LayoutContext, shape: CsrExpansionShape, db_region: DbRegion) -> CsrExpansionRegion:
    if db_region.mode != "csr":
        raise UnsupportedInput("CSR expansion requires a CSR database region")
    tag = ctx.next_op_tag("expand_single_csr")
    t = ctx.table
    n = shape.n_edges
    if n + 1 >= (1 << ctx.b_id):
        raise UnsupportedInput(f"{n} edges exceed the {ctx.b_id}-bit position range")
    sel = ctx.selector(0, n)
    sel_param = ctx.selector(0, 1)

    params = ctx.advice()
    pos_nodes = ctx.position_column(shape.n_nodes)
    pos_rowptr = ctx.position_column(shape.n_nodes + 1)
    pos_col = ctx.position_column(n)

    # segment bound lookups: (idx_s, id_s) in the node table,
    # (idx_s, l_s) and (idx_s + 1, r_s) in the row-pointer table
    t.add_lookup(f"{tag}/node-index", [Cell(params), Const(shape.id_s)],
                 [pos_nodes, db_region.node_ids], sel_param)
    t.add_lookup(f"{tag}/row-lo", [Cell(params), Cell(params, 1)],
                 [pos_rowptr, db_region.csr_row], sel_param)
    t.add_lookup(f"{tag}/row-hi", [Cell(params) + 1, Cell(params, 2)],
                 [pos_rowptr, db_region.csr_row], sel_param)

    # broadcast l_s / r_s across the column span
    lo = ctx.advice()
    hi = ctx.advice()
    t.add_copy(CellRef(lo, 0), CellRef(params, 1))
    t.add_copy(CellRef(hi, 0), CellRef(params, 2))
    if n > 1:
        step = ctx.selector(1, n)
        t.add_gate(f"{tag}/lo-const", step, Cell(lo) - Cell(lo, -1))
        t.add_gate(f"{tag}/hi-const", step, Cell(hi) - Cell(hi, -1))

    # binary selector over the index column: in_range[k] = [l_s <= k < r_s]
    ge = ctx.advice()
    lt = ctx.advice()
    inr = ctx.advice()
    ctx.le_flag(sel, f"{tag}/ge", ge, Cell(lo), Cell(pos_col), 1 << ctx.b_id)
    ctx.le_flag(sel, f"{tag}/lt", lt, Cell(pos_col) + 1, Cell(hi), 1 << ctx.b_id)
    t.add_gate(f"{tag}/in-range", sel, Cell(inr) - Cell(ge) * Cell(lt))

    va = ctx.advice()
    vb = ctx.advice()
    out_s = ctx.table_advice(shape.out_used, f"{tag}/out_src")
    out_t = ctx.table_advice(shape.out_used, f"{tag}/out_dst")
    z = ctx.advice()
    ctx.mask(sel, f"{tag}/masked_src", Cell(inr), Const(shape.id_s), va)
    ctx.mask(sel, f"{tag}/masked_dst", Cell(inr), Cell(db_region.csr_col), vb)
    t.add_permutation(f"{tag}/output", (va, vb), (out_s, out_t), z, sel, sel)

    ctx.log_region(f"{tag}/params", 3)
    ctx.log_region(f"{tag}/bounds", 2 * n)
    ctx.log_region(f"{tag}/aux", n)
    ctx.log_region(f"{tag}/out", n)
    ctx.log_region(f"{tag}/acc", n + 1)
    return CsrExpansionRegion(
        shape, params, lo, hi, ge, lt, inr, va, vb, out_s, out_t, z,
        OutputHandle((out_s, out_t), n, shape.out_used),
    )


def assign_expand_single_csr(ctx: LayoutContext, region: CsrExpansionRegion, w: CsrExpansionWitness):
    t = ctx.table
    n = w.n_edges
    t.assign_column(region.params, [w.idx_s, w.l_s, w.r_s])
    t.assign_column(region.lo_bound, [w.l_s] * n)
    t.assign_column(region.hi_bound, [w.r_s] * n)
    t.assign_column(region.ge, w.ge_flags)
    t.assign_column(region.lt, w.lt_flags)
    t.assign_column(region.in_range, w.in_range)
    t.assign_column(region.masked_src, w.masked_src)
    t.assign_column(region.masked_dst, w.masked_dst)
    t.assign_column(region.out_src, [p[0] for p in w.out_pairs])
    t.assign_column(region.out_dst, [p[1] for p in w.out_pairs])


def expand_single_csr_circuit(ctx: LayoutContext, witness: CsrExpansionWitness, db_region: DbRegion) -> CsrExpansionRegion:
    region = build_expand_single_csr(ctx, witness.shape(), db_region)
    assign_expand_single_csr(ctx, region, witness)
    return region


# ---------------------------------------------------------------------------
# set-based expansion
# ---------------------------------------------------------------------------

@dataclass
class SetExpansionShape:
    set_size: int       # |ID_s|, public
    n_edges: int        # input pair extent
    n_nodes: int        # bounds the sorted-set budget
    out_used: int
    binding: str        # "param" | "upstream"

    def set_budget(self) -> int:
        return self.n_nodes + 2

    def rows(self) -> int:
        n = self.n_edges
        # sorted copy + sort accumulator + set + consecutive pairs
        # + glb aux + output + selection accumulator; all |ID_s|-free
        return (
            n + (n + 1)
            + self.set_budget() + (self.set_budget() - 1)
            + n + n + (n + 1)
        )


@dataclass
class SetExpansionWitness:
    id_set: list[int]
    sorted_set: list[int]       # with 0 / max sentinels
    t1: list[int]
    t2: list[int]
    src_sorted: list[int]
    dst_sorted: list[int]
    glb: list[int]              # greatest lower bound per sorted edge row
    glb_next: list[int]
    flags: list[int]
    flag_inv: list[int]
    masked_src: list[int]
    masked_dst: list[int]
    out_pairs: list[tuple[int, int]]
    n_nodes: int
    binding: str = "param"

    def shape(self) -> SetExpansionShape:
        return SetExpansionShape(
            len(self.id_set), len(self.src_sorted), self.n_nodes,
            len(self.out_pairs), self.binding,
        )


def set_expansion_witness_from_pairs(
    src: list[int],
    dst: list[int],
    id_set: list[int],
    b_id: int,
    n_nodes: int,
    binding: str = "param",
) -> SetExpansionWitness:
    sentinel = max_sentinel(b_id)
    members = sorted(set(id_set))
    for v in members:
        if v <= 0 or v >= sentinel:
            raise SentinelCollision(f"set member {v} collides with a reserved sentinel")
    sorted_set = [0] + members + [sentinel]
    t1 = sorted_set[:-1]
    t2 = sorted_set[1:]
    order = sorted(range(len(src)), key=lambda k: (src[k], dst[k]))
    a = [src[k] for k in order]
    b = [dst[k] for k in order]
    glb, glb_next = [], []
    for v in a:
        i = bisect.bisect_right(sorted_set, v) - 1
        if i == len(sorted_set) - 1:
            i -= 1  # v == max sentinel cannot occur for real ids
        glb.append(sorted_set[i])
        glb_next.append(sorted_set[i + 1])
    flags, invs = iszero_witness([(x - g) for x, g in zip(a, glb)])
    masked_src = [f * x for f, x in zip(flags, a)]
    masked_dst = [f * y for f, y in zip(flags, b)]
    out_pairs = [(x, y) for f, x, y in zip(flags, a, b) if f]
    return SetExpansionWitness(
        members, sorted_set, t1, t2, a, b, glb, glb_next, flags, invs,
        masked_src, masked_dst, out_pairs, n_nodes, binding,
    )


def expand_set_witness(db: GraphDb, id_set: list[int]) -> SetExpansionWitness:
    if not id_set:
        raise UnknownNode("empty start set")
    for v in id_set:
        if db.nodes.row_of(v) is None:
            raise UnknownNode(f"node {v} not in database")
    return set_expansion_witness_from_pairs(
        db.edges.src, db.edges.dst, list(id_set), db.b_id, len(db.nodes),
    )


@dataclass
class SetExpansionRegion:
    shape: SetExpansionShape
    in_src: ColumnId
    in_dst: ColumnId
    sorted_set: ColumnId
    t1: ColumnId
    t2: ColumnId
    src_sorted: ColumnId
    dst_sorted: ColumnId
    z_sort: ColumnId
    glb: ColumnId
    glb_next: ColumnId
    flag: ColumnId
    flag_inv: ColumnId
    masked_src: ColumnId
    masked_dst: ColumnId
    out_src: ColumnId
    out_dst: ColumnId
    z_sel: ColumnId
    output: OutputHandle
    set_member_cells: list[CellRef] = None  # interior rows, for param binding


@dataclass
class _SentinelSet:
    ids: ColumnId
    t1: ColumnId
    t2: ColumnId
    member_cells: list[CellRef]
    used: int


def _build_sentinel_set(ctx: LayoutContext, tag: str, set_size: int) -> _SentinelSet:
    """Strictly sorted member column bracketed by the 0 / max sentinels,
    plus the consecutive-pair lookup table derived from it."""
    t = ctx.table
    s_used = set_size + 2
    id_range = ctx.id_range_table()
    ids = ctx.table_advice(s_used, f"{tag}/set")
    t.add_gate(f"{tag}/set-min", ctx.selector(0, 1), Cell(ids))
    t.add_gate(
        f"{tag}/set-max", ctx.selector(s_used - 1, s_used),
        Cell(ids) - Const(max_sentinel(ctx.b_id)))
    sel_pairs = ctx.selector(0, s_used - 1)
    t.add_lookup(f"{tag}/set-sorted", [Cell(ids, 1) - Cell(ids) - 1], [id_range], sel_pairs)
    t1 = ctx.table_advice(s_used - 1, f"{tag}/t1")
    t2 = ctx.table_advice(s_used - 1, f"{tag}/t2")
    t.add_gate(f"{tag}/t1-def", sel_pairs, Cell(t1) - Cell(ids))
    t.add_gate(f"{tag}/t2-def", sel_pairs, Cell(t2) - Cell(ids, 1))
    member_cells = [CellRef(ids, r) for r in range(1, s_used - 1)]
    return _SentinelSet(ids, t1, t2, member_cells, s_used)


@dataclass
class _GlbSelect:
    glb: ColumnId
    glb_next: ColumnId
    flag: ColumnId
    flag_inv: ColumnId
    masked_src: ColumnId
    masked_dst: ColumnId
    out_src: ColumnId
    out_dst: ColumnId
    z: ColumnId
    output: OutputHandle


def _build_glb_select(
    ctx: LayoutContext,
    tag: str,
    in_cols: tuple[ColumnId, ColumnId],
    n: int,
    sset: _SentinelSet,
    out_used: int,
) -> _GlbSelect:
    """Row-local bracketing: the bound pair must be consecutive set members
    enclosing the row's source id, and the flag fires exactly on equality.
    No row ordering is assumed, which is what lets the canon-integrated
    variant skip the sorted copy entirely."""
    t = ctx.table
    id_range = ctx.id_range_table()
    sel_e = ctx.selector(0, n)
    a_col, b_col = in_cols
    glb = ctx.advice()
    glb_next = ctx.advice()
    t.add_lookup(f"{tag}/consecutive", [Cell(glb), Cell(glb_next)], [sset.t1, sset.t2], sel_e)
    t.add_lookup(f"{tag}/glb-le", [Cell(a_col) - Cell(glb)], [id_range], sel_e)
    t.add_lookup(f"{tag}/glb-lt-next", [Cell(glb_next) - Cell(a_col) - 1], [id_range], sel_e)
    flag = ctx.advice()
    inv = ctx.advice()
    ctx.is_zero(sel_e, f"{tag}/flag", Cell(a_col) - Cell(glb), flag, inv)
    va = ctx.advice()
    vb = ctx.advice()
    out_s = ctx.table_advice(out_used, f"{tag}/out_src")
    out_t = ctx.table_advice(out_used, f"{tag}/out_dst")
    z = ctx.advice()
    ctx.mask(sel_e, f"{tag}/masked_src", Cell(flag), Cell(a_col), va)
    ctx.mask(sel_e, f"{tag}/masked_dst", Cell(flag), Cell(b_col), vb)
    t.add_permutation(f"{tag}/output", (va, vb), (out_s, out_t), z, sel_e, sel_e)
    ctx.log_region(f"{tag}/aux", n)
    ctx.log_region(f"{tag}/out", n)
    ctx.log_region(f"{tag}/acc", n + 1)
    return _GlbSelect(
        glb, glb_next, flag, inv, va, vb, out_s, out_t, z,
        OutputHandle((out_s, out_t), n, out_used))


def build_expand_set(
    ctx: LayoutContext,
    shape: SetExpansionShape,
    in_cols: tuple[ColumnId, ColumnId],
    upstream: OutputHandle | None = None,
) -> SetExpansionRegion:
    tag = ctx.next_op_tag("expand_set")
    t = ctx.table
    n = shape.n_edges
    id_range = ctx.id_range_table()
    sset = _build_sentinel_set(ctx, tag, shape.set_size)

    # membership binding against the producing region (dedup semantics):
    # every interior set element occurs among upstream payloads, and every
    # upstream payload value occurs in the sentinel set (0 covers dummies).
    if shape.binding == "upstream":
        if upstream is None:
            raise UnsupportedInput("upstream binding requires a producer handle")
        sel_interior = ctx.selector(1, sset.used - 1)
        source_col = upstream.cols[-1]  # expansion targets / payload values
        t.add_lookup(f"{tag}/set-from-upstream", [Cell(sset.ids)], [source_col], sel_interior)
        sel_up = ctx.selector(0, upstream.rows)
        t.add_lookup(f"{tag}/upstream-covered", [Cell(source_col)], [sset.ids], sel_up)

    # source-sorted edge copy bound to the input pairs by permutation
    a_s = ctx.advice()
    b_s = ctx.advice()
    z_sort = ctx.advice()
    sel_e = ctx.selector(0, n)
    t.add_permutation(f"{tag}/sort", (a_s, b_s), in_cols, z_sort, sel_e, sel_e)
    if n > 1:
        sel_adj = ctx.selector(0, n - 1)
        t.add_lookup(f"{tag}/src-sorted", [Cell(a_s, 1) - Cell(a_s)], [id_range], sel_adj)

    select = _build_glb_select(ctx, tag, (a_s, b_s), n, sset, shape.out_used)

    budget = shape.set_budget()
    ctx.log_region(f"{tag}/set", budget)
    ctx.log_region(f"{tag}/pairs", budget - 1)
    ctx.log_region(f"{tag}/sorted", n)
    ctx.log_region(f"{tag}/sort-acc", n + 1)
    return SetExpansionRegion(
        shape, in_cols[0], in_cols[1], sset.ids, sset.t1, sset.t2, a_s, b_s, z_sort,
        select.glb, select.glb_next, select.flag, select.flag_inv,
        select.masked_src, select.masked_dst, select.out_src, select.out_dst, select.z,
        select.output, sset.member_cells,
    )


def assign_expand_set(ctx: LayoutContext, region: SetExpansionRegion, w: SetExpansionWitness):
    t = ctx.table
    t.assign_column(region.sorted_set, w.sorted_set)
    t.assign_column(region.t1, w.t1)
    t.assign_column(region.t2, w.t2)
    t.assign_column(region.src_sorted, w.src_sorted)
    t.assign_column(region.dst_sorted, w.dst_sorted)
    t.assign_column(region.glb, w.glb)
    t.assign_column(region.glb_next, w.glb_next)
    t.assign_column(region.flag, w.flags)
    t.assign_column(region.flag_inv, w.flag_inv)
    t.assign_column(region.masked_src, w.masked_src)
    t.assign_column(region.masked_dst, w.masked_dst)
    t.assign_column(region.out_src, [p[0] for p in w.out_pairs])
    t.assign_column(region.out_dst, [p[1] for p in w.out_pairs])


def expand_set_circuit(ctx, witness: SetExpansionWitness, in_cols, upstream=None) -> SetExpansionRegion:
    region = build_expand_set(ctx, witness.shape(), in_cols, upstream)
    assign_expand_set(ctx, region, witness)
    return region


# ---------------------------------------------------------------------------
# canon-integrated set expansion over a bidirectional edge kind
# ---------------------------------------------------------------------------

@dataclass
class GlbSelectWitness:
    """Row-aligned greatest-lower-bound selection (no sorting assumed)."""

    glb: list[int]
    glb_next: list[int]
    flags: list[int]
    flag_inv: list[int]
    masked_src: list[int]
    masked_dst: list[int]
    out_pairs: list[tuple[int, int]]


def glb_select_witness(src: list[int], dst: list[int], sorted_set: list[int]) -> GlbSelectWitness:
    glb, glb_next = [], []
    for v in src:
        i = bisect.bisect_right(sorted_set, v) - 1
        if i == len(sorted_set) - 1:
            i -= 1  # v == max sentinel cannot occur for real ids
        glb.append(sorted_set[i])
        glb_next.append(sorted_set[i + 1])
    flags, invs = iszero_witness([(x - g) for x, g in zip(src, glb)])
    masked_src = [f * x for f, x in zip(flags, src)]
    masked_dst = [f * y for f, y in zip(flags, dst)]
    out_pairs = [(x, y) for f, x, y in zip(flags, src, dst) if f]
    return GlbSelectWitness(glb, glb_next, flags, invs, masked_src, masked_dst, out_pairs)


@dataclass
class DualSetExpansionShape:
    """One sentinel set shared by two selection passes over the canonical
    pair columns: (low, high) for low-side incidence, (high, low) for the
    other side.  Bracketing is row-local, so no sorted copies are needed;
    the preprocess-duplicate baseline pays for the doubled table instead."""

    set_size: int
    n_edges: int
    n_nodes: int
    out_used_low: int
    out_used_high: int

    def set_budget(self) -> int:
        return self.n_nodes + 2

    def rows(self) -> int:
        n = self.n_edges
        return self.set_budget() + (self.set_budget() - 1) + 2 * (3 * n + 1)


@dataclass
class DualSetExpansionWitness:
    id_set: list[int]
    sorted_set: list[int]
    t1: list[int]
    t2: list[int]
    low_pass: GlbSelectWitness
    high_pass: GlbSelectWitness
    n_nodes: int

    def shape(self) -> DualSetExpansionShape:
        return DualSetExpansionShape(
            len(self.id_set), len(self.low_pass.flags), self.n_nodes,
            len(self.low_pass.out_pairs), len(self.high_pass.out_pairs),
        )


def dual_set_expansion_witness(
    low: list[int],
    high: list[int],
    id_set: list[int],
    b_id: int,
    n_nodes: int,
) -> DualSetExpansionWitness:
    sentinel = max_sentinel(b_id)
    members = sorted(set(id_set))
    for v in members:
        if v <= 0 or v >= sentinel:
            raise SentinelCollision(f"set member {v} collides with a reserved sentinel")
    sorted_set = [0] + members + [sentinel]
    return DualSetExpansionWitness(
        members, sorted_set, sorted_set[:-1], sorted_set[1:],
        glb_select_witness(low, high, sorted_set),
        glb_select_witness(high, low, sorted_set),
        n_nodes,
    )


@dataclass
class DualSetExpansionRegion:
    shape: DualSetExpansionShape
    sorted_set: ColumnId
    t1: ColumnId
    t2: ColumnId
    low_pass: _GlbSelect
    high_pass: _GlbSelect
    set_member_cells: list[CellRef]


def build_expand_set_dual(
    ctx: LayoutContext,
    shape: DualSetExpansionShape,
    low_col: ColumnId,
    high_col: ColumnId,
) -> DualSetExpansionRegion:
    tag = ctx.next_op_tag("expand_set_dual")
    n = shape.n_edges
    sset = _build_sentinel_set(ctx, tag, shape.set_size)
    low_pass = _build_glb_select(ctx, f"{tag}/low", (low_col, high_col), n, sset, shape.out_used_low)
    high_pass = _build_glb_select(ctx, f"{tag}/high", (high_col, low_col), n, sset, shape.out_used_high)
    ctx.log_region(f"{tag}/set", shape.set_budget())
    ctx.log_region(f"{tag}/pairs", shape.set_budget() - 1)
    return DualSetExpansionRegion(
        shape, sset.ids, sset.t1, sset.t2, low_pass, high_pass, sset.member_cells)


def _assign_glb(ctx, select: _GlbSelect, w: GlbSelectWitness):
    t = ctx.table
    t.assign_column(select.glb, w.glb)
    t.assign_column(select.glb_next, w.glb_next)
    t.assign_column(select.flag, w.flags)
    t.assign_column(select.flag_inv, w.flag_inv)
    t.assign_column(select.masked_src, w.masked_src)
    t.assign_column(select.masked_dst, w.masked_dst)
    t.assign_column(select.out_src, [p[0] for p in w.out_pairs])
    t.assign_column(select.out_dst, [p[1] for p in w.out_pairs])


def assign_expand_set_dual(ctx: LayoutContext, region: DualSetExpansionRegion, w: DualSetExpansionWitness):
    t = ctx.table
    t.assign_column(region.sorted_set, w.sorted_set)
    t.assign_column(region.t1, w.t1)
    t.assign_column(region.t2, w.t2)
    _assign_glb(ctx, region.low_pass, w.low_pass)
    _assign_glb(ctx, region.high_pass, w.high_pass)


# ---------------------------------------------------------------------------
# closed-form cost estimates
# ---------------------------------------------------------------------------

def count_rows(kind: str, n_nodes: int, n_edges: int, **params) -> int:
    """Operator-region row counts (excludes the shared db/range regions).

    Set-based expansion depends only on the edge extent and node bound;
    repeated single-source expansion grows linearly in the set size; the
    CSR variant always exceeds the edge-list variant on the same query.
    """
    if kind == "expand_single":
        return SingleExpansionShape(0, n_edges, n_edges).rows()
    if kind == "expand_single_csr":
        return CsrExpansionShape(0, n_nodes, n_edges, n_edges).rows()
    if kind == "expand_set":
        size = params.get("set_size", 1)
        return SetExpansionShape(size, n_edges, n_nodes, n_edges, "param").rows()
    if kind == "expand_repeated_single":
        size = params.get("set_size", 1)
        return size * SingleExpansionShape(0, n_edges, n_edges).rows()
    raise UnsupportedInput(f"unknown expansion kind '{kind}'")
