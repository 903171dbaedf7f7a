"""Path-family operators: shortest-path distances, reachability, last hops.

The shortest-path circuit never replays the traversal; it checks the
claimed distance labelling directly: the source row carries distance 0,
every other row either extends its predecessor by one or carries the
unreachable marker d_max, predecessor claims are validated against the
node-distance table and the edge table, and the Bellman-Ford relaxation
bound holds across every edge.  Row counts therefore depend only on the
node/edge extents and d_max, never on how deep the traversal went.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from ..cs import Cell, ColumnId, Const
from ..errors import DmaxTooSmall, PathNotFound, UnknownNode, UnsupportedInput
from ..layout import LayoutContext, iszero_witness, prefix_sums
from ..store import GraphDb
from .regions import DbRegion, OutputHandle

# ---------------------------------------------------------------------------
# single-source shortest path
# ---------------------------------------------------------------------------

@dataclass
class SsspShape:
    id_s: int
    n_nodes: int
    n_pairs: int  # edge-pair region extent (2x edges for symmetrized kinds)
    d_max: int

    def rows(self) -> int:
        return self.n_nodes + self.n_pairs


@dataclass
class SsspWitness:
    id_s: int
    d_max: int
    node_ids: list[int]
    is_src: list[int]
    dist: list[int]
    unreach: list[int]
    unreach_inv: list[int]
    pre: list[int]
    pd: list[int]
    src_count: list[int]  # running sum of is_src
    ud: list[int]
    vd: list[int]

    def shape(self) -> SsspShape:
        return SsspShape(self.id_s, len(self.node_ids), len(self.ud), self.d_max)


def bfs_distances(node_ids: list[int], pairs: list[tuple[int, int]], id_s: int):
    """Plain BFS; returns ({reached node: dist}, {reached node: predecessor})."""
    adj: dict[int, list[int]] = {v: [] for v in node_ids}
    for a, b in pairs:
        if a in adj and b in adj:
            adj[a].append(b)
    dist = {id_s: 0}
    pred: dict[int, int] = {}
    queue = deque([id_s])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                pred[w] = u
                queue.append(w)
    return dist, pred


def sssp_witness_from_pairs(
    node_ids: list[int],
    pairs: list[tuple[int, int]],
    id_s: int,
    d_max: int,
) -> SsspWitness:
    if id_s not in set(node_ids):
        raise UnknownNode(f"node {id_s} not in database")
    true_dist, pred = bfs_distances(node_ids, [p for p in pairs if p != (0, 0)], id_s)
    if any(d >= d_max for d in true_dist.values()):
        raise DmaxTooSmall(f"a reachable node sits at distance >= d_max ({d_max})")
    is_src = [1 if v == id_s else 0 for v in node_ids]
    dvec = [true_dist.get(v, d_max) for v in node_ids]
    unreach, un_inv = iszero_witness([(d - d_max) for d in dvec])
    # source and unreachable rows take the self-predecessor convention
    by_id = dict(zip(node_ids, dvec))
    pre = [pred.get(v, v) for v in node_ids]
    pd = [by_id[p] for p in pre]
    ud = [by_id[a] if (a, b) != (0, 0) else 0 for a, b in pairs]
    vd = [by_id[b] if (a, b) != (0, 0) else 0 for a, b in pairs]
    return SsspWitness(
        id_s, d_max, list(node_ids), is_src, dvec, unreach, un_inv,
        pre, pd, prefix_sums(is_src), ud, vd,
    )


def sssp_witness(db: GraphDb, id_s: int, d_max: int | None = None) -> SsspWitness:
    d_max = len(db.nodes) if d_max is None else d_max
    if d_max + 2 >= (1 << db.b_id):
        raise UnsupportedInput(f"d_max {d_max} overflows the {db.b_id}-bit range table")
    return sssp_witness_from_pairs(db.nodes.ids, db.edges.pairs(), id_s, d_max)


@dataclass
class SsspRegion:
    shape: SsspShape
    node_ids: ColumnId
    is_src: ColumnId
    dist: ColumnId
    unreach: ColumnId
    unreach_inv: ColumnId
    pre: ColumnId
    pd: ColumnId
    src_count: ColumnId
    ud: ColumnId
    vd: ColumnId
    pair_cols: tuple[ColumnId, ColumnId]
    output: OutputHandle  # (node id, distance), all rows real


def build_sssp(
    ctx: LayoutContext,
    shape: SsspShape,
    node_ids_col: ColumnId,
    pairs: OutputHandle,
) -> SsspRegion:
    tag = ctx.next_op_tag("sssp")
    t = ctx.table
    n_v, n_e = shape.n_nodes, shape.n_pairs
    d_max = shape.d_max
    sel_n = ctx.selector(0, n_v)
    sel_e = ctx.selector(0, n_e)
    nid = node_ids_col
    pair_a, pair_b = pairs.cols[0], pairs.cols[1]

    is_src = ctx.advice()
    dist = ctx.table_advice(n_v, f"{tag}/dist")
    unreach = ctx.advice()
    un_inv = ctx.advice()
    pre = ctx.advice()
    pd = ctx.advice()
    rs = ctx.advice()
    ud = ctx.advice()
    vd = ctx.advice()

    # node level
    ctx.boolean(sel_n, f"{tag}/is-src", is_src)
    t.add_gate(f"{tag}/src-row", sel_n, Cell(is_src) * (Cell(nid) - Const(shape.id_s)))
    t.add_gate(f"{tag}/src-dist", sel_n, Cell(is_src) * Cell(dist))
    ctx.running_sum(f"{tag}/one-source", n_v, Cell(is_src), Const(1), rs)
    t.add_gate(
        f"{tag}/branch", sel_n,
        (1 - Cell(is_src)) * (Cell(dist) - Cell(pd) - 1) * (Cell(dist) - Const(d_max)),
    )
    ctx.is_zero(sel_n, f"{tag}/unreach", Cell(dist) - Const(d_max), unreach, un_inv)
    t.add_lookup(f"{tag}/pred-dist", [Cell(pre), Cell(pd)], [nid, dist], sel_n)
    gating = (1 - Cell(is_src)) * (1 - Cell(unreach))
    t.add_lookup(
        f"{tag}/pred-edge",
        [gating * Cell(pre), gating * Cell(nid)],
        [pair_a, pair_b],
        sel_n,
    )

    # edge level
    t.add_lookup(f"{tag}/src-dist-edge", [Cell(pair_a), Cell(ud)], [nid, dist], sel_e)
    t.add_lookup(f"{tag}/dst-dist-edge", [Cell(pair_b), Cell(vd)], [nid, dist], sel_e)
    ctx.range_check(sel_e, f"{tag}/relaxation", Cell(ud) + 1 - Cell(vd), d_max + 2)

    ctx.log_region(f"{tag}/node-aux", n_v)
    ctx.log_region(f"{tag}/edge-aux", n_e)
    return SsspRegion(
        shape, nid, is_src, dist, unreach, un_inv, pre, pd, rs, ud, vd,
        (pair_a, pair_b), OutputHandle((nid, dist), n_v, n_v),
    )


def assign_sssp(ctx: LayoutContext, region: SsspRegion, w: SsspWitness):
    t = ctx.table
    t.assign_column(region.is_src, w.is_src)
    t.assign_column(region.dist, w.dist)
    t.assign_column(region.unreach, w.unreach)
    t.assign_column(region.unreach_inv, w.unreach_inv)
    t.assign_column(region.pre, w.pre)
    t.assign_column(region.pd, w.pd)
    t.assign_column(region.src_count, w.src_count)
    t.assign_column(region.ud, w.ud)
    t.assign_column(region.vd, w.vd)


def sssp_circuit(ctx, witness: SsspWitness, node_ids_col, pairs) -> SsspRegion:
    region = build_sssp(ctx, witness.shape(), node_ids_col, pairs)
    assign_sssp(ctx, region, witness)
    return region


# ---------------------------------------------------------------------------
# reachability
# ---------------------------------------------------------------------------

@dataclass
class ReachShape:
    id_s: int
    id_t: int
    path_len: int

    def rows(self) -> int:
        return self.path_len


@dataclass
class PathWitness:
    id_s: int
    id_t: int
    path: list[int]

    def shape(self) -> ReachShape:
        return ReachShape(self.id_s, self.id_t, len(self.path))


def reachability_witness(db: GraphDb, id_s: int, id_t: int) -> PathWitness:
    """Shortest s-t path from BFS as the default path witness."""
    for v in (id_s, id_t):
        if db.nodes.row_of(v) is None:
            raise UnknownNode(f"node {v} not in database")
    dist, pred = bfs_distances(db.nodes.ids, db.edges.pairs(), id_s)
    if id_t not in dist:
        raise PathNotFound(f"no path from {id_s} to {id_t}")
    path = [id_t]
    while path[-1] != id_s:
        path.append(pred[path[-1]])
    path.reverse()
    return PathWitness(id_s, id_t, path)


@dataclass
class ReachRegion:
    shape: ReachShape
    path: ColumnId
    output: OutputHandle


def build_reachability(ctx: LayoutContext, shape: ReachShape, pairs: OutputHandle) -> ReachRegion:
    tag = ctx.next_op_tag("reach")
    t = ctx.table
    length = shape.path_len
    cpath = ctx.table_advice(length, f"{tag}/path")
    sel_one = ctx.selector(0, 1)
    t.add_lookup(f"{tag}/s-present", [Const(shape.id_s)], [cpath], sel_one)
    t.add_lookup(f"{tag}/t-present", [Const(shape.id_t)], [cpath], sel_one)
    if length > 1:
        sel_adj = ctx.selector(0, length - 1)
        t.add_lookup(
            f"{tag}/walk-edges",
            [Cell(cpath), Cell(cpath, 1)],
            [pairs.cols[0], pairs.cols[1]],
            sel_adj,
        )
    ctx.log_region(f"{tag}/path", length)
    return ReachRegion(shape, cpath, OutputHandle((cpath,), length, length))


def assign_reachability(ctx: LayoutContext, region: ReachRegion, w: PathWitness):
    ctx.table.assign_column(region.path, w.path)


def reachability_circuit(ctx, witness: PathWitness, pairs) -> ReachRegion:
    region = build_reachability(ctx, witness.shape(), pairs)
    assign_reachability(ctx, region, witness)
    return region


# ---------------------------------------------------------------------------
# all-shortest-path last hops
# ---------------------------------------------------------------------------

@dataclass
class AllSpShape:
    id_s: int
    id_t: int
    dist_t: int
    n_nodes: int
    n_pairs: int
    d_max: int
    out_used: int

    def rows(self) -> int:
        n = self.n_pairs
        return SsspShape(self.id_s, self.n_nodes, n, self.d_max).rows() + self.n_nodes + n + n + (n + 1)


@dataclass
class AllSpWitness:
    sssp: SsspWitness
    id_t: int
    dist_t: int
    node_flag_d: list[int]       # dist == dist_t - 1
    node_flag_d_inv: list[int]
    node_flag_edge: list[int]    # has an edge into t
    node_flag_both: list[int]
    node_count: list[int]        # running sum of flag_both
    edge_is_t: list[int]         # edge target == t
    edge_is_t_inv: list[int]
    edge_at_d: list[int]         # source distance == dist_t - 1
    edge_at_d_inv: list[int]
    edge_sel: list[int]
    edge_count: list[int]
    masked_p: list[int]
    masked_t: list[int]
    out_pairs: list[tuple[int, int]]

    def shape(self) -> AllSpShape:
        s = self.sssp
        return AllSpShape(
            s.id_s, self.id_t, self.dist_t, len(s.node_ids), len(s.ud),
            s.d_max, len(self.out_pairs),
        )


def all_shortest_witness_from_pairs(
    node_ids: list[int],
    pairs: list[tuple[int, int]],
    id_s: int,
    id_t: int,
    d_max: int,
) -> AllSpWitness:
    w = sssp_witness_from_pairs(node_ids, pairs, id_s, d_max)
    if id_t not in set(node_ids):
        raise UnknownNode(f"node {id_t} not in database")
    dist = dict(zip(node_ids, w.dist))
    d_t = dist[id_t]
    if d_t >= d_max:
        raise PathNotFound(f"{id_t} unreachable from {id_s}")
    if d_t < 1:
        raise UnsupportedInput("last-hop enumeration needs distance >= 1")
    real = [p for p in pairs if p != (0, 0)]
    if len(set(real)) != len(real):
        raise UnsupportedInput("duplicate edges break the last-hop counting argument")
    flag_d, flag_d_inv = iszero_witness([(d - (d_t - 1)) for d in w.dist])
    into_t = {a for a, b in real if b == id_t}
    flag_edge = [1 if v in into_t else 0 for v in node_ids]
    flag_both = [a * b for a, b in zip(flag_d, flag_edge)]
    eis_t, eis_t_inv = iszero_witness([(b - id_t) for _, b in pairs])
    e_at_d, e_at_d_inv = iszero_witness([(ud - (d_t - 1)) for ud in w.ud])
    # dummy (0,0) rows: ud == 0; when d_t == 1 that matches, but eis_t == 0 there
    esel = [x * y for x, y in zip(eis_t, e_at_d)]
    masked_p = [s * a for s, (a, _) in zip(esel, pairs)]
    masked_t = [s * b for s, (_, b) in zip(esel, pairs)]
    out = sorted((a, b) for (a, b), s in zip(pairs, esel) if s)
    if sum(flag_both) != len(out):
        raise UnsupportedInput("edge/node selection counts diverge (parallel edges?)")
    return AllSpWitness(
        w, id_t, d_t, flag_d, flag_d_inv, flag_edge, flag_both,
        prefix_sums(flag_both), eis_t, eis_t_inv, e_at_d, e_at_d_inv,
        esel, prefix_sums(esel), masked_p, masked_t, out,
    )


def all_shortest_witness(db: GraphDb, id_s: int, id_t: int, d_max: int | None = None) -> AllSpWitness:
    d_max = len(db.nodes) if d_max is None else d_max
    return all_shortest_witness_from_pairs(db.nodes.ids, db.edges.pairs(), id_s, id_t, d_max)


@dataclass
class AllSpRegion:
    shape: AllSpShape
    sssp: SsspRegion
    flag_d: ColumnId
    flag_d_inv: ColumnId
    flag_edge: ColumnId
    flag_both: ColumnId
    node_count: ColumnId
    edge_is_t: ColumnId
    edge_is_t_inv: ColumnId
    edge_at_d: ColumnId
    edge_at_d_inv: ColumnId
    edge_sel: ColumnId
    edge_count: ColumnId
    masked_p: ColumnId
    masked_t: ColumnId
    out_p: ColumnId
    out_t: ColumnId
    z: ColumnId
    output: OutputHandle


def build_all_shortest(
    ctx: LayoutContext,
    shape: AllSpShape,
    node_ids_col: ColumnId,
    pairs: OutputHandle,
) -> AllSpRegion:
    sssp_region = build_sssp(
        ctx,
        SsspShape(shape.id_s, shape.n_nodes, shape.n_pairs, shape.d_max),
        node_ids_col,
        pairs,
    )
    tag = ctx.next_op_tag("all_sp_last_hops")
    t = ctx.table
    n_v, n_e = shape.n_nodes, shape.n_pairs
    sel_n = ctx.selector(0, n_v)
    sel_e = ctx.selector(0, n_e)
    sel_one = ctx.selector(0, 1)
    d_prev = shape.dist_t - 1
    nid, dist = sssp_region.node_ids, sssp_region.dist

    # the claimed distance of t is part of the public statement
    t.add_lookup(f"{tag}/t-dist", [Const(shape.id_t), Const(shape.dist_t)], [nid, dist], sel_one)

    flag_d = ctx.advice()
    flag_d_inv = ctx.advice()
    ctx.is_zero(sel_n, f"{tag}/at-d-1", Cell(dist) - Const(d_prev), flag_d, flag_d_inv)
    flag_edge = ctx.advice()
    ctx.boolean(sel_n, f"{tag}/has-edge", flag_edge)
    flag_both = ctx.advice()
    t.add_gate(f"{tag}/both", sel_n, Cell(flag_both) - Cell(flag_d) * Cell(flag_edge))
    t.add_lookup(
        f"{tag}/hop-exists",
        [Cell(flag_both) * Cell(nid), Cell(flag_both) * Const(shape.id_t)],
        [pairs.cols[0], pairs.cols[1]],
        sel_n,
    )
    node_count = ctx.advice()
    ctx.running_sum(f"{tag}/node-count", n_v, Cell(flag_both), Const(shape.out_used), node_count)

    # edge-side completeness: count edges (u, t) with dist(u) == d-1
    eis_t = ctx.advice()
    eis_t_inv = ctx.advice()
    ctx.is_zero(sel_e, f"{tag}/into-t", Cell(pairs.cols[1]) - Const(shape.id_t), eis_t, eis_t_inv)
    e_at_d = ctx.advice()
    e_at_d_inv = ctx.advice()
    ctx.is_zero(sel_e, f"{tag}/src-at-d-1", Cell(sssp_region.ud) - Const(d_prev), e_at_d, e_at_d_inv)
    esel = ctx.advice()
    t.add_gate(f"{tag}/edge-sel", sel_e, Cell(esel) - Cell(eis_t) * Cell(e_at_d))
    edge_count = ctx.advice()
    ctx.running_sum(f"{tag}/edge-count", n_e, Cell(esel), Const(shape.out_used), edge_count)

    # output binding to the edge-side selection
    vp = ctx.advice()
    vt = ctx.advice()
    out_p = ctx.table_advice(shape.out_used, f"{tag}/out_p")
    out_t = ctx.table_advice(shape.out_used, f"{tag}/out_t")
    z = ctx.advice()
    ctx.mask(sel_e, f"{tag}/masked_p", Cell(esel), Cell(pairs.cols[0]), vp)
    ctx.mask(sel_e, f"{tag}/masked_t", Cell(esel), Cell(pairs.cols[1]), vt)
    t.add_permutation(f"{tag}/output", (vp, vt), (out_p, out_t), z, sel_e, sel_e)

    ctx.log_region(f"{tag}/node-aux", n_v)
    ctx.log_region(f"{tag}/edge-aux", n_e)
    ctx.log_region(f"{tag}/out", n_e)
    ctx.log_region(f"{tag}/acc", n_e + 1)
    return AllSpRegion(
        shape, sssp_region, flag_d, flag_d_inv, flag_edge, flag_both, node_count,
        eis_t, eis_t_inv, e_at_d, e_at_d_inv, esel, edge_count,
        vp, vt, out_p, out_t, z,
        OutputHandle((out_p, out_t), n_e, shape.out_used),
    )


def assign_all_shortest(ctx: LayoutContext, region: AllSpRegion, w: AllSpWitness):
    t = ctx.table
    assign_sssp(ctx, region.sssp, w.sssp)
    t.assign_column(region.flag_d, w.node_flag_d)
    t.assign_column(region.flag_d_inv, w.node_flag_d_inv)
    t.assign_column(region.flag_edge, w.node_flag_edge)
    t.assign_column(region.flag_both, w.node_flag_both)
    t.assign_column(region.node_count, w.node_count)
    t.assign_column(region.edge_is_t, w.edge_is_t)
    t.assign_column(region.edge_is_t_inv, w.edge_is_t_inv)
    t.assign_column(region.edge_at_d, w.edge_at_d)
    t.assign_column(region.edge_at_d_inv, w.edge_at_d_inv)
    t.assign_column(region.edge_sel, w.edge_sel)
    t.assign_column(region.edge_count, w.edge_count)
    t.assign_column(region.masked_p, w.masked_p)
    t.assign_column(region.masked_t, w.masked_t)
    t.assign_column(region.out_p, [p[0] for p in w.out_pairs])
    t.assign_column(region.out_t, [p[1] for p in w.out_pairs])


def all_shortest_last_hops(ctx, witness: AllSpWitness, node_ids_col, pairs) -> AllSpRegion:
    region = build_all_shortest(ctx, witness.shape(), node_ids_col, pairs)
    assign_all_shortest(ctx, region, witness)
    return region
