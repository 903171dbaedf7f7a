import copy
import random

import pytest

from zkgraph.errors import DmaxTooSmall, PathNotFound, UnknownNode, UnsupportedInput
from zkgraph.ops.paths import (
    all_shortest_witness,
    assign_all_shortest,
    assign_reachability,
    assign_sssp,
    build_all_shortest,
    build_reachability,
    build_sssp,
    reachability_witness,
    sssp_witness,
)
from zkgraph.store import GraphSchema, build_db

from helpers import bellman_ford_oracle, finish, op_ctx, random_graph


def diamond_db():
    # 1 -> {2,3} -> 4, isolated 9
    return build_db([1, 2, 3, 4, 9], [(1, 2), (1, 3), (2, 4), (3, 4)], GraphSchema(b_id=8))


def line_db():
    return build_db([1, 2, 3], [(1, 2), (2, 3)], GraphSchema(b_id=8))


# --- SSSP witness ---------------------------------------------------------------

def test_sssp_witness_small():
    w = sssp_witness(diamond_db(), 1)
    by_id = dict(zip(w.node_ids, w.dist))
    assert by_id == {1: 0, 2: 1, 3: 1, 4: 2, 9: w.d_max}
    # every non-source node extends its predecessor by one or is unreachable
    for v, dist, pd, is_src in zip(w.node_ids, w.dist, w.pd, w.is_src):
        if not is_src:
            assert dist in (pd + 1, w.d_max)


def test_sssp_witness_unreachable_flags():
    w = sssp_witness(diamond_db(), 1, d_max=8)
    idx = w.node_ids.index(9)
    assert w.dist[idx] == 8
    assert w.unreach[idx] == 1
    assert w.pre[idx] == 9  # self-predecessor convention


def test_sssp_witness_errors():
    with pytest.raises(UnknownNode):
        sssp_witness(diamond_db(), 77)
    with pytest.raises(DmaxTooSmall):
        sssp_witness(diamond_db(), 1, d_max=2)


def test_sssp_witness_oracle_random():
    rng = random.Random(0xD1)
    for _ in range(300):
        db = random_graph(rng, max_nodes=25, max_edges=60)
        source = rng.choice(db.nodes.ids)
        d_max = len(db.nodes.ids)
        w = sssp_witness(db, source, d_max)
        oracle = bellman_ford_oracle(db.nodes.ids, db.edges.pairs(), source, d_max)
        assert dict(zip(w.node_ids, w.dist)) == oracle


# --- SSSP circuit ----------------------------------------------------------------

def sssp_table(db, source, d_max=None, witness=None):
    w = witness or sssp_witness(db, source, d_max)
    table, ctx, dbr = op_ctx(db, extra_spans=(w.d_max + 2,))
    region = build_sssp(ctx, w.shape(), dbr.node_ids, dbr.edge_pairs_handle())
    assign_sssp(ctx, region, w)
    return table, region, w


def test_sssp_circuit_honest():
    table, _, _ = sssp_table(diamond_db(), 1)
    assert finish(table).satisfied


def test_sssp_circuit_perturbations():
    rng = random.Random(0xD2)
    for _ in range(50):
        db = random_graph(rng, max_nodes=12, max_edges=30)
        source = rng.choice(db.nodes.ids)
        honest = sssp_witness(db, source)
        row = rng.randrange(len(honest.node_ids))
        delta = rng.choice((1, -1, honest.d_max))
        w = copy.deepcopy(honest)
        w.dist[row] = (w.dist[row] + delta) % (honest.d_max + 1)
        if w.dist == honest.dist:
            continue
        table, ctx, dbr = op_ctx(db, extra_spans=(w.d_max + 2,))
        region = build_sssp(ctx, w.shape(), dbr.node_ids, dbr.edge_pairs_handle())
        assign_sssp(ctx, region, w)
        assert not finish(table).satisfied


def test_sssp_circuit_rejects_false_unreachable():
    db = diamond_db()
    honest = sssp_witness(db, 1)
    w = copy.deepcopy(honest)
    idx = w.node_ids.index(4)
    w.dist[idx] = w.d_max
    w.unreach[idx] = 1
    w.unreach_inv[idx] = 0
    w.pre[idx], w.pd[idx] = 4, w.d_max
    by_id = dict(zip(w.node_ids, w.dist))
    w.ud = [by_id[a] for a, _ in db.edges.pairs()]
    w.vd = [by_id[b] for _, b in db.edges.pairs()]
    table, _, _ = sssp_table(db, 1, witness=w)
    report = finish(table)
    assert not report.satisfied
    assert any("relaxation" in f.detail for f in report.failures)


def test_sssp_circuit_rejects_missing_source_flag():
    db = diamond_db()
    honest = sssp_witness(db, 1)
    w = copy.deepcopy(honest)
    idx = w.node_ids.index(1)
    w.is_src[idx] = 0
    w.src_count = [0] * len(w.node_ids)
    table, _, _ = sssp_table(db, 1, witness=w)
    assert not finish(table).satisfied


def test_sssp_rows_depend_only_on_sizes():
    w1 = sssp_witness(diamond_db(), 1)
    w2 = sssp_witness(diamond_db(), 4)  # different reach pattern
    assert w1.shape().rows() == w2.shape().rows()


# --- reachability ------------------------------------------------------------------

def test_reach_witness_and_circuit():
    db = line_db()
    w = reachability_witness(db, 1, 3)
    assert w.path == [1, 2, 3]
    table, ctx, dbr = op_ctx(db, extra_spans=(len(w.path),))
    region = build_reachability(ctx, w.shape(), dbr.edge_pairs_handle())
    assign_reachability(ctx, region, w)
    assert finish(table).satisfied

    # non-edge pair inside the walk
    table.set_cell(region.path, 1, 9)
    assert not table.check_satisfied().satisfied


def test_reach_missing_endpoint():
    db = line_db()
    w = reachability_witness(db, 1, 3)
    table, ctx, dbr = op_ctx(db, extra_spans=(len(w.path),))
    region = build_reachability(ctx, w.shape(), dbr.edge_pairs_handle())
    assign_reachability(ctx, region, w)
    # overwrite the row holding the target: t no longer appears
    table.set_cell(region.path, 2, 2)
    report = finish(table)
    assert not report.satisfied
    assert any("t-present" in f.detail for f in report.failures)


def test_reach_no_path():
    with pytest.raises(PathNotFound):
        reachability_witness(diamond_db(), 1, 9)


def test_reach_weaker_than_sssp():
    # any valid path coexists with an SSSP witness bounding the distance
    rng = random.Random(0xD3)
    checked = 0
    while checked < 100:
        db = random_graph(rng, max_nodes=15, max_edges=40)
        s, t = rng.choice(db.nodes.ids), rng.choice(db.nodes.ids)
        try:
            w = reachability_witness(db, s, t)
        except PathNotFound:
            continue
        sw = sssp_witness(db, s)
        dist = dict(zip(sw.node_ids, sw.dist))
        assert dist[t] <= len(w.path) - 1
        checked += 1


# --- all shortest last hops ----------------------------------------------------------

def brute_force_last_hops(db, s, t):
    """Enumerate every shortest path; collect its final edge."""
    from itertools import product

    ids = db.nodes.ids
    pairs = set(db.edges.pairs())
    oracle = bellman_ford_oracle(ids, db.edges.pairs(), s, len(ids) + 1)
    d = oracle[t]
    if d > len(ids):
        return None
    return sorted({(p, t) for p in ids if oracle[p] == d - 1 and (p, t) in pairs})


def test_allsp_diamond():
    db = diamond_db()
    w = all_shortest_witness(db, 1, 4)
    assert w.out_pairs == [(2, 4), (3, 4)]
    assert w.out_pairs == brute_force_last_hops(db, 1, 4)


def test_allsp_line():
    db = line_db()
    w = all_shortest_witness(db, 1, 3)
    assert w.out_pairs == [(2, 3)]


def test_allsp_circuit_honest_and_omission():
    db = diamond_db()
    w = all_shortest_witness(db, 1, 4)
    table, ctx, dbr = op_ctx(db, extra_spans=(w.sssp.d_max + 2,))
    region = build_all_shortest(ctx, w.shape(), dbr.node_ids, dbr.edge_pairs_handle())
    assign_all_shortest(ctx, region, w)
    assert finish(table).satisfied

    table.set_cell(region.out_p, 1, 0)
    table.set_cell(region.out_t, 1, 0)
    assert not table.check_satisfied().satisfied


def test_allsp_oracle_random():
    rng = random.Random(0xD4)
    checked = 0
    while checked < 150:
        db = random_graph(rng, max_nodes=15, max_edges=40)
        # de-duplicate edges for the counting argument
        pairs = sorted(set(db.edges.pairs()))
        db = build_db(db.nodes.ids, pairs, GraphSchema(b_id=8))
        s, t = rng.choice(db.nodes.ids), rng.choice(db.nodes.ids)
        expected = brute_force_last_hops(db, s, t)
        if expected is None or not expected:
            continue
        w = all_shortest_witness(db, s, t)
        assert w.out_pairs == expected
        checked += 1
