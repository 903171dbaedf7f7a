import random

import pytest

from zkgraph.errors import SentinelCollision, UnknownNode
from zkgraph.ops.expansion import (
    build_expand_set,
    build_expand_single,
    build_expand_single_csr,
    count_rows,
    expand_set_witness,
    expand_single_csr_witness,
    expand_single_witness,
    assign_expand_set,
    assign_expand_single,
    assign_expand_single_csr,
)
from zkgraph.store import GraphSchema, build_db, max_sentinel

from helpers import adjacency_oracle, finish, op_ctx, random_graph


def small_db(b_id=8):
    return build_db([1, 2, 3], [(1, 2), (1, 3), (2, 3)], GraphSchema(b_id=b_id))


# --- witnesses vs oracle ------------------------------------------------------

def test_single_witness_example():
    w = expand_single_witness(small_db(), 1)
    assert w.out_pairs == [(1, 2), (1, 3)]
    assert w.flags == [1, 1, 0]


def test_single_witness_no_edges():
    w = expand_single_witness(small_db(), 3)
    assert w.out_pairs == []
    assert w.flags == [0, 0, 0]


def test_single_witness_unknown_node():
    with pytest.raises(UnknownNode):
        expand_single_witness(small_db(), 9)


def test_single_witness_oracle_random():
    rng = random.Random(0xE1)
    for _ in range(200):
        db = random_graph(rng)
        source = rng.choice(db.nodes.ids)
        w = expand_single_witness(db, source)
        assert sorted(w.out_pairs) == adjacency_oracle(db, [source])


def test_csr_witness_example():
    db = small_db()
    w = expand_single_csr_witness(db, 1)
    assert (w.l_s, w.r_s) == (0, 2)
    assert w.out_pairs == [(1, 2), (1, 3)]
    empty = expand_single_csr_witness(db, 3)
    assert (empty.l_s, empty.r_s) == (3, 3)
    assert empty.out_pairs == []
    assert sum(empty.in_range) == 0


def test_set_witness_sentinels():
    db = small_db()
    w = expand_set_witness(db, [3, 1])
    assert w.sorted_set[0] == 0
    assert w.sorted_set[-1] == max_sentinel(db.b_id)
    assert w.sorted_set == sorted(w.sorted_set)
    assert sorted(w.out_pairs) == adjacency_oracle(db, [1, 3])


def test_set_witness_whole_table():
    db = small_db()
    w = expand_set_witness(db, [1, 2, 3])
    assert sorted(w.out_pairs) == sorted(db.edges.pairs())


def test_set_witness_singleton_matches_single():
    rng = random.Random(0xE2)
    for _ in range(100):
        db = random_graph(rng)
        source = rng.choice(db.nodes.ids)
        single = expand_single_witness(db, source)
        via_set = expand_set_witness(db, [source])
        assert sorted(via_set.out_pairs) == sorted(single.out_pairs)


def test_set_witness_sentinel_collision():
    db = small_db()
    with pytest.raises((SentinelCollision, UnknownNode)):
        expand_set_witness(db, [max_sentinel(db.b_id)])


def test_set_witness_oracle_random():
    rng = random.Random(0xE3)
    for _ in range(200):
        db = random_graph(rng)
        k = rng.randrange(1, min(8, len(db.nodes.ids)) + 1)
        members = rng.sample(db.nodes.ids, k)
        w = expand_set_witness(db, members)
        assert sorted(w.out_pairs) == adjacency_oracle(db, members)


# --- circuits ------------------------------------------------------------------

def check_single(db, source):
    w = expand_single_witness(db, source)
    table, ctx, dbr = op_ctx(db)
    region = build_expand_single(ctx, w.shape(), (dbr.src, dbr.dst))
    assign_expand_single(ctx, region, w)
    return table, region, w


def test_single_circuit_honest():
    table, _, _ = check_single(small_db(), 1)
    assert finish(table).satisfied


def test_single_circuit_flag_flip():
    db = small_db()
    table, region, w = check_single(db, 1)
    table.set_cell(region.flag, 2, 1)  # non-matching row flagged
    report = finish(table)
    assert not report.satisfied
    assert any(f.kind == "gate" for f in report.failures)


def test_csr_circuit_honest_and_forged():
    db = small_db()
    w = expand_single_csr_witness(db, 1)
    table, ctx, dbr = op_ctx(db, extra_spans=(1 << db.b_id,), mode="csr")
    region = build_expand_single_csr(ctx, w.shape(), dbr)
    assign_expand_single_csr(ctx, region, w)
    assert finish(table).satisfied

    # forged segment end: the row-pointer lookup must fire
    table.set_cell(region.params, 2, 3)
    table.assign_column(region.hi_bound, [3] * db.n_edges)
    report = table.check_satisfied()
    assert not report.satisfied
    assert any(f.kind == "lookup" for f in report.failures)


def build_set_table(db, members):
    w = expand_set_witness(db, members)
    table, ctx, dbr = op_ctx(db, extra_spans=(1 << db.b_id,))
    region = build_expand_set(ctx, w.shape(), (dbr.src, dbr.dst))
    assign_expand_set(ctx, region, w)
    return table, region, w


def test_set_circuit_honest():
    table, _, _ = build_set_table(small_db(), [1, 2])
    assert finish(table).satisfied


def test_set_circuit_forged_bracketing():
    db = small_db()
    table, region, w = build_set_table(db, [1])
    # break the consecutive-pair witness on a row
    table.set_cell(region.glb_next, 0, max_sentinel(db.b_id) - 1)
    report = finish(table)
    assert not report.satisfied
    assert any(f.kind == "lookup" for f in report.failures)


def test_tamper_rejection_fuzz():
    rng = random.Random(0xE4)
    tampers = ("drop", "inject", "flip", "glb")
    for kind in tampers:
        rejected = 0
        for _ in range(100):
            db = random_graph(rng, max_nodes=10, max_edges=20)
            members = rng.sample(db.nodes.ids, min(3, len(db.nodes.ids)))
            w = expand_set_witness(db, members)
            if kind in ("drop",) and not w.out_pairs:
                rejected += 1
                continue
            table, ctx, dbr = op_ctx(db, extra_spans=(1 << db.b_id,))
            region = build_expand_set(ctx, w.shape(), (dbr.src, dbr.dst))
            assign_expand_set(ctx, region, w)
            if kind == "drop":
                row = rng.randrange(len(w.out_pairs))
                table.set_cell(region.out_src, row, 0)
                table.set_cell(region.out_dst, row, 0)
            elif kind == "inject":
                if db.n_edges == 0:
                    rejected += 1
                    continue
                row = len(w.out_pairs)
                if row >= db.n_edges:
                    # output budget full: overwrite instead
                    row = rng.randrange(db.n_edges)
                table.set_cell(region.out_src, row, members[0])
                table.set_cell(region.out_dst, row, 201)
            elif kind == "flip":
                row = rng.randrange(db.n_edges) if db.n_edges else 0
                if db.n_edges == 0:
                    rejected += 1
                    continue
                table.set_cell(region.flag, row, 1 - table.cell(region.flag, row))
            elif kind == "glb":
                row = rng.randrange(db.n_edges) if db.n_edges else 0
                if db.n_edges == 0:
                    rejected += 1
                    continue
                table.set_cell(region.glb, row, (table.cell(region.glb, row) + 1) % (1 << db.b_id))
            if not finish(table).satisfied:
                rejected += 1
        assert rejected == 100, f"tamper '{kind}' slipped through"


# --- cost model ----------------------------------------------------------------

def test_count_rows_set_independent_of_set_size():
    counts = {count_rows("expand_set", 300, 1000, set_size=s) for s in (10, 50, 100, 200)}
    assert len(counts) == 1


def test_count_rows_repeated_single_linear():
    ten = count_rows("expand_repeated_single", 300, 1000, set_size=10)
    two_hundred = count_rows("expand_repeated_single", 300, 1000, set_size=200)
    assert two_hundred == 20 * ten


def test_count_rows_csr_exceeds_edge_list():
    for n_nodes, n_edges in ((10, 20), (100, 500), (1000, 6000)):
        assert count_rows("expand_single_csr", n_nodes, n_edges) > count_rows(
            "expand_single", n_nodes, n_edges)
