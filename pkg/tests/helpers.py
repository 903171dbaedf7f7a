"""Shared circuit fixtures and independent oracles for the test suite."""

import random

from zkgraph.cs import Cell, CellRef, ConstraintTable
from zkgraph.layout import LayoutContext, plan_n_rows
from zkgraph.ops.regions import assign_db_region, build_db_region
from zkgraph.store import GraphSchema, build_db


def random_graph(rng: random.Random, max_nodes=30, max_edges=60, b_id=8, directed=True):
    n = rng.randrange(2, max_nodes + 1)
    ids = sorted(rng.sample(range(1, (1 << b_id) - 1), n))
    m = rng.randrange(0, max_edges + 1)
    pairs = []
    for _ in range(m):
        a, b = rng.choice(ids), rng.choice(ids)
        if not directed and a == b:
            continue
        pairs.append((a, b))
    return build_db(ids, pairs, GraphSchema(b_id=b_id, directed=directed))


def op_ctx(db, extra_spans=(), mode="edge_list"):
    """Fresh table + context with the database region built and assigned."""
    spans = [db.n_nodes, db.n_edges + 1, *extra_spans]
    if mode == "csr":
        spans.append(db.n_nodes + 1)
    table = ConstraintTable(plan_n_rows(max(spans)))
    ctx = LayoutContext(table, db.b_id)
    dbr = build_db_region(
        ctx, mode, db.n_nodes, db.n_edges,
        list(db.nodes.props), list(db.edges.props),
    )
    assign_db_region(ctx, dbr, db)
    return table, ctx, dbr


def finish(table):
    """Derive challenges, fill accumulators, check."""
    table.derive_challenges(table.commit_columns())
    table.assign_accumulators()
    return table.check_satisfied()


# --- independent oracles (kept deliberately naive) ---

def adjacency_oracle(db, sources) -> list:
    """Brute-force scan: every edge whose source is in the query set."""
    hits = []
    src_set = set(sources)
    for a, b in zip(db.edges.src, db.edges.dst):
        if a in src_set:
            hits.append((a, b))
    return sorted(hits)


def bellman_ford_oracle(node_ids, pairs, source, d_max):
    """Iterative relaxation, independent of the BFS the witness generator runs."""
    inf = float("inf")
    dist = {v: inf for v in node_ids}
    dist[source] = 0
    for _ in range(len(node_ids)):
        changed = False
        for a, b in pairs:
            if dist[a] + 1 < dist[b]:
                dist[b] = dist[a] + 1
                changed = True
        if not changed:
            break
    return {v: (d_max if d == inf else d) for v, d in dist.items()}


def fibonacci_table(claimed: int = 21) -> ConstraintTable:
    """Three advice columns computing the sequence via one add-gate.

    Wiring copies force b[i] == a[i+1] and c[i] == b[i+1]; the public
    instance column holds the two starting values and the claimed 8th
    term, tied to the witness with copy constraints.
    """
    t = ConstraintTable(8)
    a = t.add_advice()
    b = t.add_advice()
    c = t.add_advice()
    sel = t.add_fixed([1] * 8)
    inst = t.add_instance()

    t.add_gate("fib-add", sel, Cell(a) + Cell(b) - Cell(c))
    for i in range(7):
        t.add_copy(CellRef(b, i), CellRef(a, i + 1))
        t.add_copy(CellRef(c, i), CellRef(b, i + 1))
    t.add_copy(CellRef(a, 0), CellRef(inst, 0))
    t.add_copy(CellRef(b, 0), CellRef(inst, 1))
    t.add_copy(CellRef(a, 7), CellRef(inst, 2))

    t.bind_instance(inst, 0, 1)
    t.bind_instance(inst, 1, 1)
    t.bind_instance(inst, 2, claimed)

    seq = [1, 1]
    while len(seq) < 10:
        seq.append(seq[-1] + seq[-2])
    t.assign_column(a, seq[0:8])
    t.assign_column(b, seq[1:9])
    t.assign_column(c, seq[2:10])
    t._fib_cols = (a, b, c, sel, inst)  # handles for tamper tests
    return t


def permutation_table(left_pairs, right_pairs) -> ConstraintTable:
    """A table whose only constraint is one multiset-equality argument."""
    from zkgraph.cs import next_pow2

    n = next_pow2(max(len(left_pairs), len(right_pairs), 1) + 1)
    t = ConstraintTable(n)
    l0, l1, r0, r1 = (t.add_advice() for _ in range(4))
    z = t.add_advice()
    lsel = t.add_fixed([1] * len(left_pairs))
    rsel = t.add_fixed([1] * len(right_pairs))
    t.assign_column(l0, [p[0] for p in left_pairs])
    t.assign_column(l1, [p[1] for p in left_pairs])
    t.assign_column(r0, [p[0] for p in right_pairs])
    t.assign_column(r1, [p[1] for p in right_pairs])
    t.add_permutation("pairs", (l0, l1), (r0, r1), z, lsel, rsel)
    t.derive_challenges(t.commit_columns())
    t.assign_accumulators()
    return t
