import random

import pytest

from zkgraph.errors import (
    DanglingEdge,
    DuplicateNodeId,
    ParseError,
    TargetTooSmall,
)
from zkgraph.store import (
    EdgeTable,
    GraphSchema,
    build_db,
    commit_db,
    hash_to_field,
    load_csv,
    load_db,
    max_sentinel,
    pad_with_dummies,
    save_db,
    to_csr,
)


def write_csvs(tmp_path, node_rows, edge_rows, node_header="id", edge_header="src,dst"):
    nodes = tmp_path / "nodes.csv"
    edges = tmp_path / "edges.csv"
    nodes.write_text("\n".join([node_header] + node_rows) + "\n")
    edges.write_text("\n".join([edge_header] + edge_rows) + "\n")
    return nodes, edges


def test_load_basic(tmp_path):
    nodes, edges = write_csvs(tmp_path, ["1", "2", "3"], ["1,2", "2,3"])
    db = load_csv(nodes, edges)
    assert db.nodes.ids == [1, 2, 3]
    assert db.edges.pairs() == [(1, 2), (2, 3)]
    assert len(db.commitment) == 32


def test_dangling_edge(tmp_path):
    nodes, edges = write_csvs(tmp_path, ["1", "2"], ["1,9"])
    with pytest.raises(DanglingEdge):
        load_csv(nodes, edges)


def test_duplicate_node(tmp_path):
    nodes, edges = write_csvs(tmp_path, ["1", "2", "2"], [])
    with pytest.raises(DuplicateNodeId):
        load_csv(nodes, edges)


def test_reserved_ids_rejected(tmp_path):
    nodes, edges = write_csvs(tmp_path, ["0", "1"], [])
    with pytest.raises(ParseError):
        load_csv(nodes, edges)
    nodes, edges = write_csvs(tmp_path, [str(max_sentinel(16))], [])
    with pytest.raises(ParseError):
        load_csv(nodes, edges)


def test_parse_error_carries_line(tmp_path):
    nodes, edges = write_csvs(tmp_path, ["1", "x"], [])
    with pytest.raises(ParseError) as exc:
        load_csv(nodes, edges)
    assert exc.value.line == 3


def test_commitment_order_independent(tmp_path):
    n1, e1 = write_csvs(tmp_path, ["3", "1", "2"], ["2,3", "1,2"])
    db1 = load_csv(n1, e1)
    tmp2 = tmp_path / "second"
    tmp2.mkdir()
    n2, e2 = write_csvs(tmp2, ["1", "2", "3"], ["1,2", "2,3"])
    db2 = load_csv(n2, e2)
    assert db1.commitment == db2.commitment


def test_commitment_sensitive_to_edge():
    a = build_db([1, 2, 3], [(1, 2)])
    b = build_db([1, 2, 3], [(1, 3)])
    assert a.commitment != b.commitment
    assert commit_db(a) == a.commitment


def test_string_props_hashed(tmp_path):
    schema = GraphSchema(node_props=(("label", "str"),))
    nodes = tmp_path / "n.csv"
    edges = tmp_path / "e.csv"
    nodes.write_text("id,label\n1,City\n2,Person\n")
    edges.write_text("src,dst\n1,2\n")
    db = load_csv(nodes, edges, schema)
    assert db.nodes.props["label"][0] == hash_to_field("City")


def test_csr_examples():
    db = build_db([1, 2, 3], [(1, 2), (1, 3), (3, 1)])
    csr = to_csr(db)
    assert csr.row == [0, 2, 2, 3]
    assert csr.col == [2, 3, 1]
    assert csr.idx == [0, 1, 2]

    empty = build_db([1, 2, 3], [])
    assert to_csr(empty).row == [0, 0, 0, 0]
    assert to_csr(empty).col == []

    loop = build_db([1, 2], [(2, 2)])
    csr = to_csr(loop)
    assert csr.row == [0, 0, 1]
    assert csr.col == [2]


def test_csr_roundtrip_random():
    rng = random.Random(0x5EED)
    for _ in range(500):
        n = rng.randrange(2, 40)
        ids = sorted(rng.sample(range(1, 1000), n))
        m = rng.randrange(0, 1000)
        edges = [(rng.choice(ids), rng.choice(ids)) for _ in range(min(m, 60))]
        db = build_db(ids, edges)
        csr = to_csr(db)
        flat = []
        for i, nid in enumerate(db.nodes.ids):
            for k in range(csr.row[i], csr.row[i + 1]):
                flat.append((nid, csr.col[k]))
        assert flat == db.edges.pairs()


def test_pad_with_dummies():
    t = EdgeTable(src=[1, 2, 3, 4, 5], dst=[2, 3, 4, 5, 1])
    padded, flags = pad_with_dummies(t, 8)
    assert len(padded) == 8
    assert flags == [0] * 5 + [1] * 3
    assert padded.src[5:] == [0, 0, 0]

    same, flags = pad_with_dummies(EdgeTable(src=[1] * 8, dst=[2] * 8), 8)
    assert flags == [0] * 8

    with pytest.raises(TargetTooSmall):
        pad_with_dummies(t, 4)


def test_save_load_roundtrip(tmp_path):
    schema = GraphSchema(node_props=(("w", "int"),), edge_props=(("val", "int"),))
    db = build_db(
        [5, 2, 9],
        [(2, 5), (9, 2)],
        schema,
        node_props={"w": [50, 20, 90]},
        edge_props={"val": [7, 8]},
    )
    path = tmp_path / "g.zkgd"
    save_db(db, path)
    back = load_db(path)
    assert back.nodes.ids == db.nodes.ids
    assert back.edges.pairs() == db.edges.pairs()
    assert back.commitment == db.commitment
    assert back.nodes.props["w"] == [20, 50, 90]  # sorted with ids


def test_undirected_self_loop_rejected():
    schema = GraphSchema(directed=False)
    with pytest.raises(ParseError):
        build_db([1, 2], [(1, 1)], schema)
