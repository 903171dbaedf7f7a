"""Private graph database: ingestion, canonical ordering, CSR views, commitment.

Nodes and edges are kept canonically sorted (node ids strictly
increasing, edges by (src, dst)), so the database commitment is
independent of input file row order.  Id 0 is the reserved dummy
identifier used when padding tables, and 2^B_id - 1 is the reserved
maximum sentinel used by set-expansion bracketing; both are rejected
in input data.  String properties are hashed to field elements at
ingest, so equality filters compare hashes.
"""

from __future__ import annotations

import csv
import hashlib
import io
import struct
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from .errors import (
    DanglingEdge,
    DuplicateNodeId,
    IdOutOfRange,
    ParseError,
    TargetTooSmall,
    WrongLength,
)
from .field import MODULUS, fe_from_bytes_wide

DEFAULT_B_ID = 16
MIN_B_ID = 4
MAX_B_ID = 20
DUMMY_ID = 0

DB_MAGIC = b"ZKGD"
DB_VERSION = 1
_DB_HASH_TAG = b"ZKGDB1"


def max_sentinel(b_id: int) -> int:
    return (1 << b_id) - 1


def hash_to_field(text: str) -> int:
    """Map a string property to a field element (collision-resistant)."""
    return fe_from_bytes_wide(hashlib.sha256(text.encode("utf-8")).digest())


@dataclass(frozen=True)
class GraphSchema:
    node_props: tuple[tuple[str, str], ...] = ()  # (name, "int" | "str")
    edge_props: tuple[tuple[str, str], ...] = ()
    directed: bool = True
    b_id: int = DEFAULT_B_ID

    def __post_init__(self):
        if not MIN_B_ID <= self.b_id <= MAX_B_ID:
            raise IdOutOfRange(f"b_id {self.b_id} outside [{MIN_B_ID}, {MAX_B_ID}]")
        for name, kind in (*self.node_props, *self.edge_props):
            if kind not in ("int", "str"):
                raise ParseError(0, f"property '{name}' has unknown type '{kind}'")


@dataclass
class NodeTable:
    ids: list[int]
    props: dict[str, list[int]] = dc_field(default_factory=dict)

    def __len__(self):
        return len(self.ids)

    def row_of(self, node_id: int) -> int | None:
        """Index of node_id in the sorted id column, or None."""
        lo, hi = 0, len(self.ids)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.ids[mid] < node_id:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self.ids) and self.ids[lo] == node_id:
            return lo
        return None


@dataclass
class EdgeTable:
    src: list[int]
    dst: list[int]
    props: dict[str, list[int]] = dc_field(default_factory=dict)

    def __len__(self):
        return len(self.src)

    def pairs(self) -> list[tuple[int, int]]:
        return list(zip(self.src, self.dst))


@dataclass
class CsrTables:
    col: list[int]   # concatenated neighbor ids
    row: list[int]   # row pointers, length n_nodes + 1
    idx: list[int]   # 0..len(col)-1, explicit index column
    val: dict[str, list[int]] = dc_field(default_factory=dict)


@dataclass
class GraphDb:
    nodes: NodeTable
    edges: EdgeTable
    directed: bool
    b_id: int
    schema: GraphSchema
    commitment: bytes = b""

    def __post_init__(self):
        if not self.commitment:
            self.commitment = commit_db(self)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_edges(self):
        return len(self.edges)


def _check_id(value: int, b_id: int, line: int, role: str):
    if value == DUMMY_ID:
        raise ParseError(line, f"{role} id 0 is reserved for dummy rows")
    if value >= max_sentinel(b_id):
        raise ParseError(line, f"{role} id {value} exceeds the {b_id}-bit id space (max sentinel reserved)")
    if value < 0:
        raise ParseError(line, f"{role} id {value} is negative")


def _parse_prop(raw: str, kind: str, line: int, name: str) -> int:
    if kind == "int":
        try:
            return int(raw) % MODULUS
        except ValueError:
            raise ParseError(line, f"property '{name}': '{raw}' is not an integer") from None
    return hash_to_field(raw)


def build_db(
    node_ids: list[int],
    edge_pairs: list[tuple[int, int]],
    schema: GraphSchema | None = None,
    node_props: dict[str, list[int]] | None = None,
    edge_props: dict[str, list[int]] | None = None,
) -> GraphDb:
    """Construct a database from in-memory tables (canonicalizes order)."""
    schema = schema or GraphSchema()
    node_props = node_props or {}
    edge_props = edge_props or {}
    if set(node_props) != {name for name, _ in schema.node_props}:
        raise ParseError(0, "node property columns do not match the schema")
    if set(edge_props) != {name for name, _ in schema.edge_props}:
        raise ParseError(0, "edge property columns do not match the schema")
    for i in node_ids:
        _check_id(i, schema.b_id, 0, "node")
    order = sorted(range(len(node_ids)), key=lambda k: node_ids[k])
    ids = [node_ids[k] for k in order]
    for a, b in zip(ids, ids[1:]):
        if a == b:
            raise DuplicateNodeId(f"node id {a}")
    nprops = {name: [vals[k] % MODULUS for k in order] for name, vals in node_props.items()}
    id_set = set(ids)
    for s, d in edge_pairs:
        if s not in id_set:
            raise DanglingEdge(f"edge source {s} not in node table")
        if d not in id_set:
            raise DanglingEdge(f"edge target {d} not in node table")
        if not schema.directed and s == d:
            raise ParseError(0, f"self-loop ({s},{s}) not allowed on a bidirectional edge kind")
    eorder = sorted(range(len(edge_pairs)), key=lambda k: edge_pairs[k])
    src = [edge_pairs[k][0] for k in eorder]
    dst = [edge_pairs[k][1] for k in eorder]
    eprops = {name: [vals[k] % MODULUS for k in eorder] for name, vals in edge_props.items()}
    return GraphDb(
        nodes=NodeTable(ids, nprops),
        edges=EdgeTable(src, dst, eprops),
        directed=schema.directed,
        b_id=schema.b_id,
        schema=schema,
    )


def load_csv(nodes_path: str | Path, edges_path: str | Path, schema: GraphSchema | None = None) -> GraphDb:
    """Ingest node and edge CSVs (comma-separated, header row, UTF-8)."""
    schema = schema or GraphSchema()
    node_ids: list[int] = []
    node_props: dict[str, list[int]] = {name: [] for name, _ in schema.node_props}
    with open(nodes_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["id"] + [name for name, _ in schema.node_props]
        if header is None or [h.strip() for h in header] != expected:
            raise ParseError(1, f"node header {header} != expected {expected}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(expected):
                raise ParseError(lineno, f"expected {len(expected)} fields, got {len(rec)}")
            try:
                nid = int(rec[0])
            except ValueError:
                raise ParseError(lineno, f"node id '{rec[0]}' is not an integer") from None
            _check_id(nid, schema.b_id, lineno, "node")
            node_ids.append(nid)
            for (name, kind), raw in zip(schema.node_props, rec[1:]):
                node_props[name].append(_parse_prop(raw, kind, lineno, name))

    edge_pairs: list[tuple[int, int]] = []
    edge_props: dict[str, list[int]] = {name: [] for name, _ in schema.edge_props}
    with open(edges_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["src", "dst"] + [name for name, _ in schema.edge_props]
        if header is None or [h.strip() for h in header] != expected:
            raise ParseError(1, f"edge header {header} != expected {expected}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(expected):
                raise ParseError(lineno, f"expected {len(expected)} fields, got {len(rec)}")
            try:
                s, d = int(rec[0]), int(rec[1])
            except ValueError:
                raise ParseError(lineno, f"edge endpoint '{rec[0]},{rec[1]}' not integers") from None
            _check_id(s, schema.b_id, lineno, "edge source")
            _check_id(d, schema.b_id, lineno, "edge target")
            edge_pairs.append((s, d))
            for (name, kind), raw in zip(schema.edge_props, rec[2:]):
                edge_props[name].append(_parse_prop(raw, kind, lineno, name))

    return build_db(node_ids, edge_pairs, schema, node_props, edge_props)


def to_csr(db: GraphDb) -> CsrTables:
    """CSR view: row pointers over the sorted node table, concatenated targets."""
    n = len(db.nodes)
    counts = [0] * n
    for s in db.edges.src:
        counts[db.nodes.row_of(s)] += 1
    row = [0] * (n + 1)
    for i in range(n):
        row[i + 1] = row[i] + counts[i]
    # edges are sorted by (src, dst), so dst is already segment-grouped
    col = list(db.edges.dst)
    val = {name: list(vals) for name, vals in db.edges.props.items()}
    return CsrTables(col=col, row=row, idx=list(range(len(col))), val=val)


def pad_with_dummies(edges: EdgeTable, target_rows: int) -> tuple[EdgeTable, list[int]]:
    """Append dummy rows (id 0 endpoints, zero props) up to target_rows.

    Returns the padded table and the dummy flag column (1 on padding).
    """
    cur = len(edges)
    if target_rows < cur:
        raise TargetTooSmall(f"target {target_rows} < current {cur} rows")
    if target_rows & (target_rows - 1):
        raise TargetTooSmall(f"target {target_rows} is not a power of two")
    pad = target_rows - cur
    out = EdgeTable(
        src=edges.src + [DUMMY_ID] * pad,
        dst=edges.dst + [DUMMY_ID] * pad,
        props={name: vals + [0] * pad for name, vals in edges.props.items()},
    )
    flags = [0] * cur + [1] * pad
    return out, flags


# ---------------------------------------------------------------------------
# commitment & (de)serialization
# ---------------------------------------------------------------------------

def _cells(values: list[int]) -> bytes:
    return b"".join(v.to_bytes(8, "little") for v in values)


def _named_columns(props: dict[str, list[int]], order: tuple[tuple[str, str], ...]) -> bytes:
    buf = io.BytesIO()
    buf.write(struct.pack("<H", len(order)))
    for name, _ in order:
        raw = name.encode("utf-8")
        buf.write(struct.pack("<H", len(raw)))
        buf.write(raw)
        buf.write(_cells(props[name]))
    return buf.getvalue()


def commit_db(db: GraphDb) -> bytes:
    """Deterministic hash binding ids, properties, and the sorted edge list."""
    buf = io.BytesIO()
    buf.write(_DB_HASH_TAG)
    buf.write(bytes([db.b_id, 1 if db.directed else 0]))
    buf.write(struct.pack("<I", len(db.nodes)))
    buf.write(_cells(db.nodes.ids))
    buf.write(_named_columns(db.nodes.props, db.schema.node_props))
    buf.write(struct.pack("<I", len(db.edges)))
    buf.write(_cells(db.edges.src))
    buf.write(_cells(db.edges.dst))
    buf.write(_named_columns(db.edges.props, db.schema.edge_props))
    return hashlib.sha256(buf.getvalue()).digest()


def save_db(db: GraphDb, path: str | Path):
    """Binary serialization; load_db() restores an identical database."""
    buf = io.BytesIO()
    buf.write(DB_MAGIC)
    buf.write(struct.pack("<H", DB_VERSION))
    buf.write(bytes([db.b_id, 1 if db.directed else 0]))
    buf.write(struct.pack("<I", len(db.nodes)))
    buf.write(_cells(db.nodes.ids))
    buf.write(_named_columns(db.nodes.props, db.schema.node_props))
    buf.write(struct.pack("<I", len(db.edges)))
    buf.write(_cells(db.edges.src))
    buf.write(_cells(db.edges.dst))
    buf.write(_named_columns(db.edges.props, db.schema.edge_props))
    Path(path).write_bytes(buf.getvalue())


def _read_cells(buf: io.BytesIO, n: int) -> list[int]:
    raw = buf.read(8 * n)
    if len(raw) != 8 * n:
        raise WrongLength("truncated cell block")
    return [int.from_bytes(raw[i * 8:(i + 1) * 8], "little") for i in range(n)]


def _read_named_columns(buf: io.BytesIO, n_rows: int) -> tuple[dict[str, list[int]], tuple[tuple[str, str], ...]]:
    (count,) = struct.unpack("<H", buf.read(2))
    props: dict[str, list[int]] = {}
    order = []
    for _ in range(count):
        (ln,) = struct.unpack("<H", buf.read(2))
        name = buf.read(ln).decode("utf-8")
        props[name] = _read_cells(buf, n_rows)
        order.append((name, "int"))  # concrete type is irrelevant post-ingest
    return props, tuple(order)


def load_db(path: str | Path) -> GraphDb:
    buf = io.BytesIO(Path(path).read_bytes())
    if buf.read(4) != DB_MAGIC:
        raise WrongLength(f"{path} is not a graph database file")
    (version,) = struct.unpack("<H", buf.read(2))
    if version != DB_VERSION:
        raise WrongLength(f"unsupported database version {version}")
    b_id, directed = buf.read(1)[0], buf.read(1)[0]
    (n_nodes,) = struct.unpack("<I", buf.read(4))
    ids = _read_cells(buf, n_nodes)
    nprops, norder = _read_named_columns(buf, n_nodes)
    (n_edges,) = struct.unpack("<I", buf.read(4))
    src = _read_cells(buf, n_edges)
    dst = _read_cells(buf, n_edges)
    eprops, eorder = _read_named_columns(buf, n_edges)
    schema = GraphSchema(node_props=norder, edge_props=eorder, directed=bool(directed), b_id=b_id)
    return GraphDb(
        nodes=NodeTable(ids, nprops),
        edges=EdgeTable(src, dst, eprops),
        directed=bool(directed),
        b_id=b_id,
        schema=schema,
    )
