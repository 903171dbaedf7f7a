"""Graph-data regions inside a constraint table.

The private database enters the circuit as advice columns.  The
verifier re-derives the database commitment from exactly these columns
(plus the public schema), which is what binds the circuit's inputs to
the graph the prover claimed to own.  Two layouts exist:

* edge-list -- node ids / props plus (src, dst) edge columns, all in
  canonical sorted order so the recomputed hash matches commit_db;
* CSR       -- node ids plus (col, row-pointer) columns; the verifier
  reconstructs the edge list from the segments before hashing, so no
  separate CSR commitment is needed.

Both edge layouts keep one structural all-zero row after the data so
masked lookups always find the dummy tuple; advice tails are
zero-constrained because these columns serve as lookup tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from ..cs import ColumnId
from ..layout import LayoutContext
from ..store import GraphDb


@dataclass
class OutputHandle:
    """Payload columns an operator exposes to its consumers."""

    cols: tuple[ColumnId, ...]
    rows: int  # region extent (public budget)
    used: int  # real rows occupy [0, used); the rest are dummy zeros

    @property
    def arity(self) -> int:
        return len(self.cols)


@dataclass
class DbRegion:
    mode: str  # "edge_list" | "csr"
    n_nodes: int
    n_edges: int
    node_ids: ColumnId | None = None
    node_props: dict[str, ColumnId] = dc_field(default_factory=dict)
    # edge-list mode
    src: ColumnId | None = None
    dst: ColumnId | None = None
    edge_props: dict[str, ColumnId] = dc_field(default_factory=dict)
    # csr mode
    csr_col: ColumnId | None = None
    csr_row: ColumnId | None = None

    def edge_pairs_handle(self) -> OutputHandle:
        if self.mode != "edge_list":
            raise ValueError("edge pairs are only direct in edge-list mode")
        return OutputHandle((self.src, self.dst), self.n_edges, self.n_edges)

    def binding_descriptor(self) -> dict:
        cols = {"node_ids": list(self.node_ids)}
        cols["node_props"] = {k: list(v) for k, v in self.node_props.items()}
        if self.mode == "edge_list":
            cols["src"] = list(self.src)
            cols["dst"] = list(self.dst)
            cols["edge_props"] = {k: list(v) for k, v in self.edge_props.items()}
        else:
            cols["csr_col"] = list(self.csr_col)
            cols["csr_row"] = list(self.csr_row)
        return {
            "mode": self.mode,
            "n_nodes": self.n_nodes,
            "n_edges": self.n_edges,
            "columns": cols,
        }


def db_region_spans(mode: str, n_nodes: int, n_edges: int, n_node_props: int, n_edge_props: int) -> int:
    if mode == "edge_list":
        return n_nodes * (1 + n_node_props) + (n_edges + 1) * (2 + n_edge_props)
    return n_nodes * (1 + n_node_props) + (n_edges + 1) + (n_nodes + 1)


def build_db_region(
    ctx: LayoutContext,
    mode: str,
    n_nodes: int,
    n_edges: int,
    node_prop_names: list[str],
    edge_prop_names: list[str],
) -> DbRegion:
    region = DbRegion(mode=mode, n_nodes=n_nodes, n_edges=n_edges)
    region.node_ids = ctx.table_advice(n_nodes, "db/node_ids")
    for name in node_prop_names:
        region.node_props[name] = ctx.table_advice(n_nodes, f"db/node_prop[{name}]")
    if mode == "edge_list":
        region.src = ctx.table_advice(n_edges, "db/src")
        region.dst = ctx.table_advice(n_edges, "db/dst")
        for name in edge_prop_names:
            region.edge_props[name] = ctx.table_advice(n_edges, f"db/edge_prop[{name}]")
    elif mode == "csr":
        region.csr_col = ctx.table_advice(n_edges, "db/csr_col")
        region.csr_row = ctx.table_advice(n_nodes + 1, "db/csr_row")
    else:
        raise ValueError(f"unknown db region mode '{mode}'")
    ctx.log_region(
        "db",
        db_region_spans(mode, n_nodes, n_edges, len(node_prop_names), len(edge_prop_names)),
    )
    return region


def assign_db_region(ctx: LayoutContext, region: DbRegion, db: GraphDb):
    t = ctx.table
    t.assign_column(region.node_ids, db.nodes.ids)
    for name, col in region.node_props.items():
        t.assign_column(col, db.nodes.props[name])
    if region.mode == "edge_list":
        t.assign_column(region.src, db.edges.src)
        t.assign_column(region.dst, db.edges.dst)
        for name, col in region.edge_props.items():
            t.assign_column(col, db.edges.props[name])
    else:
        from ..store import to_csr

        csr = to_csr(db)
        t.assign_column(region.csr_col, csr.col)
        t.assign_column(region.csr_row, csr.row)
