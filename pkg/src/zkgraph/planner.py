"""Query plans: parsing, native execution, and circuit compilation.

A plan is a line-oriented DSL (see parse_plan) naming a chain of
operators.  Compilation executes the operators natively against the
database to produce witnesses, then lays every operator out as a
region of one constraint table.  Consumers own fresh input columns
bound to their producer's output cell-by-cell with copy constraints,
and the public instance column binds the database commitment, the plan
hash and the result values.

The circuit layout is a pure function of the plan plus a small list of
public shape numbers (extents, result sizes, claimed distances).  The
prover derives those numbers while executing; the verifier takes them
from the bundle header and rebuilds the identical table, which is what
makes offline re-verification possible without the database.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field as dc_field

from .cs import Cell, CellRef, ColumnId, ConstraintTable, Const
from .errors import (
    PlanSyntaxError,
    UnknownNode,
    UnboundInput,
    UnboundParam,
    UnknownOperator,
    UnsupportedInput,
)
from .layout import LayoutContext, plan_n_rows
from .ops import expansion, paths, relational
from .ops.regions import (
    DbRegion,
    OutputHandle,
    assign_db_region,
    build_db_region,
)
from .store import GraphDb, hash_to_field

OP_KINDS = (
    "expand_single",
    "expand_single_csr",
    "expand_set",
    "sssp",
    "reach",
    "all_sp_last_hops",
    "canon",
    "filter",
    "topk",
    "project",
)

DB_INPUTS = ("edges", "nodes")

KEYED_KINDS = ("sssp", "topk", "project")


@dataclass
class PlanNode:
    name: str
    kind: str
    input: str  # "edges" | "nodes" | name of a previous node
    params: dict

    def canonical(self) -> str:
        parts = [self.input]
        for key in sorted(self.params):
            value = self.params[key]
            if isinstance(value, list):
                parts.append(f"{key}=[{','.join(str(v) for v in value)}]")
            else:
                parts.append(f"{key}={value}")
        return f"{self.name} = {self.kind}({', '.join(parts)})"


@dataclass
class QueryPlan:
    nodes: list[PlanNode]

    def canonical_text(self) -> str:
        return "\n".join(node.canonical() for node in self.nodes) + "\n"

    def plan_hash(self) -> bytes:
        return hashlib.sha256(self.canonical_text().encode("utf-8")).digest()

    def node_named(self, name: str) -> PlanNode:
        for node in self.nodes:
            if node.name == name:
                return node
        raise UnboundInput(name)


_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*|\$[A-Za-z_][A-Za-z0-9_]*|-?\d+|[=(),|>\[\]])")


def _substitute(value: str, params: dict[str, str], line: int):
    if isinstance(value, str) and value.startswith("$"):
        key = value[1:]
        if key not in params:
            raise UnboundParam(f"line {line}: parameter ${key} was not supplied")
        value = params[key]
    try:
        return int(value)
    except (TypeError, ValueError):
        return value


def parse_plan(text: str, params: dict[str, str] | None = None) -> QueryPlan:
    """Parse the plan DSL.

    Grammar (line-oriented; '#' starts a comment):

        line   := [NAME '='] chain
        chain  := call ('|>' call)*
        call   := KIND '(' [input] (',' key '=' value)* ')'
        value  := INT | $param | NAME | '[' value (',' value)* ']'

    The first call of a chain defaults its input to ``edges``; later
    calls in a chain consume their predecessor.  Named lines can be
    referenced as inputs by later lines; ``$x`` values are substituted
    from the supplied parameters before hashing, so a parameter change
    changes the plan hash.
    """
    params = params or {}
    nodes: list[PlanNode] = []
    known: set[str] = set(DB_INPUTS)
    auto = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        tokens: list[tuple[str, int]] = []
        pos = 0
        while pos < len(line):
            if line[pos].isspace():
                pos += 1
                continue
            m = _TOKEN.match(line, pos)
            if not m:
                raise PlanSyntaxError(lineno, pos + 1, f"unexpected character {line[pos]!r}")
            tokens.append((m.group(1), m.start(1) + 1))
            pos = m.end()

        state = {"idx": 0}

        def peek():
            i = state["idx"]
            return tokens[i][0] if i < len(tokens) else None

        def take(expected=None):
            i = state["idx"]
            if i >= len(tokens):
                raise PlanSyntaxError(lineno, len(line), f"expected {expected or 'more input'}")
            tok, col = tokens[i]
            if expected is not None and tok != expected:
                raise PlanSyntaxError(lineno, col, f"expected {expected!r}, found {tok!r}")
            state["idx"] = i + 1
            return tok, col

        line_name = None
        if len(tokens) >= 2 and tokens[1][0] == "=" and tokens[0][0] not in OP_KINDS:
            line_name = tokens[0][0]
            state["idx"] = 2

        chain_prev: str | None = None
        while True:
            kind, kcol = take()
            if kind not in OP_KINDS:
                raise UnknownOperator(f"line {lineno}: unknown operator '{kind}'")
            take("(")
            input_name = chain_prev
            call_params: dict = {}
            first = True
            while peek() != ")":
                tok, col = take()
                if first and peek() not in ("=",):
                    if chain_prev is not None:
                        raise PlanSyntaxError(lineno, col, "piped call cannot rebind its input")
                    input_name = tok
                else:
                    key = tok
                    take("=")
                    if peek() == "[":
                        take("[")
                        items = []
                        while True:
                            v, _ = take()
                            items.append(_substitute(v, params, lineno))
                            tok2, c2 = take()
                            if tok2 == "]":
                                break
                            if tok2 != ",":
                                raise PlanSyntaxError(lineno, c2, "expected ',' or ']'")
                        call_params[key] = items
                    else:
                        v, _ = take()
                        call_params[key] = _substitute(v, params, lineno)
                first = False
                if peek() not in (",", ")"):
                    tok, col = tokens[state["idx"]] if state["idx"] < len(tokens) else ("", len(line))
                    raise PlanSyntaxError(lineno, col, f"expected ',' or ')', found {tok!r}")
                if peek() == ",":
                    take(",")
            take(")")
            if input_name is None:
                input_name = "edges"
            if input_name not in known:
                raise UnboundInput(f"line {lineno}: input '{input_name}' is not defined")
            if "from" in call_params and call_params["from"] not in known:
                raise UnboundInput(f"line {lineno}: set source '{call_params['from']}' is not defined")
            is_last_call = peek() is None
            name = line_name if (line_name and is_last_call) else f"_n{auto}"
            auto += 1
            nodes.append(PlanNode(name, kind, input_name, call_params))
            known.add(name)
            chain_prev = name
            if peek() is None:
                break
            take("|")
            take(">")

    if not nodes:
        raise PlanSyntaxError(1, 1, "empty plan")
    return QueryPlan(nodes)


def _require_int(node: PlanNode, key: str) -> int:
    if key not in node.params:
        raise UnsupportedInput(f"{node.kind} requires parameter '{key}'")
    value = node.params[key]
    if not isinstance(value, int):
        raise UnsupportedInput(f"{node.kind} parameter '{key}' must be an integer, got {value!r}")
    return value


def _is_keyed(plan: QueryPlan, name: str) -> bool:
    if name == "nodes":
        return True
    if name == "edges":
        return False
    node = plan.node_named(name)
    if node.kind in KEYED_KINDS:
        return True
    if node.kind == "filter":
        return _is_keyed(plan, node.input)
    return False


def _filter_mode(plan: QueryPlan, node: PlanNode, meta: dict) -> tuple[str | None, str]:
    """Returns (join node-prop name or None, value source: 'payload'|'edge-prop')."""
    prop = node.params.get("prop")
    if prop is None or _is_keyed(plan, node.input):
        return None, "payload"
    prop = str(prop)
    node_props = {n for n, _ in meta["schema"]["node_props"]}
    edge_props = {n for n, _ in meta["schema"]["edge_props"]}
    if prop in node_props:
        return prop, "payload"
    if prop in edge_props:
        if node.input != "edges":
            raise UnsupportedInput("edge-property filters apply to the edge table directly")
        if not meta["directed"]:
            raise UnsupportedInput("edge-property filters need a directed edge kind")
        return None, "edge-prop"
    raise UnsupportedInput(f"unknown property '{prop}'")


# ---------------------------------------------------------------------------
# native execution
# ---------------------------------------------------------------------------

@dataclass
class NativeValue:
    """Region-shaped operator output: real rows first, dummy (0,0) after.

    The canon-strategy union is the one exception: its real rows sit at
    ``result_rows`` rather than a front-packed prefix.
    """

    pairs: list[tuple[int, int]]
    used: int
    keyed: bool = False
    result_rows: list[int] | None = None

    @property
    def rows(self) -> int:
        return len(self.pairs)

    def real_pairs(self) -> list[tuple[int, int]]:
        rows = self.result_rows if self.result_rows is not None else range(self.used)
        return [self.pairs[r] for r in rows]


def _padded(real_pairs: list[tuple[int, int]], extent: int) -> list[tuple[int, int]]:
    return list(real_pairs) + [(0, 0)] * (extent - len(real_pairs))


class _Executor:
    """Runs the plan natively, producing witnesses and dynamic shape data."""

    def __init__(self, plan: QueryPlan, db: GraphDb):
        self.plan = plan
        self.db = db
        self.meta = db_meta_of(db)
        self.values: dict[str, NativeValue] = {}
        self.witnesses: dict[str, object] = {}
        self.dynamic: list[dict] = []

    def db_pairs(self) -> NativeValue:
        if self.db.directed:
            return NativeValue(self.db.edges.pairs(), self.db.n_edges)
        sym = self.db.edges.pairs() + [(b, a) for a, b in self.db.edges.pairs()]
        return NativeValue(sym, len(sym))

    def input_value(self, node: PlanNode) -> NativeValue:
        if node.input == "edges":
            return self.db_pairs()
        if node.input == "nodes":
            prop = str(node.params.get("prop", "id"))
            vals = self._node_prop(prop)
            return NativeValue(list(zip(self.db.nodes.ids, vals)), self.db.n_nodes, keyed=True)
        return self.values[node.input]

    def _node_prop(self, name: str) -> list[int]:
        if name == "id":
            return list(self.db.nodes.ids)
        if name not in self.db.nodes.props:
            raise UnsupportedInput(f"unknown node property '{name}'")
        return self.db.nodes.props[name]

    def _require_node(self, node_id: int) -> int:
        if self.db.nodes.row_of(node_id) is None:
            raise UnknownNode(f"node {node_id} not in database")
        return node_id

    def run(self):
        for node in self.plan.nodes:
            value, dyn = getattr(self, f"_run_{node.kind}")(node)
            self.values[node.name] = value
            self.dynamic.append(dyn)
        return self

    def result(self) -> NativeValue:
        return self.values[self.plan.nodes[-1].name]

    # --- per-operator native semantics ---

    def _run_expand_single(self, node: PlanNode):
        inp = self.input_value(node)
        id_s = self._require_node(_require_int(node, "id"))
        w = expansion.expansion_witness_from_pairs(
            [p[0] for p in inp.pairs], [p[1] for p in inp.pairs], id_s)
        self.witnesses[node.name] = w
        return (
            NativeValue(_padded(w.out_pairs, inp.rows), len(w.out_pairs)),
            {"out_used": len(w.out_pairs)},
        )

    def _run_expand_single_csr(self, node: PlanNode):
        if node.input != "edges" or not self.db.directed:
            raise UnsupportedInput("CSR expansion reads a directed edge table directly")
        id_s = _require_int(node, "id")
        w = expansion.expand_single_csr_witness(self.db, id_s)
        self.witnesses[node.name] = w
        return (
            NativeValue(_padded(w.out_pairs, self.db.n_edges), len(w.out_pairs)),
            {"out_used": len(w.out_pairs)},
        )

    def _set_members(self, node: PlanNode) -> tuple[list[int], str]:
        if "ids" in node.params:
            members = node.params["ids"]
            if not isinstance(members, list):
                members = [members]
            members = sorted({int(v) for v in members})
            for v in members:
                self._require_node(v)
            return members, "param"
        if "from" in node.params:
            src = str(node.params["from"])
            upstream = self.values[src]
            members = sorted({b for _, b in upstream.pairs[: upstream.used] if b != 0})
            if not members:
                raise UnsupportedInput(f"set source '{src}' produced no members")
            return members, "upstream"
        raise UnsupportedInput("expand_set needs ids=[...] or from=<node>")

    def _run_expand_set(self, node: PlanNode):
        members, binding = self._set_members(node)
        strategy = str(node.params.get("undirected", "duplicate"))
        if node.input == "edges" and not self.db.directed and strategy == "canon":
            return self._run_expand_set_canon(node, members, binding)
        inp = self.input_value(node)
        w = expansion.set_expansion_witness_from_pairs(
            [p[0] for p in inp.pairs], [p[1] for p in inp.pairs],
            members, self.db.b_id, self.db.n_nodes, binding)
        self.witnesses[node.name] = w
        return (
            NativeValue(_padded(w.out_pairs, inp.rows), len(w.out_pairs)),
            {"out_used": len(w.out_pairs), "set_size": len(members)},
        )

    def _run_expand_set_canon(self, node: PlanNode, members: list[int], binding: str):
        pairs = self.db.edges.pairs()
        cw = relational.canonicalize_witness(
            [a for a, _ in pairs], [b for _, b in pairs], self.db.b_id)
        dw = expansion.dual_set_expansion_witness(
            cw.low, cw.high, members, self.db.b_id, self.db.n_nodes)
        self.witnesses[node.name] = ("canon-set", cw, dw)
        n = len(pairs)
        lo_out, hi_out = dw.low_pass.out_pairs, dw.high_pass.out_pairs
        out_pairs = _padded(lo_out, n) + _padded(hi_out, n)
        result_rows = list(range(len(lo_out))) + [n + r for r in range(len(hi_out))]
        dyn = {
            "out_used_low": len(lo_out),
            "out_used_high": len(hi_out),
            "set_size": len(members),
            "canon": True,
        }
        return NativeValue(out_pairs, len(lo_out) + len(hi_out), result_rows=result_rows), dyn

    def _run_sssp(self, node: PlanNode):
        inp = self.input_value(node)
        id_s = _require_int(node, "src")
        d_max = int(node.params.get("dmax", self.db.n_nodes))
        if d_max + 2 >= (1 << self.db.b_id):
            raise UnsupportedInput(f"d_max {d_max} overflows the {self.db.b_id}-bit range table")
        w = paths.sssp_witness_from_pairs(self.db.nodes.ids, inp.pairs, id_s, d_max)
        self.witnesses[node.name] = w
        return (
            NativeValue(list(zip(w.node_ids, w.dist)), len(w.node_ids), keyed=True),
            {"d_max": d_max},
        )

    def _run_reach(self, node: PlanNode):
        inp = self.input_value(node)
        id_s = self._require_node(_require_int(node, "src"))
        id_t = self._require_node(_require_int(node, "dst"))
        dist, pred = paths.bfs_distances(
            self.db.nodes.ids, [p for p in inp.pairs if p != (0, 0)], id_s)
        if id_t not in dist:
            raise paths.PathNotFound(f"no path from {id_s} to {id_t}")
        path = [id_t]
        while path[-1] != id_s:
            path.append(pred[path[-1]])
        path.reverse()
        self.witnesses[node.name] = paths.PathWitness(id_s, id_t, path)
        return (
            NativeValue([(v, 0) for v in path], len(path), keyed=True),
            {"path_len": len(path)},
        )

    def _run_all_sp_last_hops(self, node: PlanNode):
        inp = self.input_value(node)
        id_s, id_t = _require_int(node, "src"), _require_int(node, "dst")
        d_max = int(node.params.get("dmax", self.db.n_nodes))
        w = paths.all_shortest_witness_from_pairs(
            self.db.nodes.ids, inp.pairs, id_s, id_t, d_max)
        self.witnesses[node.name] = w
        return (
            NativeValue(_padded(w.out_pairs, inp.rows), len(w.out_pairs)),
            {"d_max": d_max, "dist_t": w.dist_t, "out_used": len(w.out_pairs)},
        )

    def _run_canon(self, node: PlanNode):
        inp = self.input_value(node)
        w = relational.canonicalize_witness(
            [p[0] for p in inp.pairs], [p[1] for p in inp.pairs],
            self.db.b_id, inp.used)
        self.witnesses[node.name] = w
        return NativeValue(list(zip(w.low, w.high)), inp.used), {}

    def _run_filter(self, node: PlanNode):
        inp = self.input_value(node)
        predicate = next((k for k in ("eq", "le", "ge") if k in node.params), None)
        if predicate is None:
            raise UnsupportedInput("filter needs eq=, le= or ge=")
        target = node.params[predicate]
        if isinstance(target, str):
            target = hash_to_field(target)
        join, value_source = _filter_mode(self.plan, node, self.meta)
        if join is not None:
            by_id = dict(zip(self.db.nodes.ids, self._node_prop(join)))
            prop_values = [by_id.get(b, 0) for _, b in inp.pairs]
        elif value_source == "edge-prop":
            prop_values = list(self.db.edges.props[str(node.params["prop"])])
        else:
            prop_values = [p[1] for p in inp.pairs]
        w = relational.filter_witness(
            [p[0] for p in inp.pairs], [p[1] for p in inp.pairs],
            _padded_vals(prop_values, inp.rows), predicate, target, join)
        self.witnesses[node.name] = w
        return (
            NativeValue(_padded(w.out_pairs, inp.rows), len(w.out_pairs), keyed=inp.keyed),
            {"out_used": len(w.out_pairs), "target": target},
        )

    def _run_topk(self, node: PlanNode):
        inp = self.input_value(node)
        if not inp.keyed:
            raise UnsupportedInput("topk consumes keyed (id, value) rows")
        k = _require_int(node, "k")
        descending = str(node.params.get("by", "desc")) != "asc"
        w = relational.topk_witness(
            [p[0] for p in inp.pairs], [p[1] for p in inp.pairs],
            k, descending, inp.used, self.db.b_id)
        self.witnesses[node.name] = w
        return NativeValue(_padded(w.out_pairs, inp.rows), k, keyed=True), {}

    def _run_project(self, node: PlanNode):
        inp = self.input_value(node)
        if not inp.keyed:
            raise UnsupportedInput("project consumes keyed (id, value) rows")
        at = _require_int(node, "at")
        match = [p[1] for p in inp.pairs[: inp.used] if p[0] == at]
        if not match:
            raise UnsupportedInput(f"project: key {at} absent from '{node.input}'")
        self.witnesses[node.name] = None
        return NativeValue([(at, match[0])], 1, keyed=True), {"value": match[0]}


def _padded_vals(vals: list[int], extent: int) -> list[int]:
    return list(vals) + [0] * (extent - len(vals))


# ---------------------------------------------------------------------------
# layout construction (shared by prover and verifier)
# ---------------------------------------------------------------------------

@dataclass
class CompiledQuery:
    table: ConstraintTable
    ctx: LayoutContext
    db_region: DbRegion
    plan: QueryPlan
    header: dict
    regions: list
    instance_col: ColumnId
    result_values: list[int] = dc_field(default_factory=list)
    witnesses: dict | None = None
    builder: object = None
    timings: dict = dc_field(default_factory=dict)


def _u32_chunks(digest: bytes) -> list[int]:
    return [int.from_bytes(digest[i * 4:(i + 1) * 4], "little") for i in range(8)]


class _LayoutBuilder:
    """Builds the full table from the plan plus public shape numbers."""

    def __init__(self, plan: QueryPlan, db_meta: dict, dynamic: list[dict]):
        self.plan = plan
        self.meta = db_meta
        self.dynamic = dynamic
        self.uses_csr = any(n.kind == "expand_single_csr" for n in plan.nodes)
        if self.uses_csr and any(n.kind not in ("expand_single_csr", "project") for n in plan.nodes):
            raise UnsupportedInput("CSR mode supports expansion (+ project) plans only")
        self.shapes: list = []
        self.handles: dict[str, OutputHandle] = {}
        self.extents: dict[str, tuple[int, int]] = {}
        self.result_rows: list[int] | None = None
        self.regions: list = []
        self.ctx: LayoutContext | None = None
        self.db_region: DbRegion | None = None
        self.sym_pairs: OutputHandle | None = None
        self.input_bindings: list[tuple[str, ColumnId, ColumnId]] = []
        self.result_bound = 0
        self.instance_col: ColumnId | None = None

    def _db_pair_extent(self) -> int:
        return self.meta["n_edges"] if self.meta["directed"] else 2 * self.meta["n_edges"]

    # --- pass 1: shapes and spans ---

    def collect(self) -> int:
        meta = self.meta
        n_v, n_e = meta["n_nodes"], meta["n_edges"]
        pair_kinds = ("expand_single", "expand_set", "sssp", "reach", "all_sp_last_hops", "canon", "filter")
        self.need_sym = (
            not meta["directed"]
            and not self.uses_csr
            and any(
                node.input == "edges"
                and node.kind in pair_kinds
                and not self.dynamic[i].get("canon")
                for i, node in enumerate(self.plan.nodes)
            )
        )
        spans = [n_v, n_e + 1]
        if self.need_sym:
            spans.append(2 * n_e)
        if self.uses_csr:
            spans.append(n_v + 1)
        extents: dict[str, tuple[int, int]] = {
            "edges": (self._db_pair_extent(), self._db_pair_extent()),
            "nodes": (n_v, n_v),
        }
        if len(self.dynamic) != len(self.plan.nodes):
            raise UnsupportedInput("dynamic shape list does not match the plan")
        for i, node in enumerate(self.plan.nodes):
            if node.input not in extents:
                raise UnboundInput(node.input)
            in_rows, in_used = extents[node.input]
            shape = self._shape_of(node, self.dynamic[i], in_rows, in_used)
            self.shapes.append(shape)
            spans.extend(self._spans_of(node, shape))
            extents[node.name] = self._extent_of(node, shape)
        self.extents = extents
        last = self.plan.nodes[-1]
        arity = 1 if last.kind == "project" else 2
        self.result_bound = extents[last.name][0] * arity
        spans.append(16 + self.result_bound)
        return plan_n_rows(max(spans))

    def _shape_of(self, node: PlanNode, dyn: dict, in_rows: int, in_used: int):
        n_v = self.meta["n_nodes"]
        if node.kind == "expand_single":
            return expansion.SingleExpansionShape(_require_int(node, "id"), in_rows, dyn["out_used"])
        if node.kind == "expand_single_csr":
            return expansion.CsrExpansionShape(
                _require_int(node, "id"), n_v, self.meta["n_edges"], dyn["out_used"])
        if node.kind == "expand_set":
            if dyn.get("canon"):
                n_e = self.meta["n_edges"]
                return (
                    relational.CanonShape(n_e, n_e),
                    expansion.DualSetExpansionShape(
                        dyn["set_size"], n_e, n_v,
                        dyn["out_used_low"], dyn["out_used_high"]),
                )
            binding = "upstream" if "from" in node.params else "param"
            return expansion.SetExpansionShape(dyn["set_size"], in_rows, n_v, dyn["out_used"], binding)
        if node.kind == "sssp":
            return paths.SsspShape(_require_int(node, "src"), n_v, in_rows, dyn["d_max"])
        if node.kind == "reach":
            return paths.ReachShape(_require_int(node, "src"), _require_int(node, "dst"), dyn["path_len"])
        if node.kind == "all_sp_last_hops":
            return paths.AllSpShape(
                _require_int(node, "src"), _require_int(node, "dst"),
                dyn["dist_t"], n_v, in_rows, dyn["d_max"], dyn["out_used"])
        if node.kind == "canon":
            return relational.CanonShape(in_rows, in_used)
        if node.kind == "filter":
            predicate = next(k for k in ("eq", "le", "ge") if k in node.params)
            join, _ = _filter_mode(self.plan, node, self.meta)
            return relational.FilterShape(in_rows, predicate, dyn["target"], dyn["out_used"], join)
        if node.kind == "topk":
            return relational.TopKShape(
                in_rows, in_used, _require_int(node, "k"),
                str(node.params.get("by", "desc")) != "asc")
        if node.kind == "project":
            return {"at": _require_int(node, "at"), "value": dyn["value"]}
        raise UnknownOperator(node.kind)

    def _spans_of(self, node: PlanNode, shape) -> list[int]:
        b = 1 << self.meta["b_id"]
        if node.kind == "expand_single":
            return [shape.n_edges + 1]
        if node.kind == "expand_single_csr":
            return [shape.n_edges + 1, b]
        if node.kind == "expand_set":
            if isinstance(shape, tuple):
                return [shape[1].n_edges + 1, shape[1].set_budget(), b, 2 * shape[0].n_pairs]
            return [shape.n_edges + 1, shape.set_budget(), b]
        if node.kind == "topk" and node.input == "edges":
            raise UnsupportedInput("topk consumes keyed (id, value) rows")
        if node.kind == "sssp":
            return [shape.n_pairs + 1, shape.d_max + 2]
        if node.kind == "reach":
            return [shape.path_len]
        if node.kind == "all_sp_last_hops":
            return [shape.n_pairs + 1, shape.d_max + 2]
        if node.kind == "canon":
            return [shape.n_pairs, b]
        if node.kind == "filter":
            return [shape.n_in + 1] + ([b] if shape.predicate != "eq" else [])
        if node.kind == "topk":
            return [shape.n_in + 1, b]
        return [1]

    def _extent_of(self, node: PlanNode, shape) -> tuple[int, int]:
        if node.kind in ("expand_single", "expand_single_csr"):
            return (shape.n_edges, shape.out_used)
        if node.kind == "expand_set":
            if isinstance(shape, tuple):
                return (2 * shape[0].n_pairs, shape[1].out_used_low + shape[1].out_used_high)
            return (shape.n_edges, shape.out_used)
        if node.kind == "sssp":
            return (self.meta["n_nodes"], self.meta["n_nodes"])
        if node.kind == "reach":
            return (shape.path_len, shape.path_len)
        if node.kind == "all_sp_last_hops":
            return (shape.n_pairs, shape.out_used)
        if node.kind == "canon":
            return (shape.n_pairs, shape.used)
        if node.kind == "filter":
            return (shape.n_in, shape.out_used)
        if node.kind == "topk":
            return (shape.n_in, shape.k)
        return (1, 1)

    # --- pass 2: build into a table ---

    def build(self, table: ConstraintTable) -> CompiledQuery:
        meta = self.meta
        ctx = LayoutContext(table, meta["b_id"])
        self.ctx = ctx
        mode = "csr" if self.uses_csr else "edge_list"
        self.db_region = build_db_region(
            ctx, mode, meta["n_nodes"], meta["n_edges"],
            [n for n, _ in meta["schema"]["node_props"]],
            [n for n, _ in meta["schema"]["edge_props"]],
        )
        if self.need_sym:
            self.sym_pairs = self._build_sym_region(ctx)
        for i, node in enumerate(self.plan.nodes):
            region = self._build_node(ctx, node, self.shapes[i])
            self.regions.append(region)
            if isinstance(region, tuple):  # canon-strategy set expansion
                self.handles[node.name] = region[-1]
            elif node.kind == "project":
                self.handles[node.name] = None
            else:
                self.handles[node.name] = region.output
        inst = self._build_instance(ctx)
        header = {
            "version": 1,
            "b_id": meta["b_id"],
            "directed": meta["directed"],
            "schema": meta["schema"],
            "n_nodes": meta["n_nodes"],
            "n_edges": meta["n_edges"],
            "db_mode": mode,
            "n_rows": table.n_rows,
            "dynamic": self.dynamic,
            "result": {
                "rows": self.extents[self.plan.nodes[-1].name][1],
                "arity": 1 if self.plan.nodes[-1].kind == "project" else 2,
            },
        }
        return CompiledQuery(table, ctx, self.db_region, self.plan, header, self.regions, inst, builder=self)

    def _build_sym_region(self, ctx: LayoutContext) -> OutputHandle:
        n_e = self.meta["n_edges"]
        a = ctx.advice()
        b = ctx.advice()
        for r in range(n_e):
            ctx.table.add_copy(CellRef(a, r), CellRef(self.db_region.src, r))
            ctx.table.add_copy(CellRef(b, r), CellRef(self.db_region.dst, r))
            ctx.table.add_copy(CellRef(a, n_e + r), CellRef(self.db_region.dst, r))
            ctx.table.add_copy(CellRef(b, n_e + r), CellRef(self.db_region.src, r))
        ctx.log_region("sym-pairs", 2 * n_e)
        return OutputHandle((a, b), 2 * n_e, 2 * n_e)

    def _pairs_input(self, ctx: LayoutContext, node: PlanNode) -> OutputHandle:
        """The operator's input columns; consumer-owned copies for upstream inputs."""
        if node.input == "edges":
            if self.uses_csr:
                raise UnsupportedInput("edge pairs unavailable in CSR mode")
            return self.sym_pairs or self.db_region.edge_pairs_handle()
        if node.input == "nodes":
            prop = str(node.params.get("prop", "id"))
            col = self.db_region.node_ids if prop == "id" else self.db_region.node_props.get(prop)
            if col is None:
                raise UnsupportedInput(f"unknown node property '{prop}'")
            n_v = self.meta["n_nodes"]
            return OutputHandle((self.db_region.node_ids, col), n_v, n_v)
        upstream = self.handles[node.input]
        if upstream is None:
            raise UnsupportedInput(f"'{node.input}' produces no consumable output")
        a = ctx.advice()
        b = ctx.advice()
        for r in range(upstream.rows):
            ctx.table.add_copy(CellRef(a, r), CellRef(upstream.cols[0], r))
            ctx.table.add_copy(CellRef(b, r), CellRef(upstream.cols[1], r))
        ctx.log_region(f"{node.name}/input", upstream.rows)
        self.input_bindings.append((node.name, a, b))
        return OutputHandle((a, b), upstream.rows, upstream.used)

    def _build_node(self, ctx: LayoutContext, node: PlanNode, shape):
        if node.kind == "expand_single":
            handle = self._pairs_input(ctx, node)
            return expansion.build_expand_single(ctx, shape, (handle.cols[0], handle.cols[1]))
        if node.kind == "expand_single_csr":
            return expansion.build_expand_single_csr(ctx, shape, self.db_region)
        if node.kind == "expand_set":
            if isinstance(shape, tuple):
                canon_shape, dual_shape = shape
                canon_region = relational.build_canonicalize(
                    ctx, canon_shape, (self.db_region.src, self.db_region.dst))
                dual = expansion.build_expand_set_dual(
                    ctx, dual_shape, canon_region.low, canon_region.high)
                self._pin_set_members(ctx, node, dual)
                union = self._union_handle(ctx, node, dual.low_pass.output, dual.high_pass.output)
                return (canon_region, dual, union)
            handle = self._pairs_input(ctx, node)
            upstream = self.handles.get(str(node.params.get("from"))) if shape.binding == "upstream" else None
            region = expansion.build_expand_set(ctx, shape, (handle.cols[0], handle.cols[1]), upstream)
            if shape.binding == "param":
                self._pin_set_members(ctx, node, region)
            return region
        if node.kind == "sssp":
            pairs = self._pairs_input(ctx, node)
            return paths.build_sssp(ctx, shape, self.db_region.node_ids, pairs)
        if node.kind == "reach":
            pairs = self._pairs_input(ctx, node)
            return paths.build_reachability(ctx, shape, pairs)
        if node.kind == "all_sp_last_hops":
            pairs = self._pairs_input(ctx, node)
            return paths.build_all_shortest(ctx, shape, self.db_region.node_ids, pairs)
        if node.kind == "canon":
            handle = self._pairs_input(ctx, node)
            return relational.build_canonicalize(ctx, shape, (handle.cols[0], handle.cols[1]))
        if node.kind == "filter":
            handle = self._pairs_input(ctx, node)
            in_cols = (handle.cols[0], handle.cols[1])
            if shape.join_prop:
                prop_col = self.db_region.node_props.get(shape.join_prop)
                if prop_col is None:
                    raise UnsupportedInput(f"unknown node property '{shape.join_prop}'")
                return relational.build_filter(
                    ctx, shape, in_cols, node_table=(self.db_region.node_ids, prop_col))
            _, value_source = _filter_mode(self.plan, node, self.meta)
            if value_source == "edge-prop":
                value_col = self.db_region.edge_props[str(node.params["prop"])]
            else:
                value_col = in_cols[1]
            return relational.build_filter(ctx, shape, in_cols, value_col=value_col)
        if node.kind == "topk":
            handle = self._pairs_input(ctx, node)
            return relational.build_topk(ctx, shape, (handle.cols[0], handle.cols[1]))
        if node.kind == "project":
            return shape
        raise UnknownOperator(node.kind)

    def _pin_set_members(self, ctx: LayoutContext, node: PlanNode, region):
        """Public start sets are pinned with a fixed column of the sorted members."""
        members = node.params.get("ids")
        if not isinstance(members, list):
            members = [members]
        members = sorted({int(v) for v in members})
        fixed = ctx.table.add_fixed([0] + members)
        sel = ctx.selector(1, len(members) + 1)
        ctx.table.add_gate(
            f"{node.name}/declared-set", sel, Cell(region.sorted_set) - Cell(fixed))

    def _union_handle(self, ctx, node, lo: OutputHandle, hi: OutputHandle) -> OutputHandle:
        a = ctx.advice()
        b = ctx.advice()
        for r in range(lo.rows):
            ctx.table.add_copy(CellRef(a, r), CellRef(lo.cols[0], r))
            ctx.table.add_copy(CellRef(b, r), CellRef(lo.cols[1], r))
        for r in range(hi.rows):
            ctx.table.add_copy(CellRef(a, lo.rows + r), CellRef(hi.cols[0], r))
            ctx.table.add_copy(CellRef(b, lo.rows + r), CellRef(hi.cols[1], r))
        ctx.log_region(f"{node.name}/union", lo.rows + hi.rows)
        handle = OutputHandle((a, b), lo.rows + hi.rows, lo.used + hi.used)
        self.result_rows = list(range(lo.used)) + [lo.rows + r for r in range(hi.used)]
        return handle

    def _build_instance(self, ctx: LayoutContext) -> ColumnId:
        inst = ctx.table.add_instance()
        ctx.log_region("instance", 16 + self.result_bound)
        self.instance_col = inst
        return inst

    def bind_public_values(self, compiled: CompiledQuery, db_commitment: bytes, result_values: list[int]):
        """Instance bindings for commitment, plan hash and result; result cells
        are copy-bound to the final operator's output region."""
        table = compiled.table
        inst = self.instance_col
        plan_digest = self.plan.plan_hash()
        for i, chunk in enumerate(_u32_chunks(db_commitment)):
            table.bind_instance(inst, i, chunk)
        for i, chunk in enumerate(_u32_chunks(plan_digest)):
            table.bind_instance(inst, 8 + i, chunk)
        for i, value in enumerate(result_values):
            table.bind_instance(inst, 16 + i, value)
        compiled.header["db_commitment"] = db_commitment.hex()
        compiled.header["plan_hash"] = plan_digest.hex()
        compiled.header["result"]["values"] = [int(v) for v in result_values]
        compiled.result_values = [int(v) for v in result_values]

        last = self.plan.nodes[-1]
        if last.kind == "project":
            shape = self.shapes[-1]
            source = self.handles[last.input]
            if source is None:
                raise UnsupportedInput("project has no producing region")
            sel = self.ctx.selector(16, 17)
            table.add_lookup(
                "project/anchor",
                [Const(shape["at"]), Cell(inst)],
                [source.cols[0], source.cols[1]],
                sel,
            )
        else:
            handle = self.handles[last.name]
            rows = self.result_rows if self.result_rows is not None else range(
                compiled.header["result"]["rows"])
            i = 0
            for r in rows:
                for c in range(handle.arity):
                    table.add_copy(CellRef(inst, 16 + i), CellRef(handle.cols[c], r))
                    i += 1


def compile_layout(plan: QueryPlan, db_meta: dict, dynamic: list[dict]) -> CompiledQuery:
    """Build the circuit from public data only (no witness)."""
    builder = _LayoutBuilder(plan, db_meta, dynamic)
    n_rows = builder.collect()
    return builder.build(ConstraintTable(n_rows))


def db_meta_of(db: GraphDb) -> dict:
    return {
        "n_nodes": db.n_nodes,
        "n_edges": db.n_edges,
        "b_id": db.b_id,
        "directed": db.directed,
        "schema": {
            "node_props": [list(p) for p in db.schema.node_props],
            "edge_props": [list(p) for p in db.schema.edge_props],
        },
    }


def finalize_challenges(compiled: CompiledQuery):
    """Commit, derive the Fiat-Shamir challenges, fill the accumulators."""
    table = compiled.table
    table.derive_challenges(table.commit_columns())
    table.assign_accumulators()
    compiled.header["challenge_retry"] = table.challenge_retry


def compile_and_witness(plan: QueryPlan, db: GraphDb, finalize: bool = True) -> CompiledQuery:
    """Execute natively, build the table, assign all advice, derive challenges."""
    import time as _time

    t0 = _time.perf_counter()
    execu = _Executor(plan, db).run()
    t1 = _time.perf_counter()
    compiled = compile_layout(plan, db_meta_of(db), execu.dynamic)
    t2 = _time.perf_counter()
    builder: _LayoutBuilder = compiled.builder
    ctx, table = compiled.ctx, compiled.table

    assign_db_region(ctx, compiled.db_region, db)
    if builder.sym_pairs is not None:
        sym = execu.db_pairs()
        table.assign_column(builder.sym_pairs.cols[0], [p[0] for p in sym.pairs])
        table.assign_column(builder.sym_pairs.cols[1], [p[1] for p in sym.pairs])
    for name, col_a, col_b in builder.input_bindings:
        node = plan.node_named(name)
        inp = execu.input_value(node)
        table.assign_column(col_a, [p[0] for p in inp.pairs])
        table.assign_column(col_b, [p[1] for p in inp.pairs])

    for node, region in zip(plan.nodes, compiled.regions):
        _assign_op(ctx, node, region, execu)

    result = execu.result()
    if plan.nodes[-1].kind == "project":
        result_values = [result.pairs[0][1]]
    else:
        result_values = [v for pair in result.real_pairs() for v in pair]
    builder.bind_public_values(compiled, db.commitment, result_values)
    compiled.witnesses = execu.witnesses
    t3 = _time.perf_counter()
    compiled.timings = {
        "witness_ms": ((t1 - t0) + (t3 - t2)) * 1e3,
        "layout_ms": (t2 - t1) * 1e3,
    }
    if finalize:
        finalize_challenges(compiled)
    return compiled


def _assign_op(ctx, node: PlanNode, region, execu: _Executor):
    w = execu.witnesses[node.name]
    if node.kind == "expand_single":
        expansion.assign_expand_single(ctx, region, w)
    elif node.kind == "expand_single_csr":
        expansion.assign_expand_single_csr(ctx, region, w)
    elif node.kind == "expand_set":
        if isinstance(region, tuple):
            canon_region, dual, union = region
            _, cw, dw = w
            relational.assign_canonicalize(ctx, canon_region, cw)
            expansion.assign_expand_set_dual(ctx, dual, dw)
            native = execu.values[node.name]
            ctx.table.assign_column(union.cols[0], [p[0] for p in native.pairs])
            ctx.table.assign_column(union.cols[1], [p[1] for p in native.pairs])
        else:
            expansion.assign_expand_set(ctx, region, w)
    elif node.kind == "sssp":
        paths.assign_sssp(ctx, region, w)
    elif node.kind == "reach":
        paths.assign_reachability(ctx, region, w)
    elif node.kind == "all_sp_last_hops":
        paths.assign_all_shortest(ctx, region, w)
    elif node.kind == "canon":
        relational.assign_canonicalize(ctx, region, w)
    elif node.kind == "filter":
        relational.assign_filter(ctx, region, w)
    elif node.kind == "topk":
        relational.assign_topk(ctx, region, w)
    # project assigns nothing


# ---------------------------------------------------------------------------
# cost estimation (no witness execution)
# ---------------------------------------------------------------------------

def estimate(plan: QueryPlan, db_meta: dict) -> dict:
    """Deterministic cost report from public bounds only.

    Witness-dependent extents are replaced by their public upper bounds
    (an expansion's output can never exceed its edge extent, top-k's
    never exceeds k, and so on), so two databases with equal table
    sizes always estimate identically.
    """
    dynamic = []
    extents = {"edges": None, "nodes": None}
    n_v, n_e = db_meta["n_nodes"], db_meta["n_edges"]
    pair_extent = n_e if db_meta["directed"] else 2 * n_e
    bound = {"edges": pair_extent, "nodes": n_v}
    for node in plan.nodes:
        in_bound = bound[node.input]
        if node.kind in ("expand_single", "expand_single_csr"):
            dyn = {"out_used": n_e if node.kind == "expand_single_csr" else in_bound}
            bound[node.name] = dyn["out_used"]
        elif node.kind == "expand_set":
            size = node.params.get("ids")
            set_size = len(size) if isinstance(size, list) else max(n_v, 1)
            if "from" in node.params:
                set_size = n_v
            if not db_meta["directed"] and str(node.params.get("undirected", "duplicate")) == "canon":
                dyn = {"out_used_low": n_e, "out_used_high": n_e, "set_size": set_size, "canon": True}
                bound[node.name] = 2 * n_e
            else:
                dyn = {"out_used": in_bound, "set_size": set_size}
                bound[node.name] = in_bound
        elif node.kind == "sssp":
            dyn = {"d_max": int(node.params.get("dmax", n_v))}
            bound[node.name] = n_v
        elif node.kind == "reach":
            dyn = {"path_len": int(node.params.get("max_len", n_v))}
            bound[node.name] = dyn["path_len"]
        elif node.kind == "all_sp_last_hops":
            dyn = {"d_max": int(node.params.get("dmax", n_v)), "dist_t": 1, "out_used": in_bound}
            bound[node.name] = in_bound
        elif node.kind == "filter":
            dyn = {"out_used": in_bound, "target": 1}
            bound[node.name] = in_bound
        elif node.kind == "topk":
            dyn = {}
            bound[node.name] = in_bound
        elif node.kind == "canon":
            dyn = {}
            bound[node.name] = in_bound
        elif node.kind == "project":
            dyn = {"value": 0}
            bound[node.name] = 1
        else:
            raise UnknownOperator(node.kind)
        dynamic.append(dyn)
    compiled = compile_layout(plan, db_meta, dynamic)
    stats = compiled.table.stats()
    regions = [(r.name, r.rows) for r in compiled.ctx.regions]
    op_rows = sum(
        rows for name, rows in regions
        if name.startswith("op") or "/input" in name or "/union" in name or name == "sym-pairs"
    )
    return {
        "rows": sum(rows for _, rows in regions),
        "op_rows": op_rows,
        "n_rows": stats["n_rows"],
        "gates": stats["gates"],
        "lookups": stats["lookups"],
        "perms": stats["perms"],
        "copies": stats["copies"],
        "columns": stats["columns"],
        "regions": regions,
    }
