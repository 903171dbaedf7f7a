"""Attestation bundles: the verifiable artifact a query run produces.

A bundle is a tagged, length-prefixed binary container (magic ZKGB)
holding the public header, the canonical plan text, the database
commitment, the plan hash, the public instance values, the per-column
commitments, the Fiat-Shamir challenges with their retry counter, and
the full advice witness.  Nothing in it is secret: the desk backend
trades confidentiality for checkability (the seam where a polynomial
commitment scheme would restore zero knowledge and succinctness).

Verification is a full re-derivation: rebuild the circuit from the
plan and the public header, refill the advice columns, recompute every
column commitment, re-derive the challenges, re-run the semantic
checker, and recompute the database commitment from the witness's
graph columns.  A bundle passes only if every one of those matches.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field as dc_field

from .cs import ColumnKind, ConstraintTable
from .errors import MalformedBundle
from .field import MODULUS
from .planner import CompiledQuery, QueryPlan, compile_layout, parse_plan
from .store import GraphDb, GraphSchema, NodeTable, EdgeTable

BUNDLE_MAGIC = b"ZKGB"
BUNDLE_VERSION = 1


def _cells_bytes(values: list[int]) -> bytes:
    return b"".join(v.to_bytes(8, "little") for v in values)


def _trimmed(values: list[int]) -> list[int]:
    end = len(values)
    while end > 0 and values[end - 1] == 0:
        end -= 1
    return values[:end]


def _section(tag: bytes, payload: bytes) -> bytes:
    assert len(tag) == 4
    return tag + struct.pack("<I", len(payload)) + payload


def serialize_bundle(compiled: CompiledQuery) -> bytes:
    table = compiled.table
    header_json = json.dumps(compiled.header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    plan_text = compiled.plan.canonical_text().encode("utf-8")

    inst_cells = table.columns[compiled.instance_col][: 16 + len(compiled.result_values)]
    inst = struct.pack("<I", len(inst_cells)) + _cells_bytes(inst_cells)

    commitments = table.commit_columns()
    colc = struct.pack("<I", len(commitments)) + b"".join(commitments)

    chal = (
        table.challenges[0].to_bytes(8, "little")
        + table.challenges[1].to_bytes(8, "little")
        + struct.pack("<I", table.challenge_retry)
    )

    advice = [c for c in table.decl_order if c.kind == ColumnKind.ADVICE]
    parts = [struct.pack("<I", len(advice))]
    for col in advice:
        cells = _trimmed(table.columns[col])
        parts.append(struct.pack("<HI", col.index, len(cells)))
        parts.append(_cells_bytes(cells))
    witn = b"".join(parts)

    body = (
        _section(b"HEAD", header_json)
        + _section(b"PLAN", plan_text)
        + _section(b"DBCM", bytes.fromhex(compiled.header["db_commitment"]))
        + _section(b"PLNH", bytes.fromhex(compiled.header["plan_hash"]))
        + _section(b"INST", inst)
        + _section(b"COLC", colc)
        + _section(b"CHAL", chal)
        + _section(b"WITN", witn)
    )
    return BUNDLE_MAGIC + struct.pack("<H", BUNDLE_VERSION) + body


@dataclass
class ParsedBundle:
    header: dict
    plan_text: str
    db_commitment: bytes
    plan_hash: bytes
    instance: list[int]
    commitments: list[bytes]
    alpha: int
    beta: int
    retry: int
    advice: dict[int, list[int]]  # advice index -> trimmed cells


def parse_bundle(data: bytes) -> ParsedBundle:
    buf = io.BytesIO(data)
    if buf.read(4) != BUNDLE_MAGIC:
        raise MalformedBundle("bad magic")
    (version,) = struct.unpack("<H", buf.read(2))
    if version != BUNDLE_VERSION:
        raise MalformedBundle(f"unsupported bundle version {version}")
    sections: dict[bytes, bytes] = {}
    while True:
        tag = buf.read(4)
        if not tag:
            break
        if len(tag) != 4:
            raise MalformedBundle("truncated section tag")
        raw_len = buf.read(4)
        if len(raw_len) != 4:
            raise MalformedBundle("truncated section length")
        (length,) = struct.unpack("<I", raw_len)
        payload = buf.read(length)
        if len(payload) != length:
            raise MalformedBundle(f"truncated section {tag!r}")
        sections[tag] = payload
    try:
        header = json.loads(sections[b"HEAD"].decode("utf-8"))
        plan_text = sections[b"PLAN"].decode("utf-8")
        db_commitment = sections[b"DBCM"]
        plan_hash = sections[b"PLNH"]
        inst_raw = sections[b"INST"]
        (n_inst,) = struct.unpack("<I", inst_raw[:4])
        instance = [
            int.from_bytes(inst_raw[4 + 8 * i: 12 + 8 * i], "little") for i in range(n_inst)
        ]
        colc = sections[b"COLC"]
        (n_com,) = struct.unpack("<I", colc[:4])
        commitments = [colc[4 + 32 * i: 36 + 32 * i] for i in range(n_com)]
        chal = sections[b"CHAL"]
        alpha = int.from_bytes(chal[0:8], "little")
        beta = int.from_bytes(chal[8:16], "little")
        (retry,) = struct.unpack("<I", chal[16:20])
        witn = io.BytesIO(sections[b"WITN"])
        (n_adv,) = struct.unpack("<I", witn.read(4))
        advice: dict[int, list[int]] = {}
        for _ in range(n_adv):
            index, used = struct.unpack("<HI", witn.read(6))
            raw = witn.read(8 * used)
            if len(raw) != 8 * used:
                raise MalformedBundle("truncated witness column")
            advice[index] = [int.from_bytes(raw[8 * i: 8 * i + 8], "little") for i in range(used)]
    except (KeyError, struct.error, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedBundle(str(exc)) from exc
    if len(db_commitment) != 32 or len(plan_hash) != 32:
        raise MalformedBundle("bad digest lengths")
    return ParsedBundle(
        header, plan_text, db_commitment, plan_hash, instance,
        commitments, alpha, beta, retry, advice,
    )


@dataclass
class VerifyOutcome:
    ok: bool
    failures: list[str] = dc_field(default_factory=list)
    result_values: list[int] = dc_field(default_factory=list)

    def summary(self) -> str:
        if self.ok:
            return "bundle verified"
        return "verification FAILED:\n" + "\n".join(f"  - {f}" for f in self.failures)


def _db_from_regions(table: ConstraintTable, header: dict, db_region) -> GraphDb | None:
    """Rebuild the graph tables exactly as witnessed (no re-sorting)."""
    n_v, n_e = header["n_nodes"], header["n_edges"]
    schema = GraphSchema(
        node_props=tuple(tuple(p) for p in header["schema"]["node_props"]),
        edge_props=tuple(tuple(p) for p in header["schema"]["edge_props"]),
        directed=header["directed"],
        b_id=header["b_id"],
    )
    ids = table.columns[db_region.node_ids][:n_v]
    nprops = {name: table.columns[col][:n_v] for name, col in db_region.node_props.items()}
    if header["db_mode"] == "edge_list":
        src = table.columns[db_region.src][:n_e]
        dst = table.columns[db_region.dst][:n_e]
        eprops = {name: table.columns[col][:n_e] for name, col in db_region.edge_props.items()}
    else:
        row = table.columns[db_region.csr_row][: n_v + 1]
        col = table.columns[db_region.csr_col][:n_e]
        if row[0] != 0 or row[-1] != n_e or any(a > b for a, b in zip(row, row[1:])):
            return None
        src, dst = [], []
        for i in range(n_v):
            for k in range(row[i], row[i + 1]):
                src.append(ids[i])
                dst.append(col[k])
        eprops = {}
    return GraphDb(
        nodes=NodeTable(ids, nprops),
        edges=EdgeTable(src, dst, eprops),
        directed=header["directed"],
        b_id=header["b_id"],
        schema=schema,
    )


def verify_bundle(
    data: bytes,
    expected_db_commitment: bytes | None = None,
    plan_text: str | None = None,
    plan_params: dict[str, str] | None = None,
) -> VerifyOutcome:
    """Full offline re-verification of an attestation bundle."""
    bundle = parse_bundle(data)
    failures: list[str] = []
    header = bundle.header

    # plan hash binds the semantic statement
    plan = parse_plan(bundle.plan_text)
    if plan.plan_hash() != bundle.plan_hash:
        failures.append("embedded plan does not hash to the declared plan hash")
    if header.get("plan_hash") != bundle.plan_hash.hex():
        failures.append("header plan hash does not match the PLNH section")
    if plan_text is not None:
        supplied = parse_plan(plan_text, plan_params or {})
        if supplied.plan_hash() != bundle.plan_hash:
            failures.append("supplied plan file does not match the attested plan")

    if header.get("db_commitment") != bundle.db_commitment.hex():
        failures.append("header db commitment does not match the DBCM section")
    if expected_db_commitment is not None and expected_db_commitment != bundle.db_commitment:
        failures.append("bundle was produced against a different database commitment")

    # rebuild the circuit from public data
    meta = {
        "n_nodes": header["n_nodes"],
        "n_edges": header["n_edges"],
        "b_id": header["b_id"],
        "directed": header["directed"],
        "schema": header["schema"],
    }
    try:
        compiled = compile_layout(plan, meta, header["dynamic"])
    except Exception as exc:  # layout must be reconstructible from public data
        return VerifyOutcome(False, failures + [f"layout reconstruction failed: {exc}"])
    table = compiled.table
    if table.n_rows != header["n_rows"]:
        failures.append(f"row count mismatch: rebuilt {table.n_rows}, header {header['n_rows']}")
        return VerifyOutcome(False, failures)
    result_values = [int(v) % MODULUS for v in header["result"].get("values", [])]
    compiled.builder.bind_public_values(compiled, bundle.db_commitment, result_values)

    # refill advice columns from the witness payload
    advice_cols = [c for c in table.decl_order if c.kind == ColumnKind.ADVICE]
    if set(bundle.advice) != {c.index for c in advice_cols}:
        failures.append("witness payload does not cover the advice columns")
        return VerifyOutcome(False, failures)
    for col in advice_cols:
        cells = bundle.advice[col.index]
        if len(cells) > table.n_rows or any(v >= MODULUS for v in cells):
            failures.append(f"witness column {col.index} malformed")
            return VerifyOutcome(False, failures)
        # reset the whole column (layout may have prefilled tails)
        table.columns[col][:] = [0] * table.n_rows
        table.assign_column(col, cells)

    # commitments, challenges, constraints
    commitments = table.commit_columns()
    if commitments != bundle.commitments:
        bad = [i for i, (a, b) in enumerate(zip(commitments, bundle.commitments)) if a != b]
        failures.append(f"column commitment mismatch at indices {bad[:8]}")
    try:
        alpha, beta = table.derive_challenges(commitments)
        if (alpha, beta, table.challenge_retry) != (bundle.alpha, bundle.beta, bundle.retry):
            failures.append("challenge re-derivation disagrees with the bundle")
    except Exception as exc:
        failures.append(f"challenge derivation failed: {exc}")
        return VerifyOutcome(False, failures)

    report = table.check_satisfied()
    if not report.satisfied:
        failures.append(report.summary())

    # instance section must agree with the rebuilt bindings
    inst_cells = table.columns[compiled.instance_col][: 16 + len(result_values)]
    if bundle.instance != inst_cells:
        failures.append("instance section does not match the public bindings")

    # the graph the witness encodes must hash to the declared commitment
    witness_db = _db_from_regions(table, header, compiled.db_region)
    if witness_db is None:
        failures.append("witnessed CSR tables are not well-formed")
    elif witness_db.commitment != bundle.db_commitment:
        failures.append("witnessed graph does not hash to the declared db commitment")

    return VerifyOutcome(not failures, failures, result_values)
