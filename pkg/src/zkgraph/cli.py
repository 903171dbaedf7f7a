"""Command-line interface: ingest, prove, verify, bench.

Exit codes: 0 success / verified, 1 verification failure, 2 input or
usage error, 3 internal invariant breach (a prover self-check failed,
which indicates a bug rather than bad input).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import run_suite
from .bundle import serialize_bundle, verify_bundle
from .errors import MalformedBundle, ZkGraphError
from .planner import compile_and_witness, parse_plan
from .store import GraphSchema, load_csv, load_db, save_db

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _schema_from_file(path: str | None) -> GraphSchema:
    if path is None:
        return GraphSchema()
    spec = json.loads(Path(path).read_text())
    return GraphSchema(
        node_props=tuple((p[0], p[1]) for p in spec.get("node_props", [])),
        edge_props=tuple((p[0], p[1]) for p in spec.get("edge_props", [])),
        directed=bool(spec.get("directed", True)),
        b_id=int(spec.get("b_id", 16)),
    )


def _params(pairs: list[str]) -> dict[str, str]:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ZkGraphError(f"--param expects k=v, got '{pair}'")
        key, value = pair.split("=", 1)
        out[key] = value
    return out


def cmd_ingest(args) -> int:
    schema = _schema_from_file(args.schema)
    db = load_csv(args.nodes, args.edges, schema)
    save_db(db, args.out)
    print(db.commitment.hex())
    return EXIT_OK


def cmd_prove(args) -> int:
    db = load_db(args.db)
    plan = parse_plan(Path(args.plan).read_text(), _params(args.param))
    compiled = compile_and_witness(plan, db)
    report = compiled.table.check_satisfied()
    if not report.satisfied:
        print(f"internal error: self-check failed\n{report.summary()}", file=sys.stderr)
        return EXIT_INTERNAL
    blob = serialize_bundle(compiled)
    Path(args.out).write_bytes(blob)
    result = compiled.header["result"]
    print(f"db commitment: {compiled.header['db_commitment']}")
    print(f"plan hash:     {compiled.header['plan_hash']}")
    print(f"bundle:        {args.out} ({len(blob)} bytes)")
    values = result["values"]
    if result["arity"] == 2:
        pairs = [(values[i], values[i + 1]) for i in range(0, len(values), 2)]
        print(f"result ({result['rows']} rows): {pairs}")
    else:
        print(f"result: {values}")
    return EXIT_OK


def cmd_verify(args) -> int:
    data = Path(args.bundle).read_bytes()
    expected = bytes.fromhex(args.db_commitment) if args.db_commitment else None
    plan_text = Path(args.plan).read_text() if args.plan else None
    outcome = verify_bundle(data, expected, plan_text, _params(args.param))
    print(outcome.summary())
    return EXIT_OK if outcome.ok else EXIT_VERIFY_FAILED


def cmd_bench(args) -> int:
    db = load_db(args.db)
    suite = json.loads(Path(args.suite).read_text())
    if not isinstance(suite, list):
        raise ZkGraphError("suite file must be a JSON list of entries")
    report = run_suite(suite, db, Path(args.suite).parent)
    out = Path(args.out)
    out.write_text(report.to_csv())
    from .figures import render_report

    figures = render_report(report, out)
    print(f"report: {out}")
    for fig in figures:
        print(f"figure: {fig}")
    for name, msg in report.errors:
        print(f"error in '{name}': {msg}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zkgraph",
        description="verifiable graph queries over PLONKish constraint tables",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load CSVs into a committed database file")
    p.add_argument("--nodes", required=True)
    p.add_argument("--edges", required=True)
    p.add_argument("--schema", default=None, help="JSON schema (props, directed, b_id)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("prove", help="compile a plan, build the witness, write a bundle")
    p.add_argument("--db", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--param", action="append", default=[], metavar="K=V")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("verify", help="re-verify an attestation bundle offline")
    p.add_argument("--bundle", required=True)
    p.add_argument("--db-commitment", default=None, help="expected commitment (hex)")
    p.add_argument("--plan", default=None, help="plan file to cross-check")
    p.add_argument("--param", action="append", default=[], metavar="K=V")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="run a suite of plans and write a cost report")
    p.add_argument("--db", required=True)
    p.add_argument("--suite", required=True, help="JSON list of suite entries")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0, help="seed for randomized fixtures")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MalformedBundle as exc:
        print(f"malformed bundle: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ZkGraphError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
