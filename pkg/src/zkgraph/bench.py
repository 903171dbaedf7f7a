"""Benchmark harness: suites of plans measured as structural cost reports.

Wall-clock numbers here are informational; the meaningful outputs are
the deterministic structural counts (rows, gates, lookups, perms) that
expose the cost trends: set-based expansion flat in the start-set
size, repeated single-source growing linearly, CSR strictly above
edge-list, shortest-path independent of hop depth, and near-linear
scaling in the database size.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from .bundle import serialize_bundle
from .planner import compile_and_witness, db_meta_of, estimate, finalize_challenges, parse_plan
from .store import GraphDb, GraphSchema, build_db, load_db

REPORT_COLUMNS = ("query", "rows", "gates", "lookups", "perms", "witness_ms", "check_ms", "bundle_bytes")


@dataclass
class BenchRow:
    query: str
    rows: int
    gates: int
    lookups: int
    perms: int
    witness_ms: float
    check_ms: float
    bundle_bytes: int
    group: str = ""
    x: float | None = None

    def csv(self) -> str:
        return ",".join(
            str(v) for v in (
                self.query, self.rows, self.gates, self.lookups, self.perms,
                f"{self.witness_ms:.1f}", f"{self.check_ms:.1f}", self.bundle_bytes,
            )
        )


@dataclass
class BenchReport:
    rows: list[BenchRow] = dc_field(default_factory=list)
    errors: list[tuple[str, str]] = dc_field(default_factory=list)

    def to_csv(self) -> str:
        lines = [",".join(REPORT_COLUMNS)]
        lines.extend(r.csv() for r in self.rows)
        for name, msg in self.errors:
            lines.append(f"# error,{name},{msg}")
        return "\n".join(lines) + "\n"


def gen_synthetic_db(
    n_nodes: int,
    n_edges: int,
    seed: int = 0,
    b_id: int = 16,
    directed: bool = True,
) -> GraphDb:
    """Deterministic random fact table (ids 1..n, uniform endpoints)."""
    rng = random.Random(seed)
    ids = list(range(1, n_nodes + 1))
    pairs = []
    while len(pairs) < n_edges:
        a = rng.randrange(1, n_nodes + 1)
        b = rng.randrange(1, n_nodes + 1)
        if not directed and a == b:
            continue
        pairs.append((a, b))
    return build_db(ids, pairs, GraphSchema(b_id=b_id, directed=directed))


def run_entry(entry: dict, db: GraphDb) -> BenchRow:
    name = entry.get("name", "query")
    plan = parse_plan(entry["plan"], {k: str(v) for k, v in entry.get("params", {}).items()})
    mode = entry.get("mode", "full")
    if mode == "estimate":
        est = estimate(plan, db_meta_of(db))
        return BenchRow(
            name, est["rows"], est["gates"], est["lookups"], est["perms"],
            0.0, 0.0, 0, entry.get("group", ""), entry.get("x"),
        )
    t1 = time.perf_counter()
    compiled = compile_and_witness(plan, db, finalize=False)
    witness_ms = compiled.timings.get("witness_ms", 0.0)
    t1 = time.perf_counter()
    finalize_challenges(compiled)
    report = compiled.table.check_satisfied()
    t2 = time.perf_counter()
    if not report.satisfied:
        raise RuntimeError(f"self-check failed: {report.summary()}")
    blob = serialize_bundle(compiled)
    stats = compiled.table.stats()
    total_rows = sum(r.rows for r in compiled.ctx.regions)
    return BenchRow(
        name, total_rows, stats["gates"], stats["lookups"], stats["perms"],
        witness_ms, (t2 - t1) * 1e3, len(blob),
        entry.get("group", ""), entry.get("x"),
    )


def run_suite(suite: list[dict], db: GraphDb, base_dir: Path | None = None) -> BenchReport:
    report = BenchReport()
    for entry in suite:
        entry_db = db
        if "db" in entry:
            path = Path(entry["db"])
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            entry_db = load_db(path)
        try:
            report.rows.append(run_entry(entry, entry_db))
        except Exception as exc:
            report.errors.append((entry.get("name", "query"), str(exc)))
    return report
