"""Figure rendering for benchmark reports.

Written next to the delimited report: a structural-cost chart and a
timing chart.  Entries carrying a ``group`` and numeric ``x`` are drawn
as trend lines (cost versus a swept parameter); everything else falls
back to bars per query.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .bench import BenchReport  # noqa: E402


def _grouped(rows):
    groups: dict[str, list] = {}
    for r in rows:
        if r.group and r.x is not None:
            groups.setdefault(r.group, []).append(r)
    for entries in groups.values():
        entries.sort(key=lambda r: r.x)
    return groups


def _plot_metric(rows, metric: str, ylabel: str, path: Path):
    fig, ax = plt.subplots(figsize=(7, 4.2))
    groups = _grouped(rows)
    if groups:
        for name, entries in sorted(groups.items()):
            ax.plot(
                [e.x for e in entries],
                [getattr(e, metric) for e in entries],
                marker="o",
                label=name,
            )
        ax.set_xlabel("swept parameter")
        ax.legend()
    else:
        labels = [r.query for r in rows]
        ax.bar(range(len(rows)), [getattr(r, metric) for r in rows], color="#4878a8")
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_report(report: BenchReport, out_csv: Path) -> list[Path]:
    """Render cost and timing figures alongside the CSV report."""
    if not report.rows:
        return []
    stem = out_csv.with_suffix("")
    rows_png = Path(f"{stem}_rows.png")
    time_png = Path(f"{stem}_timings.png")
    _plot_metric(report.rows, "rows", "allocated region rows", rows_png)

    fig, ax = plt.subplots(figsize=(7, 4.2))
    groups = _grouped(report.rows)
    if groups:
        for name, entries in sorted(groups.items()):
            ax.plot([e.x for e in entries], [e.witness_ms for e in entries],
                    marker="o", label=f"{name} witness")
            ax.plot([e.x for e in entries], [e.check_ms for e in entries],
                    marker="s", linestyle="--", label=f"{name} check")
        ax.set_xlabel("swept parameter")
    else:
        idx = range(len(report.rows))
        ax.bar([i - 0.2 for i in idx], [r.witness_ms for r in report.rows], width=0.4, label="witness")
        ax.bar([i + 0.2 for i in idx], [r.check_ms for r in report.rows], width=0.4, label="check")
        ax.set_xticks(list(idx))
        ax.set_xticklabels([r.query for r in report.rows], rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("milliseconds")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(time_png, dpi=120)
    plt.close(fig)
    return [rows_png, time_png]
