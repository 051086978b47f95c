"""Deterministic markdown and TSV report emission.

Reports carry config hashes for provenance and never embed timestamps, so
identical runs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .retrieval_metrics import RetrievalMetrics


@dataclass
class ReportBundle:
    config_hash: str = ""
    retrieval: dict[str, RetrievalMetrics] = field(default_factory=dict)  # direction -> metrics
    caption: dict[str, float] = field(default_factory=dict)
    judge_mean: float | None = None
    notes: list[str] = field(default_factory=list)


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def report_rows(bundle: ReportBundle) -> list[tuple[str, str, str]]:
    """(section, metric, value) rows in fixed order."""
    rows: list[tuple[str, str, str]] = []
    for direction in sorted(bundle.retrieval):
        m = bundle.retrieval[direction]
        rows.append((f"retrieval/{direction}", "mean_rank", _fmt(m.mean_rank)))
        for k in sorted(m.recall_at):
            rows.append((f"retrieval/{direction}", f"recall@{k}", _fmt(m.recall_at[k])))
    for name in sorted(bundle.caption):
        rows.append(("generation", name, _fmt(bundle.caption[name])))
    if bundle.judge_mean is not None:
        rows.append(("generation", "judge_mean", f"{bundle.judge_mean:.1f}"))
    return rows


def emit_report(bundle: ReportBundle, out_dir: str | Path) -> tuple[Path, Path]:
    """Write report.md and metrics.tsv; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = report_rows(bundle)

    tsv_path = out / "metrics.tsv"
    with open(tsv_path, "w", encoding="utf-8") as fh:
        fh.write("section\tmetric\tvalue\n")
        for section, metric, value in rows:
            fh.write(f"{section}\t{metric}\t{value}\n")

    md = ["# Evaluation report", "", f"Config hash: `{bundle.config_hash or 'n/a'}`", ""]
    retrieval_rows = [r for r in rows if r[0].startswith("retrieval/")]
    if retrieval_rows:
        md += ["## Retrieval", "", "| direction | metric | value |", "| --- | --- | --- |"]
        md += [f"| {s.split('/', 1)[1]} | {m} | {v} |" for s, m, v in retrieval_rows]
        md.append("")
    generation_rows = [r for r in rows if r[0] == "generation"]
    if generation_rows:
        md += ["## Generation", "", "| metric | value |", "| --- | --- |"]
        md += [f"| {m} | {v} |" for _, m, v in generation_rows]
        md.append("")
    if bundle.notes:
        md += ["## Notes", ""] + [f"- {note}" for note in bundle.notes] + [""]
    md_path = out / "report.md"
    md_path.write_text("\n".join(md), encoding="utf-8")
    return md_path, tsv_path
