"""TSV exchange formats: score matrices and generated predictions."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import DataError
from .retrieval_metrics import ScoreMatrix


def _clean(text: str) -> str:
    return text.replace("\t", " ").replace("\n", " ").strip()


def write_scores_tsv(
    path: str | Path, scores: np.ndarray, query_ids: list[str], candidate_ids: list[str]
) -> None:
    """Rows are text queries, columns image candidates, six-decimal scores."""
    scores = np.asarray(scores)
    if scores.shape != (len(query_ids), len(candidate_ids)):
        raise DataError(
            f"score shape {scores.shape} does not match {len(query_ids)} queries x "
            f"{len(candidate_ids)} candidates"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("query_id\t" + "\t".join(candidate_ids) + "\n")
        for qid, row in zip(query_ids, scores):
            fh.write(qid + "\t" + "\t".join(f"{v:.6f}" for v in row) + "\n")


def read_scores_tsv(path: str | Path, direction: str = "TR") -> ScoreMatrix:
    """Gold candidate for each query is the column with the same id."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 2:
        raise DataError(f"score file {path} has no data rows")
    header = lines[0].split("\t")
    if header[0] != "query_id":
        raise DataError(f"score file {path} missing query_id header")
    candidate_ids = header[1:]
    col_of = {cid: i for i, cid in enumerate(candidate_ids)}
    rows, gold = [], []
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        qid = parts[0]
        if qid not in col_of:
            raise DataError(f"line {line_no}: query {qid!r} has no matching candidate column")
        values = [float(v) for v in parts[1:]]
        if len(values) != len(candidate_ids):
            raise DataError(f"line {line_no}: expected {len(candidate_ids)} scores, got {len(values)}")
        rows.append(values)
        gold.append(col_of[qid])
    return ScoreMatrix(scores=np.array(rows), gold=np.array(gold), direction=direction)


def write_preds_tsv(path: str | Path, predictions: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("id\ttext\n")
        for sid, text in predictions.items():
            fh.write(f"{sid}\t{_clean(text)}\n")


def read_preds_tsv(path: str | Path) -> dict[str, str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "id\ttext":
        raise DataError(f"prediction file {path} missing id/text header")
    out: dict[str, str] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"line {line_no}: expected two tab-separated fields")
        if parts[0] in out:
            raise DataError(f"line {line_no}: duplicate id {parts[0]!r}")
        out[parts[0]] = parts[1]
    return out
