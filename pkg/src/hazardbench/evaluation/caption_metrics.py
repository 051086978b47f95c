"""Caption similarity metrics for generated explanations.

All metrics share one normalization: lowercase, punctuation stripped except
"#" (so "Entity #1" survives as a token), whitespace collapsed. Scores are
on a 0-100 scale. Each id has exactly one reference.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter, defaultdict
from typing import Callable, Mapping

from ..errors import DataError

_PUNCT = re.compile("[" + re.escape(string.punctuation.replace("#", "")) + "]")


def normalize_text(text: str) -> str:
    return " ".join(_PUNCT.sub(" ", text.lower()).split())


def _tokens(text: str) -> list[str]:
    return normalize_text(text).split()


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu4(predictions: Mapping[str, str], references: Mapping[str, str]) -> float:
    """Corpus-level BLEU-4 with brevity penalty and no smoothing.

    Identical corpora score exactly 100.0; if any n-gram level has zero
    matches the score is 0.
    """
    match = [0] * 4
    total = [0] * 4
    pred_len = 0
    ref_len = 0
    for sid, pred in predictions.items():
        p = _tokens(pred)
        r = _tokens(references[sid])
        pred_len += len(p)
        ref_len += len(r)
        for n in range(1, 5):
            pc = _ngrams(p, n)
            rc = _ngrams(r, n)
            match[n - 1] += sum(min(c, rc[g]) for g, c in pc.items())
            total[n - 1] += max(len(p) - n + 1, 0)
    if any(t == 0 for t in total) or any(m == 0 for m in match):
        return 0.0
    log_precision = sum(math.log(m / t) for m, t in zip(match, total)) / 4
    bp = 1.0 if pred_len > ref_len else math.exp(1 - ref_len / max(pred_len, 1))
    return 100.0 * bp * math.exp(log_precision)


def _lcs_len(a: list[str], b: list[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(cur[-1], prev[j]))
        prev = cur
    return prev[-1]


def rouge_l(predictions: Mapping[str, str], references: Mapping[str, str]) -> float:
    """Mean per-sample ROUGE-L F1 (harmonic mean of LCS precision/recall)."""
    scores = []
    for sid, pred in predictions.items():
        p = _tokens(pred)
        r = _tokens(references[sid])
        lcs = _lcs_len(p, r)
        if lcs == 0:
            scores.append(0.0)
            continue
        precision = lcs / len(p)
        recall = lcs / len(r)
        scores.append(2 * precision * recall / (precision + recall))
    return 100.0 * sum(scores) / len(scores) if scores else 0.0


def cider_d(
    predictions: Mapping[str, str], references: Mapping[str, str], sigma: float = 6.0
) -> float:
    """Consensus-based n-gram similarity (n = 1..4) with IDF from the
    reference corpus, count clipping, and a gaussian length penalty."""
    ids = list(predictions)
    n_docs = len(ids)
    doc_freq: list[defaultdict] = [defaultdict(int) for _ in range(4)]
    for sid in ids:
        toks = _tokens(references[sid])
        for n in range(4):
            for gram in set(_ngrams(toks, n + 1)):
                doc_freq[n][gram] += 1

    def vectorize(tokens: list[str]) -> tuple[list[dict], list[float]]:
        vecs, norms = [], []
        for n in range(4):
            counts = _ngrams(tokens, n + 1)
            vec = {}
            for gram, c in counts.items():
                idf = math.log(max(n_docs, 1)) - math.log(max(doc_freq[n][gram], 1))
                vec[gram] = c * idf
            vecs.append(vec)
            norms.append(math.sqrt(sum(v * v for v in vec.values())))
        return vecs, norms

    total = 0.0
    for sid in ids:
        p = _tokens(predictions[sid])
        r = _tokens(references[sid])
        pv, pn = vectorize(p)
        rv, rn = vectorize(r)
        sims = []
        for n in range(4):
            num = sum(min(pv[n].get(g, 0.0), w) * w for g, w in rv[n].items())
            denom = pn[n] * rn[n]
            sim = num / denom if denom > 0 else 0.0
            delta = len(p) - len(r)
            sims.append(sim * math.exp(-(delta**2) / (2 * sigma**2)))
        total += sum(sims) / 4
    return 100.0 * total / n_docs if n_docs else 0.0


def caption_metrics(
    predictions: Mapping[str, str],
    references: Mapping[str, str],
    spice_scorer: Callable[[Mapping[str, str], Mapping[str, str]], float] | None = None,
) -> tuple[dict[str, float], list[str]]:
    """All caption scores plus notes about anything omitted.

    SPIDEr = (SPICE + CIDEr-D) / 2 appears only when a SPICE scorer is
    supplied; there is no bundled approximation.
    """
    if set(predictions) != set(references):
        missing = set(references) ^ set(predictions)
        raise DataError(f"prediction/reference id mismatch: {sorted(missing)[:5]}")
    if not predictions:
        raise DataError("no prediction pairs to score")
    metrics = {
        "BLEU4": bleu4(predictions, references),
        "ROUGE_L": rouge_l(predictions, references),
        "CIDEr_D": cider_d(predictions, references),
    }
    notes: list[str] = []
    if spice_scorer is not None:
        spice = spice_scorer(predictions, references)
        metrics["SPICE"] = spice
        metrics["SPIDEr"] = (spice + metrics["CIDEr_D"]) / 2
    else:
        notes.append("SPIDEr omitted: no external SPICE scorer configured")
    return metrics, notes
