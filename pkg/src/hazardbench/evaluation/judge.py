"""Batched external-judge scoring of generated explanations.

Pairs of (gold, generated) texts are packed up to 25 per prompt, sent to a
pluggable chat-completion client at temperature 0, parsed into integer
scores on a 0-100 scale, and cached per pair so identical inputs never
trigger a second call.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Protocol, Sequence

from ..errors import ClientError, JudgeParseError

JUDGE_PROMPT_VERSION = "judge-prompt-v1"
JUDGE_TEMPERATURE = 0.0
MAX_PAIRS_PER_BATCH = 25

# Scoring policies: full scale anchors, strict entity-reference checking,
# and no penalty for extra content beyond the reference.
JUDGE_SYSTEM_PROMPT = """\
You grade generated driving-hazard explanations against reference explanations.
For each numbered pair below, output one line "N: S" where N is the pair number
and S is an integer score from 0 to 100.

Scoring rules:
- 100 means the generated text is a perfect semantic match with the reference.
- 0 means the generated text has no commonality with the reference; incomplete
  or empty generated texts also score 0.
- Check entity references rigorously: phrases like "Entity #1" must refer to
  the same entities playing the same roles as in the reference.
- Do not penalize extra content: if the generated text mentions the same
  content as the reference, additional detail must not lower the score.

Output exactly one "N: S" line per pair and nothing else.
"""


@dataclass(frozen=True)
class JudgeBatch:
    pairs: tuple[tuple[str, str], ...]  # (gold, generated)
    ids: tuple[str, ...]
    temperature: float = JUDGE_TEMPERATURE

    def __post_init__(self) -> None:
        if not self.pairs:
            raise ValueError("judge batch needs at least one pair")
        if len(self.pairs) > MAX_PAIRS_PER_BATCH:
            raise ValueError(f"judge batch limited to {MAX_PAIRS_PER_BATCH} pairs")

    @property
    def prompt(self) -> str:
        blocks = [JUDGE_SYSTEM_PROMPT]
        for i, (gold, generated) in enumerate(self.pairs, start=1):
            blocks.append(f"Pair {i}:\nReference: {gold}\nGenerated: {generated}")
        return "\n\n".join(blocks)


def build_judge_batches(pairs: Mapping[str, tuple[str, str]]) -> list[JudgeBatch]:
    """Chunk id -> (gold, generated) pairs into batches of at most 25."""
    if not pairs:
        raise ValueError("no pairs to judge")
    ids = list(pairs)
    batches = []
    for start in range(0, len(ids), MAX_PAIRS_PER_BATCH):
        chunk = ids[start : start + MAX_PAIRS_PER_BATCH]
        batches.append(
            JudgeBatch(pairs=tuple(pairs[i] for i in chunk), ids=tuple(chunk))
        )
    return batches


_SCORE_LINE = re.compile(r"^\s*(\d+)\s*[:.]\s*(\d+)\s*$", re.MULTILINE)


def parse_judge_scores(raw_response: str, expected_n: int) -> list[int]:
    """Extract exactly expected_n in-range scores, in pair-number order."""
    found = _SCORE_LINE.findall(raw_response)
    if len(found) != expected_n:
        raise JudgeParseError(
            f"expected {expected_n} score lines, found {len(found)}"
        )
    scores = []
    for pos, (num, score) in enumerate(found, start=1):
        if int(num) != pos:
            raise JudgeParseError(f"score lines out of order at position {pos}")
        value = int(score)
        if not 0 <= value <= 100:
            raise JudgeParseError(f"score {value} outside [0, 100]")
        scores.append(value)
    return scores


class JudgeClient(Protocol):
    def complete(self, prompt: str, model: str, temperature: float) -> str: ...


class MockJudgeClient:
    """Scripted client for tests: returns canned responses, records calls."""

    def __init__(self, responses: Sequence[str] | None = None, constant_score: int | None = None):
        self.responses = list(responses or [])
        self.constant_score = constant_score
        self.calls: list[dict] = []

    def complete(self, prompt: str, model: str, temperature: float) -> str:
        self.calls.append({"prompt": prompt, "model": model, "temperature": temperature})
        if self.responses:
            return self.responses.pop(0)
        if self.constant_score is not None:
            n = prompt.count("\nReference: ")
            return "\n".join(f"{i}: {self.constant_score}" for i in range(1, n + 1))
        raise ClientError("mock client exhausted its scripted responses")


class HttpJudgeClient:
    """OpenAI-style chat completion client over httpx.

    Reads credentials from JUDGE_API_KEY and the endpoint from
    JUDGE_API_BASE (default http://localhost:8000/v1).
    """

    def __init__(self, base_url: str | None = None, api_key: str | None = None, timeout: float = 60.0):
        self.base_url = (base_url or os.environ.get("JUDGE_API_BASE", "http://localhost:8000/v1")).rstrip("/")
        self.api_key = api_key or os.environ.get("JUDGE_API_KEY", "")
        self.timeout = timeout

    def complete(self, prompt: str, model: str, temperature: float) -> str:
        import httpx

        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {self.api_key}"},
                json={
                    "model": model,
                    "temperature": temperature,
                    "messages": [{"role": "user", "content": prompt}],
                },
                timeout=self.timeout,
            )
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except httpx.HTTPError as exc:
            raise ClientError(f"judge request failed: {exc}") from exc
        except (KeyError, IndexError, ValueError) as exc:
            raise ClientError(f"malformed judge response: {exc}") from exc


@dataclass
class JudgeResult:
    scores: dict[str, int] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    client_calls: int = 0
    cache_hits: int = 0

    @property
    def mean(self) -> float | None:
        """Corpus mean to one decimal, None when nothing was scored."""
        if not self.scores:
            return None
        return round(sum(self.scores.values()) / len(self.scores), 1)


def _cache_key(gold: str, generated: str, model: str) -> str:
    payload = "|".join([JUDGE_PROMPT_VERSION, model, str(JUDGE_TEMPERATURE), gold, generated])
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _cache_read(cache_dir: Path, key: str) -> int | None:
    path = cache_dir / f"{key}.json"
    if not path.is_file():
        return None
    return int(json.loads(path.read_text())["score"])


def _cache_write(cache_dir: Path, key: str, score: int, model: str) -> None:
    entry = {
        "score": score,
        "model": model,
        "temperature": JUDGE_TEMPERATURE,
        "prompt_version": JUDGE_PROMPT_VERSION,
    }
    tmp = cache_dir / f"{key}.tmp"
    tmp.write_text(json.dumps(entry, sort_keys=True))
    tmp.replace(cache_dir / f"{key}.json")


def run_judge(
    client: JudgeClient,
    pairs: Mapping[str, tuple[str, str]],
    cache_dir: str | Path,
    model: str = "judge-1",
    max_retries: int = 3,
    backoff: float = 0.5,
) -> JudgeResult:
    """Score every (gold, generated) pair, consulting the cache first.

    Failed batches (transport or parse, after retries) are recorded in
    result.failures without aborting the remaining batches.
    """
    cache = Path(cache_dir)
    cache.mkdir(parents=True, exist_ok=True)
    result = JudgeResult()

    pending: dict[str, tuple[str, str]] = {}
    for sid, (gold, generated) in pairs.items():
        cached = _cache_read(cache, _cache_key(gold, generated, model))
        if cached is None:
            pending[sid] = (gold, generated)
        else:
            result.scores[sid] = cached
            result.cache_hits += 1

    if not pending:
        return result

    for batch in build_judge_batches(pending):
        scores = None
        for attempt in range(max_retries):
            try:
                result.client_calls += 1
                raw = client.complete(batch.prompt, model=model, temperature=batch.temperature)
                scores = parse_judge_scores(raw, expected_n=len(batch.pairs))
                break
            except (ClientError, JudgeParseError):
                if attempt + 1 < max_retries and backoff > 0:
                    time.sleep(backoff * 2**attempt)
        if scores is None:
            result.failures.extend(batch.ids)
            continue
        for sid, (gold, generated), score in zip(batch.ids, batch.pairs, scores):
            result.scores[sid] = score
            _cache_write(cache, _cache_key(gold, generated, model), score, model)
    return result
