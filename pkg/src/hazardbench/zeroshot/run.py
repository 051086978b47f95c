"""Zero-shot collection loop: prompt, query with caching, write preds.tsv."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..dataset.io import load_corpus, load_image
from ..dataset.types import Sample
from ..errors import ClientError, DataError
from ..evaluation.io import write_preds_tsv
from .client import VlmClient
from .prompt import ZEROSHOT_PROMPT_VERSION, ZeroShotContext, build_zeroshot_prompt

ZEROSHOT_TEMPERATURE = 0.0


@dataclass(frozen=True)
class ZeroShotRunConfig:
    model: str = "mock-vlm"
    temperature: float = ZEROSHOT_TEMPERATURE
    cache_dir: Path | None = None
    max_retries: int = 3
    backoff: float = 0.5
    degraded: bool = False


@dataclass
class ZeroShotResult:
    preds: dict[str, str] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    client_calls: int = 0
    cache_hits: int = 0


def image_digest(image: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(str(image.shape).encode())
    h.update(np.ascontiguousarray(image).tobytes())
    return h.hexdigest()


def _cache_key(prompt: str, digest: str, model: str) -> str:
    raw = "|".join([ZEROSHOT_PROMPT_VERSION, model, digest, prompt])
    return hashlib.sha256(raw.encode()).hexdigest()


def _cache_read(cache_dir: Path, key: str) -> str | None:
    path = cache_dir / f"{key}.json"
    if not path.exists():
        return None
    return json.loads(path.read_text())["text"]


def _cache_write(cache_dir: Path, key: str, text: str, model: str) -> None:
    cache_dir.mkdir(parents=True, exist_ok=True)
    path = cache_dir / f"{key}.json"
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps({"text": text, "model": model}, sort_keys=True))
    tmp.replace(path)


def query_external_vlm(
    client: VlmClient,
    prompt: str,
    image: np.ndarray,
    config: ZeroShotRunConfig,
) -> tuple[str, bool]:
    """Return (generated text, served_from_cache). Retries transient failures.

    An empty or whitespace-only reply counts as a failure: downstream metric
    code rejects empty predictions, better to retry here.
    """
    key = _cache_key(prompt, image_digest(image), config.model)
    if config.cache_dir is not None:
        cached = _cache_read(config.cache_dir, key)
        if cached is not None:
            return cached, True
    last_error: Exception | None = None
    for attempt in range(config.max_retries):
        if attempt > 0 and config.backoff > 0:
            time.sleep(config.backoff * 2 ** (attempt - 1))
        try:
            text = client.complete(prompt, image, config.model, config.temperature)
            if not text or not text.strip():
                raise ClientError("empty response")
        except ClientError as exc:
            last_error = exc
            continue
        if config.cache_dir is not None:
            _cache_write(config.cache_dir, key, text, config.model)
        return text, False
    raise ClientError(f"VLM query failed after {config.max_retries} attempts: {last_error}")


def run_zeroshot(
    client: VlmClient,
    corpus_dir: str | Path,
    split: str,
    out_path: str | Path,
    config: ZeroShotRunConfig | None = None,
) -> ZeroShotResult:
    """Query the VLM for every sample in a split; failures skip the sample."""
    config = config or ZeroShotRunConfig()
    corpus_dir = Path(corpus_dir)
    corpus = load_corpus(corpus_dir)
    samples = corpus.split_samples(split)
    if not samples:
        raise DataError(f"no samples in split {split!r}")
    result = ZeroShotResult()
    for sample in samples:
        try:
            text, from_cache = _query_sample(client, corpus_dir, sample, config)
        except ClientError:
            result.failures.append(sample.id)
            continue
        result.preds[sample.id] = text
        if from_cache:
            result.cache_hits += 1
        else:
            result.client_calls += 1
    if result.preds:
        write_preds_tsv(Path(out_path), result.preds)
    return result


def _query_sample(
    client: VlmClient, corpus_dir: Path, sample: Sample, config: ZeroShotRunConfig
) -> tuple[str, bool]:
    image = load_image(corpus_dir, sample.image_ref)
    context = ZeroShotContext.from_sample(sample)
    prompt = build_zeroshot_prompt(sample, image, context, degraded=config.degraded)
    return query_external_vlm(client, prompt.text, prompt.image.pixels, config)
