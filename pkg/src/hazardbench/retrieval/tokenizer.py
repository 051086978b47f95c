"""Hashed whitespace tokenizer for the toy text backbone.

Tokens are lowercased and mapped into a fixed-size id space with a stable
hash, so the vocabulary needs no fitting pass and ids are identical across
processes and runs.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

from ..errors import DataError

PAD_ID = 0
CLS_ID = 1
NUM_SPECIAL = 2


def _stable_hash(token: str) -> int:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


@dataclass(frozen=True)
class HashedTokenizer:
    vocab_size: int = 2048
    max_len: int = 40

    def token_ids(self, text: str) -> list[int]:
        """[CLS] + hashed word ids, truncated to max_len (warning on truncation)."""
        words = text.lower().split()
        if not words:
            raise DataError("cannot tokenize empty text")
        space = self.vocab_size - NUM_SPECIAL
        ids = [CLS_ID] + [NUM_SPECIAL + _stable_hash(w) % space for w in words]
        if len(ids) > self.max_len:
            warnings.warn(
                f"text of {len(words)} words truncated to max_len={self.max_len}",
                stacklevel=2,
            )
            ids = ids[: self.max_len]
        return ids

    def batch(self, texts: list[str]) -> tuple[list[list[int]], list[int]]:
        """Padded id rows plus true lengths."""
        rows = [self.token_ids(t) for t in texts]
        lengths = [len(r) for r in rows]
        width = max(lengths)
        return [r + [PAD_ID] * (width - len(r)) for r in rows], lengths
