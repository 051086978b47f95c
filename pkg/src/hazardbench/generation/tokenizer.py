"""Word-level tokenizer for the toy decoder.

Vocabulary is learned from corpus texts with case preserved, so greedy
decoding can reproduce training explanations verbatim.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DataError

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
UNK_ID = 3
SPECIALS = ["<pad>", "<bos>", "<eos>", "<unk>"]


@dataclass
class WordTokenizer:
    words: list[str] = field(default_factory=list)
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._index = {w: i + len(SPECIALS) for i, w in enumerate(self.words)}

    @classmethod
    def build(cls, texts: list[str]) -> "WordTokenizer":
        if not texts:
            raise DataError("cannot build a vocabulary from zero texts")
        seen: dict[str, None] = {}
        for text in texts:
            for word in text.split():
                seen.setdefault(word, None)
        return cls(words=list(seen))

    @property
    def vocab_size(self) -> int:
        return len(SPECIALS) + len(self.words)

    def encode(self, text: str) -> list[int]:
        return [self._index.get(w, UNK_ID) for w in text.split()]

    def decode(self, ids: list[int]) -> str:
        out = []
        for i in ids:
            if i == EOS_ID:
                break
            if i in (PAD_ID, BOS_ID):
                continue
            out.append(self.words[i - len(SPECIALS)] if i >= len(SPECIALS) else SPECIALS[i])
        return " ".join(out)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps({"words": self.words}))

    @classmethod
    def load(cls, path: str | Path) -> "WordTokenizer":
        return cls(words=json.loads(Path(path).read_text())["words"])
