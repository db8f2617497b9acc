"""Whitespace/punctuation tokenizer and corpus-built vocabulary."""

from __future__ import annotations

import re
from collections import Counter
from typing import Iterable

PAD_TOKEN = "[PAD]"
UNK_TOKEN = "[UNK]"
MASK_TOKEN = "[MASK]"
RESERVED_TOKENS = (PAD_TOKEN, UNK_TOKEN, MASK_TOKEN)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize_text(text: str) -> list[str]:
    """Lowercase tokenization; words and punctuation become separate tokens."""
    return _TOKEN_RE.findall(text.lower())


class Vocab:
    def __init__(self, tokens: list[str]):
        if list(tokens[: len(RESERVED_TOKENS)]) != list(RESERVED_TOKENS):
            raise ValueError("vocabulary must start with the reserved tokens")
        self.itos: list[str] = list(tokens)
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ValueError("vocabulary contains duplicate tokens")

    pad_id = 0
    unk_id = 1
    mask_id = 2

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, token: str) -> bool:
        return token in self.stoi

    @classmethod
    def build(cls, texts: Iterable[str], max_size: int | None = None) -> "Vocab":
        """Vocabulary from raw texts, ordered by frequency then alphabetically."""
        counter: Counter[str] = Counter()
        for text in texts:
            counter.update(tokenize_text(text))
        return cls.from_counter(counter, max_size=max_size)

    @classmethod
    def from_counter(cls, counter: Counter, max_size: int | None = None) -> "Vocab":
        items = sorted(counter, key=lambda t: (-counter[t], t))
        if max_size is not None:
            items = items[: max(0, max_size - len(RESERVED_TOKENS))]
        return cls(list(RESERVED_TOKENS) + items)

    def encode(self, tokens: list[str]) -> list[int]:
        return [self.stoi.get(t, self.unk_id) for t in tokens]

    def decode(self, ids: list[int]) -> list[str]:
        return [self.itos[i] for i in ids]

    def tokenize(self, text: str) -> list[int]:
        """Text to ids; unknown words map to UNK, empty text to []."""
        return self.encode(tokenize_text(text))

    def detokenize(self, ids: list[int]) -> str:
        return " ".join(self.decode(ids))

    def random_regular_id(self, rng) -> int:
        """A uniformly drawn non-reserved token id."""
        if len(self.itos) <= len(RESERVED_TOKENS):
            raise ValueError("vocabulary has no regular tokens")
        return rng.randrange(len(RESERVED_TOKENS), len(self.itos))
