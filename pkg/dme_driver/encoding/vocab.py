"""Word-level vocabulary over the synthetic driver-logic corpus."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ..exceptions import RecordFormatError

logger = logging.getLogger(__name__)

PAD, UNK, EMPTY = 0, 1, 2
RESERVED = ("<pad>", "<unk>", "<empty>")

_WORD = re.compile(r"[a-z0-9]+")


def words(text: str) -> list[str]:
    """Lowercase, split on whitespace and punctuation, drop the punctuation."""
    return _WORD.findall(text.lower())


@dataclass(frozen=True)
class Vocabulary:
    tokens: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.tokens[: len(RESERVED)] != RESERVED:
            raise RecordFormatError(f"vocabulary must start with {RESERVED}")
        object.__setattr__(self, "_index", {token: i for i, token in enumerate(self.tokens)})
        if len(self._index) != len(self.tokens):
            raise RecordFormatError("vocabulary tokens must be unique")

    @classmethod
    def build(cls, corpus: Iterable[str]) -> "Vocabulary":
        seen = sorted({w for text in corpus for w in words(text)})
        return cls(RESERVED + tuple(seen))

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id(self, token: str) -> int:
        return self._index.get(token, UNK)

    def tokenize(self, text: str) -> list[int]:
        ids = [self.id(w) for w in words(text)]
        return ids or [EMPTY]

    def save(self, path: Path) -> None:
        path.write_text("".join(f"{token}\t{i}\n" for i, token in enumerate(self.tokens)), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "Vocabulary":
        tokens = []
        for line_number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line:
                continue
            try:
                token, raw_id = line.split("\t")
                token_id = int(raw_id)
            except ValueError as e:
                raise RecordFormatError(f"expected 'token<TAB>id': {line!r}", line_number) from e
            if token_id != len(tokens):
                raise RecordFormatError(f"ids must be dense and ordered, expected {len(tokens)} got {token_id}", line_number)
            tokens.append(token)
        logger.debug(f"Loaded {len(tokens)} vocabulary entries from {path}")
        return cls(tuple(tokens))
