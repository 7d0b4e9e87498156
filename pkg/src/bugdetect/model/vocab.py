"""Subtoken vocabulary."""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

PAD, UNK = 0, 1
PAD_TOKEN, UNK_TOKEN = "<pad>", "<unk>"
MAX_SUBTOKENS = 6
DEFAULT_VOCAB_SIZE = 15000

_IDENT = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_NUMBER = re.compile(r"^-?\d+(\.\d*)?([eE][-+]?\d+)?$")
_PIECES = re.compile(r"[A-Za-z0-9_]+|[^\sA-Za-z0-9_]+")
_CAMEL = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")


def split_identifier(name: str) -> list[str]:
    out = []
    for part in name.split("_"):
        out += [p.lower() for p in _CAMEL.findall(part)]
    return out


def subtokenize(label: str) -> list[str]:
    """Split a label into lowercase subtokens.

    Identifiers split on underscores and case changes; numbers stay whole;
    other text (operators, strings, comments) splits into word and symbol runs.
    """
    if _NUMBER.match(label):
        return [label]
    if _IDENT.match(label):
        parts = split_identifier(label)
        return parts or [label]
    out: list[str] = []
    for piece in _PIECES.findall(label):
        if piece[0].isalnum() or piece[0] == "_":
            out += split_identifier(piece) or [piece]
        else:
            out.append(piece)
    return out


@dataclass
class Vocabulary:
    tokens: list[str]

    def __post_init__(self) -> None:
        if self.tokens[:2] != [PAD_TOKEN, UNK_TOKEN]:
            raise ValueError("vocabulary must start with the pad and unknown entries")
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def lookup(self, subtoken: str) -> int:
        return self.index.get(subtoken, UNK)

    def encode(self, label: str, max_subtokens: int = MAX_SUBTOKENS) -> list[int]:
        """Ids of the first ``max_subtokens`` subtokens, padded with PAD."""
        ids = [self.lookup(s) for s in subtokenize(label)[:max_subtokens]] or [UNK]
        return ids + [PAD] * (max_subtokens - len(ids))

    @classmethod
    def build(cls, labels: Iterable[str], size: int = DEFAULT_VOCAB_SIZE) -> "Vocabulary":
        counts: Counter[str] = Counter()
        for label in labels:
            counts.update(subtokenize(label)[:MAX_SUBTOKENS])
        ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls([PAD_TOKEN, UNK_TOKEN] + [t for t, _ in ranked[: max(0, size - 2)]])

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fp:
            for t in self.tokens:
                fp.write(t.replace("\n", " ") + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        with open(path, encoding="utf-8") as fp:
            return cls([line.rstrip("\n") for line in fp])
