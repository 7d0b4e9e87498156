"""Sample pools shared between data producers and a training consumer."""
from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field

from ..graph.extract import CodeGraph
from ..model.batch import EncodedGraph


@dataclass
class PoolEntry:
    """One training sample.

    Detector entries carry only ``graph`` (whose target is the repair).
    Selector entries also carry the observed options and the chosen one, as
    local option indices: candidates ``0..C-1`` then the identity at ``C``.
    """

    graph: CodeGraph
    observed: tuple[int, ...] = ()
    chosen: int | None = None
    uses: int = 0
    encoded: EncodedGraph | None = field(default=None, repr=False, compare=False)


class DataPool:
    """Multiset of entries; each is evicted once it has been drawn ``nu`` times.

    ``sample`` draws distinct entries uniformly. With ``blocking`` set, an
    empty or short pool makes ``sample`` wait for producers until ``close`` is
    called; otherwise it returns what is available, possibly nothing.
    """

    def __init__(self, nu: int = 4, seed: int = 0, blocking: bool = False):
        if nu < 1:
            raise ValueError("nu must be at least 1")
        self.nu = nu
        self.blocking = blocking
        self._rng = random.Random(seed)
        self._entries: list[PoolEntry] = []
        self._cond = threading.Condition()
        self._closed = False
        self.evicted = 0
        self.draws = 0

    def __len__(self) -> int:
        with self._cond:
            return len(self._entries)

    def add(self, entries: list[PoolEntry]) -> None:
        with self._cond:
            if self._closed:
                raise RuntimeError("pool is closed")
            self._entries.extend(entries)
            self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    def reopen(self) -> None:
        with self._cond:
            self._closed = False

    @property
    def closed(self) -> bool:
        return self._closed

    def sample(self, n: int) -> list[PoolEntry]:
        with self._cond:
            if self.blocking:
                self._cond.wait_for(lambda: len(self._entries) >= n or self._closed)
            m = min(n, len(self._entries))
            if m == 0:
                return []
            picked = sorted(self._rng.sample(range(len(self._entries)), m))
            out = [self._entries[i] for i in picked]
            for e in out:
                e.uses += 1
            self.draws += m
            keep = [e for e in self._entries if e.uses < self.nu]
            self.evicted += len(self._entries) - len(keep)
            self._entries = keep
            return out

    def drain(self) -> None:
        with self._cond:
            self.evicted += len(self._entries)
            self._entries = []
