"""Keyed store of R(., v) coefficient matrices with pluggable retention.

Backings:

* ``eager``: compute every key up front, never again.
* ``lazy``: compute on first use and keep forever.
* ``lru:N``: keep at most N entries, evict the least recently used.
* ``lfuda:N``: keep at most N entries, evict the lowest priority where
  priority = hit frequency + cache age, and the age becomes the evicted
  entry's priority (frequency with dynamic aging).
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .linalg import ModMatrix, scale_residues


@dataclass
class PepStats:
    hits: int = 0
    misses: int = 0
    evictions: int = 0
    computes: int = 0

    def as_dict(self):
        return {"hits": self.hits, "misses": self.misses, "evictions": self.evictions, "computes": self.computes}


def parse_backing(spec: str):
    """'eager' | 'lazy' | 'lru:N' | 'lfuda:N' -> (kind, capacity)."""
    spec = spec.strip().lower()
    if spec in ("eager", "lazy"):
        return spec, None
    kind, _, cap = spec.partition(":")
    if kind not in ("lru", "lfuda") or not cap.isdigit() or int(cap) < 1:
        raise ValueError(f"bad PEP backing {spec!r}")
    return kind, int(cap)


class PepStore:
    def __init__(self, compute, backing: str = "lazy", keys=None):
        self.compute = compute
        self.kind, self.capacity = parse_backing(backing)
        self.stats = PepStats()
        self._lock = threading.Lock()
        self._inflight: dict = {}
        self._table: OrderedDict = OrderedDict()
        self._freq: dict = {}
        self._prio: dict = {}
        self._age = 0
        if self.kind == "eager":
            if keys is None:
                raise ValueError("eager backing needs the full key list")
            for k in keys:
                self._table[_key(k)] = self._run_compute(_key(k))

    def _run_compute(self, key):
        self.stats.computes += 1
        return self.compute(key)

    def __contains__(self, v):
        return _key(v) in self._table

    def __len__(self):
        return len(self._table)

    def keys(self):
        return list(self._table)

    def get(self, v):
        key = _key(v)
        while True:
            with self._lock:
                if key in self._table:
                    self.stats.hits += 1
                    self._touch(key)
                    return self._table[key]
                ev = self._inflight.get(key)
                if ev is None:
                    ev = threading.Event()
                    self._inflight[key] = ev
                    self.stats.misses += 1
                    owner = True
                else:
                    owner = False
            if not owner:
                ev.wait()
                continue
            try:
                entry = self._run_compute(key)
            except BaseException:
                with self._lock:
                    del self._inflight[key]
                ev.set()
                raise
            with self._lock:
                self._insert(key, entry)
                del self._inflight[key]
            ev.set()
            return entry

    def _touch(self, key):
        if self.kind == "lru":
            self._table.move_to_end(key)
        elif self.kind == "lfuda":
            self._freq[key] += 1
            self._prio[key] = self._freq[key] + self._age

    def _insert(self, key, entry):
        if self.capacity is not None:
            while len(self._table) >= self.capacity:
                self._evict()
        self._table[key] = entry
        if self.kind == "lfuda":
            self._freq[key] = 1
            self._prio[key] = 1 + self._age

    def _evict(self):
        if self.kind == "lru":
            self._table.popitem(last=False)
        else:
            # lowest priority, ties broken by insertion order
            victim = min(self._table, key=lambda k: self._prio[k])
            self._age = self._prio[victim]
            del self._table[victim]
            del self._freq[victim]
            del self._prio[victim]
        self.stats.evictions += 1


def _key(v):
    return tuple(int(x) for x in v)


@dataclass(eq=False)
class RuvOperator:
    """R_{u,v} = sum_i A_i u_i + A_{n+1} for a fixed direction v."""

    v: tuple
    mats: list
    modulus: int
    _stack: np.ndarray | None = field(default=None, repr=False)
    _prepared: dict = field(default_factory=dict, repr=False)

    @property
    def side(self):
        return self.mats[0].rows

    def at(self, u) -> ModMatrix:
        out = self.mats[-1].copy()
        for Ai, ui in zip(self.mats, u):
            if ui:
                out = out + Ai.scale(int(ui))
        return out

    def stacked(self) -> np.ndarray:
        """[A_0; A_1; ...; A_{n+1}] as one tall residue array."""
        if self._stack is None:
            self._stack = np.concatenate([A.data for A in self.mats], axis=0)
        return self._stack


def eval_to_linear(entry: RuvOperator, x, v):
    """(A, B) with R at u = x + y v equal to A y + B."""
    N = entry.modulus
    s = entry.side
    A = np.zeros((s, s), dtype=entry.mats[0].data.dtype)
    B = entry.mats[-1].data.copy()
    for Ai, vi, xi in zip(entry.mats, v, x):
        if vi:
            A = (A + scale_residues(Ai.data, int(vi), N)) % N
        if xi:
            B = (B + scale_residues(Ai.data, int(xi), N)) % N
    return ModMatrix(A, N, reduced=True), ModMatrix(B, N, reduced=True)
