import threading
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from hypzeta.linalg import ModMatrix
from hypzeta.pep import PepStore, RuvOperator, eval_to_linear, parse_backing


class Recorder:
    def __init__(self, delay=0.0):
        self.calls = []
        self.delay = delay
        self._lock = threading.Lock()

    def __call__(self, key):
        with self._lock:
            self.calls.append(key)
        if self.delay:
            time.sleep(self.delay)
        return ("R", key)


def test_parse_backing():
    assert parse_backing("eager") == ("eager", None)
    assert parse_backing(" LRU:2 ") == ("lru", 2)
    assert parse_backing("lfuda:16") == ("lfuda", 16)
    for bad in ["lru", "lru:0", "fifo:3", "lfuda:x"]:
        with pytest.raises(ValueError):
            parse_backing(bad)


def test_lru2_eviction_order():
    rec = Recorder()
    store = PepStore(rec, "lru:2")
    a, b, c = (1, 0), (0, 1), (2, 2)
    store.get(a)
    store.get(b)
    store.get(a)  # a is now most recent, b is the eviction candidate
    store.get(c)
    assert store.keys() == [a, c]
    assert b not in store
    store.get(b)  # recomputed, evicts a
    assert store.keys() == [c, b]
    assert rec.calls == [a, b, c, b]
    assert store.stats.evictions == 2
    assert store.stats.hits == 1 and store.stats.misses == 4


def test_lazy_computes_each_key_exactly_once_under_threads():
    rec = Recorder(delay=0.02)
    store = PepStore(rec, "lazy")
    keys = [(i % 5, 4 - i % 5) for i in range(64)]
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(store.get, keys))
    assert sorted(rec.calls) == sorted(set(keys))
    assert len(rec.calls) == 5
    assert all(r == ("R", k) for r, k in zip(results, keys))
    assert store.stats.computes == 5
    assert store.stats.hits + store.stats.misses == 64


def test_failed_compute_is_retried():
    state = {"fail": True}

    def compute(key):
        if state["fail"]:
            state["fail"] = False
            raise RuntimeError("boom")
        return key

    store = PepStore(compute, "lazy")
    with pytest.raises(RuntimeError):
        store.get((1,))
    assert store.get((1,)) == (1,)


def test_eager_needs_keys_and_never_recomputes():
    with pytest.raises(ValueError):
        PepStore(Recorder(), "eager")
    rec = Recorder()
    store = PepStore(rec, "eager", keys=[(1, 0), (0, 1)])
    assert len(rec.calls) == 2
    store.get((1, 0))
    store.get([0, 1])
    assert len(rec.calls) == 2
    assert store.stats.hits == 2


def test_lfuda_keeps_frequent_entries_and_ages():
    rec = Recorder()
    store = PepStore(rec, "lfuda:2")
    hot, cold, new = (1,), (2,), (3,)
    for _ in range(3):
        store.get(hot)
    store.get(cold)
    store.get(new)  # cold has the lowest priority
    assert set(store.keys()) == {hot, new}
    # the evicted priority (1) became the cache age, so new entries start at 2
    assert store._age == 1
    assert store._prio[new] == 2


def test_lru_capacity_one():
    rec = Recorder()
    store = PepStore(rec, "lru:1")
    for k in [(1,), (1,), (2,), (1,)]:
        store.get(k)
    assert rec.calls == [(1,), (2,), (1,)]
    assert len(store) == 1


def test_eval_to_linear():
    N = 7**3
    rng = np.random.default_rng(0)
    mats = [ModMatrix.random(4, 4, N, rng) for _ in range(4)]  # n = 2: A_0, A_1, A_2, const
    op = RuvOperator(v=(1, 1, 1), mats=mats, modulus=N)
    x, v = (5, 2, 3), (1, 0, 2)
    A, B = eval_to_linear(op, x, v)
    for y in range(4):
        u = tuple(xi + y * vi for xi, vi in zip(x, v))
        assert A.scale(y) + B == op.at(u)
