"""Thread-count plumbing.  Results never depend on the thread count: work items
carry their own derived seeds and outputs are collected in input order."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_threads: int | None = None


def set_threads(n: int | None) -> None:
    global _threads
    _threads = None if n is None else max(1, int(n))


def get_threads() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get("DMCORE_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def pmap(fn, items) -> list:
    items = list(items)
    t = min(get_threads(), len(items))
    if t <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=t) as ex:
        return list(ex.map(fn, items))
