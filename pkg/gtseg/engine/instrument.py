"""
Multiply-accumulate instrumentation for the matmul primitive.

Counting is opt-in: ``count_macs()`` installs a counter for the current thread,
and ``mac_section(tag)`` routes every forward matmul issued inside it to a
named bucket. Backward products are never counted.
"""
from __future__ import annotations

import threading
from collections import defaultdict
from contextlib import contextmanager
from typing import Dict, Iterator, Optional

UNTAGGED = "untagged"

_active = threading.local()


class MacCounter:
    def __init__(self) -> None:
        self.counts: Dict[str, int] = defaultdict(int)
        self._tag = UNTAGGED

    def add(self, macs: int) -> None:
        self.counts[self._tag] += int(macs)

    @contextmanager
    def section(self, tag: str) -> Iterator[None]:
        previous = self._tag
        self._tag = tag
        try:
            yield
        finally:
            self._tag = previous

    @property
    def total(self) -> int:
        return int(sum(self.counts.values()))

    def get(self, tag: str) -> int:
        return int(self.counts.get(tag, 0))


def active_counter() -> Optional[MacCounter]:
    return getattr(_active, "counter", None)


@contextmanager
def count_macs() -> Iterator[MacCounter]:
    counter = MacCounter()
    previous = active_counter()
    _active.counter = counter
    try:
        yield counter
    finally:
        _active.counter = previous


@contextmanager
def mac_section(tag: str) -> Iterator[None]:
    counter = active_counter()
    if counter is None:
        yield
        return
    with counter.section(tag):
        yield


def record_macs(macs: int) -> None:
    counter = active_counter()
    if counter is not None:
        counter.add(macs)
