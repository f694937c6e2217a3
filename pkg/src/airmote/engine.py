"""Deterministic discrete-event engine.

Events execute in (time, sequence) order; the sequence counter breaks ties
FIFO by insertion so identical (scenario, seed) pairs replay byte-identically.
Randomness is split into named per-node streams derived from the master seed,
so adding or removing one node never perturbs another node's draws.
"""
from __future__ import annotations

import hashlib
import heapq
import json
import random
from typing import Callable


class SchedulingError(Exception):
    """Raised when an event is scheduled in the past."""


def derive_stream(seed: int, name) -> random.Random:
    """Derive an independent RNG from (seed, name) via SHA-256.

    The derivation is documented and stable: the stream for a given name
    depends only on the master seed and the name itself.
    """
    digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "little"))


class Engine:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self.now = 0
        self._heap: list = []
        self._seq = 0
        self._streams: dict = {}

    def stream(self, name) -> random.Random:
        if name not in self._streams:
            self._streams[name] = derive_stream(self.seed, name)
        return self._streams[name]

    def schedule(self, time: int, fn: Callable[[], None]) -> None:
        if time < self.now:
            raise SchedulingError(f"cannot schedule at t={time} (now={self.now})")
        heapq.heappush(self._heap, (time, self._seq, fn))
        self._seq += 1

    def schedule_in(self, dt: int, fn: Callable[[], None]) -> None:
        self.schedule(self.now + dt, fn)

    def run_until(self, t: int) -> None:
        """Execute all events with time <= t, then advance the clock to t."""
        if t < self.now:
            raise SchedulingError(f"cannot run backwards to t={t} (now={self.now})")
        heap = self._heap
        while heap and heap[0][0] <= t:
            time, _seq, fn = heapq.heappop(heap)
            self.now = time
            fn()
        self.now = t

    def pending(self) -> int:
        return len(self._heap)


#: trace kinds suppressed at the "light" level (high-volume records)
LIGHT_SUPPRESSED = {"deliver"}


class TraceLog:
    """Ordered record of notable simulation events.

    Exports as line-delimited JSON with fixed field order
    {t, seq, kind, node, detail} for byte-stable golden files.
    """

    def __init__(self, level: str = "full"):
        self.level = level
        self.records: list[dict] = []
        self._seq = 0

    def add(self, t: int, kind: str, node, detail: dict | None = None) -> None:
        if self.level == "light" and kind in LIGHT_SUPPRESSED:
            return
        self.records.append({
            "t": t,
            "seq": self._seq,
            "kind": kind,
            "node": node,
            "detail": detail or {},
        })
        self._seq += 1

    def jsonl_lines(self):
        for rec in self.records:
            yield json.dumps(rec, separators=(",", ":"))

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for line in self.jsonl_lines():
                fh.write(line + "\n")
