"""Seed derivation and the batch runner.

Run ``i`` of a batch with master seed ``s`` uses the 64-bit seed
``splitmix64(splitmix64(s) + i)`` (arithmetic mod 2^64), so results do not depend
on how runs are scheduled.  ``TRUNCFRONT_THREADS`` caps the number of worker
processes (default 1: run in the calling process).
"""

from __future__ import annotations

import hashlib
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    return splitmix64((splitmix64(master_seed & MASK64) + index) & MASK64)


def derive_seeds(master_seed: int, n_runs: int) -> list[int]:
    return [derive_seed(master_seed, i) for i in range(n_runs)]


def thread_cap(default: int = 1) -> int:
    raw = os.environ.get("TRUNCFRONT_THREADS", "")
    try:
        return max(1, int(raw)) if raw else default
    except ValueError:
        raise ValueError(f"TRUNCFRONT_THREADS must be an integer, got {raw!r}") from None


def run_batch(fn: Callable, items: Sequence, threads: int | None = None) -> list:
    """``[fn(item) for item in items]``, possibly in worker processes, in input order.

    Exceptions are returned in place of results so one failed run does not
    hide the others.
    """
    threads = thread_cap() if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [_guarded(fn, it) for it in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(_guarded, [fn] * len(items), items))


def _guarded(fn, item):
    try:
        return fn(item)
    except Exception as exc:  # reported per run by the caller
        return exc


def code_digest(root: Path | None = None) -> str:
    """SHA-256 over the package sources (sorted by relative path)."""
    root = root or Path(__file__).resolve().parent
    h = hashlib.sha256()
    for p in sorted(root.rglob("*.py")):
        h.update(str(p.relative_to(root)).encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


def file_digests(paths: Iterable[Path]) -> dict[str, str]:
    return {Path(p).name: hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in paths}
