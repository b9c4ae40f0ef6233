"""Deterministic element-chunk parallelism.

Work is split into a fixed number of contiguous element chunks that does not
depend on the worker count; per-chunk partial results are reduced in chunk
order.  Results are therefore bit-identical for any number of workers, which
the output contract relies on.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

_N_CHUNKS = 32
_workers = 1


def set_num_workers(n: int) -> None:
    global _workers
    _workers = max(1, int(n))


def num_workers() -> int:
    return _workers


def chunk_slices(n_items: int, n_chunks: int | None = None) -> list[slice]:
    if n_chunks is None:
        # keep chunks >= 512 items so numpy kernels dominate the overhead;
        # the layout depends on the item count only, never the worker count
        n_chunks = min(_N_CHUNKS, max(1, n_items // 512))
    n_chunks = min(n_chunks, max(1, n_items))
    bounds = [n_items * k // n_chunks for k in range(n_chunks + 1)]
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def map_chunks(fn, n_items: int) -> list:
    """Apply fn(slice) per fixed chunk; return results in chunk order."""
    slices = chunk_slices(n_items)
    if _workers == 1 or len(slices) == 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=_workers) as pool:
        return list(pool.map(fn, slices))
