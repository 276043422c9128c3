"""Batch/parallel query execution and pagination over a variant array.

Parallelism is across queries, not within one query. Workers are separate
processes (each reopens the array, which is cheap); a batch with one worker
degenerates to a plain serial loop, which also serves as the oracle for the
parallel path.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .array import ArrayError, QueryRequest, VariantArray
from .model import VariantCall


class EngineError(Exception):
    pass


class OffsetBeyondEnd(EngineError):
    pass


@dataclass(frozen=True)
class QueryBatch:
    requests: tuple[QueryRequest, ...]
    worker_count: int = 1

    def __post_init__(self):
        if self.worker_count < 1:
            raise EngineError(f"worker_count must be >= 1, got {self.worker_count}")


@dataclass(frozen=True)
class Page:
    offset: int
    limit: int
    total: int


_worker_array: VariantArray | None = None


def _init_worker(root: str):
    global _worker_array
    _worker_array = VariantArray.open(root, verify=False)


def _run_one(q: QueryRequest) -> list[VariantCall] | ArrayError:
    try:
        return _worker_array.query_range(q)
    except ArrayError as e:
        return e


def run_batch(array: VariantArray, batch: QueryBatch) -> list[list[VariantCall] | ArrayError]:
    """Run every request; result i matches query_range(request i) run serially.
    Per-request errors land in their slot without aborting the batch."""
    if batch.worker_count == 1 or len(batch.requests) <= 1:
        out = []
        for q in batch.requests:
            try:
                out.append(array.query_range(q))
            except ArrayError as e:
                out.append(e)
        return out
    with ProcessPoolExecutor(
        max_workers=batch.worker_count,
        initializer=_init_worker,
        initargs=(str(array.root),),
    ) as pool:
        return list(pool.map(_run_one, batch.requests))


def paginate(results: list, offset: int, limit: int) -> tuple[list, Page]:
    if limit < 1:
        raise EngineError(f"limit must be >= 1, got {limit}")
    if offset < 0 or offset > len(results):
        raise OffsetBeyondEnd(f"offset {offset} beyond {len(results)} results")
    return results[offset : offset + limit], Page(offset, limit, len(results))
