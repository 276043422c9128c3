import random

import pytest

from conftest import random_cells

from genobank.array import InvalidRange, QueryRequest, VariantArray
from genobank.engine import (
    EngineError,
    OffsetBeyondEnd,
    Page,
    QueryBatch,
    paginate,
    run_batch,
)
from genobank.model import SampleRegistry, build_contig_map


@pytest.fixture(scope="module")
def populated(tmp_path_factory):
    rng = random.Random(5)
    cmap = build_contig_map([("1", 1_000_000)])
    arr = VariantArray.create(
        tmp_path_factory.mktemp("arr") / "a", cmap, SampleRegistry(("A", "B")), 1_000
    )
    arr.write_fragment(random_cells(rng, 500, 2, 1_000_000))
    return arr


def test_identical_requests_identical_results(populated):
    q = QueryRequest(0, 500_000)
    r1, r2 = run_batch(populated, QueryBatch((q, q), worker_count=2))
    assert r1 == r2


def test_parallel_matches_serial(populated):
    rng = random.Random(9)
    requests = []
    for _ in range(8):
        lo = rng.randrange(1_000_000)
        hi = rng.randrange(lo, 1_000_000)
        requests.append(QueryRequest(lo, hi))
    serial = run_batch(populated, QueryBatch(tuple(requests), worker_count=1))
    parallel = run_batch(populated, QueryBatch(tuple(requests), worker_count=4))
    assert serial == parallel


def test_errors_stay_positional(populated):
    good = QueryRequest(0, 10)
    bad = QueryRequest(10, 5)
    results = run_batch(populated, QueryBatch((good, bad, good), worker_count=2))
    assert isinstance(results[0], list)
    assert isinstance(results[1], InvalidRange)
    assert results[0] == results[2]


def test_worker_count_validated():
    with pytest.raises(EngineError):
        QueryBatch((), worker_count=0)


class TestPaginate:
    def test_first_page(self):
        items = list(range(11))
        window, page = paginate(items, 0, 5)
        assert window == [0, 1, 2, 3, 4]
        assert page == Page(0, 5, 11)

    def test_tail_page(self):
        window, page = paginate(list(range(11)), 10, 5)
        assert window == [10] and page.total == 11

    def test_offset_beyond_end(self):
        with pytest.raises(OffsetBeyondEnd):
            paginate(list(range(11)), 12, 5)

    def test_offset_equal_total_is_empty(self):
        window, _ = paginate(list(range(11)), 11, 5)
        assert window == []

    def test_bad_limit(self):
        with pytest.raises(EngineError):
            paginate([], 0, 0)

    def test_pages_partition_results(self):
        rng = random.Random(2)
        items = [rng.random() for _ in range(103)]
        for limit in (1, 7, 50, 103, 200):
            seen = []
            offset = 0
            while offset < len(items):
                window, page = paginate(items, offset, limit)
                seen.extend(window)
                offset += limit
            assert seen == items
