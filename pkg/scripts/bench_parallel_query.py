#!/usr/bin/env python3
"""Measure batch query wall time against worker count.

Builds a throwaway array of random cells, runs the same 64-query batch with
1..N workers, and prints one line per configuration with the speedup over
the serial run.
"""

import argparse
import random
import tempfile
import time
from pathlib import Path

from genobank.array import QueryRequest, VariantArray
from genobank.engine import QueryBatch, run_batch
from genobank.model import Genotype, GlobalInterval, SampleRegistry, VariantCall
from genobank.model import build_contig_map


def make_cells(rng, n, n_rows, domain):
    cells = []
    for _ in range(n):
        start = rng.randrange(domain - 1)
        cells.append(VariantCall(
            row=rng.randrange(n_rows),
            interval=GlobalInterval(start, start),
            ref=(ref := rng.choice("ACGT")),
            alt=(rng.choice([b for b in "ACGT" if b != ref]),),
            gt=Genotype(rng.randint(0, 1), rng.randint(0, 1)),
        ))
    return cells


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cells", type=int, default=50_000)
    ap.add_argument("--queries", type=int, default=64)
    ap.add_argument("--samples", type=int, default=8)
    ap.add_argument("--domain", type=int, default=1_000_000)
    ap.add_argument("--max-workers", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    with tempfile.TemporaryDirectory() as tmp:
        cmap = build_contig_map([("1", args.domain)])
        arr = VariantArray.create(
            Path(tmp) / "bench", cmap,
            SampleRegistry(tuple(f"s{i}" for i in range(args.samples))),
            args.domain // 20,
        )
        arr.write_fragment(make_cells(rng, args.cells, args.samples, args.domain))

        requests = []
        for _ in range(args.queries):
            lo = rng.randrange(args.domain // 4)
            requests.append(QueryRequest(lo, rng.randint(args.domain // 2,
                                                         args.domain - 1)))
        batch = tuple(requests)

        baseline = None
        workers = 1
        while workers <= args.max_workers:
            t0 = time.monotonic()
            results = run_batch(arr, QueryBatch(batch, worker_count=workers))
            elapsed = time.monotonic() - t0
            if baseline is None:
                baseline = elapsed
            total = sum(len(r) for r in results)
            print(f"workers={workers:2d}  wall={elapsed:7.3f}s  "
                  f"speedup={baseline / elapsed:5.2f}x  cells_returned={total}")
            workers *= 2


if __name__ == "__main__":
    main()
