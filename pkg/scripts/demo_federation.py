#!/usr/bin/env python3
"""End-to-end federation walkthrough on synthetic cohorts.

Simulates N hospital sites, each holding a private cohort of genotypes.
Each site publishes only aggregate counts; the script consolidates them and
shows that the merged allele frequencies equal a pooled analysis of all
cohorts, without any sample identifiers crossing the wire.
"""

import argparse
import json
import random
import tempfile
from pathlib import Path

from genobank.array import VariantArray
from genobank.federation import merge_summaries, summarize
from genobank.model import (
    Genotype,
    GlobalInterval,
    SampleRegistry,
    VariantCall,
    build_contig_map,
)

DOMAIN = 100_000


def cohort_cells(rng, n_samples, hotspots):
    cells = []
    for row in range(n_samples):
        for start, ref, alt, freq in hotspots:
            copies = sum(rng.random() < freq for _ in range(2))
            if copies == 0 and rng.random() < 0.7:
                continue  # sparse: most hom-ref cells never materialize
            gt = {0: Genotype(0, 0), 1: Genotype(0, 1), 2: Genotype(1, 1)}[copies]
            cells.append(VariantCall(
                row=row, interval=GlobalInterval(start, start),
                ref=ref, alt=(alt,), gt=gt,
            ))
    return cells


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sites", type=int, default=3)
    ap.add_argument("--samples-per-site", type=int, default=40)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    cmap = build_contig_map([("1", DOMAIN)])
    hotspots = [
        (1_000, "C", "T", 0.30),
        (2_500, "G", "A", 0.05),
        (40_000, "T", "G", 0.50),
    ]

    with tempfile.TemporaryDirectory() as tmp:
        summaries = []
        pooled_cells = []
        pooled_row = 0
        for site in range(args.sites):
            cells = cohort_cells(rng, args.samples_per_site, hotspots)
            arr = VariantArray.create(
                Path(tmp) / f"site{site}", cmap,
                SampleRegistry(tuple(f"p{i}" for i in range(args.samples_per_site))),
                10_000,
            )
            arr.write_fragment(cells)
            summary = summarize(arr, f"hospital-{site}")
            summaries.append(summary)
            wire = summary.to_wire()
            print(f"hospital-{site}: {len(wire['records'])} keys, "
                  f"payload {len(json.dumps(wire))} bytes, "
                  f"fields {sorted(wire['records'][0])}")
            for c in cells:
                pooled_cells.append(VariantCall(
                    row=pooled_row + c.row, interval=c.interval,
                    ref=c.ref, alt=c.alt, gt=c.gt,
                ))
            pooled_row += args.samples_per_site

        merged = merge_summaries(summaries)
        pooled = VariantArray.create(
            Path(tmp) / "pooled", cmap,
            SampleRegistry(tuple(f"p{i}" for i in range(pooled_row))), 10_000,
        )
        pooled.write_fragment(pooled_cells)
        reference = summarize(pooled, "pooled")

        print(f"\n{'key':>14}  {'merged af':>9}  {'pooled af':>9}  match")
        for key in sorted(merged.by_key, key=lambda k: k.start):
            m = merged.totals(key)
            p = reference.records[key]
            match = (m.ac, m.an) == (p.ac, p.an)
            print(f"{key.start:>8}:{key.ref}>{key.alt}  {m.af:9.4f}  "
                  f"{p.ac / p.an:9.4f}  {'yes' if match else 'NO'}")


if __name__ == "__main__":
    main()
