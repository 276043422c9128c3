import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from genobank.model import (
    Genotype,
    GlobalInterval,
    SampleRegistry,
    VariantCall,
    build_contig_map,
    genotype_count,
)

# The 11 rows shown by the query console for sample S0 on contig 1:
# (pos, ref, alt, pl, ad, dp), all genotypes 0/1. Positions are 1-based.
CONSOLE_ROWS = [
    (100000222, "C", "T", [641, 0, 480], [19, 23], 43),
    (100005774, "G", "A", [446, 0, 496], [19, 17], 36),
    (100005167, "T", "G", [100, 0, 141], [5, 4], 9),
    (100000722, "G", "A", [225, 0, 303], [12, 9], 21),
    (100000873, "G", "GT", [204, 0, 194], [10, 9], 22),
    (100001395, "G", "C", [244, 0, 287], [12, 10], 22),
    (100002781, "A", "AT", [124, 0, 40], [3, 6], 13),
    (100003003, "A", "G", [226, 0, 173], [7, 9], 16),
    (100003059, "C", "T", [247, 0, 138], [6, 9], 15),
    (100003415, "C", "CAA", [58, 0, 75], [2, 2], 7),
    (100003455, "G", "A", [41, 0, 391], [12, 2], 15),
]


@pytest.fixture
def two_contig_map():
    return build_contig_map([("1", 249_000_000), ("2", 243_000_000)])


@pytest.fixture
def one_sample_registry():
    return SampleRegistry(("S0",))


def console_cells(as_columns: bool = True) -> list[VariantCall]:
    """The console rows as cells. With as_columns=True the listed positions
    are used directly as 0-based global columns (contig 1 starts at offset
    0); otherwise they are treated as 1-based and shifted by one."""
    shift = 0 if as_columns else 1
    cells = []
    for pos, ref, alt, pl, ad, dp in CONSOLE_ROWS:
        start = pos - shift
        cells.append(
            VariantCall(
                row=0,
                interval=GlobalInterval(start, start + len(ref) - 1),
                ref=ref,
                alt=(alt,),
                gt=Genotype(0, 1),
                pl=tuple(pl),
                ad=tuple(ad),
                dp=dp,
            )
        )
    return cells


def console_vcf_text(sample: str = "S0") -> str:
    lines = [
        "##fileformat=VCFv4.2",
        "\t".join(["#CHROM", "POS", "ID", "REF", "ALT", "QUAL", "FILTER", "INFO",
                   "FORMAT", sample]),
    ]
    for pos, ref, alt, pl, ad, dp in sorted(CONSOLE_ROWS):
        pl_s = ",".join(map(str, pl))
        ad_s = ",".join(map(str, ad))
        lines.append(
            f"1\t{pos}\t.\t{ref}\t{alt}\t.\t.\t.\tGT:PL:AD:DP\t0/1:{pl_s}:{ad_s}:{dp}"
        )
    return "\n".join(lines) + "\n"


def random_cells(rng: random.Random, n: int, n_rows: int, n_cols: int,
                 unique_keys: bool = True) -> list[VariantCall]:
    alphabet = "ACGT"
    cells = []
    used = set()
    while len(cells) < n:
        row = rng.randrange(n_rows)
        ref_len = rng.choice([1, 1, 1, 2, 5])
        start = rng.randrange(n_cols - ref_len)
        if unique_keys:
            if (row, start) in used:
                continue
            used.add((row, start))
        ref = "".join(rng.choice(alphabet) for _ in range(ref_len))
        n_alt = rng.choice([1, 1, 1, 2])
        alts = []
        while len(alts) < n_alt:
            alt = "".join(rng.choice(alphabet) for _ in range(rng.choice([1, 1, 2])))
            if alt != ref and alt not in alts:
                alts.append(alt)
        gt = Genotype(rng.randint(0, n_alt), rng.randint(0, n_alt),
                      phased=rng.random() < 0.2)
        has_pl = rng.random() < 0.8
        has_ad = rng.random() < 0.8
        has_dp = rng.random() < 0.8
        cells.append(
            VariantCall(
                row=row,
                interval=GlobalInterval(start, start + ref_len - 1),
                ref=ref,
                alt=tuple(alts),
                gt=gt,
                pl=tuple(rng.randrange(1000) for _ in range(genotype_count(n_alt)))
                if has_pl else None,
                ad=tuple(rng.randrange(60) for _ in range(1 + n_alt)) if has_ad else None,
                dp=rng.randrange(100) if has_dp else None,
            )
        )
    return cells


def brute_force_query(batches, lo, hi, rows=None):
    """Linear-scan oracle with the same overlap and last-wins rules as the
    array: batches apply in write order, later batches win per (row, start)."""
    chosen = {}
    for batch in batches:
        for cell in batch:
            chosen[(cell.row, cell.interval.start)] = cell
    out = [
        c for c in chosen.values()
        if c.interval.overlaps(lo, hi) and (rows is None or c.row in rows)
    ]
    return sorted(out, key=lambda c: (c.interval.start, c.row))


FEATURE_FILE = Path(__file__).parent / "data" / "ali.feature"
