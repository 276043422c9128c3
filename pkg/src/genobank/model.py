"""Contig/position arithmetic, sample registry, and the variant-cell model.

Internal coordinates are 0-based half-open; 1-based genomic coordinates are
converted at the boundaries (VCF ingest, HTTP API, CLI region syntax).
"""

from __future__ import annotations

import json
from bisect import bisect_right
from dataclasses import dataclass, field

ALLELE_ALPHABET = frozenset("ACGTN")


class ModelError(ValueError):
    pass


class DuplicateContig(ModelError):
    pass


class NonPositiveLength(ModelError):
    pass


class UnknownContig(ModelError):
    pass


class PositionOutOfRange(ModelError):
    pass


class UnknownSample(ModelError):
    pass


class InvalidCell(ModelError):
    pass


@dataclass(frozen=True)
class ContigEntry:
    name: str
    length: int
    offset: int


@dataclass(frozen=True)
class ContigMap:
    """Flattens named contigs onto a single global column axis.

    Offsets are prefix sums of contig lengths in declaration order, so each
    genomic position maps to exactly one global column.
    """

    entries: tuple[ContigEntry, ...]
    total_columns: int
    _by_name: dict[str, ContigEntry] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_by_name", {e.name: e for e in self.entries})

    def offset(self, contig: str) -> int:
        return self._entry(contig).offset

    def length(self, contig: str) -> int:
        return self._entry(contig).length

    def _entry(self, contig: str) -> ContigEntry:
        try:
            return self._by_name[contig]
        except KeyError:
            raise UnknownContig(f"unknown contig {contig!r}") from None

    def to_global(self, contig: str, pos: int) -> int:
        entry = self._entry(contig)
        if not 0 <= pos < entry.length:
            raise PositionOutOfRange(
                f"position {pos} outside contig {contig!r} of length {entry.length}"
            )
        return entry.offset + pos

    def from_global(self, g: int) -> tuple[str, int]:
        if not 0 <= g < self.total_columns:
            raise PositionOutOfRange(f"global column {g} outside [0, {self.total_columns})")
        offsets = [e.offset for e in self.entries]
        i = bisect_right(offsets, g) - 1
        entry = self.entries[i]
        return entry.name, g - entry.offset

    def to_json(self) -> dict:
        return {"contigs": [{"name": e.name, "length": e.length} for e in self.entries]}

    @classmethod
    def from_json(cls, doc: dict) -> "ContigMap":
        return build_contig_map([(c["name"], c["length"]) for c in doc["contigs"]])

    @classmethod
    def load(cls, path) -> "ContigMap":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def build_contig_map(entries: list[tuple[str, int]]) -> ContigMap:
    if not entries:
        raise ModelError("contig map needs at least one contig")
    seen = set()
    built = []
    offset = 0
    for name, length in entries:
        if not name:
            raise ModelError("contig name must be non-empty")
        if name in seen:
            raise DuplicateContig(f"duplicate contig {name!r}")
        if length <= 0:
            raise NonPositiveLength(f"contig {name!r} has non-positive length {length}")
        seen.add(name)
        built.append(ContigEntry(name, length, offset))
        offset += length
    return ContigMap(tuple(built), offset)


@dataclass(frozen=True)
class SampleRegistry:
    """Bijective sample name <-> dense 0-based row index mapping."""

    names: tuple[str, ...]
    _index: dict[str, int] = field(repr=False, compare=False, default_factory=dict)

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise ModelError("sample names must be unique")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    def __len__(self) -> int:
        return len(self.names)

    def row_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise UnknownSample(f"unknown sample {name!r}") from None

    def name_of(self, row: int) -> str:
        if not 0 <= row < len(self.names):
            raise UnknownSample(f"row {row} outside registry of {len(self.names)} samples")
        return self.names[row]

    def __contains__(self, name: str) -> bool:
        return name in self._index


@dataclass(frozen=True, order=True)
class GlobalInterval:
    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise InvalidCell(f"bad interval [{self.start}, {self.end}]")

    def overlaps(self, lo: int, hi: int) -> bool:
        return self.start <= hi and self.end >= lo

    @property
    def span(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class Genotype:
    """Diploid genotype: ordered pair of allele indices, 0 = reference."""

    a: int
    b: int
    phased: bool = False

    def __str__(self) -> str:
        sep = "|" if self.phased else "/"
        return f"{self.a}{sep}{self.b}"

    def alt_copies(self, alt_index: int) -> int:
        return (self.a == alt_index) + (self.b == alt_index)


def genotype_count(alt_count: int) -> int:
    """Number of unordered diploid genotypes over alt_count + 1 alleles."""
    if alt_count < 0:
        raise ModelError("alt_count must be >= 0")
    a = alt_count
    return (a + 1) * (a + 2) // 2


@dataclass(frozen=True)
class VariantCall:
    """One sparse cell: a sample's genotype over a genomic interval.

    pl/ad/dp are optional; absent FORMAT fields stay absent rather than
    defaulting to zero so aggregates are not corrupted.
    """

    row: int
    interval: GlobalInterval
    ref: str
    alt: tuple[str, ...]
    gt: Genotype | None
    pl: tuple[int, ...] | None = None
    ad: tuple[int, ...] | None = None
    dp: int | None = None

    def __post_init__(self):
        if self.row < 0:
            raise InvalidCell(f"negative row {self.row}")
        if not self.ref:
            raise InvalidCell("ref must be non-empty")
        if set(self.ref) - ALLELE_ALPHABET:
            raise InvalidCell(f"ref {self.ref!r} has characters outside ACGTN")
        if not self.alt:
            raise InvalidCell("alt list must be non-empty")
        for a in self.alt:
            if not a:
                raise InvalidCell("alt allele must be non-empty")
            if a == self.ref:
                raise InvalidCell(f"alt allele {a!r} equals ref")
            if set(a) - ALLELE_ALPHABET:
                raise InvalidCell(f"alt {a!r} has characters outside ACGTN")
        if self.gt is not None:
            for idx in (self.gt.a, self.gt.b):
                if not 0 <= idx <= len(self.alt):
                    raise InvalidCell(f"gt allele index {idx} outside [0, {len(self.alt)}]")
        if self.ad is not None:
            if len(self.ad) != 1 + len(self.alt):
                raise InvalidCell(
                    f"ad has {len(self.ad)} entries, expected {1 + len(self.alt)}"
                )
            if any(d < 0 for d in self.ad):
                raise InvalidCell("ad entries must be >= 0")
        if self.pl is not None and len(self.pl) != genotype_count(len(self.alt)):
            raise InvalidCell(
                f"pl has {len(self.pl)} entries, expected {genotype_count(len(self.alt))}"
            )
        if self.dp is not None and self.dp < 0:
            raise InvalidCell(f"dp must be >= 0, got {self.dp}")

    def to_json(self) -> dict:
        doc = {
            "row": self.row,
            "start": self.interval.start,
            "end": self.interval.end,
            "ref": self.ref,
            "alt": list(self.alt),
        }
        if self.gt is not None:
            doc["gt"] = [self.gt.a, self.gt.b, self.gt.phased]
        if self.pl is not None:
            doc["pl"] = list(self.pl)
        if self.ad is not None:
            doc["ad"] = list(self.ad)
        if self.dp is not None:
            doc["dp"] = self.dp
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "VariantCall":
        gt = doc.get("gt")
        return cls(
            row=doc["row"],
            interval=GlobalInterval(doc["start"], doc["end"]),
            ref=doc["ref"],
            alt=tuple(doc["alt"]),
            gt=Genotype(gt[0], gt[1], bool(gt[2])) if gt is not None else None,
            pl=tuple(doc["pl"]) if "pl" in doc else None,
            ad=tuple(doc["ad"]) if "ad" in doc else None,
            dp=doc.get("dp"),
        )
