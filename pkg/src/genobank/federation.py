"""Site-local aggregate summaries and their consolidation.

Sites never ship raw genotypes: a summary carries only per-variant counts
(allele count/number and genotype tallies). The consolidated store keeps
per-site provenance and answers region queries over the totals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .array import VariantArray
from .model import ContigMap

WIRE_RECORD_KEYS = {
    "start", "ref", "alt", "ac", "an", "hom_ref", "het", "hom_alt", "samples",
}


class FederationError(Exception):
    pass


class InvalidSummary(FederationError):
    pass


class InvalidRange(FederationError):
    pass


@dataclass(frozen=True, order=True)
class VariantKey:
    start: int
    ref: str
    alt: str

    def __post_init__(self):
        if not self.ref or not self.alt or self.ref == self.alt:
            raise FederationError(f"bad variant key {self.start}:{self.ref}>{self.alt}")


@dataclass(frozen=True)
class KeyStats:
    ac: int = 0
    an: int = 0
    hom_ref: int = 0
    het: int = 0
    hom_alt: int = 0
    samples: int = 0

    def __add__(self, other: "KeyStats") -> "KeyStats":
        return KeyStats(
            ac=self.ac + other.ac,
            an=self.an + other.an,
            hom_ref=self.hom_ref + other.hom_ref,
            het=self.het + other.het,
            hom_alt=self.hom_alt + other.hom_alt,
            samples=self.samples + other.samples,
        )


@dataclass
class SiteSummary:
    site_id: str
    records: dict[VariantKey, KeyStats] = field(default_factory=dict)

    def to_wire(self) -> dict:
        return {
            "site_id": self.site_id,
            "records": [
                {
                    "start": k.start, "ref": k.ref, "alt": k.alt,
                    "ac": s.ac, "an": s.an, "hom_ref": s.hom_ref, "het": s.het,
                    "hom_alt": s.hom_alt, "samples": s.samples,
                }
                for k, s in sorted(self.records.items())
            ],
        }

    @classmethod
    def from_wire(cls, doc: dict) -> "SiteSummary":
        records = {}
        for r in doc["records"]:
            extra = set(r) - WIRE_RECORD_KEYS
            if extra:
                raise InvalidSummary(f"unexpected record keys {sorted(extra)}")
            records[VariantKey(r["start"], r["ref"], r["alt"])] = KeyStats(
                ac=r["ac"], an=r["an"], hom_ref=r["hom_ref"], het=r["het"],
                hom_alt=r["hom_alt"], samples=r["samples"],
            )
        return cls(site_id=doc["site_id"], records=records)


def summarize(array: VariantArray, site_id: str) -> SiteSummary:
    """Aggregate an array's cells into per-(start, ref, alt) counts.

    Multi-allelic cells contribute one key per alt; the sample's diploid
    genotype is classified against each alt separately. Cells without a
    genotype carry no call and are excluded entirely.
    """
    records: dict[VariantKey, KeyStats] = {}
    for cell in array.iter_cells():
        if cell.gt is None:
            continue
        for alt_index, alt in enumerate(cell.alt, start=1):
            key = VariantKey(cell.interval.start, cell.ref, alt)
            copies = cell.gt.alt_copies(alt_index)
            records[key] = records.get(key, KeyStats()) + KeyStats(
                ac=copies,
                an=2,
                hom_ref=1 if copies == 0 else 0,
                het=1 if copies == 1 else 0,
                hom_alt=1 if copies == 2 else 0,
                samples=1,
            )
    return SiteSummary(site_id=site_id, records=records)


def validate_summary(summary: SiteSummary, min_samples: int = 1) -> list[str]:
    """Check aggregate arithmetic and the k-anonymity floor. Returns a list
    of violation messages; empty means ok."""
    violations = []
    for key, s in sorted(summary.records.items()):
        label = f"{key.start}:{key.ref}>{key.alt}"
        if min(s.ac, s.an, s.hom_ref, s.het, s.hom_alt, s.samples) < 0:
            violations.append(f"{label}: negative count")
            continue
        if s.ac > s.an:
            violations.append(f"{label}: ac exceeds an")
        if s.an != 2 * (s.hom_ref + s.het + s.hom_alt):
            violations.append(f"{label}: an does not equal 2x genotype tallies")
        if s.ac != s.het + 2 * s.hom_alt:
            violations.append(f"{label}: ac inconsistent with het/hom_alt")
        if s.samples != s.hom_ref + s.het + s.hom_alt:
            violations.append(f"{label}: samples does not equal tally sum")
        if s.samples < min_samples:
            violations.append(f"{label}: samples {s.samples} below floor {min_samples}")
    return violations


@dataclass(frozen=True)
class KeyTotals:
    ac: int
    an: int

    @property
    def af(self) -> float:
        return self.ac / self.an if self.an else 0.0


@dataclass
class ConsolidatedKnowledge:
    """Per-key, per-site summaries plus derived totals. A site appears at
    most once per key; resubmission replaces its prior contribution."""

    by_key: dict[VariantKey, dict[str, KeyStats]] = field(default_factory=dict)

    def submit(self, summary: SiteSummary):
        violations = validate_summary(summary, min_samples=0)
        if violations:
            raise InvalidSummary("; ".join(violations))
        for key, stats in summary.records.items():
            self.by_key.setdefault(key, {})[summary.site_id] = stats

    def totals(self, key: VariantKey) -> KeyTotals:
        sites = self.by_key[key]
        return KeyTotals(
            ac=sum(s.ac for s in sites.values()),
            an=sum(s.an for s in sites.values()),
        )

    def to_json(self) -> dict:
        return {
            "keys": [
                {
                    "start": k.start, "ref": k.ref, "alt": k.alt,
                    "sites": {
                        site: {
                            "ac": s.ac, "an": s.an, "hom_ref": s.hom_ref,
                            "het": s.het, "hom_alt": s.hom_alt, "samples": s.samples,
                        }
                        for site, s in sorted(per_site.items())
                    },
                }
                for k, per_site in sorted(self.by_key.items())
            ]
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ConsolidatedKnowledge":
        k = cls()
        for entry in doc["keys"]:
            key = VariantKey(entry["start"], entry["ref"], entry["alt"])
            k.by_key[key] = {
                site: KeyStats(**stats) for site, stats in entry["sites"].items()
            }
        return k

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1)

    @classmethod
    def load(cls, path) -> "ConsolidatedKnowledge":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def merge_summaries(summaries: list[SiteSummary]) -> ConsolidatedKnowledge:
    knowledge = ConsolidatedKnowledge()
    for summary in summaries:
        knowledge.submit(summary)
    return knowledge


@dataclass(frozen=True)
class KnowledgeRecord:
    key: VariantKey
    totals: KeyTotals
    site_count: int


def knowledge_query(
    knowledge: ConsolidatedKnowledge, contig_map: ContigMap, lo: int, hi: int
) -> list[KnowledgeRecord]:
    """All keys whose start column lies in [lo, hi], sorted by start."""
    if lo < 0 or lo > hi or hi >= contig_map.total_columns:
        raise InvalidRange(f"range [{lo}, {hi}] invalid")
    out = []
    for key in sorted(knowledge.by_key):
        if lo <= key.start <= hi:
            out.append(
                KnowledgeRecord(
                    key=key,
                    totals=knowledge.totals(key),
                    site_count=len(knowledge.by_key[key]),
                )
            )
    return out
