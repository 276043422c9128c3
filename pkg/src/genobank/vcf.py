"""Pragmatic VCF (v4.x column layout) parsing and conversion to variant cells.

Only the column layout and the GT/PL/AD/DP FORMAT fields are interpreted;
INFO, QUAL and FILTER are parsed and discarded. Input positions are 1-based
per the VCF convention and converted to 0-based global columns here.
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

from .model import (
    ContigMap,
    Genotype,
    GlobalInterval,
    SampleRegistry,
    VariantCall,
)

FIXED_COLUMNS = ["#CHROM", "POS", "ID", "REF", "ALT", "QUAL", "FILTER", "INFO"]
MISSING = "."


class VcfError(ValueError):
    pass


class MissingHeader(VcfError):
    pass


class BadColumnCount(VcfError):
    def __init__(self, line_no: int, got: int, expected: int):
        super().__init__(f"line {line_no}: {got} columns, expected {expected}")
        self.line_no = line_no


class BadFieldSyntax(VcfError):
    def __init__(self, line_no: int, fieldname: str, detail: str):
        super().__init__(f"line {line_no}: bad {fieldname}: {detail}")
        self.line_no = line_no
        self.fieldname = fieldname


class PloidyUnsupported(VcfError):
    pass


@dataclass
class VcfRecord:
    contig: str
    pos: int  # 1-based
    id: str | None
    ref: str
    alt: list[str]
    qual: float | None
    filter: str | None
    format_keys: list[str]
    calls: dict[str, dict]  # sample name -> parsed FORMAT fields
    line_no: int = 0


def open_vcf(path) -> TextIO:
    """Open a VCF file; gzip is detected from a .gz suffix."""
    if str(path).endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def _parse_gt(token: str, line_no: int) -> Genotype | None:
    if token in (MISSING, "./.", ".|."):
        return None
    phased = "|" in token
    parts = token.replace("|", "/").split("/")
    if len(parts) != 2:
        raise PloidyUnsupported(
            f"line {line_no}: GT {token!r} has ploidy {len(parts)}, only diploid supported"
        )
    if MISSING in parts:
        return None
    try:
        a, b = int(parts[0]), int(parts[1])
    except ValueError:
        raise BadFieldSyntax(line_no, "GT", token) from None
    return Genotype(a, b, phased)


def _parse_int_list(token: str, key: str, line_no: int) -> tuple[int, ...] | None:
    if token == MISSING:
        return None
    try:
        return tuple(int(x) for x in token.split(","))
    except ValueError:
        raise BadFieldSyntax(line_no, key, token) from None


def _parse_sample(sample: str, text: str, format_keys: list[str], line_no: int) -> dict:
    values = text.split(":")
    if len(values) > len(format_keys):
        raise BadFieldSyntax(line_no, sample, "more values than FORMAT keys")
    call: dict = {}
    for key, token in zip(format_keys, values):
        if key == "GT":
            call["GT"] = _parse_gt(token, line_no)
        elif key in ("PL", "AD"):
            call[key] = _parse_int_list(token, key, line_no)
        elif key == "DP":
            if token == MISSING:
                call["DP"] = None
            else:
                try:
                    call["DP"] = int(token)
                except ValueError:
                    raise BadFieldSyntax(line_no, "DP", token) from None
        else:
            call[key] = token
    return call


def parse_vcf(stream: Iterable[str]) -> tuple[list[str], Iterator[VcfRecord]]:
    """Read header lines up to #CHROM, then return the sample names and a
    lazy record iterator over the data lines."""
    lines = iter(enumerate(stream, start=1))
    samples: list[str] | None = None
    for line_no, raw in lines:
        line = raw.rstrip("\n")
        if not line:
            continue
        if line.startswith("##"):
            continue
        if line.startswith("#CHROM"):
            cols = line.split("\t")
            if cols[: len(FIXED_COLUMNS)] != FIXED_COLUMNS or len(cols) < len(FIXED_COLUMNS) + 2:
                raise MissingHeader(f"line {line_no}: malformed #CHROM line")
            if cols[len(FIXED_COLUMNS)] != "FORMAT":
                raise MissingHeader(f"line {line_no}: FORMAT column missing")
            samples = cols[len(FIXED_COLUMNS) + 1 :]
            break
        raise MissingHeader(f"line {line_no}: expected ## or #CHROM header line")
    if samples is None:
        raise MissingHeader("no #CHROM line found")

    expected_cols = len(FIXED_COLUMNS) + 1 + len(samples)

    def records() -> Iterator[VcfRecord]:
        for line_no, raw in lines:
            line = raw.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            if len(cols) != expected_cols:
                raise BadColumnCount(line_no, len(cols), expected_cols)
            chrom, pos_s, rid, ref, alt_s, qual_s, filt, _info, fmt = cols[:9]
            try:
                pos = int(pos_s)
            except ValueError:
                raise BadFieldSyntax(line_no, "POS", pos_s) from None
            if pos < 1:
                raise BadFieldSyntax(line_no, "POS", f"{pos} < 1")
            alt = [] if alt_s == MISSING else alt_s.split(",")
            format_keys = fmt.split(":")
            if "GT" in format_keys and format_keys[0] != "GT":
                raise BadFieldSyntax(line_no, "FORMAT", "GT must be listed first")
            calls = {
                name: _parse_sample(name, text, format_keys, line_no)
                for name, text in zip(samples, cols[9:])
            }
            yield VcfRecord(
                contig=chrom,
                pos=pos,
                id=None if rid == MISSING else rid,
                ref=ref,
                alt=alt,
                qual=None if qual_s == MISSING else float(qual_s),
                filter=None if filt == MISSING else filt,
                format_keys=format_keys,
                calls=calls,
                line_no=line_no,
            )

    return samples, records()


def record_to_cells(
    rec: VcfRecord, registry: SampleRegistry, contig_map: ContigMap
) -> list[VariantCall]:
    """One cell per sample with a non-missing genotype.

    Reference-only records (no ALT) yield no cells; the ingest driver counts
    them. The interval spans the REF allele on the global column axis.
    """
    if not rec.alt:
        return []
    start = contig_map.to_global(rec.contig, rec.pos - 1)
    interval = GlobalInterval(start, start + len(rec.ref) - 1)
    cells = []
    for name, call in rec.calls.items():
        gt = call.get("GT")
        if gt is None:
            continue
        cells.append(
            VariantCall(
                row=registry.row_of(name),
                interval=interval,
                ref=rec.ref,
                alt=tuple(rec.alt),
                gt=gt,
                pl=call.get("PL"),
                ad=call.get("AD"),
                dp=call.get("DP"),
            )
        )
    return cells


@dataclass
class IngestResult:
    cells: list[VariantCall]
    records: int = 0
    ref_only_skipped: int = 0
    missing_gt_skipped: int = 0


def ingest_stream(
    stream: Iterable[str], registry: SampleRegistry, contig_map: ContigMap
) -> IngestResult:
    _, records = parse_vcf(stream)
    result = IngestResult(cells=[])
    for rec in records:
        result.records += 1
        if not rec.alt:
            result.ref_only_skipped += 1
            continue
        cells = record_to_cells(rec, registry, contig_map)
        result.missing_gt_skipped += len(rec.calls) - len(cells)
        result.cells.extend(cells)
    return result


def render_vcf(
    cells: list[VariantCall], registry: SampleRegistry, contig_map: ContigMap
) -> str:
    """Canonical renderer: one record per (start, ref, alt) group, sorted by
    position, FORMAT fixed to GT:PL:AD:DP. Inverse of ingest for cells that
    carry a genotype."""
    groups: dict[tuple[int, str, tuple[str, ...]], list[VariantCall]] = {}
    for cell in cells:
        groups.setdefault((cell.interval.start, cell.ref, cell.alt), []).append(cell)

    out = ["##fileformat=VCFv4.2"]
    out.append("\t".join(FIXED_COLUMNS + ["FORMAT"] + list(registry.names)))
    for (start, ref, alt), group in sorted(groups.items()):
        contig, pos0 = contig_map.from_global(start)
        by_row = {c.row: c for c in group}
        sample_cols = []
        for row in range(len(registry)):
            cell = by_row.get(row)
            if cell is None or cell.gt is None:
                sample_cols.append("./.")
                continue
            pl = ",".join(map(str, cell.pl)) if cell.pl is not None else MISSING
            ad = ",".join(map(str, cell.ad)) if cell.ad is not None else MISSING
            dp = str(cell.dp) if cell.dp is not None else MISSING
            sample_cols.append(f"{cell.gt}:{pl}:{ad}:{dp}")
        out.append(
            "\t".join(
                [contig, str(pos0 + 1), MISSING, ref, ",".join(alt), MISSING, MISSING,
                 MISSING, "GT:PL:AD:DP"] + sample_cols
            )
        )
    return "\n".join(out) + "\n"
