"""Fragment-based sparse 2D variant array with column-interval reads.

Only occupied cells are ever materialized: a fragment is an immutable,
sorted JSONL batch of cells plus a tile index of byte offsets, so persisted
bytes track cell count and payload size, never the column-domain size.
Updates are expressed as new fragments; for identical (row, start) the cell
from the highest fragment id wins.
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
import shutil
from bisect import bisect_right
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

from .model import ContigMap, SampleRegistry, VariantCall

MANIFEST = "manifest.json"
ATTRS = frozenset({"GT", "PL", "AD", "DP"})


class ArrayError(Exception):
    pass


class AlreadyExists(ArrayError):
    pass


class IoFailure(ArrayError):
    pass


class EmptyBatch(ArrayError):
    pass


class InvalidRange(ArrayError):
    pass


class UnknownRow(ArrayError):
    pass


class BadAttributes(ArrayError):
    pass


class CorruptFragment(ArrayError):
    pass


@dataclass(frozen=True)
class FragmentMeta:
    id: int
    cell_count: int
    min_col: int
    max_col: int
    max_span: int
    checksum: str
    tile_index: tuple[tuple[int, int], ...] = field(default=(), compare=False)


@dataclass(frozen=True)
class QueryRequest:
    lo: int
    hi: int
    rows: frozenset[int] | None = None
    attrs: frozenset[str] | None = None


@dataclass
class StorageStats:
    cells: int
    fragments: int
    bytes: int


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class VariantArray:
    """Handle over an on-disk array directory; cheap to open, safe to share
    for reads. At most one writer at a time (advisory lock file)."""

    def __init__(self, root: Path, contig_map: ContigMap, registry: SampleRegistry,
                 tile_extent: int, fragments: list[FragmentMeta]):
        self.root = Path(root)
        self.contig_map = contig_map
        self.registry = registry
        self.tile_extent = tile_extent
        self.fragments = fragments

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def create(cls, root, contig_map: ContigMap, registry: SampleRegistry,
               tile_extent: int) -> "VariantArray":
        root = Path(root)
        if tile_extent < 1:
            raise ArrayError(f"tile_extent must be >= 1, got {tile_extent}")
        if root.exists() and any(root.iterdir()):
            raise AlreadyExists(f"{root} is not empty")
        try:
            (root / "fragments").mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise IoFailure(str(e)) from e
        arr = cls(root, contig_map, registry, tile_extent, [])
        arr._write_manifest()
        return arr

    @classmethod
    def open(cls, root, verify: bool = True) -> "VariantArray":
        root = Path(root)
        try:
            with open(root / MANIFEST) as fh:
                doc = json.load(fh)
        except OSError as e:
            raise IoFailure(f"cannot open array at {root}: {e}") from e
        contig_map = ContigMap.from_json(doc)
        registry = SampleRegistry(tuple(doc["samples"]))
        fragments = [
            FragmentMeta(
                id=f["id"], cell_count=f["cell_count"], min_col=f["min_col"],
                max_col=f["max_col"], max_span=f["max_span"], checksum=f["checksum"],
            )
            for f in doc["fragments"]
        ]
        arr = cls(root, contig_map, registry, doc["tile_extent"], fragments)
        if verify:
            arr.verify()
        arr.fragments = [arr._load_meta(f) for f in fragments]
        return arr

    def verify(self):
        """Re-check recorded fragment checksums; fragments are immutable."""
        for frag in self.fragments:
            actual = _sha256(self._payload_path(frag.id))
            if actual != frag.checksum:
                raise CorruptFragment(
                    f"fragment {frag.id}: checksum {actual} != recorded {frag.checksum}"
                )

    def _fragment_dir(self, frag_id: int) -> Path:
        return self.root / "fragments" / f"{frag_id:06d}"

    def _payload_path(self, frag_id: int) -> Path:
        return self._fragment_dir(frag_id) / "cells.jsonl"

    def _load_meta(self, frag: FragmentMeta) -> FragmentMeta:
        with open(self._fragment_dir(frag.id) / "meta.json") as fh:
            doc = json.load(fh)
        return FragmentMeta(
            id=frag.id, cell_count=frag.cell_count, min_col=frag.min_col,
            max_col=frag.max_col, max_span=frag.max_span, checksum=frag.checksum,
            tile_index=tuple((t[0], t[1]) for t in doc["tile_index"]),
        )

    def _write_manifest(self):
        doc = {
            "format_version": 1,
            "tile_extent": self.tile_extent,
            "contigs": self.contig_map.to_json()["contigs"],
            "samples": list(self.registry.names),
            "fragments": [
                {
                    "id": f.id, "cell_count": f.cell_count, "min_col": f.min_col,
                    "max_col": f.max_col, "max_span": f.max_span, "checksum": f.checksum,
                }
                for f in self.fragments
            ],
        }
        tmp = self.root / (MANIFEST + ".tmp")
        with open(tmp, "w") as fh:
            json.dump(doc, fh, indent=1)
        os.replace(tmp, self.root / MANIFEST)  # readers see old or new, never a mix

    @contextmanager
    def _writer_lock(self):
        lock_path = self.root / ".writer.lock"
        fd = os.open(lock_path, os.O_CREAT | os.O_RDWR)
        try:
            fcntl.flock(fd, fcntl.LOCK_EX)
            yield
        finally:
            fcntl.flock(fd, fcntl.LOCK_UN)
            os.close(fd)

    # -- writes ------------------------------------------------------------

    def write_fragment(self, cells: list[VariantCall]) -> int:
        if not cells:
            raise EmptyBatch("refusing to write an empty fragment")
        for cell in cells:
            if cell.row >= len(self.registry):
                raise UnknownRow(f"row {cell.row} outside registry")
            if cell.interval.end >= self.contig_map.total_columns:
                raise InvalidRange(f"cell end {cell.interval.end} outside domain")
        # last occurrence wins within the batch
        dedup = {(c.row, c.interval.start): c for c in cells}
        ordered = sorted(dedup.values(), key=lambda c: (c.interval.start, c.row))
        with self._writer_lock():
            frag_id = max((f.id for f in self.fragments), default=0) + 1
            frag_dir = self._fragment_dir(frag_id)
            frag_dir.mkdir(parents=True)
            payload = self._payload_path(frag_id)
            tile_index: list[tuple[int, int]] = []
            last_tile = None
            with open(payload, "w") as fh:
                for cell in ordered:
                    tile = cell.interval.start // self.tile_extent
                    if tile != last_tile:
                        tile_index.append((cell.interval.start, fh.tell()))
                        last_tile = tile
                    fh.write(json.dumps(cell.to_json(), separators=(",", ":")))
                    fh.write("\n")
            meta = FragmentMeta(
                id=frag_id,
                cell_count=len(ordered),
                min_col=ordered[0].interval.start,
                max_col=max(c.interval.end for c in ordered),
                max_span=max(c.interval.span for c in ordered),
                checksum=_sha256(payload),
                tile_index=tuple(tile_index),
            )
            with open(frag_dir / "meta.json", "w") as fh:
                json.dump(
                    {
                        "id": meta.id, "cell_count": meta.cell_count,
                        "min_col": meta.min_col, "max_col": meta.max_col,
                        "max_span": meta.max_span,
                        "tile_index": [list(t) for t in meta.tile_index],
                    },
                    fh,
                )
            self.fragments.append(meta)
            self._write_manifest()
        return frag_id

    def consolidate(self) -> int:
        """Merge all fragments into one, keeping last-wins semantics; query
        results are unchanged."""
        if not self.fragments:
            raise ArrayError("nothing to consolidate")
        merged: dict[tuple[int, int], VariantCall] = {}
        for frag in self.fragments:  # ascending id: later fragments overwrite
            for cell in self._scan_fragment(frag, 0, frag.max_col):
                merged[(cell.row, cell.interval.start)] = cell
        old_ids = [f.id for f in self.fragments]
        frag_id = self.write_fragment(list(merged.values()))
        with self._writer_lock():
            self.fragments = [f for f in self.fragments if f.id == frag_id]
            self._write_manifest()
            for old in old_ids:
                shutil.rmtree(self._fragment_dir(old), ignore_errors=True)
        return frag_id

    # -- reads -------------------------------------------------------------

    def _validate(self, q: QueryRequest):
        if q.lo < 0 or q.lo > q.hi or q.hi >= self.contig_map.total_columns:
            raise InvalidRange(
                f"range [{q.lo}, {q.hi}] invalid for domain of "
                f"{self.contig_map.total_columns} columns"
            )
        if q.rows is not None:
            for row in q.rows:
                if not 0 <= row < len(self.registry):
                    raise UnknownRow(f"row {row} outside registry")
        if q.attrs is not None and not set(q.attrs) <= ATTRS:
            raise BadAttributes(f"unknown attributes {set(q.attrs) - ATTRS}")

    def _scan_fragment(self, frag: FragmentMeta, scan_lo: int, hi: int):
        if frag.min_col > hi or frag.max_col < scan_lo:
            return
        offset = 0
        firsts = [t[0] for t in frag.tile_index]
        i = bisect_right(firsts, scan_lo) - 1
        if i >= 0:
            offset = frag.tile_index[i][1]
        with open(self._payload_path(frag.id)) as fh:
            fh.seek(offset)
            for line in fh:
                doc = json.loads(line)
                start = doc["start"]
                if start > hi:
                    break
                if start < scan_lo:
                    continue
                yield VariantCall.from_json(doc)

    def query_range(self, q: QueryRequest) -> list[VariantCall]:
        self._validate(q)
        # cells are indexed by start; a long REF can begin left of the range
        max_span = max((f.max_span for f in self.fragments), default=1)
        scan_lo = max(0, q.lo - max_span + 1)
        chosen: dict[tuple[int, int], VariantCall] = {}
        for frag in self.fragments:  # ascending id: highest fragment wins
            for cell in self._scan_fragment(frag, scan_lo, q.hi):
                chosen[(cell.interval.start, cell.row)] = cell
        out = []
        for (start, row), cell in sorted(chosen.items()):
            if not cell.interval.overlaps(q.lo, q.hi):
                continue
            if q.rows is not None and row not in q.rows:
                continue
            out.append(_project(cell, q.attrs))
        return out

    def iter_cells(self):
        """All live cells (last-wins across fragments), sorted by (start, row)."""
        if not self.fragments:
            return []
        return self.query_range(QueryRequest(0, self.contig_map.total_columns - 1))

    def stats(self) -> StorageStats:
        keys = set()
        for frag in self.fragments:
            for cell in self._scan_fragment(frag, 0, frag.max_col):
                keys.add((cell.row, cell.interval.start))
        payload_bytes = sum(
            self._payload_path(f.id).stat().st_size for f in self.fragments
        )
        return StorageStats(cells=len(keys), fragments=len(self.fragments),
                            bytes=payload_bytes)


def _project(cell: VariantCall, attrs: frozenset[str] | None) -> VariantCall:
    if attrs is None:
        return cell
    return VariantCall(
        row=cell.row,
        interval=cell.interval,
        ref=cell.ref,
        alt=cell.alt,
        gt=cell.gt if "GT" in attrs else None,
        pl=cell.pl if "PL" in attrs else None,
        ad=cell.ad if "AD" in attrs else None,
        dp=cell.dp if "DP" in attrs else None,
    )
