"""Operator command line: one binary for the hospital-side and the central
consolidation roles."""

from __future__ import annotations

import json
import re
from pathlib import Path

import click

from . import federation
from .array import ArrayError, QueryRequest, VariantArray
from .engine import QueryBatch, run_batch
from .hsm import Action, HsmCoordinator, LocalDirMover
from .model import ContigMap, ModelError, SampleRegistry
from .scenario import ParseError, UnboundStep, run_feature_file
from .vcf import VcfError, ingest_stream, open_vcf

REGION_RE = re.compile(r"^([^:]+):(\d+)-(\d+)$")


def parse_region(region: str) -> tuple[str, int, int]:
    """CONTIG:START-END with 1-based inclusive coordinates."""
    m = REGION_RE.match(region)
    if not m:
        raise _region_exit(region)
    contig, start, end = m.group(1), int(m.group(2)), int(m.group(3))
    if start < 1 or start > end:
        raise _region_exit(region)
    return contig, start, end


def _region_exit(region) -> click.exceptions.Exit:
    click.echo(f"bad region syntax: {region!r} (expected CONTIG:START-END)", err=True)
    return click.exceptions.Exit(2)


def _fail(message: str, code: int = 1):
    click.echo(message, err=True)
    raise click.exceptions.Exit(code)


@click.group()
def main():
    """Sparse variant-call store, HSM tiering, and knowledge federation."""


@main.command()
@click.option("--array", "array_dir", required=True, type=click.Path())
@click.option("--vcf", "vcf_path", required=True, type=click.Path())
@click.option("--contigs", "contigs_path", required=True, type=click.Path())
@click.option("--tile-extent", default=10_000, show_default=True)
def ingest(array_dir, vcf_path, contigs_path, tile_extent):
    """Parse a VCF and write its cells as one new fragment."""
    for path in (vcf_path, contigs_path):
        if not Path(path).exists():
            _fail(f"no such file: {path}")
    try:
        contig_map = ContigMap.load(contigs_path)
    except (ModelError, KeyError, ValueError) as e:
        _fail(f"bad contigs file: {e}")
    try:
        with open_vcf(vcf_path) as fh:
            from .vcf import parse_vcf

            samples, records = parse_vcf(fh)
            if Path(array_dir, "manifest.json").exists():
                arr = VariantArray.open(array_dir)
            else:
                arr = VariantArray.create(
                    array_dir, contig_map, SampleRegistry(tuple(samples)), tile_extent
                )
        with open_vcf(vcf_path) as fh:
            result = ingest_stream(fh, arr.registry, arr.contig_map)
        if result.cells:
            arr.write_fragment(result.cells)
    except (VcfError, ArrayError, ModelError) as e:
        _fail(str(e))
    click.echo(
        f"ingested {len(result.cells)} cells "
        f"(skipped {result.ref_only_skipped} reference-only rows, "
        f"{result.missing_gt_skipped} missing genotypes)"
    )


@main.command()
@click.option("--array", "array_dir", required=True, type=click.Path())
@click.option("--region", required=True)
@click.option("--samples", default=None, help="comma-separated sample names")
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="table")
@click.option("--workers", default=1, show_default=True)
def query(array_dir, region, samples, fmt, workers):
    """Query a column range; table output follows the console column layout."""
    contig, start, end = parse_region(region)
    try:
        arr = VariantArray.open(array_dir)
        lo = arr.contig_map.to_global(contig, start - 1)
        hi = arr.contig_map.to_global(contig, end - 1)
        rows = None
        if samples:
            rows = frozenset(arr.registry.row_of(s) for s in samples.split(","))
        batch = QueryBatch((QueryRequest(lo, hi, rows=rows),), worker_count=workers)
        result = run_batch(arr, batch)[0]
        if isinstance(result, Exception):
            raise result
    except (ArrayError, ModelError) as e:
        _fail(str(e))
    if fmt == "json":
        click.echo(json.dumps([_cell_json(arr, c) for c in result], indent=1))
        return
    header = ["chr", "interval", "REF", "ALT", "GT", "PL", "AD", "DP"]
    rows_out = [header]
    for cell in result:
        chrom, pos0 = arr.contig_map.from_global(cell.interval.start)
        rows_out.append([
            chrom,
            f"[{pos0 + 1}, {pos0 + 1 + cell.interval.end - cell.interval.start}]",
            cell.ref,
            str(list(cell.alt)),
            str(cell.gt) if cell.gt else ".",
            str(list(cell.pl)) if cell.pl is not None else ".",
            str(list(cell.ad)) if cell.ad is not None else ".",
            f"[{cell.dp}]" if cell.dp is not None else ".",
        ])
    widths = [max(len(r[i]) for r in rows_out) for i in range(len(header))]
    for r in rows_out:
        click.echo("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip())


def _cell_json(arr: VariantArray, cell) -> dict:
    chrom, pos0 = arr.contig_map.from_global(cell.interval.start)
    doc = {
        "chr": chrom,
        "start": pos0 + 1,
        "end": pos0 + 1 + cell.interval.end - cell.interval.start,
        "ref": cell.ref,
        "alt": list(cell.alt),
        "sample": arr.registry.name_of(cell.row),
    }
    if cell.gt is not None:
        doc["gt"] = str(cell.gt)
    if cell.pl is not None:
        doc["pl"] = list(cell.pl)
    if cell.ad is not None:
        doc["ad"] = list(cell.ad)
    if cell.dp is not None:
        doc["dp"] = cell.dp
    return doc


# -- HSM ----------------------------------------------------------------------


def _open_coordinator(store: str) -> HsmCoordinator:
    store_path = Path(store)
    journal = store_path / ".hsm" / "journal.jsonl"
    journal.parent.mkdir(parents=True, exist_ok=True)
    coord = HsmCoordinator.recover(store_path, journal)
    # every backend named so far is a local bucket under the store
    names = {rec.backend for rec in coord.records.values() if rec.backend}
    for name in names:
        coord.registry.register(LocalDirMover(name, store_path / ".backends" / name))
    return coord


def _run_hsm(store: str, action: Action, file: str, backend: str | None = None,
             force: bool = False):
    coord = _open_coordinator(store)
    if backend and backend not in coord.registry:
        coord.registry.register(
            LocalDirMover(backend, Path(store) / ".backends" / backend)
        )
    rid = coord.submit(file, action, backend=backend, force=force)
    coord.run_pending()
    req = coord.requests[rid]
    if req.status != "Done":
        _fail(req.reason or "failed")
    click.echo(f"{action.value} {file}: done (request {rid})")


@main.group()
@click.option("--store", default=".", show_default=True,
              help="local file store root (holds the HSM journal)")
@click.pass_context
def hsm(ctx, store):
    """Archive / release / restore / remove files against a backend."""
    ctx.obj = store


@hsm.command("archive")
@click.option("--file", "file_id", required=True)
@click.option("--backend", default="localdir", show_default=True)
@click.pass_obj
def hsm_archive(store, file_id, backend):
    _run_hsm(store, Action.ARCHIVE, file_id, backend=backend)


@hsm.command("release")
@click.option("--file", "file_id", required=True)
@click.pass_obj
def hsm_release(store, file_id):
    _run_hsm(store, Action.RELEASE, file_id)


@hsm.command("restore")
@click.option("--file", "file_id", required=True)
@click.pass_obj
def hsm_restore(store, file_id):
    _run_hsm(store, Action.RESTORE, file_id)


@hsm.command("remove")
@click.option("--file", "file_id", required=True)
@click.option("--force", is_flag=True)
@click.pass_obj
def hsm_remove(store, file_id, force):
    _run_hsm(store, Action.REMOVE, file_id, force=force)


@hsm.command("status")
@click.option("--file", "file_id", required=True)
@click.pass_obj
def hsm_status(store, file_id):
    coord = _open_coordinator(store)
    try:
        rec = coord.status(file_id)
    except Exception as e:
        _fail(str(e))
    click.echo(json.dumps({
        "file": rec.file_id, "archived": rec.archived, "released": rec.released,
        "dirty": rec.dirty, "lost": rec.lost, "backend": rec.backend,
    }, indent=1))


# -- scenarios ------------------------------------------------------------------


@main.group()
def scenario():
    """Run natural-language feature files."""


@scenario.command("run")
@click.argument("feature_file", type=click.Path(exists=True))
@click.option("--report", "report_format", type=click.Choice(["text", "json"]),
              default="text", show_default=True)
@click.option("--workdir", type=click.Path(), default=".",
              help="directory whose files scenarios may act on")
def scenario_run(feature_file, report_format, workdir):
    try:
        text, passed = run_feature_file(feature_file, report_format, Path(workdir))
    except (ParseError, UnboundStep) as e:
        _fail(str(e))
    click.echo(text)
    if not passed:
        raise click.exceptions.Exit(1)


# -- federation -----------------------------------------------------------------


@main.command()
@click.option("--array", "array_dir", required=True, type=click.Path(exists=True))
@click.option("--site", "site_id", required=True)
@click.option("-o", "output", required=True, type=click.Path())
def summarize(array_dir, site_id, output):
    """Aggregate an array into a shareable site summary (counts only)."""
    try:
        arr = VariantArray.open(array_dir)
        summary = federation.summarize(arr, site_id)
    except ArrayError as e:
        _fail(str(e))
    with open(output, "w") as fh:
        json.dump(summary.to_wire(), fh, indent=1)
    click.echo(f"wrote {len(summary.records)} keys for site {site_id}")


@main.command()
@click.argument("summaries", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("-o", "output", required=True, type=click.Path())
def consolidate(summaries, output):
    """Merge site summaries into a consolidated knowledge store."""
    try:
        parsed = []
        for path in summaries:
            with open(path) as fh:
                parsed.append(federation.SiteSummary.from_wire(json.load(fh)))
        knowledge = federation.merge_summaries(parsed)
    except (federation.FederationError, KeyError, ValueError) as e:
        _fail(f"bad summary: {e}")
    knowledge.save(output)
    click.echo(f"consolidated {len(parsed)} sites into {len(knowledge.by_key)} keys")


@main.group()
def knowledge():
    """Query a consolidated knowledge store."""


@knowledge.command("query")
@click.option("--region", required=True)
@click.option("--knowledge", "knowledge_path", required=True,
              type=click.Path(exists=True))
@click.option("--contigs", "contigs_path", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(["table", "json"]), default="json")
def knowledge_query(region, knowledge_path, contigs_path, fmt):
    contig, start, end = parse_region(region)
    try:
        store = federation.ConsolidatedKnowledge.load(knowledge_path)
        contig_map = ContigMap.load(contigs_path)
        lo = contig_map.to_global(contig, start - 1)
        hi = contig_map.to_global(contig, end - 1)
        records = federation.knowledge_query(store, contig_map, lo, hi)
    except (federation.FederationError, ModelError) as e:
        _fail(str(e))
    out = []
    for rec in records:
        chrom, pos0 = contig_map.from_global(rec.key.start)
        out.append({
            "chr": chrom, "pos": pos0 + 1, "ref": rec.key.ref, "alt": rec.key.alt,
            "ac": rec.totals.ac, "an": rec.totals.an,
            "af": rec.totals.af, "sites": rec.site_count,
        })
    if fmt == "json":
        click.echo(json.dumps(out, indent=1))
    else:
        for row in out:
            click.echo(
                f"{row['chr']}:{row['pos']} {row['ref']}>{row['alt']} "
                f"ac={row['ac']} an={row['an']} af={row['af']:.4f} sites={row['sites']}"
            )


# -- service --------------------------------------------------------------------


@main.command()
@click.option("--listen", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--array-root", required=True, type=click.Path())
@click.option("--knowledge", "knowledge_path", required=True, type=click.Path())
@click.option("--hsm-root", default=None, type=click.Path())
@click.option("--contigs", "contigs_path", default=None, type=click.Path())
@click.option("--token", default=None)
@click.option("--ui-dir", default=None, type=click.Path())
@click.option("--page-limit-cap", default=1000, show_default=True)
def serve(listen, port, array_root, knowledge_path, hsm_root, contigs_path, token,
          ui_dir, page_limit_cap):
    """Run the HTTP/JSON service."""
    from .api import BadConfig, BindFailure, ServiceConfig
    from .api import serve as api_serve

    try:
        config = ServiceConfig(
            array_root=array_root,
            knowledge_path=knowledge_path,
            hsm_root=hsm_root,
            contigs_path=contigs_path,
            listen=listen,
            port=port,
            token=token,
            page_limit_cap=page_limit_cap,
            ui_dir=ui_dir,
        )
        api_serve(config)
    except (BadConfig, BindFailure) as e:
        _fail(str(e))


if __name__ == "__main__":
    main()
