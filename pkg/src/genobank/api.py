"""HTTP/JSON facade over array queries, knowledge federation, and HSM control.

Coordinates at this boundary are 1-based inclusive genomic positions; the
engine's 0-based global columns never leak. Every 4xx body carries
{"error": {"code", "message"}}. Write endpoints are gated by a single shared
bearer token when one is configured (GENOBANK_TOKEN overrides the config).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import Depends, FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import array as array_mod
from . import federation
from .array import QueryRequest, VariantArray
from .engine import OffsetBeyondEnd, paginate
from .hsm import (
    Action,
    HsmCoordinator,
    LocalDirMover,
    MoverRegistry,
    NoSuchFile,
)
from .hsm import coordinator as hsm_reasons
from .model import ContigMap, ModelError, UnknownContig, UnknownSample


@dataclass
class ServiceConfig:
    array_root: Path
    knowledge_path: Path
    hsm_root: Path | None = None
    contigs_path: Path | None = None
    listen: str = "127.0.0.1"
    port: int = 8000
    token: str | None = None
    page_limit_cap: int = 1000
    min_samples: int = 1
    ui_dir: Path | None = None

    def __post_init__(self):
        self.array_root = Path(self.array_root)
        self.knowledge_path = Path(self.knowledge_path)
        if not 0 < self.port < 65536:
            raise BadConfig(f"invalid port {self.port}")
        if self.page_limit_cap < 1:
            raise BadConfig("page limit cap must be >= 1")
        env_token = os.environ.get("GENOBANK_TOKEN")
        if env_token:
            self.token = env_token


class BadConfig(Exception):
    pass


class BindFailure(Exception):
    pass


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message


def _error_response(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"error": {"code": code, "message": message}, **extra},
    )


class PageSpec(BaseModel):
    offset: int = 0
    limit: int


class ArrayQueryBody(BaseModel):
    contig: str
    start: int
    end: int
    samples: list[str] | None = None
    attrs: list[str] | None = None
    page: PageSpec | None = None


class SummaryRecordBody(BaseModel):
    model_config = {"extra": "forbid"}

    start: int
    ref: str
    alt: str
    ac: int
    an: int
    hom_ref: int
    het: int
    hom_alt: int
    samples: int


class SummaryBody(BaseModel):
    site_id: str | None = None
    records: list[SummaryRecordBody]


class HsmActionBody(BaseModel):
    action: str
    backend: str | None = None
    force: bool = False


@dataclass
class AppState:
    config: ServiceConfig
    arrays: dict[str, VariantArray] = field(default_factory=dict)
    knowledge: federation.ConsolidatedKnowledge = field(
        default_factory=federation.ConsolidatedKnowledge
    )
    coordinator: HsmCoordinator | None = None

    def open_array(self, name: str) -> VariantArray:
        if name not in self.arrays:
            path = self.config.array_root / name
            if not (path / "manifest.json").exists():
                raise ApiError(404, "UnknownArray", f"no array named {name!r}")
            self.arrays[name] = VariantArray.open(path, verify=False)
        return self.arrays[name]

    def contig_map(self) -> ContigMap:
        if self.config.contigs_path is not None:
            return ContigMap.load(self.config.contigs_path)
        for entry in sorted(self.config.array_root.glob("*/manifest.json")):
            return VariantArray.open(entry.parent, verify=False).contig_map
        raise ApiError(400, "NoContigMap",
                       "no contig map configured and no arrays present")


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="genobank", version="0.1.0")
    state = AppState(config=config)
    if config.knowledge_path.exists():
        state.knowledge = federation.ConsolidatedKnowledge.load(config.knowledge_path)
    if config.hsm_root is not None:
        registry = MoverRegistry()
        journal = Path(config.hsm_root) / ".hsm" / "journal.jsonl"
        journal.parent.mkdir(parents=True, exist_ok=True)
        state.coordinator = HsmCoordinator.recover(config.hsm_root, journal, registry)
    app.state.genobank = state

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return _error_response(exc.status, exc.code, exc.message)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return _error_response(422, "ValidationError", str(exc.errors()))

    def require_token(request: Request):
        if config.token is None:
            return
        header = request.headers.get("Authorization")
        if header is None:
            raise ApiError(401, "Unauthorized", "missing bearer token")
        if header != f"Bearer {config.token}":
            raise ApiError(403, "Forbidden", "bad token")

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    # -- array queries -------------------------------------------------------

    @app.post("/arrays/{name}/query")
    def array_query(name: str, body: ArrayQueryBody):
        arr = state.open_array(name)
        cmap = arr.contig_map
        if body.start < 1 or body.start > body.end:
            raise ApiError(400, "InvalidRange",
                           f"bad 1-based range {body.start}-{body.end}")
        try:
            lo = cmap.to_global(body.contig, body.start - 1)
            hi = cmap.to_global(body.contig, body.end - 1)
        except (UnknownContig, ModelError) as e:
            raise ApiError(400, "InvalidRange", str(e)) from e
        rows = None
        if body.samples is not None:
            try:
                rows = frozenset(arr.registry.row_of(s) for s in body.samples)
            except UnknownSample as e:
                raise ApiError(400, "UnknownSample", str(e)) from e
        attrs = frozenset(body.attrs) if body.attrs is not None else None
        try:
            cells = arr.query_range(QueryRequest(lo, hi, rows=rows, attrs=attrs))
        except array_mod.BadAttributes as e:
            raise ApiError(422, "BadAttributes", str(e)) from e
        except array_mod.ArrayError as e:
            raise ApiError(400, "InvalidRange", str(e)) from e

        offset, limit = 0, config.page_limit_cap
        if body.page is not None:
            if body.page.limit > config.page_limit_cap:
                raise ApiError(400, "LimitExceedsCap",
                               f"limit {body.page.limit} exceeds cap {config.page_limit_cap}")
            offset, limit = body.page.offset, body.page.limit
        try:
            window, page = paginate(cells, offset, limit)
        except OffsetBeyondEnd as e:
            raise ApiError(400, "OffsetBeyondEnd", str(e)) from e

        out = []
        for cell in window:
            chrom, pos0 = cmap.from_global(cell.interval.start)
            doc = {
                "chr": chrom,
                "start": pos0 + 1,
                "end": pos0 + 1 + (cell.interval.end - cell.interval.start),
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
            out.append(doc)
        return {"total": page.total, "cells": out}

    # -- federation ----------------------------------------------------------

    @app.post("/sites/{site_id}/summary", status_code=202,
              dependencies=[Depends(require_token)])
    def submit_summary(site_id: str, body: SummaryBody):
        if body.site_id is not None and body.site_id != site_id:
            raise ApiError(400, "SiteMismatch",
                           f"body site_id {body.site_id!r} != path {site_id!r}")
        doc = {"site_id": site_id,
               "records": [r.model_dump() for r in body.records]}
        try:
            summary = federation.SiteSummary.from_wire(doc)
        except federation.FederationError as e:
            raise ApiError(400, "InvalidSummary", str(e)) from e
        arithmetic = federation.validate_summary(summary, min_samples=0)
        if arithmetic:
            raise ApiError(400, "InvalidSummary", "; ".join(arithmetic))
        rejected = [
            f"{k.start}:{k.ref}>{k.alt}"
            for k, s in sorted(summary.records.items())
            if s.samples < config.min_samples
        ]
        summary.records = {
            k: s for k, s in summary.records.items()
            if s.samples >= config.min_samples
        }
        state.knowledge.submit(summary)
        state.knowledge.save(config.knowledge_path)
        return {"accepted_keys": len(summary.records), "rejected": rejected}

    @app.get("/knowledge/query")
    def knowledge_query(contig: str, start: int, end: int):
        cmap = state.contig_map()
        if start < 1 or start > end:
            raise ApiError(400, "InvalidRange", f"bad 1-based range {start}-{end}")
        try:
            lo = cmap.to_global(contig, start - 1)
            hi = cmap.to_global(contig, end - 1)
        except ModelError as e:
            raise ApiError(400, "InvalidRange", str(e)) from e
        records = federation.knowledge_query(state.knowledge, cmap, lo, hi)
        out = []
        for rec in records:
            chrom, pos0 = cmap.from_global(rec.key.start)
            out.append({
                "chr": chrom,
                "pos": pos0 + 1,
                "ref": rec.key.ref,
                "alt": rec.key.alt,
                "ac": rec.totals.ac,
                "an": rec.totals.an,
                "af": rec.totals.af,
                "sites": rec.site_count,
            })
        return out

    # -- HSM control ---------------------------------------------------------

    def require_coordinator() -> HsmCoordinator:
        if state.coordinator is None:
            raise ApiError(400, "HsmDisabled", "no HSM store configured")
        return state.coordinator

    @app.get("/hsm/files/{file_id:path}")
    def hsm_status(file_id: str):
        coord = require_coordinator()
        try:
            rec = coord.status(file_id)
        except NoSuchFile as e:
            raise ApiError(404, "NoSuchFile", str(e)) from e
        last = None
        for req in reversed(coord.requests.values()):
            if req.file_id == file_id:
                last = {"request_id": req.request_id, "action": req.action.value,
                        "status": req.status, "reason": req.reason}
                break
        return {
            "file": file_id, "archived": rec.archived, "released": rec.released,
            "dirty": rec.dirty, "lost": rec.lost, "backend": rec.backend,
            "last_request": last,
        }

    @app.post("/hsm/files/{file_id:path}/actions", status_code=202,
              dependencies=[Depends(require_token)])
    def hsm_action(file_id: str, body: HsmActionBody):
        coord = require_coordinator()
        try:
            action = Action(body.action.capitalize())
        except ValueError:
            raise ApiError(400, "UnknownAction", f"no action {body.action!r}") from None
        if body.backend is not None and body.backend not in coord.registry:
            # desk-scale deployment: any named backend is a local bucket
            coord.registry.register(
                LocalDirMover(body.backend,
                              Path(coord.root) / ".backends" / body.backend)
            )
        rid = coord.submit(file_id, action, backend=body.backend, force=body.force)
        coord.run_pending()
        req = coord.requests[rid]
        if req.status == "Failed":
            status, code = _failure_status(req.reason)
            return _error_response(status, code, f"{action.value} failed: {req.reason}",
                                   reason=req.reason, request_id=rid)
        return {"request_id": rid}

    if config.ui_dir is not None and Path(config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app


def _failure_status(reason: str) -> tuple[int, str]:
    if reason == hsm_reasons.NO_SUCH_FILE:
        return 404, reason
    if reason == hsm_reasons.UNKNOWN_BACKEND:
        return 400, reason
    if reason in (hsm_reasons.BACKEND_IO, hsm_reasons.BACKEND_LOST):
        return 502, reason
    return 409, reason


def serve(config: ServiceConfig):
    """Run the service until interrupted; signals trigger a graceful stop."""
    import uvicorn

    app = create_app(config)
    try:
        uvicorn.run(app, host=config.listen, port=config.port, log_level="warning")
    except OSError as e:
        raise BindFailure(f"cannot bind {config.listen}:{config.port}: {e}") from e
