"""HSM coordinator: file flag state machine, request queue, and agent.

Files live in a single logical local store (a directory tree). Archive
copies bytes to a backend via a registered mover plugin; Release drops the
local payload keeping a stub (size + checksum); Restore copies bytes back;
Remove deletes the backend copy. The dirty flag guards Release after a
local modification so no action can silently destroy data: reaching
lost=true requires an explicit force.

Every request transition is journaled (JSON lines), so a coordinator can be
rebuilt after a crash: Done transitions replay their record snapshots and
in-flight requests are re-queued.
"""

from __future__ import annotations

import hashlib
import json
import threading
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .movers import MoverError, MoverRegistry, UnknownBackend, UnknownRef


class HsmError(Exception):
    pass


class FileReleased(HsmError):
    pass


class NoSuchFile(HsmError):
    pass


class Action(str, Enum):
    ARCHIVE = "Archive"
    RELEASE = "Release"
    RESTORE = "Restore"
    REMOVE = "Remove"


# Failure reasons surfaced in request status (and mapped to API errors).
NOT_ARCHIVED = "NotArchived"
NOT_RELEASED = "NotReleased"
ALREADY_RELEASED = "AlreadyReleased"
DIRTY = "Dirty"
FILE_RELEASED = "FileReleased"
FILE_LOST = "FileLost"
NO_SUCH_FILE = "NoSuchFile"
UNKNOWN_BACKEND = "UnknownBackend"
BACKEND_IO = "BackendIo"
BACKEND_LOST = "BackendLost"
DATA_LOSS_PREVENTED = "DataLossPrevented"


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class HsmFileRecord:
    file_id: str
    size: int = 0
    checksum: str = ""
    archived_checksum: str | None = None
    archived: bool = False
    released: bool = False
    dirty: bool = False
    lost: bool = False
    backend: str | None = None
    remote_ref: str | None = None

    def to_json(self) -> dict:
        return {
            "file": self.file_id, "size": self.size, "checksum": self.checksum,
            "archived_checksum": self.archived_checksum, "archived": self.archived,
            "released": self.released, "dirty": self.dirty, "lost": self.lost,
            "backend": self.backend, "remote_ref": self.remote_ref,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "HsmFileRecord":
        return cls(
            file_id=doc["file"], size=doc["size"], checksum=doc["checksum"],
            archived_checksum=doc["archived_checksum"], archived=doc["archived"],
            released=doc["released"], dirty=doc["dirty"], lost=doc["lost"],
            backend=doc["backend"], remote_ref=doc["remote_ref"],
        )


@dataclass
class HsmRequest:
    request_id: int
    file_id: str
    action: Action
    backend: str | None = None
    force: bool = False
    status: str = "Queued"
    reason: str | None = None


@dataclass
class CompletionReport:
    done: list[HsmRequest] = field(default_factory=list)
    failed: list[HsmRequest] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.done) + len(self.failed)


class HsmCoordinator:
    def __init__(self, root, journal_path, registry: MoverRegistry | None = None):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.journal_path = Path(journal_path)
        self.registry = registry if registry is not None else MoverRegistry()
        self.records: dict[str, HsmFileRecord] = {}
        self.requests: dict[int, HsmRequest] = {}
        self._seq = 0
        self._next_request = 1
        self._state = threading.RLock()
        self._cv = threading.Condition()
        self._pending: dict[str, deque[HsmRequest]] = {}
        self._running: set[str] = set()

    # -- persistence / recovery ---------------------------------------------

    def _journal(self, file_id: str, action: str, status: str, **extra):
        with self._state:
            self._seq += 1
            event = {"seq": self._seq, "file": file_id, "action": action,
                     "status": status, **extra}
            with open(self.journal_path, "a") as fh:
                fh.write(json.dumps(event) + "\n")

    @classmethod
    def recover(cls, root, journal_path, registry: MoverRegistry | None = None
                ) -> "HsmCoordinator":
        """Rebuild state from the journal: replay Done record snapshots,
        re-queue Queued/Running requests, then reconcile non-released files
        with what is actually on disk."""
        coord = cls(root, journal_path, registry)
        if not coord.journal_path.exists():
            return coord
        last_status: dict[int, dict] = {}
        with open(coord.journal_path) as fh:
            for line in fh:
                event = json.loads(line)
                coord._seq = max(coord._seq, event["seq"])
                rid = event.get("request_id")
                if rid is not None:
                    last_status[rid] = event
                    coord._next_request = max(coord._next_request, rid + 1)
                if "record" in event:
                    rec = HsmFileRecord.from_json(event["record"])
                    coord.records[rec.file_id] = rec
        for rid in sorted(last_status):
            event = last_status[rid]
            req = HsmRequest(
                request_id=rid, file_id=event["file"], action=Action(event["action"]),
                backend=event.get("backend"), force=bool(event.get("force")),
                status=event["status"], reason=event.get("reason"),
            )
            coord.requests[rid] = req
            if req.status in ("Queued", "Running"):
                req.status = "Queued"
                coord._enqueue(req)
        for rec in coord.records.values():
            if rec.released or rec.lost:
                continue
            path = coord._path(rec.file_id)
            if path.exists():
                data = path.read_bytes()
                rec.size = len(data)
                rec.checksum = _sha256(data)
                rec.dirty = rec.archived and rec.checksum != rec.archived_checksum
        return coord

    # -- local store ---------------------------------------------------------

    def _path(self, file_id: str) -> Path:
        path = (self.root / file_id).resolve()
        if not path.is_relative_to(self.root.resolve()):
            raise HsmError(f"file id {file_id!r} escapes the store root")
        return path

    def _record(self, file_id: str) -> HsmFileRecord | None:
        rec = self.records.get(file_id)
        if rec is None and self._path(file_id).exists():
            data = self._path(file_id).read_bytes()
            rec = HsmFileRecord(file_id=file_id, size=len(data), checksum=_sha256(data))
            self.records[file_id] = rec
        return rec

    def local_write(self, file_id: str, data: bytes) -> None:
        """Write file content; a released stub must be restored first, but a
        lost file may be re-written (which revives it as a plain file)."""
        with self._state:
            rec = self._record(file_id)
            if rec is not None and rec.released and not rec.lost:
                raise FileReleased(f"{file_id} is released; restore before writing")
            path = self._path(file_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(data)
            if rec is None:
                rec = HsmFileRecord(file_id=file_id)
                self.records[file_id] = rec
            if rec.lost:
                rec.lost = rec.archived = rec.released = False
                rec.archived_checksum = rec.backend = rec.remote_ref = None
            rec.size = len(data)
            rec.checksum = _sha256(data)
            rec.dirty = rec.archived and rec.checksum != rec.archived_checksum

    def read_file(self, file_id: str) -> bytes:
        with self._state:
            rec = self._record(file_id)
            if rec is None:
                raise NoSuchFile(file_id)
            if rec.released:
                raise FileReleased(f"{file_id} is released; restore it first")
            if rec.lost:
                raise NoSuchFile(f"{file_id} is lost")
            return self._path(file_id).read_bytes()

    def status(self, file_id: str) -> HsmFileRecord:
        with self._state:
            rec = self._record(file_id)
            if rec is None:
                raise NoSuchFile(file_id)
            return rec

    # -- request queue -------------------------------------------------------

    def submit(self, file_id: str, action: Action, backend: str | None = None,
               force: bool = False) -> int:
        with self._state:
            req = HsmRequest(
                request_id=self._next_request, file_id=file_id, action=action,
                backend=backend, force=force,
            )
            self._next_request += 1
            self.requests[req.request_id] = req
            self._journal(file_id, action.value, "Queued",
                          request_id=req.request_id, backend=backend, force=force)
        self._enqueue(req)
        return req.request_id

    def _enqueue(self, req: HsmRequest):
        with self._cv:
            self._pending.setdefault(req.file_id, deque()).append(req)
            self._cv.notify_all()

    def run_pending(self) -> CompletionReport:
        """Execute all queued requests inline, per-file FIFO order."""
        report = CompletionReport()
        while True:
            with self._cv:
                req = None
                for file_id, queue in self._pending.items():
                    if queue and file_id not in self._running:
                        req = queue.popleft()
                        if not queue:
                            del self._pending[file_id]
                        break
                if req is None:
                    return report
            self._execute(req)
            (report.done if req.status == "Done" else report.failed).append(req)

    # -- state machine -------------------------------------------------------

    def _fail(self, req: HsmRequest, reason: str, rec: HsmFileRecord | None = None):
        req.status = "Failed"
        req.reason = reason
        extra = {"record": rec.to_json()} if rec is not None else {}
        self._journal(req.file_id, req.action.value, "Failed",
                      request_id=req.request_id, reason=reason, **extra)

    def _done(self, req: HsmRequest, rec: HsmFileRecord):
        req.status = "Done"
        self._journal(req.file_id, req.action.value, "Done",
                      request_id=req.request_id, record=rec.to_json())

    def _execute(self, req: HsmRequest):
        self._journal(req.file_id, req.action.value, "Running",
                      request_id=req.request_id, backend=req.backend, force=req.force)
        req.status = "Running"
        # Per-file exclusivity comes from the queue; the state lock only
        # guards the shared dicts. Mover I/O runs unlocked so workers can
        # actually upload/download in parallel.
        handler = {
            Action.ARCHIVE: self._do_archive,
            Action.RELEASE: self._do_release,
            Action.RESTORE: self._do_restore,
            Action.REMOVE: self._do_remove,
        }[req.action]
        handler(req)

    def _do_archive(self, req: HsmRequest):
        with self._state:
            rec = self._record(req.file_id)
            if rec is None:
                return self._fail(req, NO_SUCH_FILE)
            if rec.released:
                return self._fail(req, FILE_RELEASED)
            if rec.lost:
                return self._fail(req, FILE_LOST)
            backend = req.backend or rec.backend
            if rec.archived and not rec.dirty and backend in (None, rec.backend):
                return self._done(req, rec)  # idempotent: clean copy already archived
            if backend is None:
                return self._fail(req, UNKNOWN_BACKEND)
            try:
                mover = self.registry.get(backend)
            except UnknownBackend:
                return self._fail(req, UNKNOWN_BACKEND)
            content = self._path(req.file_id).read_bytes()
            old_backend, old_ref = rec.backend, rec.remote_ref
        try:
            ref = mover.archive(req.file_id, content)
        except MoverError:
            return self._fail(req, BACKEND_IO)
        if old_ref is not None:
            try:
                self.registry.get(old_backend).remove(old_ref)
            except MoverError:
                pass  # stale copy; nothing references it any more
        with self._state:
            rec.archived = True
            rec.archived_checksum = _sha256(content)
            rec.backend = backend
            rec.remote_ref = ref
            # re-read the local state: a write may have landed mid-upload
            on_disk = self._path(req.file_id).read_bytes()
            rec.checksum = _sha256(on_disk)
            rec.size = len(on_disk)
            rec.dirty = rec.checksum != rec.archived_checksum
            self._done(req, rec)

    def _do_release(self, req: HsmRequest):
        with self._state:
            rec = self._record(req.file_id)
            if rec is None or not rec.archived:
                return self._fail(req, NOT_ARCHIVED)
            if rec.released:
                return self._fail(req, ALREADY_RELEASED)
            if rec.dirty:
                return self._fail(req, DIRTY)
            self._path(req.file_id).unlink()
            rec.released = True
            self._done(req, rec)

    def _do_restore(self, req: HsmRequest):
        with self._state:
            rec = self._record(req.file_id)
            if rec is None or not rec.released:
                return self._fail(req, NOT_RELEASED)
            backend, ref = rec.backend, rec.remote_ref
        try:
            content = self.registry.get(backend).restore(ref)
        except UnknownRef:
            with self._state:
                rec.lost = True
                return self._fail(req, BACKEND_LOST, rec)
        except MoverError:
            return self._fail(req, BACKEND_IO)
        with self._state:
            if _sha256(content) != rec.archived_checksum:
                rec.lost = True
                return self._fail(req, BACKEND_LOST, rec)
            path = self._path(req.file_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(content)
            rec.released = False
            rec.checksum = _sha256(content)
            rec.size = len(content)
            rec.dirty = False
            self._done(req, rec)

    def _do_remove(self, req: HsmRequest):
        with self._state:
            rec = self._record(req.file_id)
            if rec is None or not rec.archived:
                return self._fail(req, NOT_ARCHIVED)
            if rec.released and not req.force:
                return self._fail(req, DATA_LOSS_PREVENTED)
            backend, ref = rec.backend, rec.remote_ref
        try:
            self.registry.get(backend).remove(ref)
        except UnknownRef:
            pass  # backend copy already gone; clearing state is still right
        except MoverError:
            return self._fail(req, BACKEND_IO)
        with self._state:
            was_released = rec.released
            rec.archived = rec.released = rec.dirty = False
            rec.archived_checksum = rec.backend = rec.remote_ref = None
            if was_released:
                rec.lost = True  # forced: local payload was already gone
            self._done(req, rec)


class HsmAgent:
    """Runs queued requests on worker threads; requests on one file keep
    their submission order, requests on different files interleave."""

    def __init__(self, coordinator: HsmCoordinator, worker_count: int = 1):
        if worker_count < 1:
            raise HsmError(f"worker_count must be >= 1, got {worker_count}")
        self.coordinator = coordinator
        self.worker_count = worker_count
        self._threads: list[threading.Thread] = []
        self._stop = False
        self._completed: list[HsmRequest] = []

    @property
    def running(self) -> bool:
        return any(t.is_alive() for t in self._threads)

    def start(self) -> "HsmAgent":
        self._stop = False
        self._threads = [
            threading.Thread(target=self._worker, daemon=True, name=f"hsm-worker-{i}")
            for i in range(self.worker_count)
        ]
        for t in self._threads:
            t.start()
        return self

    def _worker(self):
        coord = self.coordinator
        while True:
            with coord._cv:
                req = None
                while req is None:
                    if self._stop:
                        return
                    for file_id, queue in coord._pending.items():
                        if queue and file_id not in coord._running:
                            req = queue.popleft()
                            if not queue:
                                del coord._pending[file_id]
                            coord._running.add(file_id)
                            break
                    else:
                        coord._cv.wait(timeout=0.1)
            try:
                coord._execute(req)
            finally:
                with coord._cv:
                    coord._running.discard(req.file_id)
                    self._completed.append(req)
                    coord._cv.notify_all()

    def drain(self) -> CompletionReport:
        """Block until the queue is empty and no request is running, then
        report everything completed since start."""
        coord = self.coordinator
        with coord._cv:
            while coord._pending or coord._running:
                coord._cv.wait(timeout=0.1)
            completed = list(self._completed)
        report = CompletionReport()
        for req in completed:
            (report.done if req.status == "Done" else report.failed).append(req)
        return report

    def stop(self):
        self._stop = True
        with self.coordinator._cv:
            self.coordinator._cv.notify_all()
        for t in self._threads:
            t.join(timeout=5)
        self._threads = []
