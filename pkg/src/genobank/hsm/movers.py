"""Copytool plugins: the interface the coordinator uses to move bytes to and
from archive backends, plus the builtin implementations.

A plugin only needs name/archive/restore/remove; new backends are added by
registering another plugin (or pointing the external-process plugin at any
executable speaking the line-delimited JSON protocol)."""

from __future__ import annotations

import base64
import json
import subprocess
import threading
import time
import uuid
from pathlib import Path
from typing import Protocol


class MoverError(Exception):
    pass


class UnknownRef(MoverError):
    pass


class UnknownBackend(MoverError):
    pass


class MoverPlugin(Protocol):
    name: str

    def archive(self, file_id: str, content: bytes) -> str: ...

    def restore(self, remote_ref: str) -> bytes: ...

    def remove(self, remote_ref: str) -> None: ...


class MemoryMover:
    """In-process object map; the simplest backend."""

    def __init__(self, name: str = "memory"):
        self.name = name
        self.objects: dict[str, bytes] = {}
        self.upload_count = 0
        self._lock = threading.Lock()

    def archive(self, file_id: str, content: bytes) -> str:
        ref = f"mem-{uuid.uuid4().hex}"
        with self._lock:
            self.objects[ref] = content
            self.upload_count += 1
        return ref

    def restore(self, remote_ref: str) -> bytes:
        with self._lock:
            try:
                return self.objects[remote_ref]
            except KeyError:
                raise UnknownRef(remote_ref) from None

    def remove(self, remote_ref: str) -> None:
        with self._lock:
            if remote_ref not in self.objects:
                raise UnknownRef(remote_ref)
            del self.objects[remote_ref]


class LocalDirMover:
    """A directory posing as a cloud bucket; objects are files named by ref."""

    def __init__(self, name: str, root):
        self.name = name
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, ref: str) -> Path:
        if "/" in ref or ref.startswith("."):
            raise UnknownRef(ref)
        return self.root / ref

    def archive(self, file_id: str, content: bytes) -> str:
        ref = f"obj-{uuid.uuid4().hex}"
        self._path(ref).write_bytes(content)
        return ref

    def restore(self, remote_ref: str) -> bytes:
        path = self._path(remote_ref)
        if not path.exists():
            raise UnknownRef(remote_ref)
        return path.read_bytes()

    def remove(self, remote_ref: str) -> None:
        path = self._path(remote_ref)
        if not path.exists():
            raise UnknownRef(remote_ref)
        path.unlink()


class ThrottledMover:
    """Wraps another mover with a configurable per-byte delay; used to make
    parallel upload/download effects measurable in tests."""

    def __init__(self, inner: MoverPlugin, delay_per_byte: float, name: str | None = None):
        self.inner = inner
        self.delay_per_byte = delay_per_byte
        self.name = name or f"throttled-{inner.name}"

    def archive(self, file_id: str, content: bytes) -> str:
        time.sleep(len(content) * self.delay_per_byte)
        return self.inner.archive(file_id, content)

    def restore(self, remote_ref: str) -> bytes:
        content = self.inner.restore(remote_ref)
        time.sleep(len(content) * self.delay_per_byte)
        return content

    def remove(self, remote_ref: str) -> None:
        self.inner.remove(remote_ref)


class ExternalProcessMover:
    """Drives a plugin executable over stdin/stdout, one JSON object per line:

        -> {"op": "archive", "file": "...", "data": "<base64>"}
        <- {"ok": true, "ref": "..."}
        -> {"op": "restore", "ref": "..."}
        <- {"ok": true, "data": "<base64>"}
        -> {"op": "remove", "ref": "..."}
        <- {"ok": true}

    Errors come back as {"ok": false, "error": "...", "unknown_ref": bool}.
    """

    def __init__(self, name: str, command: list[str]):
        self.name = name
        self.command = command
        self._proc: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
            )
        return self._proc

    def _call(self, request: dict) -> dict:
        with self._lock:
            proc = self._ensure()
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
            line = proc.stdout.readline()
        if not line:
            raise MoverError(f"plugin {self.name!r} closed its stdout")
        response = json.loads(line)
        if not response.get("ok"):
            if response.get("unknown_ref"):
                raise UnknownRef(response.get("error", ""))
            raise MoverError(response.get("error", "plugin error"))
        return response

    def archive(self, file_id: str, content: bytes) -> str:
        response = self._call(
            {"op": "archive", "file": file_id,
             "data": base64.b64encode(content).decode("ascii")}
        )
        return response["ref"]

    def restore(self, remote_ref: str) -> bytes:
        response = self._call({"op": "restore", "ref": remote_ref})
        return base64.b64decode(response["data"])

    def remove(self, remote_ref: str) -> None:
        self._call({"op": "remove", "ref": remote_ref})

    def close(self):
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=5)


class MoverRegistry:
    """Static name -> plugin registry; re-registration replaces."""

    def __init__(self):
        self._plugins: dict[str, MoverPlugin] = {}

    def register(self, plugin: MoverPlugin) -> None:
        if not plugin.name:
            raise MoverError("plugin name must be non-empty")
        self._plugins[plugin.name] = plugin

    def get(self, name: str) -> MoverPlugin:
        try:
            return self._plugins[name]
        except KeyError:
            raise UnknownBackend(name) from None

    def names(self) -> list[str]:
        return sorted(self._plugins)

    def __contains__(self, name: str) -> bool:
        return name in self._plugins
