from .coordinator import (
    Action,
    CompletionReport,
    FileReleased,
    HsmAgent,
    HsmCoordinator,
    HsmError,
    HsmFileRecord,
    HsmRequest,
    NoSuchFile,
)
from .movers import (
    ExternalProcessMover,
    LocalDirMover,
    MemoryMover,
    MoverError,
    MoverPlugin,
    MoverRegistry,
    ThrottledMover,
    UnknownBackend,
    UnknownRef,
)

__all__ = [
    "Action", "CompletionReport", "FileReleased", "HsmAgent", "HsmCoordinator",
    "HsmError", "HsmFileRecord", "HsmRequest", "NoSuchFile",
    "ExternalProcessMover", "LocalDirMover", "MemoryMover", "MoverError",
    "MoverPlugin", "MoverRegistry", "ThrottledMover", "UnknownBackend",
    "UnknownRef",
]
