"""Record-prune-replay for graphics API call streams.

Calls are recorded with virtualized resource ids, pruned down to what is
needed to rebuild the state at the last frame, and replayed into a fresh
(simulated) driver on restart.
"""

__version__ = "0.1.0"

from .blobs import BlobStore
from .calls import CallRecord, FunctionId, IdRef, ResourceKind
from .checkpoint import CheckpointImage, PruneSchedule, Session, checkpoint, restore, schedule_prune
from .codec import encode_binary, encode_text, load_log, parse_binary, parse_text, save_log
from .driver import apply, fresh, render, replay, state_digest
from .ids import TranslationTable
from .pruner import prune
from .tracelog import TraceLog
from .workload import WorkloadProfile, generate, random_log

__all__ = [
    "BlobStore", "CallRecord", "CheckpointImage", "FunctionId", "IdRef", "PruneSchedule",
    "ResourceKind", "Session", "TraceLog", "TranslationTable", "WorkloadProfile", "apply",
    "checkpoint", "encode_binary", "encode_text", "fresh", "generate", "load_log", "parse_binary",
    "parse_text", "prune", "random_log", "render", "replay", "restore", "save_log",
    "schedule_prune", "state_digest",
]
