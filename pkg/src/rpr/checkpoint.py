"""Recording sessions, checkpoint images and restart.

A :class:`Session` plays the role of the interposed wrapper layer: every call
goes to the live (simulated) driver in real-id space, created objects get
virtual ids, and the call is appended to the in-memory log in virtual-id space
with any client memory copied into the blob store.

Pruning can run in the background: at a frame boundary an immutable snapshot
of the log goes to a worker thread while recording continues; at a later
frame boundary the recorder swaps the pruned prefix in and keeps whatever was
recorded meanwhile.
"""

from __future__ import annotations

import hashlib
import logging
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .blobs import HASH_ID, BlobStore, digest_of
from .calls import (
    CATALOG, BlobRef, CallRecord, EnumToken, FloatScalar, FunctionId, IdRef, IntScalar,
    ResourceKind, RoleTag, classify,
)
from .codec import BINARY_MAGIC, Reader, encode_binary, put_varint, read_binary
from .driver import apply_in_place, fresh, state_digest
from .errors import (
    BadImage, DriverError, FormatError, InvalidCall, ReplayMismatch, RprError, SessionClosed,
    TableError,
)
from .ids import TranslationTable
from .pruner import prune
from .tracelog import TraceLog

log = logging.getLogger(__name__)

IMAGE_MAGIC = b"RPCK"
IMAGE_VERSION = 1


FRAME_ENDS = (FunctionId.SwapBuffers, FunctionId.Finish)


@dataclass
class PruneSchedule:
    every_n_frames: int = 64
    max_pending_prunes: int = 1


def _coerce(param, value, blobs: BlobStore, staged: list):
    """Turn a plain Python argument into the ArgValue its slot expects."""
    t = param.type
    if isinstance(value, (IntScalar, FloatScalar, EnumToken, IdRef)):
        return value
    if t == "blob":
        if isinstance(value, BlobRef):
            if value.digest not in blobs:
                raise InvalidCall("blob reference not in the session's store")
            return value
        payload = bytes(value)          # copy now; caller memory may change later
        staged.append(payload)
        return BlobRef(digest_of(payload), len(payload))
    if t == "id":
        return IdRef(param.group, int(value))
    if t == "int":
        return IntScalar(int(value))
    if t == "float":
        return FloatScalar(float(value))
    if t == "enum":
        return EnumToken(value)
    if t == "scalar":
        if isinstance(value, str):
            return EnumToken(value)
        if isinstance(value, float):
            return FloatScalar(value)
        return IntScalar(int(value))
    raise AssertionError(t)


class Session:
    def __init__(self, real_id_base: int = 0, schedule: Optional[PruneSchedule] = None):
        self.real_id_base = real_id_base
        self.state = fresh(real_id_base)
        self.table = TranslationTable()
        self.records: list = []
        self.blobs = BlobStore()
        self.next_seq = 0
        self.closed = False
        self.schedule = schedule
        self.prune_runs = 0
        self.max_log_len = 0
        self.swap_lengths: list = []
        self.frames = 0                                    # SwapBuffers/Finish calls seen
        self._roots_since_prune: Optional[int] = None     # None: never pruned
        self._executor: Optional[ThreadPoolExecutor] = None
        self._pending = None                               # (future, snapshot length)

    @classmethod
    def from_log(cls, log: TraceLog, real_id_base: int = 0,
                 schedule: Optional[PruneSchedule] = None) -> "Session":
        """Session whose live driver has executed ``log`` (ids as recorded)."""
        session = cls(real_id_base, schedule)
        for r in log.records:
            apply_in_place(session.state, r, session.table)
            if r.fn in FRAME_ENDS:
                session.frames += 1
        for kind, n in log.counters.items():
            if n > session.table.next_virtual(kind):
                session.table.set_counter(kind, n)
        session.records = list(log.records)
        session.blobs = log.blobs.copy()
        session.next_seq = log.records[-1].seq + 1 if log.records else 0
        session.max_log_len = len(session.records)
        return session

    # -- recording -----------------------------------------------------------
    def record(self, fn, *args) -> tuple:
        """Execute and log one call; returns the virtual ids it created."""
        if self.closed:
            raise SessionClosed("session is closed")
        if isinstance(fn, str):
            fn = FunctionId(fn)
        sig = CATALOG[fn]
        params = list(sig.params)
        if sig.variadic:
            params = params[:-1] + [params[-1]] * (len(args) - len(params) + 1)
        if len(params) != len(args):
            raise InvalidCall(f"{fn.value} takes {len(sig.params)} arguments")
        staged: list = []
        values = tuple(_coerce(p, v, self.blobs, staged) for p, v in zip(params, args))
        rets = ()
        if sig.creates is not None:
            count = values[0].value if sig.creates in (ResourceKind.Texture,
                                                       ResourceKind.Buffer) else 1
            first = self.table.next_virtual(sig.creates)
            rets = tuple((sig.creates, first + i) for i in range(max(count, 0)))
        rec = CallRecord(self.next_seq, fn, values, rets, self.state.frame_count)
        apply_in_place(self.state, rec, self.table)
        for payload in staged:
            self.blobs.put(payload)
        self.records.append(rec)
        self.next_seq += 1
        self.max_log_len = max(self.max_log_len, len(self.records))
        if classify(fn) == RoleTag.FrameRoot:
            if self._roots_since_prune is not None:
                self._roots_since_prune += 1
            if fn in FRAME_ENDS:
                self.frames += 1
            self._at_frame_boundary(fn in FRAME_ENDS)
        return tuple(IdRef(k, v) for k, v in rets)

    def close(self) -> None:
        self.wait_for_prune()
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None
        self.closed = True

    @property
    def log(self) -> TraceLog:
        return TraceLog(list(self.records), self.blobs.copy(), self.table.counters())

    @property
    def digest(self) -> bytes:
        return state_digest(self.state, self.table)

    @property
    def frame_digest(self) -> Optional[bytes]:
        return self.state.last_frame_digest

    @property
    def at_frame_boundary(self) -> bool:
        return not self.records or classify(self.records[-1].fn) == RoleTag.FrameRoot

    # -- pruning ---------------------------------------------------------------
    def _at_frame_boundary(self, frame_end: bool) -> None:
        if self._pending is not None:
            # Backpressure: a prune overlaps recording only up to the next root.
            self.wait_for_prune()
        s = self.schedule
        if (frame_end and s is not None and s.every_n_frames
                and self.frames % s.every_n_frames == 0):
            schedule_prune(self)

    def wait_for_prune(self) -> None:
        if self._pending is None:
            return
        future, snapshot_len = self._pending
        self._pending = None
        pruned = future.result()
        self._adopt(pruned, snapshot_len)

    def _adopt(self, pruned: TraceLog, snapshot_len: int) -> None:
        tail = self.records[snapshot_len:]
        self.records = list(pruned.records) + tail
        self.blobs = self.blobs.restricted(TraceLog(self.records).referenced_digests())
        self._roots_since_prune = sum(
            1 for r in tail if classify(r.fn) == RoleTag.FrameRoot)
        self.swap_lengths.append(len(self.records))
        log.debug("swapped in pruned prefix: %d -> %d records (+%d tail)",
                  snapshot_len, len(pruned.records), len(tail))

    def prune_now(self) -> None:
        """Synchronous prune of the whole live log."""
        self.wait_for_prune()
        snapshot = self.log
        self.prune_runs += 1
        self._adopt(prune(snapshot), len(snapshot.records))

    @property
    def prune_is_fresh(self) -> bool:
        return self._roots_since_prune == 0


def schedule_prune(session: Session) -> bool:
    """Start a background prune of the log so far; False if one is pending."""
    if session._pending is not None:
        return False
    if not session.at_frame_boundary:
        raise RprError("prunes only start at a frame boundary")
    if session._executor is None:
        session._executor = ThreadPoolExecutor(max_workers=1, thread_name_prefix="rpr-prune")
    snapshot = session.log
    session.prune_runs += 1
    future = session._executor.submit(prune, snapshot)
    session._pending = (future, len(snapshot.records))
    return True


# -- images ----------------------------------------------------------------------

@dataclass
class CheckpointImage:
    pruned_log: TraceLog
    table: TranslationTable
    frame_count: int = 0
    next_seq: int = 0
    state_digest: bytes = b"\0" * 32
    frame_digest: Optional[bytes] = None
    wall_clock: Optional[float] = None
    format_version: int = IMAGE_VERSION

    @property
    def blobs(self) -> BlobStore:
        return self.pruned_log.blobs


def encode_image(image: CheckpointImage) -> bytes:
    out = bytearray(IMAGE_MAGIC)
    out += struct.pack("<HH", image.format_version, HASH_ID)
    body = encode_binary(image.pruned_log)
    put_varint(out, len(body))
    out += body
    counters = image.table.counters()
    for kind in ResourceKind:
        put_varint(out, counters[kind])
    triples = image.table.triples()
    put_varint(out, len(triples))
    for kind, vid, real in triples:
        out.append(int(kind))
        put_varint(out, vid)
        put_varint(out, real)
    put_varint(out, image.frame_count)
    put_varint(out, image.next_seq)
    if image.wall_clock is None:
        out.append(0)
    else:
        out.append(1)
        out += struct.pack("<d", image.wall_clock)
    out += image.state_digest
    if image.frame_digest is None:
        out.append(0)
    else:
        out.append(1)
        out += image.frame_digest
    out += hashlib.sha256(out).digest()
    return bytes(out)


def decode_image(data: bytes) -> CheckpointImage:
    try:
        return _decode_image(bytes(data))
    except BadImage:
        raise
    except (FormatError, TableError, ValueError) as e:
        raise BadImage(f"corrupt checkpoint image: {e}") from e


def _decode_image(data: bytes) -> CheckpointImage:
    if len(data) < 40 or data[:4] != IMAGE_MAGIC:
        raise BadImage("not an RPCK checkpoint image")
    if hashlib.sha256(data[:-32]).digest() != data[-32:]:
        raise BadImage("checkpoint checksum mismatch")
    rd = Reader(data[:-32], 4)
    version, hash_id = rd.u16(), rd.u16()
    if version != IMAGE_VERSION or hash_id != HASH_ID:
        raise BadImage(f"unsupported image version {version} hash {hash_id}")
    body_len = rd.varint()
    body = Reader(rd.take(body_len))
    if body.data[:4] != BINARY_MAGIC:
        raise BadImage("embedded log is not an RPRL document")
    pruned = read_binary(body)
    if not body.at_end():
        raise BadImage("trailing bytes in embedded log")
    counters = {kind: rd.varint() for kind in ResourceKind}
    triples = []
    for _ in range(rd.varint()):
        kind = ResourceKind(rd.u8())
        triples.append((kind, rd.varint(), rd.varint()))
    table = TranslationTable.from_triples(triples, counters)
    frame_count, next_seq = rd.varint(), rd.varint()
    wall = struct.unpack("<d", rd.take(8))[0] if rd.u8() else None
    digest = rd.take(32)
    frame_digest = rd.take(32) if rd.u8() else None
    if not rd.at_end():
        raise BadImage("trailing bytes in checkpoint image")
    for r in pruned.records:
        for a in r.args:
            if isinstance(a, IdRef) and a.vid and not table.knows(a.kind, a.vid):
                raise BadImage(f"{a} in pruned log is missing from the id table")
    return CheckpointImage(pruned, table, frame_count, next_seq, digest, frame_digest, wall,
                           version)


def snapshot_image(session: Session, wall_clock: Optional[float] = None) -> CheckpointImage:
    """Build the image for ``session`` at its current frame boundary.

    Reuses the live log when it is already a fresh pruned prefix (a background
    prune was swapped in and no frame was recorded since); otherwise prunes a
    snapshot synchronously.  The live session is not modified.
    """
    if session.closed:
        raise SessionClosed("session is closed")
    session.wait_for_prune()
    snapshot = session.log
    if not session.prune_is_fresh:
        session.prune_runs += 1
        snapshot = prune(snapshot)
    return CheckpointImage(
        pruned_log=snapshot,
        table=session.table.copy(),
        frame_count=session.state.frame_count,
        next_seq=session.next_seq,
        state_digest=session.digest,
        frame_digest=session.frame_digest,
        wall_clock=wall_clock,
    )


def checkpoint(session: Session, path=None, wall_clock: Optional[float] = None):
    """Write a checkpoint image of ``session`` to ``path`` and return it."""
    image = snapshot_image(session, wall_clock)
    if path is not None:
        with open(path, "wb") as fh:
            fh.write(encode_image(image))
    return image


def load_image(path) -> CheckpointImage:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise BadImage(str(e)) from e
    return decode_image(data)


def restore(source, real_id_base: int = 0, schedule: Optional[PruneSchedule] = None) -> Session:
    """Start a new session from an image (path, bytes or CheckpointImage).

    The driver starts fresh, the pruned log is replayed in order and each
    replayed create call rebinds its original virtual id to the new real id.
    """
    if isinstance(source, CheckpointImage):
        image = source
    elif isinstance(source, (bytes, bytearray)):
        image = decode_image(source)
    else:
        image = load_image(source)
    session = Session(real_id_base, schedule)
    session.table = image.table.detached()
    try:
        for r in image.pruned_log.records:
            apply_in_place(session.state, r, session.table)
    except (DriverError, TableError) as e:
        raise ReplayMismatch(f"replay of checkpoint failed: {e}") from e
    session.state.frame_count = image.frame_count
    session.records = list(image.pruned_log.records)
    session.blobs = image.pruned_log.blobs.copy()
    session.next_seq = image.next_seq
    session._roots_since_prune = 0
    if session.digest != image.state_digest:
        raise ReplayMismatch("restored state digest differs from the checkpoint")
    if session.frame_digest != image.frame_digest:
        raise ReplayMismatch("restored frame digest differs from the checkpoint")
    return session


def simulate_resume(session: Session) -> float:
    """Reset the live driver and replay its log, as a resume after window loss would.

    Returns the replay time in seconds.
    """
    session.wait_for_prune()
    before, frame_digest, frames = session.digest, session.frame_digest, session.state.frame_count
    start = time.perf_counter()
    table = session.table.detached()
    state = fresh(session.real_id_base + 1_000_000)
    for r in session.records:
        apply_in_place(state, r, table)
    elapsed = time.perf_counter() - start
    state.frame_count = frames
    if state_digest(state, table) != before or state.last_frame_digest != frame_digest:
        raise ReplayMismatch("resume replay diverged from the live state")
    session.state, session.table = state, table
    return elapsed
