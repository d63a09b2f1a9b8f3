"""The in-memory trace: records, captured blobs and virtual-id counters."""

from __future__ import annotations

from dataclasses import dataclass, field

from .blobs import BlobStore
from .calls import CallRecord, ResourceKind, blob_refs


def default_counters():
    return {kind: 1 for kind in ResourceKind}


@dataclass(eq=False)
class TraceLog:
    records: list = field(default_factory=list)
    blobs: BlobStore = field(default_factory=BlobStore)
    counters: dict = field(default_factory=default_counters)   # kind -> next virtual id

    def __post_init__(self):
        counters = default_counters()
        counters.update(self.counters)
        self.counters = counters

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other):
        if not isinstance(other, TraceLog):
            return NotImplemented
        return (list(self.records) == list(other.records)
                and self.blobs == other.blobs
                and self.counters == other.counters)

    def referenced_digests(self):
        return {ref.digest for r in self.records for ref in blob_refs(r)}

    def with_records(self, records) -> "TraceLog":
        """New log over ``records`` sharing counters, blobs restricted to use."""
        records = list(records)
        digests = {ref.digest for r in records for ref in blob_refs(r)}
        return TraceLog(records, self.blobs.restricted(digests), dict(self.counters))

    def copy(self) -> "TraceLog":
        return TraceLog(list(self.records), self.blobs.copy(), dict(self.counters))

    def validate(self) -> None:
        """Check the structural invariants of a log; raises ValueError."""
        last_seq = None
        last_frame = 0
        for r in self.records:
            if not isinstance(r, CallRecord):
                raise ValueError(f"not a call record: {r!r}")
            if last_seq is not None and r.seq <= last_seq:
                raise ValueError(f"seq {r.seq} not increasing")
            if r.frame_index < last_frame:
                raise ValueError(f"frame index decreases at seq {r.seq}")
            last_seq, last_frame = r.seq, r.frame_index
            for ref in blob_refs(r):
                if ref.digest not in self.blobs:
                    raise ValueError(f"seq {r.seq} references a missing blob")
