"""Virtual <-> real resource id translation."""

from __future__ import annotations

from .calls import ResourceKind
from .errors import DuplicateReal, UnknownVirtualId, UntranslatableRealId


class TranslationTable:
    """Per-kind bijection between application-visible and driver ids.

    Virtual ids start at 1 and are never handed out twice, even after the
    object is deleted.  Id 0 means "no object" for every kind and always
    translates to 0.  Mappings survive deletion so that ids recorded in
    snapshots (e.g. a program's link snapshot) stay translatable.

    After a restart every known virtual id is *pending*: it has no real id
    until the replayed create call ``rebind``s it.
    """

    def __init__(self):
        self._v2r = {k: {} for k in ResourceKind}
        self._r2v = {k: {} for k in ResourceKind}
        self._next = {k: 1 for k in ResourceKind}
        self._pending = {k: set() for k in ResourceKind}

    # -- queries ---------------------------------------------------------
    def next_virtual(self, kind: ResourceKind) -> int:
        return self._next[kind]

    def counters(self) -> dict:
        return dict(self._next)

    def knows(self, kind, vid) -> bool:
        return vid in self._v2r[kind] or vid in self._pending[kind]

    def is_pending(self, kind, vid) -> bool:
        return vid in self._pending[kind]

    def to_real(self, kind: ResourceKind, vid: int) -> int:
        if vid == 0:
            return 0
        try:
            return self._v2r[kind][vid]
        except KeyError:
            raise UnknownVirtualId(kind, vid) from None

    def to_virtual(self, kind: ResourceKind, real: int) -> int:
        if real == 0:
            return 0
        try:
            return self._r2v[kind][real]
        except KeyError:
            raise UntranslatableRealId(kind, real) from None

    def triples(self):
        """Sorted ``(kind, virtual, real)`` triples; pending ids carry real 0."""
        out = [(k, v, r) for k in ResourceKind for v, r in self._v2r[k].items()]
        out += [(k, v, 0) for k in ResourceKind for v in self._pending[k]]
        return sorted(out)

    # -- updates ---------------------------------------------------------
    def assign_virtual(self, kind: ResourceKind, real: int) -> int:
        vid = self._next[kind]
        self.attach(kind, vid, real)
        return vid

    def attach(self, kind: ResourceKind, vid: int, real: int) -> None:
        """Enter a fresh ``(vid, real)`` pair, as replaying a logged create does."""
        if real in self._r2v[kind]:
            raise DuplicateReal(kind, real)
        if vid <= 0 or vid < self._next[kind] or self.knows(kind, vid):
            raise ValueError(f"{kind.name}#{vid} was already handed out")
        self._v2r[kind][vid] = real
        self._r2v[kind][real] = vid
        self._next[kind] = vid + 1

    def rebind(self, kind: ResourceKind, vid: int, new_real: int) -> None:
        if not self.knows(kind, vid):
            raise UnknownVirtualId(kind, vid)
        if new_real in self._r2v[kind]:
            raise DuplicateReal(kind, new_real)
        old = self._v2r[kind].pop(vid, None)
        if old is not None:
            del self._r2v[kind][old]
        self._pending[kind].discard(vid)
        self._v2r[kind][vid] = new_real
        self._r2v[kind][new_real] = vid

    def bind_logged(self, kind: ResourceKind, vid: int, real: int) -> None:
        """Map a virtual id taken from a log record to a new real id."""
        if self.knows(kind, vid):
            self.rebind(kind, vid, real)
        else:
            self.attach(kind, vid, real)

    def set_counter(self, kind: ResourceKind, next_vid: int) -> None:
        if next_vid < self._next[kind]:
            raise ValueError("virtual id counters only move forward")
        self._next[kind] = next_vid

    def detached(self) -> "TranslationTable":
        """Copy with every virtual id pending, for replay into a new driver."""
        t = TranslationTable()
        for k in ResourceKind:
            t._next[k] = self._next[k]
            t._pending[k] = set(self._v2r[k]) | self._pending[k]
        return t

    def copy(self) -> "TranslationTable":
        t = TranslationTable()
        for k in ResourceKind:
            t._v2r[k] = dict(self._v2r[k])
            t._r2v[k] = dict(self._r2v[k])
            t._pending[k] = set(self._pending[k])
        t._next = dict(self._next)
        return t

    def check(self) -> None:
        """Assert the bijection invariant (used by tests)."""
        for k in ResourceKind:
            v2r, r2v = self._v2r[k], self._r2v[k]
            assert len(v2r) == len(r2v)
            for v, r in v2r.items():
                assert r2v[r] == v
            assert not (self._pending[k] & set(v2r))
            assert all(v < self._next[k] for v in v2r)
            assert all(v < self._next[k] for v in self._pending[k])

    @classmethod
    def from_triples(cls, triples, counters) -> "TranslationTable":
        t = cls()
        for kind, vid, real in triples:
            if real == 0:
                t._pending[kind].add(vid)
            else:
                if real in t._r2v[kind] or vid in t._v2r[kind]:
                    raise DuplicateReal(kind, real)
                t._v2r[kind][vid] = real
                t._r2v[kind][real] = vid
        for kind, n in counters.items():
            t._next[kind] = n
        return t

    def __eq__(self, other):
        if not isinstance(other, TranslationTable):
            return NotImplemented
        return self.triples() == other.triples() and self._next == other._next

    def __repr__(self):
        return f"TranslationTable({len(self.triples())} ids, next={self._next})"


def assign_virtual(table, kind, real):
    return table.assign_virtual(kind, real)


def to_real(table, kind, vid):
    return table.to_real(kind, vid)


def rebind(table, kind, vid, new_real):
    table.rebind(kind, vid, new_real)
