"""Content-addressed store for captured client memory."""

from __future__ import annotations

import hashlib
import threading

from .calls import BlobRef
from .errors import MissingBlob

HASH_NAME = "sha256"
HASH_ID = 1          # written into binary headers; 1 == sha256


def digest_of(data) -> bytes:
    return hashlib.sha256(data).digest()


class BlobStore:
    """Maps sha256 digest -> bytes.  Identical payloads are stored once.

    Reads need no lock; ``put`` serialises writers.
    """

    def __init__(self, entries=None):
        self._entries: dict[bytes, bytes] = dict(entries or {})
        self._lock = threading.Lock()

    def put(self, data) -> BlobRef:
        payload = bytes(data)         # copy: later mutation of caller memory is invisible
        key = digest_of(payload)
        with self._lock:
            self._entries.setdefault(key, payload)
        return BlobRef(key, len(payload))

    def get(self, digest: bytes) -> bytes:
        try:
            return self._entries[digest]
        except KeyError:
            raise MissingBlob(digest) from None

    def __contains__(self, digest):
        return digest in self._entries

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        return iter(sorted(self._entries))

    def items(self):
        return [(k, self._entries[k]) for k in sorted(self._entries)]

    @property
    def total_bytes(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def restricted(self, digests) -> "BlobStore":
        return BlobStore({d: self.get(d) for d in digests})

    def copy(self) -> "BlobStore":
        return BlobStore(self._entries)

    def __eq__(self, other):
        if not isinstance(other, BlobStore):
            return NotImplemented
        return self._entries == other._entries

    def __repr__(self):
        return f"BlobStore({len(self)} blobs, {self.total_bytes} bytes)"


def blob_put(store: BlobStore, data) -> BlobRef:
    return store.put(data)


def blob_get(store: BlobStore, digest: bytes) -> bytes:
    return store.get(digest)
