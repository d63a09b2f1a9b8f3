"""Text (.rprt) and binary (.rprb) encodings of a TraceLog.

Both layouts are specified byte-for-byte in docs/FORMATS.md.  In short:

text::

    RPRT/1 sha256
    counters Texture=3 Buffer=2          (omitted when every counter is 1)
    0 CreateContext() -> Context#1 @f0
    ...
    blobs 2                               (omitted when there are no blobs)
    <hex digest> <base64 payload>

binary::

    "RPRL" u16 version, u16 hash id          8-byte header
    varint n, n x (u8 kind, varint next)     counters
    varint n, n x (varint len, record)       records
    varint n, n x (32B digest, varint len, payload)   blobs, sorted by digest
"""

from __future__ import annotations

import base64
import re
import struct

from .blobs import HASH_ID, HASH_NAME, BlobStore, digest_of
from .calls import (
    ENUM_BY_VALUE, GL_ENUMS, BlobRef, CallRecord, EnumToken, FloatScalar, FunctionId,
    IdRef, IntScalar, ResourceKind, format_arg, check_args,
)
from .errors import (
    BadMagic, DigestMismatch, FormatError, InvalidCall, TraceSyntaxError, TruncatedRecord,
    UnknownFunction, VersionMismatch,
)
from .tracelog import TraceLog, default_counters

TEXT_VERSION = 1
BINARY_VERSION = 1
TEXT_MAGIC = "RPRT"
BINARY_MAGIC = b"RPRL"
TEXT_HEADER = f"{TEXT_MAGIC}/{TEXT_VERSION} {HASH_NAME}"


# -- varints -------------------------------------------------------------------

def put_varint(out: bytearray, n: int) -> None:
    if n < 0:
        raise ValueError("varints are unsigned")
    while True:
        byte = n & 0x7F
        n >>= 7
        if n:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def zigzag(n: int) -> int:
    return (n << 1) ^ (n >> 63)


def unzigzag(n: int) -> int:
    return (n >> 1) ^ -(n & 1)


class Reader:
    """Cursor over a bytes object; every read checks for truncation."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.data):
            raise TruncatedRecord(self.pos)
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def varint(self) -> int:
        shift = result = 0
        start = self.pos
        while True:
            if self.pos >= len(self.data):
                raise TruncatedRecord(start)
            byte = self.data[self.pos]
            self.pos += 1
            result |= (byte & 0x7F) << shift
            if not byte & 0x80:
                return result
            shift += 7
            if shift > 70:
                raise FormatError(f"varint too long at offset {start}")

    def at_end(self) -> bool:
        return self.pos == len(self.data)


# -- text ----------------------------------------------------------------------

_LINE_RE = re.compile(
    r"^(?P<seq>\d+) (?P<fn>[A-Za-z_][A-Za-z0-9_]*)\((?P<args>[^()]*)\)"
    r"(?: -> (?P<rets>[A-Za-z]+#\d+(?:,[A-Za-z]+#\d+)*))? @f(?P<frame>\d+)$"
)
_HEAD_RE = re.compile(r"^\d+ ([A-Za-z_][A-Za-z0-9_]*)\(")
_ID_RE = re.compile(r"^([A-Za-z]+)#(\d+)$")
_BLOB_RE = re.compile(r"^blob:([0-9a-f]{64}):(\d+)$")
_INT_RE = re.compile(r"^-?\d+$")
_FLOAT_RE = re.compile(r"^-?(?:\d+\.\d*(?:e[+-]?\d+)?|\d+e[+-]?\d+|inf|nan)$")


def encode_text(log: TraceLog) -> str:
    lines = [TEXT_HEADER]
    if log.counters != default_counters():
        lines.append("counters " + " ".join(
            f"{k.name}={log.counters[k]}" for k in ResourceKind))
    lines.extend(str(r) for r in log.records)
    if len(log.blobs):
        lines.append(f"blobs {len(log.blobs)}")
        for digest, payload in log.blobs.items():
            lines.append(f"{digest.hex()} {base64.b64encode(payload).decode()}")
    return "\n".join(lines) + "\n"


def _parse_kind(name: str, lineno: int) -> ResourceKind:
    try:
        return ResourceKind[name]
    except KeyError:
        raise TraceSyntaxError(lineno, f"unknown resource kind {name!r}") from None


def _parse_arg(token: str, lineno: int):
    if _INT_RE.match(token):
        return IntScalar(int(token))
    if _FLOAT_RE.match(token):
        return FloatScalar(float(token))
    if token in GL_ENUMS:
        return EnumToken(token)
    m = _ID_RE.match(token)
    if m:
        return IdRef(_parse_kind(m.group(1), lineno), int(m.group(2)))
    m = _BLOB_RE.match(token)
    if m:
        return BlobRef(bytes.fromhex(m.group(1)), int(m.group(2)))
    raise TraceSyntaxError(lineno, f"bad argument {token!r}")


def parse_record_line(line: str, lineno: int = 0) -> CallRecord:
    head = _HEAD_RE.match(line)
    if head and head.group(1) not in FunctionId._value2member_map_:
        raise UnknownFunction(lineno, head.group(1))
    m = _LINE_RE.match(line)
    if not m:
        raise TraceSyntaxError(lineno, f"malformed record {line!r}")
    fn = FunctionId(m.group("fn"))
    raw = m.group("args")
    try:
        args = tuple(_parse_arg(t, lineno) for t in raw.split(",")) if raw else ()
    except ValueError as e:
        raise TraceSyntaxError(lineno, str(e)) from None
    rets = ()
    if m.group("rets"):
        rets = tuple((_parse_kind(k, lineno), int(v))
                     for k, v in (_ID_RE.match(t).groups() for t in m.group("rets").split(",")))
    try:
        check_args(fn, args)
        return CallRecord(int(m.group("seq")), fn, args, rets, int(m.group("frame")))
    except (InvalidCall, ValueError) as e:
        raise TraceSyntaxError(lineno, str(e)) from None


def parse_text(doc: str) -> TraceLog:
    lines = doc.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise TraceSyntaxError(1, "empty document")
    header = lines[0].split(" ")
    if len(header) != 2 or "/" not in header[0] or header[0].split("/")[0] != TEXT_MAGIC:
        raise TraceSyntaxError(1, "missing RPRT header")
    version = header[0].split("/", 1)[1]
    if version != str(TEXT_VERSION) or header[1] != HASH_NAME:
        raise VersionMismatch(f"unsupported text log version {lines[0]!r}")

    counters = default_counters()
    records = []
    blobs = BlobStore()
    i = 1
    if i < len(lines) and lines[i].startswith("counters "):
        for item in lines[i].split(" ")[1:]:
            name, _, value = item.partition("=")
            if not value.isdigit():
                raise TraceSyntaxError(i + 1, f"bad counter {item!r}")
            counters[_parse_kind(name, i + 1)] = int(value)
        i += 1
    while i < len(lines) and not lines[i].startswith("blobs "):
        record = parse_record_line(lines[i], i + 1)
        if records and record.seq <= records[-1].seq:
            raise TraceSyntaxError(i + 1, "sequence numbers must increase")
        if records and record.frame_index < records[-1].frame_index:
            raise TraceSyntaxError(i + 1, "frame index decreases")
        records.append(record)
        i += 1
    if i < len(lines):
        count_text = lines[i][len("blobs "):]
        if not count_text.isdigit():
            raise TraceSyntaxError(i + 1, "bad blob count")
        count = int(count_text)
        entries = lines[i + 1:]
        if len(entries) != count:
            raise TraceSyntaxError(i + 1, f"expected {count} blob lines, found {len(entries)}")
        for j, entry in enumerate(entries, start=i + 2):
            hexdigest, _, b64 = entry.partition(" ")
            try:
                digest = bytes.fromhex(hexdigest)
                payload = base64.b64decode(b64, validate=True)
            except ValueError:
                raise TraceSyntaxError(j, "malformed blob line") from None
            _store_checked(blobs, digest, payload)
    log = TraceLog(records, blobs, counters)
    _check_blob_refs(log)
    return log


def _store_checked(blobs: BlobStore, digest: bytes, payload: bytes) -> None:
    if digest_of(payload) != digest:
        raise DigestMismatch(digest)
    blobs.put(payload)


def _check_blob_refs(log: TraceLog) -> None:
    for r in log.records:
        for a in r.args:
            if isinstance(a, BlobRef):
                if a.digest not in log.blobs:
                    raise FormatError(f"seq {r.seq} references missing blob {a.digest.hex()}")
                if len(log.blobs.get(a.digest)) != a.length:
                    raise FormatError(f"seq {r.seq} blob length disagrees with store")


# -- binary --------------------------------------------------------------------

_TAG_INT, _TAG_FLOAT, _TAG_ENUM, _TAG_ID, _TAG_BLOB = range(5)


def _encode_arg(out: bytearray, arg) -> None:
    if isinstance(arg, IntScalar):
        out.append(_TAG_INT)
        put_varint(out, zigzag(arg.value))
    elif isinstance(arg, FloatScalar):
        out.append(_TAG_FLOAT)
        out += struct.pack("<d", arg.value)
    elif isinstance(arg, EnumToken):
        out.append(_TAG_ENUM)
        put_varint(out, arg.value)
    elif isinstance(arg, IdRef):
        out.append(_TAG_ID)
        out.append(int(arg.kind))
        put_varint(out, arg.vid)
    elif isinstance(arg, BlobRef):
        out.append(_TAG_BLOB)
        out += arg.digest
        put_varint(out, arg.length)
    else:
        raise TypeError(arg)


def encode_record(record: CallRecord) -> bytes:
    out = bytearray()
    put_varint(out, record.seq)
    out.append(record.fn.code)
    put_varint(out, record.frame_index)
    put_varint(out, len(record.args))
    for arg in record.args:
        _encode_arg(out, arg)
    put_varint(out, len(record.returned_ids))
    for kind, vid in record.returned_ids:
        out.append(int(kind))
        put_varint(out, vid)
    return bytes(out)


def _read_kind(rd: Reader) -> ResourceKind:
    pos = rd.pos
    try:
        return ResourceKind(rd.u8())
    except ValueError:
        raise FormatError(f"bad resource kind at offset {pos}") from None


def _decode_arg(rd: Reader):
    pos = rd.pos
    tag = rd.u8()
    if tag == _TAG_INT:
        return IntScalar(unzigzag(rd.varint()))
    if tag == _TAG_FLOAT:
        return FloatScalar(struct.unpack("<d", rd.take(8))[0])
    if tag == _TAG_ENUM:
        value = rd.varint()
        if value not in ENUM_BY_VALUE:
            raise FormatError(f"unknown enum value {value:#x} at offset {pos}")
        return EnumToken(ENUM_BY_VALUE[value])
    if tag == _TAG_ID:
        return IdRef(_read_kind(rd), rd.varint())
    if tag == _TAG_BLOB:
        return BlobRef(rd.take(32), rd.varint())
    raise FormatError(f"bad argument tag {tag} at offset {pos}")


def decode_record(rd: Reader, end: int) -> CallRecord:
    start = rd.pos
    seq = rd.varint()
    code = rd.u8()
    try:
        fn = FunctionId.from_code(code)
    except KeyError:
        raise UnknownFunction(start, f"<code {code}>") from None
    frame = rd.varint()
    args = tuple(_decode_arg(rd) for _ in range(rd.varint()))
    rets = tuple((_read_kind(rd), rd.varint()) for _ in range(rd.varint()))
    if rd.pos != end:
        raise FormatError(f"record at offset {start} has a bad length")
    try:
        check_args(fn, args)
        return CallRecord(seq, fn, args, rets, frame)
    except (InvalidCall, ValueError) as e:
        raise FormatError(f"record at offset {start}: {e}") from None


def encode_binary(log: TraceLog) -> bytes:
    out = bytearray(BINARY_MAGIC)
    out += struct.pack("<HH", BINARY_VERSION, HASH_ID)
    changed = [(k, n) for k, n in sorted(log.counters.items()) if n != 1]
    put_varint(out, len(changed))
    for kind, n in changed:
        out.append(int(kind))
        put_varint(out, n)
    put_varint(out, len(log.records))
    for r in log.records:
        payload = encode_record(r)
        put_varint(out, len(payload))
        out += payload
    put_varint(out, len(log.blobs))
    for digest, payload in log.blobs.items():
        out += digest
        put_varint(out, len(payload))
        out += payload
    return bytes(out)


def parse_binary(doc: bytes) -> TraceLog:
    rd = Reader(bytes(doc))
    log = read_binary(rd)
    if not rd.at_end():
        raise FormatError(f"trailing bytes after offset {rd.pos}")
    return log


def read_binary(rd: Reader) -> TraceLog:
    if rd.take(4) != BINARY_MAGIC:
        raise BadMagic("not an RPRL binary log")
    version, hash_id = rd.u16(), rd.u16()
    if version != BINARY_VERSION or hash_id != HASH_ID:
        raise VersionMismatch(f"binary log version {version} hash {hash_id}")
    counters = default_counters()
    for _ in range(rd.varint()):
        kind = _read_kind(rd)
        counters[kind] = rd.varint()
    records = []
    for _ in range(rd.varint()):
        length = rd.varint()
        end = rd.pos + length
        if end > len(rd.data):
            raise TruncatedRecord(rd.pos)
        record = decode_record(rd, end)
        if records and (record.seq <= records[-1].seq
                        or record.frame_index < records[-1].frame_index):
            raise FormatError(f"record seq {record.seq} out of order")
        records.append(record)
    blobs = BlobStore()
    for _ in range(rd.varint()):
        digest = rd.take(32)
        payload = rd.take(rd.varint())
        _store_checked(blobs, digest, payload)
    log = TraceLog(records, blobs, counters)
    _check_blob_refs(log)
    return log


# -- files ---------------------------------------------------------------------

def sniff_format(data: bytes) -> str:
    if data[:4] == BINARY_MAGIC:
        return "binary"
    if data[:4] == TEXT_MAGIC.encode():
        return "text"
    raise BadMagic("neither an RPRT text log nor an RPRL binary log")


def load_log(path) -> TraceLog:
    with open(path, "rb") as fh:
        data = fh.read()
    if sniff_format(data) == "binary":
        return parse_binary(data)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise FormatError("text log is not UTF-8") from None
    return parse_text(text)


def save_log(log: TraceLog, path, fmt: str = None) -> None:
    if fmt is None:
        fmt = "text" if str(path).endswith(".rprt") else "binary"
    data = encode_text(log).encode() if fmt == "text" else encode_binary(log)
    with open(path, "wb") as fh:
        fh.write(data)
