import pytest
from hypothesis import given, strategies as st

from rpr.codec import (
    BINARY_MAGIC, encode_binary, encode_text, load_log, parse_binary, parse_record_line,
    parse_text, put_varint, save_log, sniff_format, unzigzag, zigzag, Reader,
)
from rpr.errors import (
    BadMagic, DigestMismatch, FormatError, TraceSyntaxError, TruncatedRecord, UnknownFunction,
    VersionMismatch,
)
from rpr.tracelog import TraceLog
from rpr.workload import WorkloadProfile, random_log, run_workload


def small_log():
    return random_log(11, 40)


def test_empty_text_is_header_only():
    assert encode_text(TraceLog()) == "RPRT/1 sha256\n"
    assert parse_text("RPRT/1 sha256\n") == TraceLog()


def test_empty_binary_is_header_and_empty_sections():
    data = encode_binary(TraceLog())
    assert data[:4] == BINARY_MAGIC
    assert len(data) == 8 + 3
    assert parse_binary(data) == TraceLog()


def test_unknown_function_reports_line():
    lines = ["RPRT/1 sha256"] + [f"{i} Finish() @f{i}" for i in range(7)] + ["9 Frobnicate(1)"]
    with pytest.raises(UnknownFunction) as e:
        parse_text("\n".join(lines) + "\n")
    assert e.value.line == 9 and e.value.name == "Frobnicate"


def test_syntax_error_line_number():
    with pytest.raises(TraceSyntaxError) as e:
        parse_text("RPRT/1 sha256\n0 Finish() @f0\n1 Finish( @f0\n")
    assert e.value.line == 3


def test_version_mismatch():
    with pytest.raises(VersionMismatch):
        parse_text("RPRT/2 sha256\n")
    data = bytearray(encode_binary(TraceLog()))
    data[4] = 9
    with pytest.raises(VersionMismatch):
        parse_binary(bytes(data))


def test_bad_magic():
    with pytest.raises(BadMagic):
        parse_binary(b"NOPE\x01\x00\x01\x00\x00\x00\x00")
    with pytest.raises(BadMagic):
        sniff_format(b"hello")


def test_truncation_detected_everywhere():
    data = encode_binary(small_log())
    for cut in range(len(data)):
        with pytest.raises(FormatError):
            parse_binary(data[:cut])


def test_truncated_record_offset():
    data = encode_binary(small_log())
    with pytest.raises(TruncatedRecord) as e:
        parse_binary(data[:20])
    assert e.value.offset <= 20


def test_corrupt_blob_byte_binary():
    log = run_workload(WorkloadProfile(frames=1, textures_total=1, shader_programs=0)).log
    data = bytearray(encode_binary(log))
    payload = next(iter(log.blobs.items()))[1]
    at = bytes(data).rindex(payload)
    data[at] ^= 0xFF
    with pytest.raises(DigestMismatch):
        parse_binary(bytes(data))


def test_corrupt_blob_text():
    log = run_workload(WorkloadProfile(frames=1, textures_total=1, shader_programs=0,
                                       upload_bytes=9)).log
    text = encode_text(log)
    head, blob_section = text.split("\nblobs ", 1)
    count, first, rest = blob_section.split("\n", 2)
    hexd, b64 = first.split(" ")
    b64 = ("B" if b64[0] != "B" else "C") + b64[1:]
    with pytest.raises(FormatError):
        parse_text(f"{head}\nblobs {count}\n{hexd} {b64}\n{rest}")


def test_parse_record_line_example():
    r = parse_record_line("3 GenTextures(2) -> Texture#1,Texture#2 @f0")
    assert r.returned_ids[1][1] == 2
    assert str(r) == "3 GenTextures(2) -> Texture#1,Texture#2 @f0"


def test_roundtrip_random_logs():
    for seed in range(100):
        log = random_log(seed, 60)
        text = encode_text(log)
        assert parse_text(text) == log
        data = encode_binary(log)
        assert parse_binary(data) == log
        assert encode_text(parse_binary(data)) == text
        assert encode_binary(parse_text(text)) == data


def test_binary_smaller_than_text_for_workloads():
    for seed in range(3):
        log = run_workload(WorkloadProfile(seed=seed, frames=3)).log
        assert len(log) >= 100
        assert len(encode_binary(log)) < len(encode_text(log).encode())


def test_save_and_load_by_extension(tmp_path):
    log = small_log()
    save_log(log, tmp_path / "a.rprt")
    save_log(log, tmp_path / "a.rprb")
    assert (tmp_path / "a.rprt").read_bytes().startswith(b"RPRT/1")
    assert (tmp_path / "a.rprb").read_bytes().startswith(BINARY_MAGIC)
    assert load_log(tmp_path / "a.rprt") == load_log(tmp_path / "a.rprb") == log


@given(st.integers(-(2 ** 63), 2 ** 63 - 1))
def test_zigzag_varint_roundtrip(n):
    out = bytearray()
    put_varint(out, zigzag(n))
    rd = Reader(bytes(out))
    assert unzigzag(rd.varint()) == n
    assert rd.at_end()


@given(st.floats(allow_nan=False), st.floats(allow_nan=False))
def test_float_text_roundtrip(a, b):
    from rpr.checkpoint import Session
    s = Session()
    s.record("CreateContext")
    s.record("ClearColor", a, b, 0.0, 1.0)
    assert parse_text(encode_text(s.log)) == s.log
    assert parse_binary(encode_binary(s.log)) == s.log
