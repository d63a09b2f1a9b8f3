import pytest
from hypothesis import given, strategies as st

from rpr.bench import COLUMNS, loglog_slope, run_bench
from rpr.codec import encode_binary
from rpr.workload import (
    WorkloadProfile, dump_profile, generate, parse_profile, random_log, run_workload,
)


def test_zero_frames_is_context_only():
    calls = [c for c in generate(WorkloadProfile(frames=0)) if c is not None]
    assert [fn.value for fn, _ in calls] == ["CreateContext"]


def test_same_seed_same_stream():
    p = WorkloadProfile(seed=42, frames=6)
    a = encode_binary(run_workload(p).log)
    b = encode_binary(run_workload(p).log)
    assert a == b
    assert encode_binary(run_workload(p.replace(seed=43)).log) != a


def test_frames_end_with_swap():
    items = list(generate(WorkloadProfile(frames=3)))
    ends = [i for i, c in enumerate(items) if c is None]
    assert len(ends) == 3
    assert all(items[i - 1][0].value == "SwapBuffers" for i in ends)


def test_profile_validation():
    with pytest.raises(ValueError):
        WorkloadProfile(churn=1.5)
    with pytest.raises(ValueError):
        WorkloadProfile(frames=-1)


def test_profile_file_roundtrip():
    p = WorkloadProfile(seed=7, frames=9, churn=0.25, textures_total=3)
    assert parse_profile(dump_profile(p)) == p
    q = parse_profile("# comment\ntexturesTotal = 8\nuploadBytes=0x10\n")
    assert (q.textures_total, q.upload_bytes) == (8, 16)
    with pytest.raises(ValueError):
        parse_profile("bogus=1")
    with pytest.raises(ValueError):
        parse_profile("frames")


@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 3), st.integers(0, 6), st.integers(0, 3),
       st.floats(0, 1))
def test_any_profile_records_cleanly(seed, frames, textures, programs, churn):
    p = WorkloadProfile(seed=seed, frames=frames, textures_total=textures,
                        shader_programs=programs, churn=churn, upload_bytes=8,
                        state_writes_per_frame=5)
    s = run_workload(p)
    assert s.state.frame_count >= frames


def test_random_logs_are_deterministic():
    assert random_log(3, 50) == random_log(3, 50)


def test_bench_report_shape():
    rep = run_bench(WorkloadProfile(frames=0, upload_bytes=256), [1, 2, 4])
    assert [r.frames for r in rep.rows] == [1, 2, 4]
    assert rep.to_csv().splitlines()[0].split(",") == COLUMNS
    raw = [r.rawLogBytes for r in rep.rows]
    assert raw == sorted(raw)
    assert "frames" in rep.to_table()


def test_loglog_slope():
    assert loglog_slope([1, 2, 4, 8], [3, 6, 12, 24]) == pytest.approx(1.0)
    assert loglog_slope([1, 2, 4], [5, 20, 80]) == pytest.approx(2.0)

