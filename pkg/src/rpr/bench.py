"""Log growth benchmark: raw vs pruned size and prune/replay timings."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import astuple, dataclass, fields

from .checkpoint import encode_image, snapshot_image
from .codec import encode_binary
from .driver import replay
from .pruner import prune
from .workload import WorkloadProfile, run_workload

DEFAULT_SAMPLES = (5, 10, 20, 30, 45, 60, 75, 90, 105, 120)


@dataclass
class BenchRow:
    frames: int
    rawLogBytes: int
    prunedLogBytes: int
    pruneMillis: float
    replayMillis: float
    ckptBytes: int


COLUMNS = [f.name for f in fields(BenchRow)]


@dataclass
class BenchReport:
    rows: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            w.writerow([f"{v:.3f}" if isinstance(v, float) else v for v in astuple(r)])
        return buf.getvalue()

    def to_table(self) -> str:
        head = ["frames", "raw log", "pruned log", "prune ms", "replay ms", "checkpoint"]
        body = [[str(r.frames), _kb(r.rawLogBytes), _kb(r.prunedLogBytes),
                 f"{r.pruneMillis:.1f}", f"{r.replayMillis:.1f}", _kb(r.ckptBytes)]
                for r in self.rows]
        widths = [max(len(x) for x in col) for col in zip(head, *body)]
        lines = ["  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in [head] + body]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def row_at(self, frames: int) -> BenchRow:
        for r in self.rows:
            if r.frames == frames:
                return r
        raise KeyError(frames)


def _kb(n: int) -> str:
    return f"{n / 1024:.1f} KB"


def run_bench(profile: WorkloadProfile, samples=DEFAULT_SAMPLES, repeats: int = 1) -> BenchReport:
    """Record ``max(samples)`` frames, measuring at each sample point.

    With ``repeats`` > 1 each timing is the best of that many runs.
    """
    samples = sorted(set(int(s) for s in samples))
    wanted = set(samples)
    rows = []

    def measure(session, done):
        if done not in wanted:
            return
        log = session.log
        raw = len(encode_binary(log))
        prune_s = replay_s = math.inf
        for _ in range(max(repeats, 1)):
            t0 = time.perf_counter()
            pruned = prune(log)
            t1 = time.perf_counter()
            replay(pruned)
            t2 = time.perf_counter()
            prune_s, replay_s = min(prune_s, t1 - t0), min(replay_s, t2 - t1)
        ckpt = len(encode_image(snapshot_image(session)))
        rows.append(BenchRow(done, raw, len(encode_binary(pruned)),
                             prune_s * 1000.0, replay_s * 1000.0, ckpt))

    if samples:
        run_workload(profile.replace(frames=samples[-1]), on_frame=measure)
    return BenchReport(rows)


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(y) against log(x)."""
    pts = [(math.log(x), math.log(y)) for x, y in zip(xs, ys) if x > 0 and y > 0]
    if len(pts) < 2:
        return 0.0
    mx = sum(p[0] for p in pts) / len(pts)
    my = sum(p[1] for p in pts) / len(pts)
    sxx = sum((p[0] - mx) ** 2 for p in pts)
    if sxx == 0:
        return 0.0
    return sum((p[0] - mx) * (p[1] - my) for p in pts) / sxx


def prune_time_slope(report: BenchReport) -> float:
    """Growth exponent of prune time in raw log size (about 1 when linear)."""
    return loglog_slope([r.rawLogBytes for r in report.rows],
                        [r.pruneMillis for r in report.rows])
