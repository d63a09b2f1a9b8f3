"""``rpr`` command line: record, prune, replay, verify, checkpoint, restore, bench, convert.

Exit codes: 0 success, 2 verification mismatch, 3 format error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

from . import __version__
from .bench import DEFAULT_SAMPLES, prune_time_slope, run_bench
from .checkpoint import PruneSchedule, Session, checkpoint, restore, simulate_resume
from .codec import encode_binary, encode_text, load_log, save_log
from .driver import replay
from .errors import DriverError, FormatError, ReplayMismatch, TableError
from .pruner import prune
from .workload import WorkloadProfile, load_profile, run_workload

log = logging.getLogger("rpr")

EXIT_OK = 0
EXIT_MISMATCH = 2
EXIT_FORMAT = 3


def _profile(args) -> WorkloadProfile:
    prof = load_profile(args.profile) if args.profile else WorkloadProfile()
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.frames is not None:
        changes["frames"] = args.frames
    return prof.replace(**changes)


def _write_log(tlog, path, fmt):
    if path in (None, "-"):
        if fmt == "binary":
            sys.stdout.buffer.write(encode_binary(tlog))
        else:
            sys.stdout.write(encode_text(tlog))
    else:
        save_log(tlog, path, fmt)


def _schedule(args):
    if getattr(args, "background_prune", False):
        return PruneSchedule(every_n_frames=args.prune_every)
    return None


def _replay_input(tlog, what):
    try:
        return replay(tlog)
    except (DriverError, TableError) as e:
        raise FormatError(f"{what} does not replay: {e}") from e


def _digests(rp):
    fd = rp.frame_digest
    return rp.digest.hex(), fd.hex() if fd is not None else "-"


def cmd_record(args) -> int:
    session = run_workload(_profile(args), Session(schedule=_schedule(args)))
    session.wait_for_prune()
    _write_log(session.log, args.output, args.format)
    log.info("recorded %d calls, %d prunes", session.next_seq, session.prune_runs)
    return EXIT_OK


def cmd_prune(args) -> int:
    tlog = load_log(args.input)
    t0 = time.perf_counter()
    pruned = prune(tlog)
    log.info("pruned %d -> %d records in %.1f ms", len(tlog), len(pruned),
             (time.perf_counter() - t0) * 1000)
    _write_log(pruned, args.output, args.format)
    return EXIT_OK


def cmd_replay(args) -> int:
    rp = _replay_input(load_log(args.input), "log")
    state, frame = _digests(rp)
    print(f"state {state}")
    print(f"frame {frame}")
    return EXIT_OK


def cmd_verify(args) -> int:
    full = load_log(args.input)
    pruned = load_log(args.pruned) if args.pruned else prune(full)
    a = _replay_input(full, "log")
    try:
        b = replay(pruned)
    except (DriverError, TableError) as e:
        print(f"pruned log does not replay: {e}")
        return EXIT_MISMATCH
    da, db = _digests(a), _digests(b)
    print(f"full   state {da[0]} frame {da[1]}")
    print(f"pruned state {db[0]} frame {db[1]}")
    if da != db:
        print("MISMATCH")
        return EXIT_MISMATCH
    print("OK")
    return EXIT_OK


def cmd_checkpoint(args) -> int:
    schedule = _schedule(args)
    if args.input:
        session = Session.from_log(load_log(args.input), schedule=schedule)
    else:
        session = run_workload(_profile(args), Session(schedule=schedule))
    image = checkpoint(session, args.output)
    print(f"checkpoint {args.output}: {len(image.pruned_log)} of {session.next_seq} calls, "
          f"state {image.state_digest.hex()}")
    if args.simulate_resume:
        secs = simulate_resume(session)
        print(f"resume replay {secs * 1000:.2f} ms")
    session.close()
    return EXIT_OK


def cmd_restore(args) -> int:
    session = restore(args.input, real_id_base=args.real_id_base)
    print(f"restored {len(session.records)} calls, next seq {session.next_seq}, "
          f"state {session.digest.hex()}")
    if args.output:
        _write_log(session.log, args.output, args.format)
    return EXIT_OK


def cmd_bench(args) -> int:
    samples = [int(s) for s in args.samples.split(",")] if args.samples else list(DEFAULT_SAMPLES)
    if args.frames is not None:
        samples = [s for s in samples if s <= args.frames] or [args.frames]
    report = run_bench(_profile(args), samples, repeats=args.repeats)
    sys.stdout.write(report.to_table() if args.table else report.to_csv())
    if args.table and len(report.rows) >= 2:
        print(f"prune time ~ rawLogBytes^{prune_time_slope(report):.2f}")
    return EXIT_OK


def cmd_convert(args) -> int:
    tlog = load_log(args.input)
    fmt = args.format or ("text" if args.output.endswith(".rprt") else "binary")
    save_log(tlog, args.output, fmt)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rpr", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"rpr {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def workload_flags(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--frames", type=int)
        sp.add_argument("--profile", help="key=value workload profile file")

    def fmt_flag(sp, default="binary"):
        sp.add_argument("--format", choices=("text", "binary"), default=default)

    def bg_flags(sp):
        sp.add_argument("--background-prune", action="store_true")
        sp.add_argument("--prune-every", type=int, default=64, metavar="FRAMES")

    sp = sub.add_parser("record", help="record a synthetic workload to a log")
    workload_flags(sp)
    fmt_flag(sp)
    bg_flags(sp)
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_record)

    sp = sub.add_parser("prune", help="prune a log")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", default="-")
    fmt_flag(sp)
    sp.set_defaults(func=cmd_prune)

    sp = sub.add_parser("replay", help="replay a log and print its digests")
    sp.add_argument("input")
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("verify", help="check that the pruned log replays to the same state")
    sp.add_argument("input")
    sp.add_argument("--pruned", help="pruned log to check (default: prune the input)")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("checkpoint", help="write a .rpck image of a log or workload")
    sp.add_argument("input", nargs="?", help="log to execute (default: record a workload)")
    sp.add_argument("-o", "--output", required=True)
    workload_flags(sp)
    bg_flags(sp)
    sp.add_argument("--simulate-resume", action="store_true",
                    help="after writing, reset the driver and replay the log")
    sp.set_defaults(func=cmd_checkpoint)

    sp = sub.add_parser("restore", help="restart from a .rpck image")
    sp.add_argument("input")
    sp.add_argument("-o", "--output", help="also write the restored log")
    sp.add_argument("--real-id-base", type=int, default=0)
    fmt_flag(sp)
    sp.set_defaults(func=cmd_restore)

    sp = sub.add_parser("bench", help="raw vs pruned log growth (CSV)")
    workload_flags(sp)
    sp.add_argument("--samples", help="comma-separated frame counts")
    sp.add_argument("--table", action="store_true", help="pretty-print instead of CSV")
    sp.add_argument("--repeats", type=int, default=1, help="best-of-N timings")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("convert", help="convert between text and binary logs")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--format", choices=("text", "binary"))
    sp.set_defaults(func=cmd_convert)
    return p


def main(argv=None) -> int:
    level = os.environ.get("RPR_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ReplayMismatch as e:
        print(f"rpr: {e}", file=sys.stderr)
        return EXIT_MISMATCH
    except FormatError as e:
        print(f"rpr: format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except (ValueError, OSError) as e:
        print(f"rpr: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
