"""Command line front end.

Subcommands cover the full experiment workflow: inspect a code, calibrate an
empirical pattern LUT, sweep reference-decoder BLER, run the pipelined-decoder
simulation, and dump a query schedule.  A --config file of key=value lines
supplies defaults; explicit flags win.  All file outputs are deterministic for
a given seed, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys

from .channel import ChannelConfig
from .harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    build_schedule,
    fmt,
    ilwo_intersection,
    result_rows,
    run_sweep,
    write_csv,
)
from .linear_code import BUILTIN_CODES, MIN_DISTANCE_LB, get_code
from .pipeline import STATUS_NAMES
from .schedule import calibrate_lut, dump_schedule_csv, write_pattern_file


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in str(text).split(",") if t.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in str(text).split(",") if t.strip())


def _resolve(args, path: str) -> str:
    out_dir = getattr(args, "out_dir", None) or "."
    return path if os.path.isabs(path) else os.path.join(out_dir, path)


def load_config(path: str) -> dict:
    """key=value lines; # comments; values coerced to int then float then str."""
    out = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            for conv in (int, float):
                try:
                    val = conv(val)
                    break
                except ValueError:
                    continue
            out[key] = val
    return out


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=1, help="base RNG seed")
    p.add_argument("--config", help="key=value file of option defaults")
    p.add_argument("--out-dir", default=".", help="directory for relative output paths")


def cmd_code_info(args) -> int:
    code = get_code(args.code)
    print(f"code: {code.name}")
    print(f"n: {code.n}")
    print(f"k: {code.k}")
    print(f"rate: {fmt(code.rate)}")
    print(f"parity_rows: {code.n - code.k}")
    if args.code in BUILTIN_CODES:
        _, gen, fld = BUILTIN_CODES[args.code]
        print(f"generator_poly: 0x{gen.value:X}")
        print(f"field_poly: 0x{fld.value:X}")
    if args.code in MIN_DISTANCE_LB:
        print(f"min_distance_lb: {MIN_DISTANCE_LB[args.code]}")
    print(f"parity_checksum: {code.parity_checksum}")
    return 0


def cmd_calibrate(args) -> int:
    code = get_code(args.code)
    chan = ChannelConfig(ebn0_db=args.ebn0, rate=code.rate, seed=args.seed)
    calib = calibrate_lut(code, chan, args.q_lut, args.frames)
    ranked = calib.ranked(args.q_lut)
    out = _resolve(args, args.out)
    write_pattern_file(out, ranked, code.n, meta={
        "code": code.name, "ebn0_db": fmt(float(args.ebn0)),
        "frames": args.frames, "seed": args.seed, "q_lut": args.q_lut,
    })
    overlap = ilwo_intersection(ranked, code.n, args.q_lut, args.q_max)
    print(f"patterns_observed: {len(calib.counts)}")
    print(f"lut_size: {len(ranked)}")
    print(f"ilwo_intersection: {overlap}")
    print(f"wrote: {out}")
    return 0


def _experiment_config(args, t_fills) -> ExperimentConfig:
    return ExperimentConfig(
        code=args.code,
        schedule=args.schedule,
        pattern_file=getattr(args, "pattern_file", None),
        q_lut=args.q_lut,
        programmable_slots=args.programmable_slots,
        stages=args.stages,
        q_s=args.q_s,
        t_fills=t_fills,
        ebn0_db=_floats(args.ebn0),
        seed=args.seed,
        target_errors=args.target_errors,
        max_frames=args.max_frames,
        min_frames=args.min_frames,
        workers=getattr(args, "workers", 1),
    )


def _run_and_write(args, t_fills) -> int:
    cfg = _experiment_config(args, t_fills)
    pcfg = cfg.pipeline()
    trace = getattr(args, "trace", None)
    if trace and cfg.max_frames * len(cfg.ebn0_db) > 20_000_000:
        print("error: --trace keeps per-frame records; lower --max-frames", file=sys.stderr)
        return 2

    def progress(ebn0, done, ref):
        print(f"  {ebn0:g} dB: {done} frames, {ref.errors} ref errors", file=sys.stderr)

    results = run_sweep(cfg, progress=progress if args.verbose else None, record=bool(trace))
    rows = []
    for point in results:
        rows.extend(result_rows(point, pcfg))
    out = _resolve(args, args.out)
    write_csv(out, rows)
    print(f"wrote: {out}")
    if trace:
        trace_rows = []
        for point in results:
            for tf in sorted(point.records):
                for frame, stage, status in point.records[tf]:
                    trace_rows.append([point.ebn0_db, tf, frame, stage, STATUS_NAMES[status]])
        tpath = _resolve(args, trace)
        write_csv(tpath, trace_rows, header=["ebn0_db", "t_fill", "frame", "output_stage", "status"])
        print(f"wrote: {tpath}")
    return 0


def cmd_bler_sweep(args) -> int:
    return _run_and_write(args, t_fills=())


def cmd_pipeline_sim(args) -> int:
    return _run_and_write(args, t_fills=_ints(args.t_fill))


def cmd_pattern_dump(args) -> int:
    s = build_schedule(args.schedule, args.capacity, args.q_max,
                       getattr(args, "pattern_file", None), args.q_lut,
                       args.programmable_slots,
                       mask_n=args.mask_n if args.mask_n else None)
    out = _resolve(args, args.out)
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(out, "w", newline="") as f:
        dump_schedule_csv(s, f)
    print(f"patterns: {len(s.patterns)}")
    print(f"invalid: {s.invalid_count()}")
    print(f"wrote: {out}")
    return 0


def _add_schedule_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--schedule", default="ilwo", choices=["lwo", "ilwo", "la-ilwo"])
    p.add_argument("--pattern-file", help="calibrated LUT patterns (la-ilwo)")
    p.add_argument("--q-lut", type=int, default=512, help="LUT entries to use")
    p.add_argument("--programmable-slots", type=int, default=32)


def _add_run_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--code", default="bch-127-113")
    _add_schedule_opts(p)
    p.add_argument("--stages", type=int, default=18)
    p.add_argument("--q-s", type=int, default=512, help="patterns tested per query stage")
    p.add_argument("--ebn0", default="5.0,5.5,6.0,6.5,7.0,7.5",
                   help="comma-separated Eb/N0 points in dB")
    p.add_argument("--target-errors", type=int, default=200,
                   help="stop a point after this many block errors (0 = fixed frames)")
    p.add_argument("--max-frames", type=int, default=500_000_000)
    p.add_argument("--min-frames", type=int, default=8192)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--verbose", action="store_true", help="progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbgrand",
        description="Ordered reliability bits GRAND decoding and pipelined-decoder simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("code-info", help="print parameters of a code")
    p.add_argument("--code", default="bch-127-113", help="registry name or parity file path")
    _common(p)
    p.set_defaults(func=cmd_code_info)

    p = sub.add_parser("calibrate", help="build an empirical pattern LUT from channel draws")
    p.add_argument("--code", default="bch-127-113")
    p.add_argument("--ebn0", type=float, default=5.0)
    p.add_argument("--frames", type=int, default=200_000)
    p.add_argument("--q-lut", type=int, default=512)
    p.add_argument("--q-max", type=int, default=8192,
                   help="iLWO prefix length for the intersection report")
    p.add_argument("--out", default="lut_patterns.txt")
    _common(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("bler-sweep", help="reference-decoder BLER vs Eb/N0")
    _add_run_opts(p)
    p.add_argument("--out", default="bler_sweep.csv")
    _common(p)
    p.set_defaults(func=cmd_bler_sweep)

    p = sub.add_parser("pipeline-sim", help="cycle-level pipelined-decoder sweep")
    _add_run_opts(p)
    p.add_argument("--t-fill", default="3,4,7,17", help="comma-separated fill thresholds")
    p.add_argument("--trace", help="also write a per-frame (stage, status) CSV here")
    p.add_argument("--out", default="pipeline_sim.csv")
    _common(p)
    p.set_defaults(func=cmd_pipeline_sim)

    p = sub.add_parser("pattern-dump", help="write a schedule as CSV, one pattern per rank")
    p.add_argument("--schedule", default="ilwo", choices=["lwo", "ilwo", "la-ilwo"])
    p.add_argument("--pattern-file")
    p.add_argument("--q-lut", type=int, default=512)
    p.add_argument("--programmable-slots", type=int, default=32)
    p.add_argument("--capacity", type=int, default=128, help="enumeration length N")
    p.add_argument("--mask-n", type=int, default=0,
                   help="flag patterns invalid beyond this code length (0 = off)")
    p.add_argument("--q-max", type=int, default=8192)
    p.add_argument("--out", default="schedule.csv")
    _common(p)
    p.set_defaults(func=cmd_pattern_dump)

    return parser


def _known_dests(parser: argparse.ArgumentParser) -> set:
    dests = set()
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                dests |= _known_dests(sp)
        elif action.dest != "help":
            dests.add(action.dest)
    return dests


def _apply_config(parser: argparse.ArgumentParser, values: dict) -> None:
    # installed as parser defaults rather than namespace values: subparsers
    # re-apply their own defaults over a pre-seeded namespace, but an explicit
    # flag still beats a default
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sp in action.choices.values():
                _apply_config(sp, values)
        elif action.dest in values:
            action.default = values[action.dest]


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            values = load_config(known.config)
            valid = _known_dests(parser)
            for key in values:
                if key not in valid:
                    parser.error(f"unknown config key {key!r} in {known.config}")
            _apply_config(parser, values)
        args = parser.parse_args(argv)
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
