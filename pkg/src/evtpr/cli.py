"""Batch command-line surface: simulate, voxelize, tpr, reconstruct, plan,
pipeline, metrics, bench.

Exit codes: 0 success, 2 usage error, 3 format error, 4 numeric/contract
violation. All randomness flows from --seed; outputs are reproducible from
(subcommand, flags, seed). EVTPR_THREADS provides the --threads default.
"""

from __future__ import annotations

import argparse
import math
import os
import statistics
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import dataset, io_formats, metrics, representations
from .errors import FormatError, InvalidInputError, NumericError
from .events import (
    DEFAULT_EPS,
    IntensityFrame,
    reconstruct_log_intensity,
    simulate_events,
)
from .kernels import PipelineConfig
from .pipeline import init_pipeline_params, pipeline_forward

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_CONTRACT = 4


class UsageError(Exception):
    pass


def _parse_rational(text: str) -> Fraction:
    """Seconds as a decimal ('0.5', '0.5s') or exact rational ('1/3')."""
    text = text.strip()
    if text.endswith("s"):
        text = text[:-1]
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError("cannot parse time value %r" % text) from exc


def _default_threads() -> int:
    env = os.environ.get("EVTPR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _load_clip(frames_dir: str, timestamps: str | None) -> list[IntensityFrame]:
    d = Path(frames_dir)
    if not d.is_dir():
        raise UsageError("frames directory %s does not exist" % frames_dir)
    paths = sorted(p for p in d.iterdir()
                   if p.suffix.lower() in (".pgm", ".ppm"))
    if not paths:
        raise UsageError("no .pgm/.ppm frames in %s" % frames_dir)
    ts_path = Path(timestamps) if timestamps else d / "timestamps.txt"
    if not ts_path.is_file():
        raise UsageError("missing timestamps file %s" % ts_path)
    lines = [ln.strip() for ln in ts_path.read_text().splitlines() if ln.strip()]
    if len(lines) != len(paths):
        raise UsageError("timestamps file has %d entries for %d frames"
                         % (len(lines), len(paths)))
    try:
        stamps = [int(ln) for ln in lines]
    except ValueError as exc:
        raise UsageError("timestamps must be integer microseconds") from exc
    return [IntensityFrame(timestamp=t, pixels=io_formats.read_frame(str(p)))
            for p, t in zip(paths, stamps)]


def cmd_simulate(args) -> int:
    frames = _load_clip(args.frames_dir, args.timestamps)
    stream = simulate_events(frames, C=args.threshold, eps=args.eps)
    io_formats.write_events(stream, args.output)
    print("wrote %d events to %s" % (len(stream), args.output))
    return EXIT_OK


def cmd_voxelize(args) -> int:
    stream = io_formats.read_events(args.events)
    t0 = args.t0 if args.t0 is not None else stream.t_begin
    t1 = args.t1 if args.t1 is not None else stream.t_end
    grid = representations.build_voxel_grid(stream, args.bins, t0, t1)
    io_formats.write_tensor(grid.data, args.output)
    print("voxel grid dims %s -> %s" % (list(grid.data.shape), args.output))
    return EXIT_OK


def cmd_tpr(args) -> int:
    half_window_s = _parse_rational(args.half_window)
    spec = representations.tpr_granularity(half_window_s, args.levels,
                                           args.moments, Fraction(args.ratio))
    if args.print_granularity:
        print("%s s" % spec.delta_t)
    if args.output:
        stream = io_formats.read_events(args.events)
        if args.center is not None:
            center = stream.t_begin + float(_parse_rational(args.center)) * 1e6
        else:
            center = (stream.t_begin + stream.t_end) / 2.0
        pyramid = representations.build_tpr(
            stream, center, float(half_window_s) * 1e6,
            args.levels, args.moments, float(Fraction(args.ratio)))
        io_formats.write_tensor(pyramid.data, args.output)
        print("tpr dims %s -> %s" % (list(pyramid.data.shape), args.output))
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    pixels = io_formats.read_frame(args.frame)
    frame = IntensityFrame(timestamp=args.frame_time, pixels=pixels)
    stream = io_formats.read_events(args.events)
    if args.at > stream.t_end or args.frame_time < stream.t_begin:
        raise InvalidInputError("event stream does not cover (frame time, t]")
    log_field = reconstruct_log_intensity(frame, stream, args.at,
                                          C=args.threshold, eps=args.eps)
    intensity = np.clip(np.exp(log_field) - args.eps, 0.0, 1.0)
    io_formats.write_frame(intensity, args.output)
    print("reconstructed frame at t=%d -> %s" % (args.at, args.output))
    return EXIT_OK


def cmd_plan(args) -> int:
    plans = dataset.plan_windows(args.frames, args.nin, args.skip, args.stride)
    text = dataset.format_manifest(plans)
    Path(args.output).write_text(text)
    print("planned %d windows -> %s" % (len(plans), args.output))
    return EXIT_OK


def cmd_pipeline(args) -> int:
    frames = _load_clip(args.frames_dir, args.timestamps)
    stream = io_formats.read_events(args.events)
    times = [float(_parse_rational(tok)) for tok in args.times.split(",") if tok]
    if not times:
        raise UsageError("--times must list at least one timestamp")
    config = PipelineConfig(
        n_in=len(frames), c_r=args.cr, c_t=args.ct, c_ts=args.cts,
        window_size=args.window, heads=args.heads, voxel_bins=args.bins,
        tpr_levels=args.levels, tpr_moments=args.moments,
        tpr_ratio=args.ratio, encoder_depth=args.encoder_depth,
    )
    params = init_pipeline_params(config, args.seed)
    outputs, report = pipeline_forward(frames, stream, args.scale, times,
                                       config, params, threads=args.threads)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(outputs):
        io_formats.write_frame(frame, str(out_dir / ("out_%03d.ppm" % i)))
    lines = [
        "holistic_extractor_calls: %d" % report.holistic_calls,
        "output_frames: %d" % len(outputs),
        "output_size: %dx%d" % (outputs[0].shape[0], outputs[0].shape[1]),
        "softmax_row_sum_max_dev: %.3e" % report.softmax_row_sum_max_dev,
    ]
    for name, shape in sorted(report.stage_shapes.items()):
        lines.append("shape %s: %s" % (name, "x".join(str(v) for v in shape)))
    (out_dir / "report.txt").write_text("".join(l + "\n" for l in lines))
    print("wrote %d frames and report.txt to %s" % (len(outputs), out_dir))
    return EXIT_OK


def _load_dir_frames(path: str) -> list[np.ndarray]:
    d = Path(path)
    if not d.is_dir():
        raise UsageError("directory %s does not exist" % path)
    return [io_formats.read_frame(str(p)) for p in sorted(d.iterdir())
            if p.suffix.lower() in (".pgm", ".ppm")]


def cmd_metrics(args) -> int:
    preds = _load_dir_frames(args.pred_dir)
    gts = _load_dir_frames(args.gt_dir)
    if len(preds) != len(gts) or not preds:
        raise UsageError("prediction and ground-truth frame counts differ")
    rows = ["index,time,psnr,ssim"]
    n = len(preds)
    for i, (p, g) in enumerate(zip(preds, gts)):
        rep = metrics.evaluate(p, g, y_only=args.y_only,
                               border_crop=args.border_crop)
        t = i / (n - 1) if n > 1 else 0.0
        psnr_text = "inf" if math.isinf(rep.psnr) else "%.4f" % rep.psnr
        rows.append("%d,%.6f,%s,%.6f" % (i, t, psnr_text, rep.ssim))
    Path(args.output).write_text("".join(r + "\n" for r in rows))
    print("wrote %d metric rows to %s" % (n, args.output))
    return EXIT_OK


def cmd_bench(args) -> int:
    raw_bytes = Path(args.events).stat().st_size
    elapsed = []
    result = None
    for _ in range(args.repeat):
        start = time.perf_counter()
        stream = io_formats.read_events(args.events)
        if args.repr == "voxel":
            out = representations.build_voxel_grid(
                stream, args.bins, stream.t_begin, max(stream.t_end, stream.t_begin + 1))
        else:
            center = (stream.t_begin + stream.t_end) / 2.0
            half = max((stream.t_end - stream.t_begin) / 2.0, 32.0)
            out = representations.build_tpr(stream, center, half,
                                            args.levels, args.moments, args.ratio)
        elapsed.append(time.perf_counter() - start)
        if result is None:
            result = out.data
        elif not np.array_equal(result, out.data):
            raise NumericError("bench repeats produced different representations")
    med = statistics.median(elapsed)
    n_events = len(io_formats.read_events(args.events))
    print("events: %d" % n_events)
    print("median_seconds: %.6f" % med)
    print("events_per_second: %.1f" % (n_events / med if med > 0 else float("inf")))
    print("bytes_per_second: %.1f" % (raw_bytes / med if med > 0 else float("inf")))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evtpr",
        description="Event-stream representations and forward decoding pipeline")
    parser.add_argument("--threads", type=int, default=_default_threads(),
                        help="cap internal parallelism (outputs are identical for any value)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate events from a frame clip")
    p.add_argument("frames_dir")
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--timestamps", default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("voxelize", help="accumulate events into a voxel grid")
    p.add_argument("events")
    p.add_argument("--bins", type=int, required=True)
    p.add_argument("--t0", type=int, default=None)
    p.add_argument("--t1", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_voxelize)

    p = sub.add_parser("tpr", help="build a temporal pyramid representation")
    p.add_argument("events", nargs="?", default=None)
    p.add_argument("--L", dest="levels", type=int, required=True)
    p.add_argument("--Mp", dest="moments", type=int, required=True)
    p.add_argument("--r", dest="ratio", required=True)
    p.add_argument("--half-window", required=True,
                   help="seconds, decimal ('0.5s') or rational ('1/2')")
    p.add_argument("--center", default=None,
                   help="seconds after stream start (default: stream midpoint)")
    p.add_argument("--print-granularity", action="store_true")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_tpr)

    p = sub.add_parser("reconstruct", help="integrate events onto a keyframe")
    p.add_argument("frame")
    p.add_argument("events")
    p.add_argument("--frame-time", type=int, required=True)
    p.add_argument("--at", type=int, required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("plan", help="emit a sliding-window manifest")
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--nin", type=int, required=True)
    p.add_argument("--skip", type=int, required=True)
    p.add_argument("--stride", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("pipeline", help="run the forward decoding pipeline")
    p.add_argument("frames_dir")
    p.add_argument("events")
    p.add_argument("--scale", type=float, required=True)
    p.add_argument("--times", required=True,
                   help="comma-separated normalized timestamps in [0,1]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--timestamps", default=None)
    p.add_argument("--cr", type=int, default=8)
    p.add_argument("--ct", type=int, default=16)
    p.add_argument("--cts", type=int, default=8)
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--bins", type=int, default=4)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--moments", type=int, default=2)
    p.add_argument("--ratio", type=float, default=3.0)
    p.add_argument("--encoder-depth", type=int, default=2)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("metrics", help="PSNR/SSIM per frame as CSV")
    p.add_argument("pred_dir")
    p.add_argument("gt_dir")
    p.add_argument("--y-only", action="store_true")
    p.add_argument("--border-crop", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("bench", help="representation-building throughput")
    p.add_argument("events")
    p.add_argument("--repr", choices=["voxel", "tpr"], default="voxel")
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--bins", type=int, default=8)
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--moments", type=int, default=2)
    p.add_argument("--ratio", type=float, default=3.0)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print("format error: %s" % exc, file=sys.stderr)
        return EXIT_FORMAT
    except (InvalidInputError, NumericError) as exc:
        print("contract violation: %s" % exc, file=sys.stderr)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
