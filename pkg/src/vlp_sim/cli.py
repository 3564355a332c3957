"""Command-line entry points.

Subcommands: cdf, snr-sweep, sync-test, scan-demo.  Data goes to files under
--out; everything else (progress, errors, timing) goes to stderr.  Exit
codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .estimator import estimate_position, position_error
from .experiments import (
    ExperimentConfig,
    noise_sigma,
    run_cdf_experiment,
    run_snr_sweep,
    run_sync_test,
)
from .geometry import ReceiverState, build_beam_grid
from .io import ConfigError, build_experiment, load_config, write_results, write_trace_csv
from .orientation import sample_receiver_normal
from .scan import ScanPlan, make_pilot, run_scan

THREADS_ENV = "VLP_SIM_THREADS"


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; the CLI contract wants 1
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON config file")
    common.add_argument("--seed", type=int, metavar="U64", help="master seed")
    common.add_argument("--out", default=".", metavar="DIR", help="output directory (default: .)")
    common.add_argument(
        "--orientation",
        choices=["fixed", "random", "random-euler", "random-spherical"],
        help="receiver orientation model",
    )
    common.add_argument(
        "--snr",
        metavar="DB[,DB...]",
        help="SNR in dB, comma list for sweeps; 'inf' means noiseless",
    )
    common.add_argument(
        "--threads",
        type=int,
        metavar="N",
        help=f"worker threads (falls back to ${THREADS_ENV}, then config)",
    )

    parser = _Parser(prog="vlp-sim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("cdf", parents=[common], help="error CDFs over the position grid")
    sub.add_parser("snr-sweep", parents=[common], help="mean error versus SNR")
    sub.add_parser("sync-test", parents=[common], help="pilot realignment validation")
    demo = sub.add_parser("scan-demo", parents=[common], help="dump one sweep trace as CSV")
    demo.add_argument("--rx", metavar="X,Y,Z", help="receiver position in metres (default: room centre)")
    return parser


def _parse_snr_list(text: str | None):
    if text is None:
        return None
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as e:
        raise ConfigError(f"bad --snr value {text!r}: {e}") from e


def _resolve_threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as e:
            raise ConfigError(f"bad {THREADS_ENV} value {env!r}") from e
    return None


def _scan_demo(cfg: ExperimentConfig, args, resolved) -> None:
    if args.rx is not None:
        try:
            point = np.array([float(v) for v in args.rx.split(",")])
            if point.shape != (3,):
                raise ValueError("need exactly three coordinates")
        except ValueError as e:
            raise ConfigError(f"bad --rx value {args.rx!r}: {e}") from e
    else:
        point = np.array(
            [cfg.room.width_m / 2.0, cfg.room.depth_m / 2.0, (cfg.h_min_m + cfg.h_max_m) / 2.0]
        )
    snr = None if cfg.snr_list_db is None else cfg.snr_list_db[0]
    sigma = noise_sigma(cfg, snr)
    grid = build_beam_grid(cfg.azimuth_step_deg, cfg.elevation_step_deg)
    pilot = make_pilot(cfg.channel.p_opt_w, cfg.pilot_len) if cfg.pilot_len else None
    plan = ScanPlan(grid, cfg.dwell_s, pilot)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((cfg.master_seed,))))
    normal = sample_receiver_normal(cfg.orientation, rng)
    rx = ReceiverState(point, normal, cfg.fov_deg)
    trace = run_scan(plan, cfg.room, rx, cfg.channel, sigma, rng)
    est = estimate_position(cfg.room.emitter_pos, trace.samples[cfg.pilot_len :], grid, cfg.channel, None, sigma)
    err = position_error(point, est.position)
    path = write_trace_csv(trace, grid, cfg.pilot_len, os.path.join(args.out, "scan_trace.csv"))
    print(f"wrote {path}", file=sys.stderr)
    print(
        f"receiver at {point.tolist()}, estimate {est.position.round(4).tolist()} "
        f"({est.status}), error {err.total_m:.4g} m",
        file=sys.stderr,
    )


_RUNNERS = {"cdf": run_cdf_experiment, "snr-sweep": run_snr_sweep, "sync-test": run_sync_test}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1

    try:
        overrides = {
            "seed": args.seed,
            "orientation_mode": args.orientation,
            "snr_db": _parse_snr_list(args.snr),
            "threads": _resolve_threads(args),
            "mode": args.command if args.command in _RUNNERS else None,
        }
        resolved, applied_defaults = load_config(args.config, overrides)
        cfg = build_experiment(resolved)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1

    try:
        if args.command == "scan-demo":
            _scan_demo(cfg, args, resolved)
            return 0
        t0 = time.perf_counter()
        result = _RUNNERS[args.command](cfg)
        wall = time.perf_counter() - t0
        files = write_results(result, args.out, resolved, applied_defaults, wall_time_s=wall)
        for f in files:
            print(f"wrote {f}", file=sys.stderr)
        print(f"{args.command} finished in {wall:.1f} s", file=sys.stderr)
        return 0
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # noqa: BLE001 - boundary: report and signal failure
        print(f"runtime error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
