"""Command-line interface.

Subcommands:

* ``run``: execute the configured Monte-Carlo sweep and write rows.csv and
  summary.csv into the output directory.
* ``check``: validate a config and report grid sizes, tensor uniqueness
  verdicts, and pilot overhead without running anything.
* ``demo``: one noiseless end-to-end estimation run with printed angle and
  gain errors.

Without ``--config`` the desk-scale preset is used. ``--threads`` falls back
to the MA_TENSOR_THREADS environment variable, then to 1. Exit codes:
0 success, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from .channel import generate_channel
from .config_io import Settings, load_settings, settings_from_scenario
from .cp import kruskal_ok
from .errors import ConfigurationError
from .estimation import TensorChannelEstimator, match_angle_sets
from .experiments import aggregate, run_sweep, write_rows_csv, write_summary_csv
from .pilots import (
    build_pilot_plan,
    exhaustive_pilot_bound,
    pilot_overhead,
    simulate_pilots,
)
from .presets import desk_scale


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matensor",
        description="Movable-antenna MIMO channel estimation benchmark",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file (default: desk preset)")
    common.add_argument("--seed", type=int, default=0, help="master random seed")
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker threads (default: MA_TENSOR_THREADS or 1)",
    )
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the Monte-Carlo sweep")
    sub.add_parser("check", parents=[common], help="validate the configuration")
    sub.add_parser("demo", parents=[common], help="noiseless end-to-end example")
    return parser


def _settings(args) -> Settings:
    if args.config:
        settings = load_settings(args.config)
    else:
        settings = settings_from_scenario(desk_scale(), trials=5)
    if args.out:
        settings.out_dir = args.out
    return settings


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("MA_TENSOR_THREADS", "").strip()
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigurationError(
                f"MA_TENSOR_THREADS must be an integer, got {env!r}"
            ) from exc
    return 1


def cmd_run(args) -> int:
    settings = _settings(args)
    rows = run_sweep(
        settings.sweep, seed=args.seed, threads=_threads(args), verbose=args.verbose
    )
    summary = aggregate(rows)
    os.makedirs(settings.out_dir, exist_ok=True)
    rows_path = os.path.join(settings.out_dir, "rows.csv")
    summary_path = os.path.join(settings.out_dir, "summary.csv")
    write_rows_csv(rows, rows_path)
    write_summary_csv(summary, summary_path)
    print(f"wrote {rows_path} ({len(rows)} rows) and {summary_path}")
    header = f"{'estimator':<9} {'snr_db':>7} {'beta_t':>7} {'beta_r':>7} " \
             f"{'trials':>6} {'median_nmse':>12} {'mean_nmse':>12}"
    print(header)
    for s in summary:
        print(
            f"{s.estimator:<9} {s.snr_db:>7.4g} {s.beta_t:>7.4g} {s.beta_r:>7.4g} "
            f"{s.trials:>6d} {s.median_nmse:>12.4e} {s.mean_nmse:>12.4e}"
        )
    return 0


def cmd_check(args) -> int:
    settings = _settings(args)
    cfg = settings.scenario
    txx, txy = cfg.tx_grid_shape
    rxx, rxy = cfg.rx_grid_shape
    print(f"scenario OK ({cfg.tx_region[0]}x{cfg.tx_region[1]} wavelength regions)")
    print(f"tx grid: {txx} x {txy} = {cfg.tx_grid_count} positions")
    print(f"rx grid: {rxx} x {rxy} = {cfg.rx_grid_count} positions")
    ix, iy = cfg.tx_pilot_area
    jx, jy = cfg.rx_pilot_area
    rounds = cfg.rx_probe_count // cfg.n_rx
    print(f"stage-1 probes: {ix} x {iy} = {cfg.tx_probe_count}")
    print(f"stage-2 probes: {jx} x {jy} = {cfg.rx_probe_count} in {rounds} rounds")
    for side, dims, rank in (
        ("tx", (iy, ix, cfg.n_rx), cfg.tx_paths),
        ("rx", (jy, jx, cfg.n_tx), cfg.rx_paths),
    ):
        verdict = (
            "satisfied" if kruskal_ok(*dims, rank) else "NOT satisfied"
        )
        print(f"{side} tensor {dims} rank {rank}: uniqueness condition {verdict}")
    plan = build_pilot_plan(cfg)
    overhead = pilot_overhead(plan)
    bound = exhaustive_pilot_bound(cfg)
    print(f"pilot overhead: {overhead} symbols "
          f"(exhaustive sounding bound: {bound:.3e})")
    return 0


def cmd_demo(args) -> int:
    settings = _settings(args)
    cfg = settings.scenario
    import dataclasses

    cfg = dataclasses.replace(cfg, snr_db=math.inf)  # noiseless showcase
    print(
        f"demo: {cfg.tx_region[0]}x{cfg.tx_region[1]} wavelength regions, "
        f"{cfg.n_tx}x{cfg.n_rx} antennas, {cfg.tx_paths} paths, noiseless"
    )
    plan = build_pilot_plan(cfg)
    rng = np.random.default_rng(args.seed)
    channel = generate_channel(cfg, rng)
    obs = simulate_pilots(plan, channel, rng)
    estimator = TensorChannelEstimator(random_state=args.seed).fit(obs, plan)
    est = estimator.angles_
    perm_tx = match_angle_sets(channel.tx_theta, channel.tx_phi, est.tx_theta, est.tx_phi)
    perm_rx = match_angle_sets(channel.rx_theta, channel.rx_phi, est.rx_theta, est.rx_phi)
    tx_err = np.max(
        np.abs(
            np.concatenate(
                [
                    channel.tx_theta - est.tx_theta[perm_tx],
                    channel.tx_phi - est.tx_phi[perm_tx],
                ]
            )
        )
    )
    rx_err = np.max(
        np.abs(
            np.concatenate(
                [
                    channel.rx_theta - est.rx_theta[perm_rx],
                    channel.rx_phi - est.rx_phi[perm_rx],
                ]
            )
        )
    )
    print(f"max departure-angle error: {tx_err:.3e}")
    print(f"max arrival-angle error: {rx_err:.3e}")
    prm_matched = estimator.prm_[np.ix_(perm_rx, perm_tx)]
    prm_err = np.linalg.norm(prm_matched - channel.prm) / np.linalg.norm(channel.prm)
    print(f"gain matrix relative error: {prm_err:.3e}")
    print(f"full-grid channel NMSE: {estimator.nmse(channel):.3e}")
    if args.verbose:
        print(f"ALS cycles: {estimator.n_iter_}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "check": cmd_check, "demo": cmd_demo}
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
