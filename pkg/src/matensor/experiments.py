"""Monte-Carlo benchmark harness.

A sweep runs a grid of (snr_db, beta_t, beta_r) operating points, where the
betas are requested pilot-overhead fractions (probe count over grid count)
that are resolved to near-square probe subgrids. For every point and trial
the harness draws one channel and one observation, hands the identical
observation to every estimator, and records the full-grid NMSE per row.

Determinism: every random draw comes from a generator keyed by the master
seed plus the grid-point and trial indices, never from global state, so a
given (config, seed) pair reproduces the same rows byte for byte no matter
the thread count. Wall times are recorded on the in-memory rows for
diagnostics but deliberately left out of the CSV schema.
"""

from __future__ import annotations

import csv
import statistics
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .baselines import build_dictionary, cs_estimate
from .channel import ScenarioConfig, generate_channel
from .cp import kruskal_ok
from .errors import ConfigurationError
from .estimation import run_algorithm1
from .pilots import build_pilot_plan, simulate_pilots

KNOWN_ESTIMATORS = ("tensor", "somp", "omp")

ROWS_SCHEMA = "matensor-rows-v1"
SUMMARY_SCHEMA = "matensor-summary-v1"

ROW_FIELDS = ("estimator", "snr_db", "beta_t", "beta_r", "trial", "nmse",
              "iterations", "seed")
SUMMARY_FIELDS = ("estimator", "snr_db", "beta_t", "beta_r", "trials",
                  "median_nmse", "mean_nmse")


@dataclass(frozen=True)
class SweepSpec:
    """Operating-point grid for one benchmark run.

    Beta entries may be None, which keeps the base scenario's pilot areas
    for that point instead of resolving a fraction.
    """

    base: ScenarioConfig
    snr_grid: tuple = (15.0,)
    beta_t_grid: tuple = (None,)
    beta_r_grid: tuple = (None,)
    trials: int = 1
    estimators: tuple = ("tensor", "somp")
    grid_size: int = 64

    def __post_init__(self):
        object.__setattr__(self, "snr_grid", tuple(float(v) for v in self.snr_grid))
        object.__setattr__(
            self,
            "beta_t_grid",
            tuple(None if v is None else float(v) for v in self.beta_t_grid),
        )
        object.__setattr__(
            self,
            "beta_r_grid",
            tuple(None if v is None else float(v) for v in self.beta_r_grid),
        )
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.trials < 1:
            raise ConfigurationError(f"trials must be at least 1, got {self.trials}")
        if not self.snr_grid or not self.beta_t_grid or not self.beta_r_grid:
            raise ConfigurationError("sweep grids must not be empty")
        for name in self.estimators:
            if name not in KNOWN_ESTIMATORS:
                raise ConfigurationError(
                    f"unknown estimator {name!r}; known: {KNOWN_ESTIMATORS}"
                )
        if not self.estimators:
            raise ConfigurationError("estimators must not be empty")
        for beta in self.beta_t_grid + self.beta_r_grid:
            if beta is not None and not (0.0 < beta <= 1.0):
                raise ConfigurationError(f"beta must lie in (0, 1], got {beta}")
        if self.grid_size < 2:
            raise ConfigurationError(
                f"grid_size must be at least 2, got {self.grid_size}"
            )


@dataclass
class ResultRow:
    """One estimator on one trial of one operating point."""

    estimator: str
    snr_db: float
    beta_t: float
    beta_r: float
    trial: int
    nmse: float
    iterations: int
    seed: int
    wall_time: float  # diagnostic only, not serialized


@dataclass
class SummaryRow:
    """Aggregated NMSE statistics of one estimator at one operating point."""

    estimator: str
    snr_db: float
    beta_t: float
    beta_r: float
    trials: int
    median_nmse: float
    mean_nmse: float


def resolve_pilot_area(
    beta: float, grid_shape: tuple[int, int], divisor: int = 1
) -> tuple[int, int]:
    """Near-square probe subgrid covering a fraction ``beta`` of a grid.

    Targets ``beta * nx * ny`` positions with at least 2 per axis, then
    nudges the counts so the total is divisible by ``divisor`` (the receive
    side needs whole movement rounds). Raises ConfigurationError when no
    subgrid within the region satisfies the constraints.
    """
    nx, ny = int(grid_shape[0]), int(grid_shape[1])
    if not (0.0 < beta <= 1.0):
        raise ConfigurationError(f"beta must lie in (0, 1], got {beta}")
    target = beta * nx * ny
    ax = min(max(2, round(np.sqrt(target))), nx)
    ay = min(max(2, round(target / ax)), ny)
    if divisor <= 1 or (ax * ay) % divisor == 0:
        return int(ax), int(ay)
    # walk outward from the target shape until the count divides evenly
    for distance in range(1, nx + ny):
        for dx in range(-distance, distance + 1):
            dy = distance - abs(dx)
            for sy in ((dy, -dy) if dy else (0,)):
                cx, cy = ax + dx, ay + sy
                if 2 <= cx <= nx and 2 <= cy <= ny and (cx * cy) % divisor == 0:
                    return int(cx), int(cy)
    raise ConfigurationError(
        f"no {nx}x{ny} subgrid near beta={beta} has a position count "
        f"divisible by {divisor}"
    )


def scenario_for_point(
    base: ScenarioConfig,
    snr_db: float,
    beta_t: float | None,
    beta_r: float | None,
) -> ScenarioConfig:
    """Specialize the base scenario to one operating point."""
    tx_area = (
        base.tx_pilot_area
        if beta_t is None
        else resolve_pilot_area(beta_t, base.tx_grid_shape)
    )
    rx_area = (
        base.rx_pilot_area
        if beta_r is None
        else resolve_pilot_area(beta_r, base.rx_grid_shape, divisor=base.n_rx)
    )
    return replace(
        base, snr_db=snr_db, tx_pilot_area=tx_area, rx_pilot_area=rx_area
    )


def _effective_beta(requested: float | None, probes: int, grid: int) -> float:
    if requested is not None:
        return float(requested)
    return probes / grid


def _run_point(
    gp_index: int,
    point: tuple[float, float | None, float | None],
    spec: SweepSpec,
    seed: int,
    verbose: bool,
) -> list[ResultRow]:
    snr_db, beta_t, beta_r = point
    cfg = scenario_for_point(spec.base, snr_db, beta_t, beta_r)
    plan = build_pilot_plan(cfg)
    ix, iy = cfg.tx_pilot_area
    jx, jy = cfg.rx_pilot_area
    if "tensor" in spec.estimators:
        for side, d1, d2, d3, rank in (
            ("tx", iy, ix, cfg.n_rx, cfg.tx_paths),
            ("rx", jy, jx, cfg.n_tx, cfg.rx_paths),
        ):
            if not kruskal_ok(d1, d2, d3, rank):
                warnings.warn(
                    f"{side} pilot tensor ({d1}, {d2}, {d3}) fails the rank-"
                    f"{rank} uniqueness condition; estimates may be ambiguous",
                    RuntimeWarning,
                )
    dictionary = None
    if any(name in spec.estimators for name in ("somp", "omp")):
        dictionary = build_dictionary(plan, spec.grid_size)
    row_beta_t = _effective_beta(beta_t, cfg.tx_probe_count, cfg.tx_grid_count)
    row_beta_r = _effective_beta(beta_r, cfg.rx_probe_count, cfg.rx_grid_count)

    rows: list[ResultRow] = []
    for trial in range(spec.trials):
        channel = generate_channel(cfg, np.random.default_rng([seed, gp_index, trial, 0]))
        obs = simulate_pilots(plan, channel, np.random.default_rng([seed, gp_index, trial, 1]))
        for name in spec.estimators:
            start = time.perf_counter()
            if name == "tensor":
                result = run_algorithm1(
                    obs,
                    plan,
                    random_state=np.random.default_rng([seed, gp_index, trial, 2]),
                    truth=channel,
                )
                iterations = sum(r.iterations for r in result.als_reports)
            else:
                result = cs_estimate(
                    obs,
                    plan,
                    grid_size=spec.grid_size,
                    method=name,
                    dictionary=dictionary,
                    truth=channel,
                )
                iterations = 0
            rows.append(
                ResultRow(
                    estimator=name,
                    snr_db=snr_db,
                    beta_t=row_beta_t,
                    beta_r=row_beta_r,
                    trial=trial,
                    nmse=result.nmse,
                    iterations=iterations,
                    seed=seed,
                    wall_time=time.perf_counter() - start,
                )
            )
    if verbose:
        spent = sum(r.wall_time for r in rows)
        print(
            f"[matensor] point {gp_index + 1}: snr={snr_db} beta_t={row_beta_t:.4g} "
            f"beta_r={row_beta_r:.4g} done in {spent:.1f}s",
            file=sys.stderr,
        )
    return rows


def run_sweep(
    spec: SweepSpec, seed: int = 0, threads: int = 1, verbose: bool = False
) -> list[ResultRow]:
    """Run the full sweep and return rows in canonical order.

    Grid points are independent tasks executed on up to ``threads`` workers;
    trials within a point share the point's pilot plan and dictionary. The
    returned row order and every numeric value depend only on (spec, seed).
    """
    if threads < 1:
        raise ConfigurationError(f"threads must be at least 1, got {threads}")
    points = [
        (snr, bt, br)
        for snr in spec.snr_grid
        for bt in spec.beta_t_grid
        for br in spec.beta_r_grid
    ]
    if threads == 1 or len(points) == 1:
        chunks = [
            _run_point(i, p, spec, seed, verbose) for i, p in enumerate(points)
        ]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(_run_point, i, p, spec, seed, verbose)
                for i, p in enumerate(points)
            ]
            chunks = [f.result() for f in futures]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r.estimator, r.snr_db, r.beta_t, r.beta_r, r.trial))
    return rows


def aggregate(rows: list[ResultRow]) -> list[SummaryRow]:
    """Median and mean NMSE per (estimator, operating point)."""
    if not rows:
        raise ValueError("no rows to aggregate")
    groups: dict[tuple, list[float]] = {}
    for row in rows:
        key = (row.estimator, row.snr_db, row.beta_t, row.beta_r)
        groups.setdefault(key, []).append(row.nmse)
    summary = []
    for key in sorted(groups):
        values = groups[key]
        summary.append(
            SummaryRow(
                estimator=key[0],
                snr_db=key[1],
                beta_t=key[2],
                beta_r=key[3],
                trials=len(values),
                median_nmse=float(statistics.median(values)),
                mean_nmse=float(sum(values) / len(values)),
            )
        )
    return summary


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_rows_csv(rows: list[ResultRow], path) -> None:
    """Write per-trial rows with a versioned schema header."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {ROWS_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ROW_FIELDS)
        for row in rows:
            writer.writerow([_format(getattr(row, f)) for f in ROW_FIELDS])


def read_rows_csv(path) -> list[ResultRow]:
    """Read rows written by :func:`write_rows_csv` (wall_time comes back 0)."""
    with open(path, "r", newline="") as fh:
        header = fh.readline().strip()
        if header != f"# schema: {ROWS_SCHEMA}":
            raise ValueError(f"{path}: unsupported schema header {header!r}")
        reader = csv.DictReader(fh)
        rows = []
        for rec in reader:
            rows.append(
                ResultRow(
                    estimator=rec["estimator"],
                    snr_db=float(rec["snr_db"]),
                    beta_t=float(rec["beta_t"]),
                    beta_r=float(rec["beta_r"]),
                    trial=int(rec["trial"]),
                    nmse=float(rec["nmse"]),
                    iterations=int(rec["iterations"]),
                    seed=int(rec["seed"]),
                    wall_time=0.0,
                )
            )
    return rows


def write_summary_csv(summary: list[SummaryRow], path) -> None:
    """Write aggregated statistics with a versioned schema header."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {SUMMARY_SCHEMA}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_FIELDS)
        for row in summary:
            writer.writerow([_format(getattr(row, f)) for f in SUMMARY_FIELDS])
