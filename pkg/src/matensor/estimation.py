"""Angle and gain recovery from tensorized pilot observations.

The pilot tensors are rank-``paths`` CP models whose first two factors are
Vandermonde: consecutive entries of a factor column are related by the
constant phase ratio ``exp(-2j*pi*pitch*angle/wavelength)``. After CP
decomposition, each column's generator is estimated by the least-squares
ratio of its shifted leading subvector, which is exactly invariant to the
column's unknown complex scale, and the virtual angle follows from the
generator's phase. Path gains are then recovered jointly from both pilot
stages by one linear least-squares fit; the component permutation and
scaling ambiguities of the two CP models are absorbed by the fitted gain
matrix, so the reconstructed channel is ambiguity-free.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .channel import (
    MultipathChannel,
    ScenarioConfig,
    channel_matrix,
    full_grid_nmse,
    steering_matrix,
)
from .cp import AlsReport, FactorSet, cp_als
from .errors import DegenerateColumnError, EstimationError
from .linalg import kronecker, least_squares, unvec, vec
from .pilots import TX_POWER, PilotObservation, PilotPlan
from .validation import as_complex_array, as_positions, require_fitted


def estimate_generator(column) -> complex:
    """Least-squares phase-ratio generator of a geometric column.

    For ``column[k] ~ c * w**k`` returns the least-squares estimate
    ``w = <column[:-1], column[1:]> / ||column[:-1]||**2``, which does not
    depend on the complex scale ``c``.
    """
    col = as_complex_array(column, ndim=1, name="column")
    if col.size < 2:
        raise ValueError(f"column must have at least 2 entries, got {col.size}")
    lead = col[:-1]
    denom = np.vdot(lead, lead)
    if denom == 0.0:
        raise DegenerateColumnError("leading subvector is exactly zero")
    w = complex(np.vdot(lead, col[1:]) / denom)
    if not np.isfinite(w.real) or not np.isfinite(w.imag):
        raise DegenerateColumnError("generator estimate is not finite")
    return w


def angle_from_generator(w: complex, pitch: float, wavelength: float = 1.0) -> float:
    """Virtual angle whose steering generator over ``pitch`` spacing is ``w``."""
    return -wavelength / (2.0 * np.pi * pitch) * float(np.angle(w))


def _extract_angles(
    factors: FactorSet, pitch: float, wavelength: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-component (theta, phi) from a pilot tensor's factor set.

    Mode-2 columns vary along x (theta); mode-1 columns vary along y (phi).
    """
    theta = np.array(
        [
            angle_from_generator(estimate_generator(factors.u2[:, l]), pitch, wavelength)
            for l in range(factors.rank)
        ]
    )
    phi = np.array(
        [
            angle_from_generator(estimate_generator(factors.u1[:, l]), pitch, wavelength)
            for l in range(factors.rank)
        ]
    )
    return theta, phi


def extract_angles_tx(
    factors: FactorSet, cfg: ScenarioConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Virtual departure angles from the stage-1 tensor factors."""
    return _extract_angles(factors, cfg.grid_pitch, cfg.wavelength)


def extract_angles_rx(
    factors: FactorSet, cfg: ScenarioConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Virtual arrival angles from the stage-2 tensor factors."""
    return _extract_angles(factors, cfg.grid_pitch, cfg.wavelength)


@dataclass
class AngleEstimates:
    """Virtual angle estimates for both sides, clipped to the physical range.

    ``n_clipped`` counts how many raw values fell outside [-1, 1] and were
    clipped; nonzero values flag an unreliable decomposition.
    """

    tx_theta: np.ndarray
    tx_phi: np.ndarray
    rx_theta: np.ndarray
    rx_phi: np.ndarray
    n_clipped: int = 0


def build_angle_estimates(tx_theta, tx_phi, rx_theta, rx_phi) -> AngleEstimates:
    """Assemble estimates, clipping each virtual angle into [-1, 1]."""
    arrays = [np.asarray(a, dtype=float).ravel() for a in (tx_theta, tx_phi, rx_theta, rx_phi)]
    n_clipped = int(sum(np.count_nonzero(np.abs(a) > 1.0) for a in arrays))
    clipped = [np.clip(a, -1.0, 1.0) for a in arrays]
    return AngleEstimates(*clipped, n_clipped=n_clipped)


def estimate_gains(
    obs: PilotObservation, plan: PilotPlan, angles: AngleEstimates
) -> np.ndarray:
    """Path-response matrix by joint least squares over both pilot stages.

    Stacks the vectorized stage-1 and stage-2 measurement models built from
    the estimated steering matrices and solves for the vectorized gain
    matrix. Warns when the stacked system is rank deficient.
    """
    cfg = plan.config
    lam = cfg.wavelength
    root_p = np.sqrt(TX_POWER)
    f0 = steering_matrix(plan.rx_initial, angles.rx_theta, angles.rx_phi, lam)
    g_probe = steering_matrix(plan.tx_moves, angles.tx_theta, angles.tx_phi, lam)
    g0 = steering_matrix(plan.tx_initial, angles.tx_theta, angles.tx_phi, lam)
    f_probe = steering_matrix(plan.rx_probes, angles.rx_theta, angles.rx_phi, lam)
    phi_t = root_p * kronecker(g_probe.T, f0.conj().T)
    phi_r = root_p * kronecker(g0.T, f_probe.conj().T)
    system = np.vstack([phi_t, phi_r])
    rhs = np.concatenate([vec(obs.y_t_matrix), vec(obs.y_r_matrix)])
    gains, rank = least_squares(system, rhs, return_rank=True)
    n_rx_paths = angles.rx_theta.size
    n_tx_paths = angles.tx_theta.size
    if rank < n_rx_paths * n_tx_paths:
        warnings.warn(
            f"gain system is rank deficient ({rank} < {n_rx_paths * n_tx_paths}); "
            f"gain estimates may be unreliable",
            RuntimeWarning,
            stacklevel=2,
        )
    return unvec(gains, n_rx_paths, n_tx_paths)


def estimated_channel(angles: AngleEstimates, prm: np.ndarray) -> MultipathChannel:
    """Package angle and gain estimates as a channel model."""
    return MultipathChannel(
        tx_theta=angles.tx_theta,
        tx_phi=angles.tx_phi,
        rx_theta=angles.rx_theta,
        rx_phi=angles.rx_phi,
        prm=prm,
    )


def reconstruct_channel(
    angles: AngleEstimates,
    prm: np.ndarray,
    rx_positions,
    tx_positions,
    cfg: ScenarioConfig,
) -> np.ndarray:
    """Estimated channel matrix between arbitrary in-region position sets."""
    rx_pos = as_positions(rx_positions, "rx_positions")
    tx_pos = as_positions(tx_positions, "tx_positions")
    for name, pos, region in (
        ("rx_positions", rx_pos, cfg.rx_region),
        ("tx_positions", tx_pos, cfg.tx_region),
    ):
        tol = 1e-9 * max(region)
        if (
            np.any(pos[:, 0] < -tol)
            or np.any(pos[:, 0] > region[0] + tol)
            or np.any(pos[:, 1] < -tol)
            or np.any(pos[:, 1] > region[1] + tol)
        ):
            raise ValueError(f"{name} fall outside the {region} region")
    return channel_matrix(rx_pos, tx_pos, estimated_channel(angles, prm), cfg.wavelength)


@dataclass
class EstimationResult:
    """Output of one estimation run.

    ``h_hat`` is the reconstructed channel for the requested evaluation
    positions. ``nmse`` is filled when the ground-truth channel was supplied.
    ``als_reports`` holds the (stage-1, stage-2) decomposition diagnostics
    and is None for estimators that do not use ALS.
    """

    angles: AngleEstimates
    prm_hat: np.ndarray
    h_hat: np.ndarray
    nmse: float | None = None
    als_reports: tuple[AlsReport, AlsReport] | None = None

    def to_text(self) -> str:
        """Structured text record: angles, gains, NMSE, iteration counts."""

        def floats(a) -> str:
            return " ".join(repr(float(v)) for v in np.asarray(a).ravel())

        prm = self.prm_hat
        parts = " ".join(
            f"{float(v.real)!r} {float(v.imag)!r}"
            for v in prm.ravel()  # row-major entries
        )
        lines = [
            "matensor-estimate v1",
            f"tx_theta: {floats(self.angles.tx_theta)}",
            f"tx_phi: {floats(self.angles.tx_phi)}",
            f"rx_theta: {floats(self.angles.rx_theta)}",
            f"rx_phi: {floats(self.angles.rx_phi)}",
            f"n_clipped: {self.angles.n_clipped}",
            f"prm_shape: {prm.shape[0]} {prm.shape[1]}",
            f"prm: {parts}",
            f"nmse: {'none' if self.nmse is None else repr(float(self.nmse))}",
            (
                "als_iterations: "
                + (
                    "none"
                    if self.als_reports is None
                    else " ".join(str(r.iterations) for r in self.als_reports)
                )
            ),
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EstimationResult":
        """Parse a record produced by :meth:`to_text` (h_hat is not stored)."""
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0] != "matensor-estimate v1":
            raise ValueError("not a matensor-estimate v1 record")
        fields = {}
        for ln in lines[1:]:
            key, _, value = ln.partition(":")
            fields[key.strip()] = value.strip()

        def floats(key: str) -> np.ndarray:
            raw = fields[key]
            return np.array([float(v) for v in raw.split()]) if raw else np.array([])

        rows, cols = (int(v) for v in fields["prm_shape"].split())
        flat = [float(v) for v in fields["prm"].split()]
        prm = np.array(flat[0::2]) + 1j * np.array(flat[1::2])
        angles = AngleEstimates(
            tx_theta=floats("tx_theta"),
            tx_phi=floats("tx_phi"),
            rx_theta=floats("rx_theta"),
            rx_phi=floats("rx_phi"),
            n_clipped=int(fields["n_clipped"]),
        )
        nmse = None if fields["nmse"] == "none" else float(fields["nmse"])
        return cls(
            angles=angles,
            prm_hat=prm.reshape(rows, cols),
            h_hat=np.zeros((0, 0), dtype=np.complex128),
            nmse=nmse,
            als_reports=None,
        )


def _step(name: str, fn):
    try:
        return fn()
    except Exception as exc:
        raise EstimationError(f"{name}: {exc}") from exc


def run_algorithm1(
    obs: PilotObservation,
    plan: PilotPlan,
    tol: float = 1e-10,
    max_iter: int = 1000,
    restarts: int = 3,
    init: str = "svd",
    random_state=None,
    rank_tx: int | None = None,
    rank_rx: int | None = None,
    truth: MultipathChannel | None = None,
    eval_rx=None,
    eval_tx=None,
) -> EstimationResult:
    """Full tensor-decomposition channel estimation pipeline.

    Decomposes both pilot tensors, extracts virtual angles from the
    Vandermonde factors, fits the path gains jointly across stages, and
    reconstructs the channel at the evaluation positions (the parked arrays
    by default). When ``truth`` is given, the result carries the NMSE over
    all grid position pairs.

    Failures are re-raised as :class:`EstimationError` with the step name.
    """
    cfg = plan.config
    rng = np.random.default_rng(random_state)
    rank_tx = cfg.tx_paths if rank_tx is None else int(rank_tx)
    rank_rx = cfg.rx_paths if rank_rx is None else int(rank_rx)

    factors_t, report_t = _step(
        "stage-1 tensor decomposition",
        lambda: cp_als(
            obs.y_t_tensor, rank_tx, tol=tol, max_iter=max_iter,
            restarts=restarts, init=init, rng=rng,
        ),
    )
    factors_r, report_r = _step(
        "stage-2 tensor decomposition",
        lambda: cp_als(
            obs.y_r_tensor, rank_rx, tol=tol, max_iter=max_iter,
            restarts=restarts, init=init, rng=rng,
        ),
    )
    tx_theta, tx_phi = _step(
        "tx angle extraction", lambda: extract_angles_tx(factors_t, cfg)
    )
    rx_theta, rx_phi = _step(
        "rx angle extraction", lambda: extract_angles_rx(factors_r, cfg)
    )
    angles = build_angle_estimates(tx_theta, tx_phi, rx_theta, rx_phi)
    prm_hat = _step("gain estimation", lambda: estimate_gains(obs, plan, angles))
    eval_rx = plan.rx_initial if eval_rx is None else eval_rx
    eval_tx = plan.tx_initial if eval_tx is None else eval_tx
    h_hat = _step(
        "reconstruction",
        lambda: reconstruct_channel(angles, prm_hat, eval_rx, eval_tx, cfg),
    )
    nmse = None
    if truth is not None:
        nmse = _step(
            "evaluation",
            lambda: full_grid_nmse(cfg, truth, estimated_channel(angles, prm_hat)),
        )
    return EstimationResult(
        angles=angles,
        prm_hat=prm_hat,
        h_hat=h_hat,
        nmse=nmse,
        als_reports=(report_t, report_r),
    )


def match_angle_sets(ref_theta, ref_phi, est_theta, est_phi) -> np.ndarray:
    """Pair estimated components with reference ones.

    Returns an index array ``perm`` such that estimate ``perm[l]`` is the
    best match for reference component ``l``, minimizing the total squared
    angle difference. Exhaustive for up to 8 components, greedy beyond.
    """
    ref = np.column_stack([np.ravel(ref_theta), np.ravel(ref_phi)])
    est = np.column_stack([np.ravel(est_theta), np.ravel(est_phi)])
    if ref.shape != est.shape:
        raise ValueError("reference and estimate component counts differ")
    n = ref.shape[0]
    cost = ((ref[:, None, :] - est[None, :, :]) ** 2).sum(axis=2)  # (n, n)
    if n <= 8:
        best_perm, best_cost = None, np.inf
        for perm in itertools.permutations(range(n)):
            c = cost[np.arange(n), perm].sum()
            if c < best_cost:
                best_perm, best_cost = perm, c
        return np.array(best_perm)
    taken = np.zeros(n, dtype=bool)
    perm = np.empty(n, dtype=int)
    for l in range(n):
        order = np.argsort(cost[l])
        for j in order:
            if not taken[j]:
                perm[l] = j
                taken[j] = True
                break
    return perm


class TensorChannelEstimator(BaseEstimator):
    """Channel estimator built on CP decomposition of the pilot tensors.

    Parameters mirror :func:`run_algorithm1`. After ``fit`` the estimator
    predicts the channel between arbitrary in-region position sets.

    Attributes (after ``fit``)
    --------------------------
    angles_ : AngleEstimates
    prm_ : np.ndarray
    channel_ : MultipathChannel built from the estimates
    result_ : EstimationResult
    n_iter_ : int, total ALS cycles across both tensors
    """

    def __init__(
        self,
        tol: float = 1e-10,
        max_iter: int = 1000,
        restarts: int = 3,
        init: str = "svd",
        random_state=None,
    ):
        self.tol = tol
        self.max_iter = max_iter
        self.restarts = restarts
        self.init = init
        self.random_state = random_state

    def fit(self, observation: PilotObservation, plan: PilotPlan, truth=None):
        result = run_algorithm1(
            observation,
            plan,
            tol=self.tol,
            max_iter=self.max_iter,
            restarts=self.restarts,
            init=self.init,
            random_state=self.random_state,
            truth=truth,
        )
        self.result_ = result
        self.angles_ = result.angles
        self.prm_ = result.prm_hat
        self.channel_ = estimated_channel(result.angles, result.prm_hat)
        self.plan_ = plan
        self.n_iter_ = sum(r.iterations for r in result.als_reports)
        return self

    def predict(self, rx_positions, tx_positions) -> np.ndarray:
        require_fitted(self, "angles_")
        return reconstruct_channel(
            self.angles_, self.prm_, rx_positions, tx_positions, self.plan_.config
        )

    def nmse(self, truth: MultipathChannel) -> float:
        """NMSE of the fitted channel against a ground truth, full grid."""
        require_fitted(self, "channel_")
        return full_grid_nmse(self.plan_.config, truth, self.channel_)
