"""Compressed-sensing baselines on a fixed virtual-angle grid.

The probe measurements are sparse in a dictionary of steering vectors
sampled on a uniform K x K grid over the virtual-angle square [-1, 1]^2.
Orthogonal matching pursuit (OMP) greedily picks the atom best correlated
with the residual and refits the selection by least squares; simultaneous
OMP (SOMP) shares one support across all measurement columns by summing
correlation magnitudes over columns. Estimated angles are the grid points
of the selected atoms, so accuracy saturates at the grid quantization error
no matter the SNR. Gains are then fitted with the same stacked least
squares used by the tensor pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .channel import MultipathChannel, full_grid_nmse
from .estimation import (
    AngleEstimates,
    EstimationResult,
    build_angle_estimates,
    estimate_gains,
    estimated_channel,
    reconstruct_channel,
)
from .errors import EstimationError
from .pilots import PilotObservation, PilotPlan
from .validation import as_complex_array, check_finite, require_fitted


@dataclass
class AngleDictionary:
    """Steering-vector dictionaries for both probe position sets.

    ``angles`` holds the (theta, phi) pair of each atom; atom k of
    ``tx_atoms`` is the conjugated transmit field response of probe set
    positions at that pair, and likewise for ``rx_atoms``.
    """

    grid_size: int
    angles: np.ndarray  # (K*K, 2) atom angle pairs, theta index major
    tx_atoms: np.ndarray  # (I, K*K)
    rx_atoms: np.ndarray  # (J, K*K)


def build_dictionary(plan: PilotPlan, grid_size: int = 64) -> AngleDictionary:
    """Sample steering atoms on a uniform virtual-angle grid.

    Atom columns enumerate theta-major/phi-minor pairs of
    ``numpy.linspace(-1, 1, grid_size)``. Entry i of a transmit atom is
    ``exp(-2j*pi*(x_i*theta + y_i*phi)/wavelength)`` at stage-1 probe
    position i, matching how a unit path at those angles appears in the
    conjugate-transposed stage-1 measurements; receive atoms use the
    stage-2 probe positions.
    """
    if grid_size < 2:
        raise ValueError(f"grid_size must be at least 2, got {grid_size}")
    lam = plan.config.wavelength
    vals = np.linspace(-1.0, 1.0, grid_size)
    theta, phi = np.meshgrid(vals, vals, indexing="ij")  # theta index major
    angles = np.column_stack([theta.ravel(), phi.ravel()])

    def atoms(positions: np.ndarray) -> np.ndarray:
        phase = np.outer(positions[:, 0], angles[:, 0]) + np.outer(
            positions[:, 1], angles[:, 1]
        )
        return np.exp(-2j * np.pi / lam * phase)

    return AngleDictionary(
        grid_size=int(grid_size),
        angles=angles,
        tx_atoms=atoms(plan.tx_moves),
        rx_atoms=atoms(plan.rx_probes),
    )


def _check_dictionary(atoms: np.ndarray, sparsity: int) -> None:
    if sparsity < 1:
        raise ValueError(f"sparsity must be at least 1, got {sparsity}")
    if sparsity > atoms.shape[1]:
        raise ValueError(
            f"sparsity {sparsity} exceeds dictionary size {atoms.shape[1]}"
        )


def omp(y, atoms, sparsity: int) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal matching pursuit for a single measurement vector.

    Parameters
    ----------
    y : (m,) array_like
    atoms : (m, n_atoms) array_like
    sparsity : int
        Number of atoms to select.

    Returns
    -------
    (support, coef)
        Selected atom indices in pick order and their joint least-squares
        coefficients. Correlation ties break toward the lowest atom index.
    """
    y = as_complex_array(y, ndim=1, name="y")
    atoms = as_complex_array(atoms, ndim=2, name="atoms")
    if y.shape[0] != atoms.shape[0]:
        raise ValueError(f"length mismatch: y {y.shape[0]}, atoms {atoms.shape[0]}")
    check_finite(y, "y")
    _check_dictionary(atoms, sparsity)
    norms = np.linalg.norm(atoms, axis=0)
    norms[norms == 0.0] = 1.0
    support: list[int] = []
    residual = y
    coef = np.zeros(0, dtype=np.complex128)
    for _ in range(sparsity):
        scores = np.abs(atoms.conj().T @ residual) / norms
        scores[support] = -1.0  # without replacement
        support.append(int(np.argmax(scores)))  # first occurrence wins ties
        selected = atoms[:, support]
        coef, *_ = np.linalg.lstsq(selected, y, rcond=1e-12)
        residual = y - selected @ coef
    return np.array(support), coef


def somp(ymat, atoms, sparsity: int) -> tuple[np.ndarray, np.ndarray]:
    """Simultaneous OMP: one support shared by every measurement column.

    Atom scores are the sum over columns of normalized correlation
    magnitudes. Returns the support and the (sparsity, n_cols) coefficient
    matrix from the joint least-squares refit.
    """
    ymat = as_complex_array(ymat, ndim=2, name="ymat")
    atoms = as_complex_array(atoms, ndim=2, name="atoms")
    if ymat.shape[0] != atoms.shape[0]:
        raise ValueError(
            f"row mismatch: ymat {ymat.shape[0]}, atoms {atoms.shape[0]}"
        )
    check_finite(ymat, "ymat")
    _check_dictionary(atoms, sparsity)
    norms = np.linalg.norm(atoms, axis=0)
    norms[norms == 0.0] = 1.0
    support: list[int] = []
    residual = ymat
    coef = np.zeros((0, ymat.shape[1]), dtype=np.complex128)
    for _ in range(sparsity):
        scores = (np.abs(atoms.conj().T @ residual) / norms[:, None]).sum(axis=1)
        scores[support] = -1.0
        support.append(int(np.argmax(scores)))
        selected = atoms[:, support]
        coef, *_ = np.linalg.lstsq(selected, ymat, rcond=1e-12)
        residual = ymat - selected @ coef
    return np.array(support), coef


def cs_estimate(
    obs: PilotObservation,
    plan: PilotPlan,
    grid_size: int = 64,
    method: str = "somp",
    dictionary: AngleDictionary | None = None,
    truth: MultipathChannel | None = None,
    eval_rx=None,
    eval_tx=None,
) -> EstimationResult:
    """Grid-based channel estimation via (S)OMP plus the shared gain fit.

    ``method="somp"`` uses every measurement column of each stage;
    ``method="omp"`` uses only the first column (the single-measurement
    variant run on the same observations). Angle estimates are the grid
    pairs of the selected atoms.
    """
    if method not in ("omp", "somp"):
        raise ValueError(f"method must be 'omp' or 'somp', got {method!r}")
    cfg = plan.config
    if dictionary is None:
        dictionary = build_dictionary(plan, grid_size)
    elif dictionary.grid_size != grid_size:
        raise ValueError(
            f"dictionary grid_size {dictionary.grid_size} does not match "
            f"requested {grid_size}"
        )

    ybar_t = obs.y_t_matrix.conj().T  # (I, n_rx), rows follow tx probes
    ybar_r = obs.y_r_matrix  # (J, n_tx), rows follow rx probes
    try:
        if method == "omp":
            support_t, _ = omp(ybar_t[:, 0], dictionary.tx_atoms, cfg.tx_paths)
            support_r, _ = omp(ybar_r[:, 0], dictionary.rx_atoms, cfg.rx_paths)
        else:
            support_t, _ = somp(ybar_t, dictionary.tx_atoms, cfg.tx_paths)
            support_r, _ = somp(ybar_r, dictionary.rx_atoms, cfg.rx_paths)
    except Exception as exc:
        raise EstimationError(f"sparse support selection: {exc}") from exc
    angles = build_angle_estimates(
        dictionary.angles[support_t, 0],
        dictionary.angles[support_t, 1],
        dictionary.angles[support_r, 0],
        dictionary.angles[support_r, 1],
    )
    prm_hat = estimate_gains(obs, plan, angles)
    eval_rx = plan.rx_initial if eval_rx is None else eval_rx
    eval_tx = plan.tx_initial if eval_tx is None else eval_tx
    h_hat = reconstruct_channel(angles, prm_hat, eval_rx, eval_tx, cfg)
    nmse = None
    if truth is not None:
        nmse = full_grid_nmse(cfg, truth, estimated_channel(angles, prm_hat))
    return EstimationResult(
        angles=angles, prm_hat=prm_hat, h_hat=h_hat, nmse=nmse, als_reports=None
    )


class CompressedSensingEstimator(BaseEstimator):
    """Estimator wrapper around :func:`cs_estimate`.

    The dictionary depends only on the pilot plan and the grid size, so it
    is cached and reused when the estimator is refitted on the same plan.

    Attributes (after ``fit``)
    --------------------------
    angles_ : AngleEstimates
    prm_ : np.ndarray
    channel_ : MultipathChannel built from the estimates
    result_ : EstimationResult
    """

    def __init__(self, grid_size: int = 64, method: str = "somp"):
        self.grid_size = grid_size
        self.method = method

    def _dictionary_for(self, plan: PilotPlan) -> AngleDictionary:
        cached = getattr(self, "_dictionary_cache", None)
        if (
            cached is not None
            and cached[0] is plan
            and cached[1].grid_size == self.grid_size
        ):
            return cached[1]
        dictionary = build_dictionary(plan, self.grid_size)
        self._dictionary_cache = (plan, dictionary)
        return dictionary

    def fit(self, observation: PilotObservation, plan: PilotPlan, truth=None):
        result = cs_estimate(
            observation,
            plan,
            grid_size=self.grid_size,
            method=self.method,
            dictionary=self._dictionary_for(plan),
            truth=truth,
        )
        self.result_ = result
        self.angles_ = result.angles
        self.prm_ = result.prm_hat
        self.channel_ = estimated_channel(result.angles, result.prm_hat)
        self.plan_ = plan
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
