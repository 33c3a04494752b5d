"""Field-response channel model for movable-antenna MIMO.

Antennas move inside planar regions sampled by a square grid of candidate
positions. Under the far-field assumption each propagation path contributes a
planar wave, so the response of a position ``(x, y)`` to path ``l`` is the
unit-modulus phasor ``exp(+2j*pi/wavelength * (x*theta_l + y*phi_l))`` where
``theta_l = cos(azimuth) * sin(elevation)`` and ``phi_l = cos(elevation)``
are the path's virtual angles (directional cosines along x and y).

Stacking those phasors over paths gives the receive and transmit field
response matrices F and G, and the end-to-end channel between receive
positions ``R`` and transmit positions ``T`` is ``H = F(R)^H @ PRM @ G(T)``
with PRM the (rx_paths, tx_paths) path-response matrix holding the complex
path gains. Every quantity with length units is expressed in wavelengths;
the carrier wavelength defaults to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .validation import as_complex_array, as_positions, check_finite


def grid_shape(region: tuple[float, float], pitch: float) -> tuple[int, int]:
    """Number of grid cells per axis for a rectangular region.

    Raises ConfigurationError when a side is not an integer multiple of the
    pitch (within 1e-9 relative tolerance).
    """
    if pitch <= 0:
        raise ConfigurationError(f"grid_pitch must be positive, got {pitch}")
    counts = []
    for side in region:
        ratio = side / pitch
        n = round(ratio)
        if n < 1 or abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
            raise ConfigurationError(
                f"region side {side} is not a positive integer multiple of "
                f"grid_pitch {pitch}"
            )
        counts.append(int(n))
    return counts[0], counts[1]


def enumerate_grid(region: tuple[float, float], pitch: float) -> np.ndarray:
    """Grid-center coordinates of a region, row-major with x varying fastest.

    Parameters
    ----------
    region : (float, float)
        Side lengths (x, y) in wavelengths.
    pitch : float
        Grid spacing in wavelengths.

    Returns
    -------
    (G, 2) np.ndarray
        Cell-center coordinates; G is the total cell count.
    """
    nx, ny = grid_shape(region, pitch)
    xs = (np.arange(nx) + 0.5) * pitch
    ys = (np.arange(ny) + 0.5) * pitch
    gx, gy = np.meshgrid(xs, ys)  # rows indexed by y, so x varies fastest
    return np.column_stack([gx.ravel(), gy.ravel()])


def subgrid_positions(
    anchor: tuple[float, float], counts: tuple[int, int], pitch: float
) -> np.ndarray:
    """Cell centers of a counts[0] x counts[1] subgrid, y varying fastest.

    The ordering (y fastest within x) matches the tensor layout used by the
    pilot stages: position index ``i`` maps to ``(ix, iy)`` with
    ``i = ix * counts[1] + iy``.
    """
    nx, ny = int(counts[0]), int(counts[1])
    if nx < 1 or ny < 1:
        raise ValueError(f"subgrid counts must be positive, got {counts}")
    xs = anchor[0] + (np.arange(nx) + 0.5) * pitch
    ys = anchor[1] + (np.arange(ny) + 0.5) * pitch
    gx, gy = np.meshgrid(xs, ys, indexing="ij")  # C-order ravel: y fastest
    return np.column_stack([gx.ravel(), gy.ravel()])


@dataclass(frozen=True)
class ScenarioConfig:
    """Static description of one simulation scenario.

    Lengths are in wavelengths. ``tx_pilot_area`` and ``rx_pilot_area`` give
    the probe subgrid sizes (per-axis position counts) used by the two pilot
    stages; the receive probe count must divide evenly into movement rounds
    of ``n_rx`` antennas.
    """

    tx_region: tuple[float, float] = (8.0, 8.0)
    rx_region: tuple[float, float] = (8.0, 8.0)
    grid_pitch: float = 0.2
    n_tx: int = 4
    n_rx: int = 4
    tx_paths: int = 3
    rx_paths: int = 3
    power_ratio: float = 1.0
    snr_db: float = 15.0
    tx_pilot_area: tuple[int, int] = (20, 20)
    rx_pilot_area: tuple[int, int] = (20, 20)
    wavelength: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "tx_region", tuple(float(v) for v in self.tx_region))
        object.__setattr__(self, "rx_region", tuple(float(v) for v in self.rx_region))
        object.__setattr__(
            self, "tx_pilot_area", tuple(int(v) for v in self.tx_pilot_area)
        )
        object.__setattr__(
            self, "rx_pilot_area", tuple(int(v) for v in self.rx_pilot_area)
        )
        self.validate()

    # -- derived geometry -------------------------------------------------

    @property
    def tx_grid_shape(self) -> tuple[int, int]:
        return grid_shape(self.tx_region, self.grid_pitch)

    @property
    def rx_grid_shape(self) -> tuple[int, int]:
        return grid_shape(self.rx_region, self.grid_pitch)

    @property
    def tx_grid_count(self) -> int:
        nx, ny = self.tx_grid_shape
        return nx * ny

    @property
    def rx_grid_count(self) -> int:
        nx, ny = self.rx_grid_shape
        return nx * ny

    @property
    def tx_probe_count(self) -> int:
        return self.tx_pilot_area[0] * self.tx_pilot_area[1]

    @property
    def rx_probe_count(self) -> int:
        return self.rx_pilot_area[0] * self.rx_pilot_area[1]

    def validate(self) -> None:
        if self.wavelength <= 0:
            raise ConfigurationError(f"wavelength must be positive, got {self.wavelength}")
        if self.grid_pitch <= 0:
            raise ConfigurationError(f"grid_pitch must be positive, got {self.grid_pitch}")
        if self.grid_pitch > self.wavelength / 2 + 1e-12:
            raise ConfigurationError(
                f"grid_pitch {self.grid_pitch} exceeds half the wavelength "
                f"{self.wavelength}; spatial frequencies would alias"
            )
        tx_shape = grid_shape(self.tx_region, self.grid_pitch)
        rx_shape = grid_shape(self.rx_region, self.grid_pitch)
        if self.n_tx < 1:
            raise ConfigurationError(f"n_tx must be at least 1, got {self.n_tx}")
        if self.n_rx < 1:
            raise ConfigurationError(f"n_rx must be at least 1, got {self.n_rx}")
        if self.n_tx > self.tx_grid_count:
            raise ConfigurationError(
                f"n_tx {self.n_tx} exceeds tx grid count {self.tx_grid_count}"
            )
        if self.n_rx > self.rx_grid_count:
            raise ConfigurationError(
                f"n_rx {self.n_rx} exceeds rx grid count {self.rx_grid_count}"
            )
        if self.tx_paths < 1 or self.rx_paths < 1:
            raise ConfigurationError(
                f"path counts must be at least 1, got tx_paths {self.tx_paths}, "
                f"rx_paths {self.rx_paths}"
            )
        if self.tx_paths != self.rx_paths:
            raise ConfigurationError(
                f"tx_paths {self.tx_paths} != rx_paths {self.rx_paths}; the "
                f"path-response generator requires a square gain matrix"
            )
        if not (self.power_ratio > 0):  # also rejects NaN
            raise ConfigurationError(
                f"power_ratio must be positive (inf allowed), got {self.power_ratio}"
            )
        if math.isnan(self.snr_db):
            raise ConfigurationError("snr_db must not be NaN")
        for name, area, shape in (
            ("tx_pilot_area", self.tx_pilot_area, tx_shape),
            ("rx_pilot_area", self.rx_pilot_area, rx_shape),
        ):
            if area[0] < 2 or area[1] < 2:
                raise ConfigurationError(
                    f"{name} must have at least 2 positions per axis for "
                    f"phase-ratio angle recovery, got {area}"
                )
            if area[0] > shape[0] or area[1] > shape[1]:
                raise ConfigurationError(
                    f"{name} {area} does not fit inside the region grid {shape}"
                )
        if self.rx_probe_count % self.n_rx != 0:
            raise ConfigurationError(
                f"rx probe count {self.rx_probe_count} must be divisible by "
                f"n_rx {self.n_rx} (whole movement rounds)"
            )


@dataclass
class MultipathChannel:
    """Ground-truth or estimated multipath channel parameters.

    ``tx_theta``/``tx_phi`` are the per-path virtual departure angles along x
    and y; ``rx_theta``/``rx_phi`` the arrival counterparts. ``prm`` is the
    (rx_paths, tx_paths) path-response matrix. Physical angles are retained
    when the channel came from the random generator.
    """

    tx_theta: np.ndarray
    tx_phi: np.ndarray
    rx_theta: np.ndarray
    rx_phi: np.ndarray
    prm: np.ndarray
    tx_azimuth: np.ndarray | None = field(default=None, repr=False)
    tx_elevation: np.ndarray | None = field(default=None, repr=False)
    rx_azimuth: np.ndarray | None = field(default=None, repr=False)
    rx_elevation: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.tx_theta = np.asarray(self.tx_theta, dtype=float).ravel()
        self.tx_phi = np.asarray(self.tx_phi, dtype=float).ravel()
        self.rx_theta = np.asarray(self.rx_theta, dtype=float).ravel()
        self.rx_phi = np.asarray(self.rx_phi, dtype=float).ravel()
        self.prm = as_complex_array(self.prm, ndim=2, name="prm")
        if self.tx_theta.shape != self.tx_phi.shape:
            raise ValueError("tx_theta and tx_phi must have the same length")
        if self.rx_theta.shape != self.rx_phi.shape:
            raise ValueError("rx_theta and rx_phi must have the same length")
        if self.prm.shape != (self.rx_theta.size, self.tx_theta.size):
            raise ValueError(
                f"prm shape {self.prm.shape} does not match "
                f"({self.rx_theta.size}, {self.tx_theta.size}) paths"
            )
        check_finite(self.prm, "prm")

    @property
    def n_tx_paths(self) -> int:
        return self.tx_theta.size

    @property
    def n_rx_paths(self) -> int:
        return self.rx_theta.size


def steering_matrix(
    positions, theta, phi, wavelength: float = 1.0
) -> np.ndarray:
    """Per-path field responses of a position set.

    Parameters
    ----------
    positions : (n, 2) array_like
        Coordinates in wavelengths.
    theta, phi : (L,) array_like
        Virtual angles along x and y.
    wavelength : float

    Returns
    -------
    (L, n) np.ndarray
        Entry (l, i) is ``exp(+2j*pi/wavelength * (x_i*theta_l + y_i*phi_l))``.
    """
    pos = as_positions(positions)
    theta = np.asarray(theta, dtype=float).ravel()
    phi = np.asarray(phi, dtype=float).ravel()
    if theta.shape != phi.shape:
        raise ValueError("theta and phi must have the same length")
    phase = np.outer(theta, pos[:, 0]) + np.outer(phi, pos[:, 1])
    return np.exp(2j * np.pi / wavelength * phase)


def field_response_tx(
    positions, channel: MultipathChannel, wavelength: float = 1.0
) -> np.ndarray:
    """Transmit field-response matrix G at the given positions, (L_t, n)."""
    return steering_matrix(positions, channel.tx_theta, channel.tx_phi, wavelength)


def field_response_rx(
    positions, channel: MultipathChannel, wavelength: float = 1.0
) -> np.ndarray:
    """Receive field-response matrix F at the given positions, (L_r, n)."""
    return steering_matrix(positions, channel.rx_theta, channel.rx_phi, wavelength)


def channel_matrix(
    rx_positions, tx_positions, channel: MultipathChannel, wavelength: float = 1.0
) -> np.ndarray:
    """End-to-end channel ``F^H @ PRM @ G`` between two position sets."""
    f = field_response_rx(rx_positions, channel, wavelength)
    g = field_response_tx(tx_positions, channel, wavelength)
    return f.conj().T @ channel.prm @ g


def prm_variances(power_ratio: float, paths: int) -> tuple[float, float]:
    """Per-entry variances (diagonal, off-diagonal) of the path-response matrix.

    Power is normalized so the expected squared Frobenius norm is 1. The
    diagonal carries ``power_ratio / (power_ratio + 1)`` of the total power.
    With a single path, or an infinite ratio, all power sits on the diagonal.
    """
    if paths < 1:
        raise ValueError(f"paths must be at least 1, got {paths}")
    if not (power_ratio > 0):
        raise ValueError(f"power_ratio must be positive, got {power_ratio}")
    if math.isinf(power_ratio) or paths == 1:
        return 1.0 / paths, 0.0
    diag = power_ratio / ((power_ratio + 1.0) * paths)
    off = 1.0 / ((power_ratio + 1.0) * (paths - 1) * paths)
    return diag, off


def generate_channel(cfg: ScenarioConfig, rng: np.random.Generator) -> MultipathChannel:
    """Draw a random multipath channel for a scenario.

    Azimuth and elevation are i.i.d. uniform on [0, pi] per path and side.
    Path gains are circularly symmetric complex Gaussian with the variances
    from :func:`prm_variances`.
    """
    if cfg.tx_paths != cfg.rx_paths:
        raise ConfigurationError(
            f"path-response generator requires tx_paths == rx_paths, got "
            f"{cfg.tx_paths} and {cfg.rx_paths}"
        )
    paths = cfg.tx_paths
    tx_az = rng.uniform(0.0, np.pi, paths)
    tx_el = rng.uniform(0.0, np.pi, paths)
    rx_az = rng.uniform(0.0, np.pi, paths)
    rx_el = rng.uniform(0.0, np.pi, paths)
    diag_var, off_var = prm_variances(cfg.power_ratio, paths)
    prm = np.zeros((paths, paths), dtype=np.complex128)
    if off_var > 0.0:
        scale = math.sqrt(off_var / 2.0)
        prm += rng.normal(scale=scale, size=(paths, paths)) + 1j * rng.normal(
            scale=scale, size=(paths, paths)
        )
        np.fill_diagonal(prm, 0.0)
    dscale = math.sqrt(diag_var / 2.0)
    diag = rng.normal(scale=dscale, size=paths) + 1j * rng.normal(
        scale=dscale, size=paths
    )
    prm[np.diag_indices(paths)] = diag
    return MultipathChannel(
        tx_theta=np.cos(tx_az) * np.sin(tx_el),
        tx_phi=np.cos(tx_el),
        rx_theta=np.cos(rx_az) * np.sin(rx_el),
        rx_phi=np.cos(rx_el),
        prm=prm,
        tx_azimuth=tx_az,
        tx_elevation=tx_el,
        rx_azimuth=rx_az,
        rx_elevation=rx_el,
    )


def channel_nmse(h_true, h_est) -> float:
    """Normalized mean squared error between two channel matrices."""
    h_true = as_complex_array(h_true, name="h_true")
    h_est = as_complex_array(h_est, name="h_est")
    if h_true.shape != h_est.shape:
        raise ValueError(f"shape mismatch: {h_true.shape} vs {h_est.shape}")
    denom = np.linalg.norm(h_true) ** 2
    if denom == 0.0:
        raise ValueError("reference channel has zero energy")
    return float(np.linalg.norm(h_true - h_est) ** 2 / denom)


def full_grid_nmse(
    cfg: ScenarioConfig,
    ch_true: MultipathChannel,
    ch_est: MultipathChannel,
    block_rows: int = 512,
) -> float:
    """NMSE between two channels over every grid position pair.

    The comparison matrix has one row per receive grid center and one column
    per transmit grid center. Rows are evaluated in blocks so the full
    (rx_grid_count, tx_grid_count) matrix is never held in memory at once.
    """
    rx_grid = enumerate_grid(cfg.rx_region, cfg.grid_pitch)
    tx_grid = enumerate_grid(cfg.tx_region, cfg.grid_pitch)
    err = 0.0
    ref = 0.0
    for start in range(0, rx_grid.shape[0], block_rows):
        block = rx_grid[start : start + block_rows]
        h_true = channel_matrix(block, tx_grid, ch_true, cfg.wavelength)
        h_est = channel_matrix(block, tx_grid, ch_est, cfg.wavelength)
        err += float(np.linalg.norm(h_true - h_est) ** 2)
        ref += float(np.linalg.norm(h_true) ** 2)
    if ref == 0.0:
        raise ValueError("reference channel has zero energy on the grid")
    return err / ref
