"""Two-stage movable-antenna pilot protocol and observation containers.

Stage 1 (transmit sounding): one transmit antenna visits every cell of an
``I_x x I_y`` probe subgrid while the receive antennas stay parked at their
initial positions. Each probe position carries one pilot symbol, so the
receive array collects an (n_rx, I) matrix

    ``Y_t = sqrt(P) * F(rx_init)^H @ PRM @ G(probes) + Z``.

Stage 2 (receive sounding): the receive antennas move through the
``J_x x J_y`` probe subgrid in rounds of ``n_rx`` positions. During each
round the parked transmit array sends the unitary pilot block S (n_tx
symbols), and right-multiplying the received block by ``S^H`` collapses it
to one row per probe position without coloring the noise. Stacking rounds
gives the (J, n_tx) matrix

    ``Y_r = sqrt(P) * F(probes)^H @ PRM @ G(tx_init) + Z``.

Both matrices fold into three-way tensors whose first two modes run over the
probe subgrid (y index fastest) and whose third mode runs over the parked
array; each tensor is a rank-``paths`` canonical polyadic model whose first
two factors are Vandermonde in the virtual angles.

Binary observation format (``save_observation``/``load_observation``), all
fields little-endian:

* 8-byte magic ``b"MATOBS1\\n"``
* four arrays in fixed order: y_t_matrix, y_r_matrix, y_t_tensor,
  y_r_tensor. Each array is stored as ``uint32 ndim``, ``uint32 dims[ndim]``,
  then ``prod(dims)`` complex entries as float64 pairs (real, imaginary)
  with elements in column-major order (first index fastest).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .channel import (
    MultipathChannel,
    ScenarioConfig,
    field_response_rx,
    field_response_tx,
    grid_shape,
    subgrid_positions,
)
from .errors import ConfigurationError
from .linalg import fold, unfold
from .validation import as_complex_array

# Transmit power is normalized to 1 (like the wavelength); the SNR setting
# scales the noise variance instead.
TX_POWER = 1.0

_MAGIC = b"MATOBS1\n"


def noise_std(cfg: ScenarioConfig) -> float:
    """Per-entry noise standard deviation implied by the scenario SNR."""
    if math.isinf(cfg.snr_db) and cfg.snr_db > 0:
        return 0.0
    return math.sqrt(TX_POWER * 10.0 ** (-cfg.snr_db / 10.0))


def make_pilot_matrix(m: int) -> np.ndarray:
    """Unitary DFT pilot block of size (m, m).

    Rows index antennas, columns index symbol slots. Satisfies
    ``S @ S^H = I`` with constant entry modulus ``1/sqrt(m)``.
    """
    if m < 1:
        raise ValueError(f"pilot matrix size must be at least 1, got {m}")
    idx = np.arange(m)
    return np.exp(-2j * np.pi * np.outer(idx, idx) / m) / np.sqrt(m)


def initial_positions(
    region: tuple[float, float], pitch: float, count: int
) -> np.ndarray:
    """Park ``count`` antennas at grid centers nearest the region corners.

    Antennas cycle through the four corners; each full cycle steps one grid
    cell inward along x so positions stay distinct. The wide spread keeps the
    parked array's field-response matrix well conditioned.
    """
    nx, ny = grid_shape(region, pitch)
    corners = [(0, 0), (nx - 1, 0), (0, ny - 1), (nx - 1, ny - 1)]
    cells: list[tuple[int, int]] = []
    for k in range(count):
        cx, cy = corners[k % 4]
        step = k // 4
        ix = cx + step if cx == 0 else cx - step
        if ix < 0 or ix >= nx:
            raise ConfigurationError(
                f"cannot park {count} antennas along the corners of a "
                f"{nx}x{ny} grid"
            )
        if (ix, cy) in cells:
            raise ConfigurationError(
                f"corner parking produced duplicate cells for count {count} "
                f"on a {nx}x{ny} grid"
            )
        cells.append((ix, cy))
    coords = np.array(cells, dtype=float)
    return (coords + 0.5) * pitch


@dataclass
class PilotPlan:
    """Geometry and pilot schedule shared by simulation and estimation."""

    config: ScenarioConfig
    tx_initial: np.ndarray  # (n_tx, 2) parked transmit positions
    rx_initial: np.ndarray  # (n_rx, 2) parked receive positions
    tx_moves: np.ndarray  # (I, 2) stage-1 probe positions, y fastest within x
    rx_moves: np.ndarray  # (J // n_rx, n_rx, 2) stage-2 rounds
    pilot_matrix: np.ndarray  # (n_tx, n_tx) unitary pilot block

    @property
    def rx_probes(self) -> np.ndarray:
        """All stage-2 probe positions in visiting order, (J, 2)."""
        return self.rx_moves.reshape(-1, 2)

    @property
    def n_stage1(self) -> int:
        return self.tx_moves.shape[0]

    @property
    def n_rounds(self) -> int:
        return self.rx_moves.shape[0]


def build_pilot_plan(cfg: ScenarioConfig) -> PilotPlan:
    """Construct the pilot schedule for a scenario.

    Probe subgrids are anchored at the origin corner of each region and
    enumerated with the y index fastest, which is the ordering the tensor
    folds assume. Receive probes are visited in consecutive rounds of
    ``n_rx`` positions. Parked antennas sit at the corners; the probes pass
    over them without interaction (antennas are treated as points).
    """
    cfg.validate()
    tx_moves = subgrid_positions((0.0, 0.0), cfg.tx_pilot_area, cfg.grid_pitch)
    rx_flat = subgrid_positions((0.0, 0.0), cfg.rx_pilot_area, cfg.grid_pitch)
    rounds = rx_flat.shape[0] // cfg.n_rx
    return PilotPlan(
        config=cfg,
        tx_initial=initial_positions(cfg.tx_region, cfg.grid_pitch, cfg.n_tx),
        rx_initial=initial_positions(cfg.rx_region, cfg.grid_pitch, cfg.n_rx),
        tx_moves=tx_moves,
        rx_moves=rx_flat.reshape(rounds, cfg.n_rx, 2),
        pilot_matrix=make_pilot_matrix(cfg.n_tx),
    )


def _noise(rng: np.random.Generator, sigma: float, shape: tuple[int, ...]) -> np.ndarray:
    if sigma == 0.0:
        return np.zeros(shape, dtype=np.complex128)
    scale = sigma / math.sqrt(2.0)
    return rng.normal(scale=scale, size=shape) + 1j * rng.normal(scale=scale, size=shape)


def simulate_stage1(
    plan: PilotPlan, channel: MultipathChannel, rng: np.random.Generator
) -> np.ndarray:
    """Stage-1 measurement matrix, (n_rx, I)."""
    cfg = plan.config
    f0 = field_response_rx(plan.rx_initial, channel, cfg.wavelength)
    g = field_response_tx(plan.tx_moves, channel, cfg.wavelength)
    signal = math.sqrt(TX_POWER) * (f0.conj().T @ channel.prm @ g)
    return signal + _noise(rng, noise_std(cfg), signal.shape)


def simulate_stage2(
    plan: PilotPlan, channel: MultipathChannel, rng: np.random.Generator
) -> np.ndarray:
    """Stage-2 measurement matrix after pilot matching, (J, n_tx).

    Each round's raw block is right-multiplied by ``S^H``; since S is
    unitary the processed noise stays white with unchanged variance.
    """
    cfg = plan.config
    s = plan.pilot_matrix
    f = field_response_rx(plan.rx_probes, channel, cfg.wavelength)
    g0 = field_response_tx(plan.tx_initial, channel, cfg.wavelength)
    signal = math.sqrt(TX_POWER) * (f.conj().T @ channel.prm @ g0)  # (J, n_tx)
    sigma = noise_std(cfg)
    if sigma == 0.0:
        return signal
    rounds, n_rx = plan.rx_moves.shape[0], cfg.n_rx
    raw = _noise(rng, sigma, (rounds, n_rx, s.shape[1]))
    matched = raw @ s.conj().T  # per-round S^H matching of the noise
    return signal + matched.reshape(rounds * n_rx, cfg.n_tx)


def tensorize_stage1(y_matrix, cfg: ScenarioConfig) -> np.ndarray:
    """Fold the conjugate-transposed stage-1 matrix into (I_y, I_x, n_rx)."""
    y = as_complex_array(y_matrix, ndim=2, name="stage-1 matrix")
    ix, iy = cfg.tx_pilot_area
    if y.shape != (cfg.n_rx, ix * iy):
        raise ValueError(
            f"stage-1 matrix shape {y.shape} does not match "
            f"({cfg.n_rx}, {ix * iy})"
        )
    ybar = y.conj().T  # (I, n_rx), row i is probe i
    return fold(ybar.T, 3, (iy, ix, cfg.n_rx))


def tensorize_stage2(y_matrix, cfg: ScenarioConfig) -> np.ndarray:
    """Fold the stage-2 matrix into (J_y, J_x, n_tx)."""
    y = as_complex_array(y_matrix, ndim=2, name="stage-2 matrix")
    jx, jy = cfg.rx_pilot_area
    if y.shape != (jx * jy, cfg.n_tx):
        raise ValueError(
            f"stage-2 matrix shape {y.shape} does not match "
            f"({jx * jy}, {cfg.n_tx})"
        )
    return fold(y.T, 3, (jy, jx, cfg.n_tx))


@dataclass
class PilotObservation:
    """Everything the estimators see from one protocol run."""

    y_t_matrix: np.ndarray  # (n_rx, I) stage-1 measurements
    y_r_matrix: np.ndarray  # (J, n_tx) stage-2 measurements after matching
    y_t_tensor: np.ndarray = field(repr=False, default=None)  # (I_y, I_x, n_rx)
    y_r_tensor: np.ndarray = field(repr=False, default=None)  # (J_y, J_x, n_tx)


def simulate_pilots(
    plan: PilotPlan, channel: MultipathChannel, rng: np.random.Generator
) -> PilotObservation:
    """Run both pilot stages and tensorize the measurements.

    Stage-1 noise is drawn before stage-2 noise from the same generator, so
    a fixed generator state reproduces the observation exactly.
    """
    cfg = plan.config
    y_t = simulate_stage1(plan, channel, rng)
    y_r = simulate_stage2(plan, channel, rng)
    return PilotObservation(
        y_t_matrix=y_t,
        y_r_matrix=y_r,
        y_t_tensor=tensorize_stage1(y_t, cfg),
        y_r_tensor=tensorize_stage2(y_r, cfg),
    )


def pilot_overhead(plan: PilotPlan) -> int:
    """Total pilot symbols spent by the two-stage protocol."""
    return plan.n_stage1 + plan.n_rounds * plan.pilot_matrix.shape[1]


def exhaustive_pilot_bound(cfg: ScenarioConfig) -> float:
    """Pilot cost of sounding every antenna placement combination.

    Counts one pilot per transmit-placement/receive-placement pair, with the
    receive side amortized over its ``n_rx`` simultaneous antennas. Serves as
    the reference point that the two-stage protocol must undercut.
    """
    tx_comb = math.comb(cfg.tx_grid_count, cfg.n_tx)
    rx_comb = math.comb(cfg.rx_grid_count, cfg.n_rx)
    return tx_comb * rx_comb / cfg.n_rx


def _pack_array(arr: np.ndarray) -> bytes:
    arr = np.asarray(arr, dtype=np.complex128)
    head = struct.pack("<I", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    flat = arr.ravel(order="F")
    inter = np.empty(2 * flat.size, dtype="<f8")
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    return head + inter.tobytes()


def _unpack_array(buf: bytes, offset: int) -> tuple[np.ndarray, int]:
    (ndim,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    dims = struct.unpack_from(f"<{ndim}I", buf, offset)
    offset += 4 * ndim
    count = int(np.prod(dims)) if ndim else 1
    inter = np.frombuffer(buf, dtype="<f8", count=2 * count, offset=offset)
    offset += 16 * count
    flat = inter[0::2] + 1j * inter[1::2]
    return flat.reshape(dims, order="F"), offset


def save_observation(obs: PilotObservation, path) -> None:
    """Write an observation in the documented binary format."""
    blob = _MAGIC
    for arr in (obs.y_t_matrix, obs.y_r_matrix, obs.y_t_tensor, obs.y_r_tensor):
        blob += _pack_array(arr)
    with open(path, "wb") as fh:
        fh.write(blob)


def load_observation(path) -> PilotObservation:
    """Read an observation written by :func:`save_observation`."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path} is not an observation dump (bad magic)")
    offset = len(_MAGIC)
    arrays = []
    for expected_ndim in (2, 2, 3, 3):
        arr, offset = _unpack_array(buf, offset)
        if arr.ndim != expected_ndim:
            raise ValueError(
                f"{path}: expected a {expected_ndim}-dimensional array, "
                f"got shape {arr.shape}"
            )
        arrays.append(arr)
    if offset != len(buf):
        raise ValueError(f"{path}: {len(buf) - offset} trailing bytes")
    return PilotObservation(*arrays)
