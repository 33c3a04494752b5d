"""Named scenario presets.

``full_scale`` is the flagship benchmark setup: 8x8 wavelength regions at
one-fifth wavelength pitch (40x40 grids), 4x4 antennas, 3 paths per side,
and quarter-coverage probe subgrids. ``desk_scale`` shrinks the regions to
4x4 wavelengths for quick runs and tests.
"""

from __future__ import annotations

from .channel import ScenarioConfig


def full_scale() -> ScenarioConfig:
    """8x8 wavelength regions, 20x20 probe subgrids (25% coverage)."""
    return ScenarioConfig(
        tx_region=(8.0, 8.0),
        rx_region=(8.0, 8.0),
        grid_pitch=0.2,
        n_tx=4,
        n_rx=4,
        tx_paths=3,
        rx_paths=3,
        power_ratio=1.0,
        snr_db=15.0,
        tx_pilot_area=(20, 20),
        rx_pilot_area=(20, 20),
    )


def desk_scale() -> ScenarioConfig:
    """4x4 wavelength regions, 10x10 probe subgrids (25% coverage)."""
    return ScenarioConfig(
        tx_region=(4.0, 4.0),
        rx_region=(4.0, 4.0),
        grid_pitch=0.2,
        n_tx=4,
        n_rx=4,
        tx_paths=3,
        rx_paths=3,
        power_ratio=1.0,
        snr_db=15.0,
        tx_pilot_area=(10, 10),
        rx_pilot_area=(10, 10),
    )


PRESETS = {"desk": desk_scale, "full": full_scale}
