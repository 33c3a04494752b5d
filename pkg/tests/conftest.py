"""Shared fixtures for the test suite."""

import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from matensor import ScenarioConfig


@pytest.fixture
def small_cfg():
    """Fast noiseless scenario used by pipeline-level tests."""
    return ScenarioConfig(
        tx_region=(2.0, 2.0),
        rx_region=(2.0, 2.0),
        grid_pitch=0.2,
        n_tx=4,
        n_rx=4,
        tx_paths=2,
        rx_paths=2,
        snr_db=math.inf,
        tx_pilot_area=(4, 4),
        rx_pilot_area=(4, 4),
    )


@pytest.fixture
def criterion_cfg():
    """Noiseless three-path scenario with the smallest uniqueness-safe areas."""
    return ScenarioConfig(
        tx_region=(4.0, 4.0),
        rx_region=(4.0, 4.0),
        grid_pitch=0.2,
        n_tx=4,
        n_rx=4,
        tx_paths=3,
        rx_paths=3,
        snr_db=math.inf,
        tx_pilot_area=(6, 6),
        rx_pilot_area=(6, 6),
    )
