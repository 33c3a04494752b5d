"""INI config files for scenarios, sweeps, and output settings.

Schema (all keys optional unless noted; lists are whitespace-separated):

    [scenario]              ; required section
    tx_region = 8.0 8.0     ; side lengths in wavelengths
    rx_region = 8.0 8.0
    grid_pitch = 0.2
    n_tx = 4
    n_rx = 4
    tx_paths = 3
    rx_paths = 3
    power_ratio = 1.0       ; "inf" puts all gain power on the diagonal
    snr_db = 15             ; "inf" disables noise
    tx_pilot_area = 20 20   ; stage-1 probe grid (x y counts)
    rx_pilot_area = 20 20
    wavelength = 1.0

    [sweep]                 ; optional; omitted -> one point at the scenario
    snr_db = 0 5 10 15 20 25 30
    beta_t = 0.25           ; overhead fractions; omitted -> keep pilot areas
    beta_r = 0.25
    trials = 50
    estimators = tensor somp omp
    grid_size = 64          ; baseline dictionary grid

    [output]
    directory = out

Missing scenario keys fall back to the defaults above. Unknown sections or
keys raise ConfigurationError naming the offender.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass

from .channel import ScenarioConfig
from .errors import ConfigurationError
from .experiments import SweepSpec

_SCENARIO_KEYS = {
    "tx_region", "rx_region", "grid_pitch", "n_tx", "n_rx", "tx_paths",
    "rx_paths", "power_ratio", "snr_db", "tx_pilot_area", "rx_pilot_area",
    "wavelength",
}
_SWEEP_KEYS = {"snr_db", "beta_t", "beta_r", "trials", "estimators", "grid_size"}
_OUTPUT_KEYS = {"directory"}


@dataclass
class Settings:
    """Everything a command-line invocation needs."""

    scenario: ScenarioConfig
    sweep: SweepSpec
    out_dir: str = "out"


def _fail(path, section: str, key: str, problem: str) -> ConfigurationError:
    return ConfigurationError(f"{path}: [{section}] {key}: {problem}")


def _floats(raw: str) -> list[float]:
    return [float(v) for v in raw.replace(",", " ").split()]


def _pair(raw: str, path, section: str, key: str) -> tuple[float, float]:
    vals = _floats(raw)
    if len(vals) != 2:
        raise _fail(path, section, key, f"expected two values, got {raw!r}")
    return vals[0], vals[1]


def load_settings(path) -> Settings:
    """Read a config file into scenario, sweep, and output settings."""
    if not os.path.exists(path):
        raise ConfigurationError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc

    for section in parser.sections():
        if section not in ("scenario", "sweep", "output"):
            raise ConfigurationError(f"{path}: unknown section [{section}]")
    if not parser.has_section("scenario"):
        raise ConfigurationError(f"{path}: missing required section [scenario]")

    scenario = _scenario_from(parser["scenario"], path)
    sweep = _sweep_from(
        parser["sweep"] if parser.has_section("sweep") else None, scenario, path
    )
    out_dir = "out"
    if parser.has_section("output"):
        section = parser["output"]
        for key in section:
            if key not in _OUTPUT_KEYS:
                raise _fail(path, "output", key, "unknown key")
        out_dir = section.get("directory", "out").strip()
    return Settings(scenario=scenario, sweep=sweep, out_dir=out_dir)


def _scenario_from(section, path) -> ScenarioConfig:
    for key in section:
        if key not in _SCENARIO_KEYS:
            raise _fail(path, "scenario", key, "unknown key")
    kwargs = {}
    try:
        for key in ("tx_region", "rx_region"):
            if key in section:
                kwargs[key] = _pair(section[key], path, "scenario", key)
        for key in ("tx_pilot_area", "rx_pilot_area"):
            if key in section:
                vals = _pair(section[key], path, "scenario", key)
                kwargs[key] = (int(vals[0]), int(vals[1]))
        for key in ("grid_pitch", "power_ratio", "snr_db", "wavelength"):
            if key in section:
                kwargs[key] = float(section[key])
        for key in ("n_tx", "n_rx", "tx_paths", "rx_paths"):
            if key in section:
                kwargs[key] = int(section[key])
    except ConfigurationError:
        raise
    except ValueError as exc:
        raise ConfigurationError(f"{path}: [scenario] {exc}") from exc
    try:
        return ScenarioConfig(**kwargs)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: [scenario] {exc}") from exc


def _sweep_from(section, scenario: ScenarioConfig, path) -> SweepSpec:
    if section is None:
        return SweepSpec(base=scenario, snr_grid=(scenario.snr_db,))
    for key in section:
        if key not in _SWEEP_KEYS:
            raise _fail(path, "sweep", key, "unknown key")
    try:
        snr_grid = (
            tuple(_floats(section["snr_db"]))
            if "snr_db" in section
            else (scenario.snr_db,)
        )
        beta_t = tuple(_floats(section["beta_t"])) if "beta_t" in section else (None,)
        beta_r = tuple(_floats(section["beta_r"])) if "beta_r" in section else (None,)
        trials = int(section.get("trials", "1"))
        estimators = tuple(section.get("estimators", "tensor somp").split())
        grid_size = int(section.get("grid_size", "64"))
    except ValueError as exc:
        raise ConfigurationError(f"{path}: [sweep] {exc}") from exc
    try:
        return SweepSpec(
            base=scenario,
            snr_grid=snr_grid,
            beta_t_grid=beta_t,
            beta_r_grid=beta_r,
            trials=trials,
            estimators=estimators,
            grid_size=grid_size,
        )
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: [sweep] {exc}") from exc


def write_config(path, scenario: ScenarioConfig, sweep: SweepSpec | None = None,
                 out_dir: str | None = None) -> None:
    """Write settings back to an INI file that :func:`load_settings` accepts."""
    parser = configparser.ConfigParser()
    parser["scenario"] = {
        "tx_region": f"{scenario.tx_region[0]!r} {scenario.tx_region[1]!r}",
        "rx_region": f"{scenario.rx_region[0]!r} {scenario.rx_region[1]!r}",
        "grid_pitch": repr(scenario.grid_pitch),
        "n_tx": str(scenario.n_tx),
        "n_rx": str(scenario.n_rx),
        "tx_paths": str(scenario.tx_paths),
        "rx_paths": str(scenario.rx_paths),
        "power_ratio": repr(scenario.power_ratio),
        "snr_db": repr(scenario.snr_db),
        "tx_pilot_area": f"{scenario.tx_pilot_area[0]} {scenario.tx_pilot_area[1]}",
        "rx_pilot_area": f"{scenario.rx_pilot_area[0]} {scenario.rx_pilot_area[1]}",
        "wavelength": repr(scenario.wavelength),
    }
    if sweep is not None:
        entry = {
            "snr_db": " ".join(repr(v) for v in sweep.snr_grid),
            "trials": str(sweep.trials),
            "estimators": " ".join(sweep.estimators),
            "grid_size": str(sweep.grid_size),
        }
        if all(v is not None for v in sweep.beta_t_grid):
            entry["beta_t"] = " ".join(repr(v) for v in sweep.beta_t_grid)
        if all(v is not None for v in sweep.beta_r_grid):
            entry["beta_r"] = " ".join(repr(v) for v in sweep.beta_r_grid)
        parser["sweep"] = entry
    if out_dir is not None:
        parser["output"] = {"directory": out_dir}
    with open(path, "w") as fh:
        parser.write(fh)


def settings_from_scenario(scenario: ScenarioConfig, **sweep_kwargs) -> Settings:
    """Settings with a default single-point sweep over the given scenario."""
    sweep = SweepSpec(
        base=scenario, snr_grid=(scenario.snr_db,), **sweep_kwargs
    )
    return Settings(scenario=scenario, sweep=sweep)
