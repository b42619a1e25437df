"""Calibrated dynamic-power model and energy / FPS-per-Watt accounting.

Dynamic power is split into four categories (signals, brams, logic, clocks)
and modeled as a nonnegative linear combination of resource counts and event
rates. Coefficients ship in named calibration profiles fitted by least
squares against vendor-tool reference estimates of the fixture designs (see
scripts/calibrate_power.py); cross-design numbers are calibrated-model
estimates, not measurements.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from importlib import resources as importlib_resources
from pathlib import Path
from typing import Optional

CATEGORIES = ("signals", "brams", "logic", "clocks")


@dataclass(frozen=True)
class PowerCoefficients:
    """Per-category coefficients of one calibration profile. All >= 0."""

    name: str
    clock_mhz: float
    watts_per_bram_half: float
    watts_per_core_logic: float
    watts_per_core_clock: float
    watts_per_kevent_s: float
    watts_per_lutram_kbit_logic: float = 0.0
    watts_per_lutram_kbit_signals: float = 0.0
    offset_signals: float = 0.0
    offset_brams: float = 0.0
    offset_logic: float = 0.0
    offset_clocks: float = 0.0

    def __post_init__(self):
        for key, value in asdict(self).items():
            if key in ("name",):
                continue
            if value < 0:
                raise ValueError(f"coefficient {key} must be >= 0, got {value}")


def load_profile(name_or_path: str) -> PowerCoefficients:
    """Load a named shipped profile or a JSON profile file path."""
    path = Path(name_or_path)
    if path.suffix == ".json" and path.exists():
        doc = json.loads(path.read_text())
        return PowerCoefficients(**doc)
    ref = importlib_resources.files("aeqsim.profiles") / f"{name_or_path}.json"
    try:
        doc = json.loads(ref.read_text())
    except FileNotFoundError:
        raise FileNotFoundError(
            f"no power profile named {name_or_path!r}; shipped profiles: "
            f"{', '.join(sorted(available_profiles()))}"
        ) from None
    return PowerCoefficients(**doc)


def available_profiles() -> list[str]:
    base = importlib_resources.files("aeqsim.profiles")
    return [p.name[:-5] for p in base.iterdir() if p.name.endswith(".json")]


def nominal_event_rate(parallel: int, clock_mhz: float) -> float:
    """Vector-less activity assumption: every core retires one event per cycle."""
    return parallel * clock_mhz * 1e6


def estimate_power(plan, cfg, activity, coeffs: PowerCoefficients) -> dict:
    """Per-category dynamic power in watts for one design point.

    ``plan`` is a resources.MemoryPlan, ``cfg`` an engine.EngineConfig and
    ``activity`` a RunResult (or None for the nominal, input-independent
    estimate). Deterministic: same inputs, same watts.
    """
    lutram_kbits = plan.total_lutram_bits / 1024
    if activity is None:
        events_per_s = nominal_event_rate(cfg.parallel, cfg.clock_mhz)
    elif activity.cycles > 0:
        seconds = activity.cycles / (cfg.clock_mhz * 1e6)
        events_per_s = activity.events_processed / seconds
    else:
        events_per_s = 0.0
    kevents = events_per_s / 1e3

    return {
        "signals": (coeffs.offset_signals
                    + coeffs.watts_per_kevent_s * kevents
                    + coeffs.watts_per_lutram_kbit_signals * lutram_kbits),
        "brams": (coeffs.offset_brams
                  + coeffs.watts_per_bram_half * plan.bram_halves),
        "logic": (coeffs.offset_logic
                  + coeffs.watts_per_core_logic * cfg.parallel
                  + coeffs.watts_per_lutram_kbit_logic * lutram_kbits),
        "clocks": (coeffs.offset_clocks
                   + coeffs.watts_per_core_clock * cfg.parallel),
    }


@dataclass(frozen=True)
class EnergyReport:
    power_total: float
    categories: dict
    latency_s: float
    energy_j: float
    fps: float
    fps_per_watt: float

    @property
    def energy_mj(self) -> float:
        return self.energy_j * 1e3


def energy_and_fpsw(power_w: float, cycles: int, clock_mhz: float,
                    categories: Optional[dict] = None) -> EnergyReport:
    """Energy per classified sample and frames-per-second-per-watt.

    Energy is execution time multiplied by power; FPS is the reciprocal of
    the per-sample latency.
    """
    if power_w <= 0:
        raise ValueError(f"power must be > 0, got {power_w}")
    if cycles < 1:
        raise ValueError(f"cycles must be >= 1, got {cycles}")
    if clock_mhz <= 0:
        raise ValueError(f"clock must be > 0, got {clock_mhz}")
    latency_s = cycles / (clock_mhz * 1e6)
    energy_j = power_w * latency_s
    fps = 1.0 / latency_s
    return EnergyReport(
        power_total=power_w,
        categories=dict(categories or {}),
        latency_s=latency_s,
        energy_j=energy_j,
        fps=fps,
        fps_per_watt=fps / power_w,
    )
