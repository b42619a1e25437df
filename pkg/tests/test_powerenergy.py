"""Power model form, energy arithmetic, and the calibration fixture."""

import math

import pytest
from hypothesis import given, strategies as st

from aeqsim.engine import EngineConfig
from aeqsim.model import model_from_manifest
from aeqsim.powerenergy import (PowerCoefficients, energy_and_fpsw,
                                estimate_power, load_profile)
from aeqsim.queueing import EncodingScheme
from aeqsim.resources import MemoryPolicy, plan_memories

from conftest import tiny_manifest


def test_energy_reference_point():
    report = energy_and_fpsw(0.107, 42800, 100.0)
    assert report.latency_s == pytest.approx(428e-6)
    assert report.energy_mj == pytest.approx(0.0458, rel=0.01)
    assert report.fps_per_watt == pytest.approx(21809, rel=0.005)


def test_energy_unit_case():
    report = energy_and_fpsw(1.0, 100_000_000, 100.0)  # one full second
    assert report.latency_s == 1.0
    assert report.energy_j == 1.0
    assert report.fps == 1.0
    assert report.fps_per_watt == 1.0


@given(st.floats(0.01, 10), st.integers(1, 10_000_000), st.floats(1, 500))
def test_fpsw_energy_identity(power, cycles, clock):
    report = energy_and_fpsw(power, cycles, clock)
    assert math.isclose(report.fps_per_watt * report.energy_j, 1.0,
                        rel_tol=1e-9)


def test_energy_rejects_degenerate_inputs():
    with pytest.raises(ValueError):
        energy_and_fpsw(0.0, 100, 100.0)
    with pytest.raises(ValueError):
        energy_and_fpsw(1.0, 0, 100.0)
    with pytest.raises(ValueError):
        energy_and_fpsw(1.0, 100, 0.0)


def _coeffs(**overrides):
    base = dict(
        name="test", clock_mhz=100.0,
        watts_per_bram_half=0.001, watts_per_core_logic=0.007,
        watts_per_core_clock=0.005, watts_per_kevent_s=1e-7,
        watts_per_lutram_kbit_logic=1e-4, watts_per_lutram_kbit_signals=2e-4,
        offset_signals=0.002, offset_brams=0.0, offset_logic=0.001,
        offset_clocks=0.003,
    )
    base.update(overrides)
    return PowerCoefficients(**base)


def test_negative_coefficient_rejected():
    with pytest.raises(ValueError):
        _coeffs(watts_per_bram_half=-0.1)


class _FakePlan:
    def __init__(self, halves, lutram_bits=0):
        self.bram_halves = halves
        self.total_lutram_bits = lutram_bits


class _FakeActivity:
    def __init__(self, cycles, events):
        self.cycles = cycles
        self.events_processed = events


def test_zero_everything_gives_offsets_only():
    coeffs = _coeffs(watts_per_core_logic=0.0, watts_per_core_clock=0.0)
    cats = estimate_power(_FakePlan(0), EngineConfig(parallel=1),
                          _FakeActivity(10, 0), coeffs)
    assert cats["signals"] == pytest.approx(0.002)
    assert cats["brams"] == pytest.approx(0.0)
    assert cats["logic"] == pytest.approx(0.001)
    assert cats["clocks"] == pytest.approx(0.003)


def test_bram_category_is_linear_above_offset():
    coeffs = _coeffs(offset_brams=0.004)
    cfg = EngineConfig(parallel=2)
    act = _FakeActivity(100, 100)
    one = estimate_power(_FakePlan(50), cfg, act, coeffs)["brams"]
    two = estimate_power(_FakePlan(100), cfg, act, coeffs)["brams"]
    assert two - coeffs.offset_brams == pytest.approx(
        2 * (one - coeffs.offset_brams))


def test_signals_category_grows_with_event_rate():
    coeffs = _coeffs()
    cfg = EngineConfig(parallel=2)
    idle = estimate_power(_FakePlan(10), cfg, _FakeActivity(1000, 0), coeffs)
    busy = estimate_power(_FakePlan(10), cfg, _FakeActivity(1000, 5000), coeffs)
    assert busy["signals"] > idle["signals"]
    assert busy["brams"] == idle["brams"]


def test_more_events_never_cost_less_energy():
    # fixed profile and plan: extra processed events raise the signal power
    # (same latency) or the latency itself (throughput-scaled), never lower
    coeffs = _coeffs()
    cfg = EngineConfig(parallel=4)
    plan = _FakePlan(32)

    def energy(cycles, events):
        cats = estimate_power(plan, cfg, _FakeActivity(cycles, events), coeffs)
        return energy_and_fpsw(sum(cats.values()), cycles, cfg.clock_mhz).energy_j

    assert energy(1000, 800) >= energy(1000, 400)
    assert energy(1200, 800) >= energy(1000, 400)  # cycles grown with events


def test_estimate_is_deterministic():
    coeffs = _coeffs()
    cfg = EngineConfig(parallel=4)
    a = estimate_power(_FakePlan(64, 1024), cfg, None, coeffs)
    b = estimate_power(_FakePlan(64, 1024), cfg, None, coeffs)
    assert a == b


def test_unknown_profile_raises():
    with pytest.raises(FileNotFoundError):
        load_profile("no-such-platform")


def test_shipped_profiles_load_and_validate():
    from aeqsim.powerenergy import available_profiles

    names = available_profiles()
    assert "pynq-z1-100mhz" in names
    assert "zcu102-200mhz" in names
    for name in names:
        coeffs = load_profile(name)  # __post_init__ rejects negatives
        assert coeffs.clock_mhz > 0


# --- shipped calibration profile ---------------------------------------------

FIXTURES = [
    # (parallel, depth, policy, encoding, reference total W)
    (4, 2048, MemoryPolicy.ALL_BRAM, EncodingScheme.PLAIN, 0.283),
    (4, 2048, MemoryPolicy.AUTO, EncodingScheme.PLAIN, 0.242),
    (4, 2048, MemoryPolicy.AUTO, EncodingScheme.COMPRESSED, 0.200),
]


@pytest.mark.parametrize("parallel, depth, policy, encoding, expected", FIXTURES)
def test_pynq_profile_reproduces_fixture_totals(parallel, depth, policy,
                                                encoding, expected):
    net = model_from_manifest(_mnist_shape_manifest())
    coeffs = load_profile("pynq-z1-100mhz")
    cfg = EngineConfig(parallel=parallel, aeq_depth=depth, encoding=encoding)
    plan = plan_memories(net, parallel=parallel, aeq_depth=depth,
                         policy=policy, encoding=encoding)
    total = sum(estimate_power(plan, cfg, None, coeffs).values())
    assert total == pytest.approx(expected, rel=0.05)


def test_pynq_profile_reproduces_largest_fixture():
    net = model_from_manifest(_mnist_shape_manifest())
    coeffs = load_profile("pynq-z1-100mhz")
    cfg = EngineConfig(parallel=8, aeq_depth=750, encoding=EncodingScheme.PLAIN)
    plan = plan_memories(net, parallel=8, aeq_depth=750,
                         policy=MemoryPolicy.ALL_BRAM,
                         encoding=EncodingScheme.PLAIN)
    total = sum(estimate_power(plan, cfg, None, coeffs).values())
    assert total == pytest.approx(0.480, rel=0.01)


def _mnist_shape_manifest():
    """Zero-weight stand-in with the MNIST stack's geometry (plan only needs
    kernel size and map widths)."""
    import numpy as np

    def conv_doc(out_ch, in_ch):
        return {"kind": "conv", "out_channels": out_ch, "kernel_size": 3,
                "threshold": 1,
                "weights": np.zeros((out_ch, in_ch, 3, 3), dtype=int).tolist(),
                "bias": np.zeros(out_ch, dtype=int).tolist()}

    return {
        "timesteps": 4, "weight_bits": 8,
        "input": {"width": 28, "height": 28, "channels": 1},
        "layers": [
            conv_doc(32, 1), conv_doc(32, 32),
            {"kind": "maxpool", "window": 3},
            conv_doc(10, 32),
            {"kind": "dense", "out_features": 10,
             "weights": [[0] * 360] * 10, "bias": [0] * 10},
        ],
    }
