"""Membrane dynamics, firing modes, and input spike encoding."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aeqsim.model import SpikePlane
from aeqsim.neuron import (InputScheme, NeuronMode, NeuronState, acc_limits,
                           encode_input, integrate, threshold)


def test_integrate_from_rest():
    assert integrate(NeuronState(), 5).v_m == 5


def test_integrate_zero_input_keeps_state():
    state = NeuronState(v_m=3)
    assert integrate(state, 0) == state


def test_integrate_saturates_at_max():
    # reference: unbounded addition, then clamp
    lo, hi = acc_limits(16)
    assert integrate(NeuronState(v_m=hi), 1).v_m == min(hi, hi + 1)
    assert integrate(NeuronState(v_m=hi), 1).v_m == hi
    assert integrate(NeuronState(v_m=lo), -100).v_m == lo


@given(st.integers(-40000, 40000), st.integers(-40000, 40000),
       st.sampled_from([8, 12, 16, 24]))
def test_integrate_matches_bigint_clamp(v, s, bits):
    lo, hi = acc_limits(bits)
    start = max(lo, min(hi, v))
    expected = max(lo, min(hi, start + s))  # arbitrary-precision then clamp
    assert integrate(NeuronState(v_m=start), s, acc_bits=bits).v_m == expected


def test_reset_mode_fires_and_zeroes():
    state, spike = threshold(NeuronState(v_m=8), 5, 0, NeuronMode.IF_RESET)
    assert spike is True
    assert state.v_m == 0


def test_single_spike_mode_latches():
    state, spike = threshold(NeuronState(v_m=8), 5, 0, NeuronMode.MTTFS_SINGLE)
    assert spike is True and state.has_spiked and state.v_m == 8
    state, spike = threshold(state, 5, 0, NeuronMode.MTTFS_SINGLE)
    assert spike is False
    assert state.v_m == 8


def test_already_latched_neuron_stays_silent():
    state, spike = threshold(NeuronState(v_m=8, has_spiked=True), 5, 0,
                             NeuronMode.MTTFS_SINGLE)
    assert spike is False and state.v_m == 8


def test_continuous_mode_fires_every_step_without_reset():
    state = NeuronState(v_m=9)
    for _ in range(3):
        state, spike = threshold(state, 5, 0, NeuronMode.MTTFS_CONTINUOUS)
        assert spike is True
        assert state.v_m == 9


@pytest.mark.parametrize("mode", list(NeuronMode))
def test_tie_at_threshold_never_fires(mode):
    _, spike = threshold(NeuronState(v_m=5), 5, 0, mode)
    assert spike is False


def test_bias_shifts_comparison_but_not_state():
    state, spike = threshold(NeuronState(v_m=4), 5, 2, NeuronMode.MTTFS_SINGLE)
    assert spike is True
    assert state.v_m == 4  # bias is re-supplied, never stored


def test_nonpositive_threshold_rejected():
    with pytest.raises(ValueError):
        threshold(NeuronState(), 0, 0, NeuronMode.IF_RESET)


@given(st.lists(st.tuples(st.booleans(), st.integers(-20, 20)),
                min_size=0, max_size=30))
def test_integration_equals_binary_dot_product(pairs):
    # summing selected weights must equal the dot product with 0/1 activations
    weights = np.array([w for _, w in pairs], dtype=np.int64)
    active = np.array([a for a, _ in pairs], dtype=np.int64)
    state = integrate(NeuronState(), int((weights * active).sum()))
    assert state.v_m == sum(w for a, w in pairs if a)


def _first_spike_time(weights, spike_times, v_t, timesteps=6):
    """Scalar trace of one neuron over T steps; None when it never fires."""
    state = NeuronState()
    for t in range(timesteps):
        total = sum(w for w, st_ in zip(weights, spike_times) if st_ == t)
        state = integrate(state, total)
        state, fired = threshold(state, v_t, 0, NeuronMode.MTTFS_SINGLE)
        if fired:
            return t
    return None


@given(st.lists(st.tuples(st.integers(0, 9), st.integers(0, 5)),
                min_size=1, max_size=8),
       st.integers(1, 25), st.integers(0, 9), st.integers(0, 5))
def test_extra_nonnegative_spike_never_delays_first_spike(inputs, v_t, w_extra,
                                                          t_extra):
    weights = [w for w, _ in inputs]
    times = [t for _, t in inputs]
    base = _first_spike_time(weights, times, v_t)
    more = _first_spike_time(weights + [w_extra], times + [t_extra], v_t)
    if base is not None:
        assert more is not None
        assert more <= base


def test_threshold_once_all_zero_image():
    plane = encode_input(np.zeros((6, 6), dtype=np.uint8), 127, 4)
    assert plane.spike_count() == 0


def test_threshold_once_single_bright_pixel():
    img = np.zeros((5, 5), dtype=np.uint8)
    img[2, 3] = 200
    plane = encode_input(img, 128, 3, InputScheme.THRESHOLD_ONCE)
    assert plane.spike_count() == 1
    assert plane.bits[0, 0, 2, 3]
    assert not plane.bits[1:].any()


def test_constant_current_all_zero_image():
    plane = encode_input(np.zeros((4, 4), dtype=np.uint8), 100, 4,
                         InputScheme.CONSTANT_CURRENT)
    assert plane.spike_count() == 0


@given(st.integers(1, 255), st.integers(1, 600), st.integers(1, 6))
def test_constant_current_first_spike_time(pixel, v_t_in, timesteps):
    # reference: the scalar recurrence v(t) = v(t-1) + p, fire once when v > v_t
    img = np.full((1, 1), pixel, dtype=np.int64)
    plane = encode_input(img, v_t_in, timesteps, InputScheme.CONSTANT_CURRENT,
                         NeuronMode.MTTFS_SINGLE)
    expected = next((t for t in range(timesteps) if (t + 1) * pixel > v_t_in),
                    None)
    fired = np.nonzero(plane.bits[:, 0, 0, 0])[0]
    if expected is None:
        assert fired.size == 0
    else:
        assert fired.tolist() == [expected]


def test_constant_current_single_spike_plane_invariant():
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
    plane = encode_input(img, 127, 5, InputScheme.CONSTANT_CURRENT,
                         NeuronMode.MTTFS_SINGLE)
    assert plane.single_spike_per_position()


def test_image_out_of_range_rejected():
    with pytest.raises(ValueError):
        encode_input(np.full((2, 2), 300, dtype=np.int64), 127, 1)


def test_spike_plane_shape_validation():
    with pytest.raises(Exception):
        SpikePlane(np.zeros((2, 3, 4), dtype=bool))
