"""Integrate-and-fire dynamics and input spike encoding.

Neurons accumulate the weights of spiking synapses into a saturating signed
membrane potential and fire on a strict ``v > threshold`` comparison. Three
firing behaviours are supported: reset-to-zero, single-spike-no-reset, and
continuous-no-reset. Ties at the threshold never fire.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .model import SpikePlane


class NeuronMode(enum.Enum):
    IF_RESET = "if-reset"              # fire and reset the potential to zero
    MTTFS_SINGLE = "mttfs-single"      # fire at most once, never reset
    MTTFS_CONTINUOUS = "mttfs-continuous"  # fire whenever above, never reset


class InputScheme(enum.Enum):
    THRESHOLD_ONCE = "threshold-once"      # one spike at t=0 where pixel > threshold
    CONSTANT_CURRENT = "constant-current"  # pixel injected each step, neuron fires


DEFAULT_ACC_BITS = 16
DEFAULT_INPUT_THRESHOLD = 127


def acc_limits(acc_bits: int = DEFAULT_ACC_BITS) -> tuple[int, int]:
    """Signed saturation range of the membrane accumulator."""
    return -(1 << (acc_bits - 1)), (1 << (acc_bits - 1)) - 1


def saturate(value: int, acc_bits: int = DEFAULT_ACC_BITS) -> int:
    lo, hi = acc_limits(acc_bits)
    return min(hi, max(lo, value))


@dataclass(frozen=True)
class NeuronState:
    """Membrane potential plus the single-spike latch."""

    v_m: int = 0
    has_spiked: bool = False


def integrate(state: NeuronState, weighted_sum: int,
              acc_bits: int = DEFAULT_ACC_BITS) -> NeuronState:
    """Add one timestep's summed synaptic weight into the membrane.

    ``weighted_sum`` is the plain sum of the weights whose presynaptic input
    spiked this step; activations are binary so no multiplication is
    involved. The result saturates instead of overflowing.
    """
    return replace(state, v_m=saturate(state.v_m + weighted_sum, acc_bits))


def threshold(state: NeuronState, v_t: int, bias: int,
              mode: NeuronMode) -> tuple[NeuronState, bool]:
    """Fire decision for one timestep.

    The bias is re-supplied for the comparison each step and is never folded
    into the stored potential. IF_RESET zeroes the potential on firing;
    MTTFS_SINGLE latches and suppresses further spikes; MTTFS_CONTINUOUS fires
    every step the comparison holds.
    """
    if v_t <= 0:
        raise ValueError(f"threshold must be > 0, got {v_t}")
    above = state.v_m + bias > v_t
    if mode is NeuronMode.IF_RESET:
        if above:
            return replace(state, v_m=0), True
        return state, False
    if mode is NeuronMode.MTTFS_SINGLE:
        if above and not state.has_spiked:
            return replace(state, has_spiked=True), True
        return state, False
    if mode is NeuronMode.MTTFS_CONTINUOUS:
        return state, above
    raise ValueError(f"unknown neuron mode {mode!r}")


def encode_input(image: np.ndarray, v_t_in: int, timesteps: int,
                 scheme: InputScheme = InputScheme.THRESHOLD_ONCE,
                 mode: NeuronMode = NeuronMode.MTTFS_SINGLE,
                 acc_bits: int = DEFAULT_ACC_BITS) -> SpikePlane:
    """Turn a pixel grid into the input spike planes.

    ``image`` has shape (H, W) or (C, H, W) with values in [0, 255].

    THRESHOLD_ONCE emits a single spike at t=0 wherever pixel > v_t_in.
    CONSTANT_CURRENT feeds each pixel value into an input neuron as that
    step's weighted sum and lets the active neuron mode decide when (and how
    often) it fires over the run.
    """
    img = np.asarray(image)
    if img.ndim == 2:
        img = img[None, :, :]
    if img.ndim != 3:
        raise ValueError(f"image must be (H, W) or (C, H, W), got shape {img.shape}")
    if img.size and (img.min() < 0 or img.max() > 255):
        raise ValueError("pixel values must lie in [0, 255]")
    channels, height, width = img.shape
    bits = np.zeros((timesteps, channels, height, width), dtype=bool)

    if scheme is InputScheme.THRESHOLD_ONCE:
        bits[0] = img > v_t_in
        return SpikePlane(bits)

    if scheme is InputScheme.CONSTANT_CURRENT:
        lo, hi = acc_limits(acc_bits)
        v = np.zeros((channels, height, width), dtype=np.int64)
        latched = np.zeros((channels, height, width), dtype=bool)
        pixels = img.astype(np.int64)
        for t in range(timesteps):
            v = np.clip(v + pixels, lo, hi)
            above = v > v_t_in
            if mode is NeuronMode.IF_RESET:
                bits[t] = above
                v[above] = 0
            elif mode is NeuronMode.MTTFS_SINGLE:
                bits[t] = above & ~latched
                latched |= above
            else:
                bits[t] = above
        return SpikePlane(bits)

    raise ValueError(f"unknown input scheme {scheme!r}")
