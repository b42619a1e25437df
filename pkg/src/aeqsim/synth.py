"""Randomized small networks and inputs for engine-vs-reference checking."""

from __future__ import annotations

import numpy as np

from .model import NetworkModel, SpikePlane, model_from_manifest
from .neuron import NeuronMode


def random_network(rng: np.random.Generator, max_size: int = 12,
                   max_hidden: int = 3, max_channels: int = 8,
                   max_timesteps: int = 4) -> NetworkModel:
    """A small random conv/pool/dense stack ending in a dense read-out."""
    width = int(rng.integers(6, max_size + 1))
    channels = int(rng.integers(1, 4))
    timesteps = int(rng.integers(1, max_timesteps + 1))

    layers = []
    w, h, c = width, width, channels
    for _ in range(int(rng.integers(1, max_hidden + 1))):
        pool_fits = w >= 4 and h >= 4
        conv_fits = w >= 3 and h >= 3
        if not conv_fits:
            break
        kind = "conv" if (not pool_fits or rng.random() < 0.6) else "maxpool"
        if kind == "conv":
            out_ch = int(rng.integers(1, max_channels + 1))
            padding = "same" if rng.random() < 0.3 else "valid"
            k = 3
            weights = rng.integers(-7, 8, size=(out_ch, c, k, k))
            bias = (rng.integers(-3, 4, size=out_ch)
                    if rng.random() < 0.5 else np.zeros(out_ch, dtype=int))
            layers.append({
                "kind": "conv", "out_channels": out_ch, "kernel_size": k,
                "padding": padding, "threshold": int(rng.integers(1, 13)),
                "weights": weights.tolist(), "bias": bias.tolist(),
            })
            if padding == "valid":
                w, h = w - k + 1, h - k + 1
            c = out_ch
        else:
            n = 2
            layers.append({"kind": "maxpool", "window": n})
            w, h = w // n, h // n

    in_features = w * h * c
    if rng.random() < 0.25 and in_features > 4:
        hidden = int(rng.integers(3, 9))
        layers.append({
            "kind": "dense", "out_features": hidden,
            "threshold": int(rng.integers(1, 10)),
            "weights": rng.integers(-7, 8, size=(hidden, in_features)).tolist(),
            "bias": rng.integers(-3, 4, size=hidden).tolist(),
        })
        in_features = hidden

    classes = int(rng.integers(2, 11))
    layers.append({
        "kind": "dense", "out_features": classes,
        "weights": rng.integers(-7, 8, size=(classes, in_features)).tolist(),
        "bias": rng.integers(-3, 4, size=classes).tolist(),
    })

    manifest = {
        "name": "random",
        "timesteps": timesteps,
        "weight_bits": 8,
        "input": {"width": width, "height": width, "channels": channels},
        "layers": layers,
    }
    return model_from_manifest(manifest)


def random_input(rng: np.random.Generator, net: NetworkModel,
                 mode: NeuronMode, density: float = 0.25) -> SpikePlane:
    """Random input planes honouring the single-spike constraint when active."""
    w, h, c = net.input_geometry
    t = net.timesteps
    if mode is NeuronMode.MTTFS_SINGLE:
        bits = np.zeros((t, c, h, w), dtype=bool)
        firing = rng.random((c, h, w)) < density
        when = rng.integers(0, t, size=(c, h, w))
        for step in range(t):
            bits[step] = firing & (when == step)
        return SpikePlane(bits)
    return SpikePlane(rng.random((t, c, h, w)) < density)
