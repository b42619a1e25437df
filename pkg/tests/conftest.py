import sys
from pathlib import Path

import numpy as np
import pytest

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

ASSETS = REPO / "assets"
MODEL_MANIFEST = ASSETS / "model" / "mnist_int8.json"
SUBSET_DIR = ASSETS / "mnist_subset"


@pytest.fixture(scope="session")
def mnist_model():
    from aeqsim.model import load_model

    if not MODEL_MANIFEST.exists():
        pytest.skip("trained MNIST model not present (run scripts/train_mnist.py)")
    return load_model(MODEL_MANIFEST)


@pytest.fixture(scope="session")
def mnist_subset():
    from aeqsim.idx import load_dataset

    images = SUBSET_DIR / "images-idx3-ubyte.gz"
    labels = SUBSET_DIR / "labels-idx1-ubyte.gz"
    if not images.exists():
        pytest.skip("MNIST test subset not present (run scripts/train_mnist.py)")
    return load_dataset(images, labels)


def tiny_manifest(threshold=3, timesteps=2, weights=None, bias=None):
    """A 4x4 single-channel conv net with a dense read-out, for hand-tracing."""
    w = weights if weights is not None else [[[[1, 0, 0], [0, 2, 0], [0, 0, 1]]]]
    b = bias if bias is not None else [0]
    return {
        "timesteps": timesteps,
        "weight_bits": 8,
        "input": {"width": 4, "height": 4, "channels": 1},
        "layers": [
            {"kind": "conv", "out_channels": 1, "kernel_size": 3,
             "threshold": threshold, "weights": w, "bias": b},
            {"kind": "dense", "out_features": 2,
             "weights": [[1, 1, 1, 1], [1, 0, 0, 0]], "bias": [0, 0]},
        ],
    }
