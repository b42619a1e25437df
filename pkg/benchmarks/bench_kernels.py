#!/usr/bin/env python3
"""Benchmark the compiled event-scatter core against the numpy fallback.

Two views: the raw kernel on synthetic event batches, and whole-sample
simulation throughput on the shipped MNIST model (each backend measured in
its own subprocess so import-time selection is honest).

    python benchmarks/bench_kernels.py
"""

import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from aeqsim.kernels import get_backend  # noqa: E402


def bench_raw_kernel(batches=200, events=512, kernel=3, width=26):
    rng = np.random.default_rng(0)
    grid = -(-width // kernel)
    ex = rng.integers(0, width, size=(batches, events)).astype(np.int32)
    ey = rng.integers(0, width, size=(batches, events)).astype(np.int32)
    w = rng.integers(-99, 100, size=(kernel, kernel)).astype(np.int64)

    results = {}
    for name in ("python", "compiled"):
        try:
            fn = get_backend(name)
        except ImportError:
            print(f"{name:>9}: not built, skipping")
            continue
        mem = np.zeros((kernel * kernel, grid * grid), dtype=np.int64)
        fn(ex[0], ey[0], w, mem, kernel, width, width, grid, 0)  # warm up
        start = time.perf_counter()
        for b in range(batches):
            fn(ex[b], ey[b], w, mem, kernel, width, width, grid, 0)
        elapsed = time.perf_counter() - start
        rate = batches * events / elapsed
        results[name] = rate
        print(f"{name:>9}: {rate / 1e6:7.2f} M events/s "
              f"({elapsed * 1e3 / batches:6.3f} ms per {events}-event batch)")
    if len(results) == 2:
        print(f"  speedup: {results['compiled'] / results['python']:.1f}x")
    return results


def bench_full_samples(samples=40):
    model = REPO / "assets" / "model" / "mnist_int8.json"
    subset = REPO / "assets" / "mnist_subset"
    if not model.exists():
        print("trained model missing; skipping whole-sample benchmark")
        return
    child = f"""
import sys, time, json
sys.path.insert(0, {str(REPO / 'src')!r})
from aeqsim.engine import EngineConfig, run_image
from aeqsim.idx import load_dataset
from aeqsim.model import load_model
from aeqsim.kernels import BACKEND
net = load_model({str(model)!r})
images, labels = load_dataset({str(subset / 'images-idx3-ubyte.gz')!r},
                              {str(subset / 'labels-idx1-ubyte.gz')!r})
cfg = EngineConfig(parallel=8)
run_image(net, images[0], cfg)
start = time.perf_counter()
for i in range({samples}):
    run_image(net, images[i], cfg)
elapsed = time.perf_counter() - start
print(json.dumps({{"backend": BACKEND, "ms_per_sample": 1e3 * elapsed / {samples}}}))
"""
    results = {}
    for backend in ("python", "compiled"):
        env = dict(os.environ, AEQSIM_KERNELS=backend)
        proc = subprocess.run([sys.executable, "-c", child], env=env,
                              capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"{backend:>9}: failed ({proc.stderr.strip().splitlines()[-1]})")
            continue
        out = json.loads(proc.stdout.strip().splitlines()[-1])
        assert out["backend"] == backend
        results[backend] = out["ms_per_sample"]
        print(f"{backend:>9}: {out['ms_per_sample']:7.1f} ms per MNIST sample")
    if len(results) == 2:
        print(f"  speedup: {results['python'] / results['compiled']:.1f}x")


if __name__ == "__main__":
    print("raw scatter kernel:")
    bench_raw_kernel()
    print(f"\nwhole-sample simulation (trained MNIST model, P=8):")
    bench_full_samples()
