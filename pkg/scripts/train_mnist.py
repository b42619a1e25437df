#!/usr/bin/env python3
"""Train the quantized single-spike MNIST model shipped in assets/model/.

The network computes with binary activations and integer arithmetic end to
end, so the event-driven simulator reproduces it exactly: pixels are
binarized at 127 (the simulator's default input threshold), every hidden
layer fires on a strict integer ``sum > threshold`` comparison, max-pooling
over {0,1} activations equals the simulator's OR-pooling, and the class is
the argmax of the integer read-out. Training uses a straight-through
surrogate for the step function and fake-quantized int8 weights, so the
exported integer model behaves identically to the trained one.

Needs torch and the canonical MNIST files (see scripts/fetch_mnist.py):

    python scripts/train_mnist.py --data data/mnist --epochs 6

Outputs: assets/model/mnist_int8.json (+ weights blob) and the committed
2,000-image test subset in assets/mnist_subset/.
"""

import argparse
import gzip
import json
import struct
import sys
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

ARCH = [
    ("conv", 32, 3),
    ("conv", 32, 3),
    ("pool", 3),
    ("conv", 10, 3),
]
DENSE_OUT = 10
TIMESTEPS = 4
WEIGHT_BITS = 8
QMAX = 127


def load_idx(path: Path) -> np.ndarray:
    raw = path.read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    magic = struct.unpack(">I", raw[:4])[0]
    ndim = magic & 0xFF
    dims = struct.unpack(f">{ndim}I", raw[4:4 + 4 * ndim])
    return np.frombuffer(raw[4 + 4 * ndim:], dtype=np.uint8).reshape(dims)


class SpikeFn(torch.autograd.Function):
    """Hard step forward, triangular surrogate gradient backward."""

    @staticmethod
    def forward(ctx, u):
        ctx.save_for_backward(u)
        return (u > 0).float()

    @staticmethod
    def backward(ctx, grad):
        (u,) = ctx.saved_tensors
        return grad * torch.clamp(1.0 - torch.abs(u), min=0.0)


def quant_int(w: torch.Tensor, scale: torch.Tensor) -> torch.Tensor:
    """Integer-valued tensor with a straight-through round (exact in fp32)."""
    q = torch.clamp(torch.round(w / scale), -QMAX, QMAX)
    return w / scale + (q - w / scale).detach()


def weight_scale(w: torch.Tensor) -> torch.Tensor:
    return w.detach().abs().max().clamp(min=1e-8) / QMAX


class BinaryNet(nn.Module):
    def __init__(self):
        super().__init__()
        self.convs = nn.ModuleList()
        self.log_thresholds = nn.ParameterList()
        in_ch = 1
        for kind, *params in ARCH:
            if kind == "conv":
                out_ch, k = params
                conv = nn.Conv2d(in_ch, out_ch, k)
                nn.init.kaiming_normal_(conv.weight, nonlinearity="relu")
                self.convs.append(conv)
                self.log_thresholds.append(nn.Parameter(torch.tensor(0.0)))
                in_ch = out_ch
        self.fc = nn.Linear(self._feature_count(), DENSE_OUT)

    @staticmethod
    def _feature_count() -> int:
        w = 28
        ch = 1
        for kind, *params in ARCH:
            if kind == "conv":
                ch, k = params
                w = w - k + 1
            else:
                w = w // params[0]
        return w * w * ch

    def forward(self, x):
        ci = 0
        for kind, *params in ARCH:
            if kind == "conv":
                conv = self.convs[ci]
                scale = weight_scale(conv.weight)
                w_i = quant_int(conv.weight, scale)
                b_i = quant_int(conv.bias, scale)
                theta = F.softplus(self.log_thresholds[ci]) + 0.05
                theta_i = theta / scale + (torch.round(theta / scale).clamp(min=1)
                                           - theta / scale).detach()
                # integer-valued pre-activation: fp32 sums stay exact, so the
                # spike decision equals the exported integer model's exactly
                u_i = F.conv2d(x, w_i, b_i) - theta_i
                x = SpikeFn.apply(u_i * scale)
                ci += 1
            else:
                x = F.max_pool2d(x, params[0])
        # row-major, channel-minor flatten to match the simulator
        x = x.permute(0, 2, 3, 1).reshape(x.shape[0], -1)
        scale = weight_scale(self.fc.weight)
        w_i = quant_int(self.fc.weight, scale)
        b_i = quant_int(self.fc.bias, scale)
        return F.linear(x, w_i, b_i) * scale


def export_manifest(model: BinaryNet, out_dir: Path) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    blob = []
    offset = 0

    def push(arr: np.ndarray) -> dict:
        nonlocal offset
        flat = np.ascontiguousarray(arr, dtype="<i4").reshape(-1)
        blob.append(flat)
        ref = {"offset": offset, "count": int(flat.size)}
        offset += flat.size
        return ref

    layers = []
    ci = 0
    for kind, *params in ARCH:
        if kind == "conv":
            conv = model.convs[ci]
            w = conv.weight.detach()
            scale = float(w.abs().max().clamp(min=1e-8) / QMAX)
            w_int = torch.clamp(torch.round(w / scale), -QMAX, QMAX).numpy().astype(np.int32)
            b_int = torch.clamp(torch.round(conv.bias.detach() / scale),
                                -QMAX, QMAX).numpy().astype(np.int32)
            theta = float(F.softplus(model.log_thresholds[ci]) + 0.05)
            v_t = max(1, int(round(theta / scale)))
            layers.append({
                "kind": "conv",
                "out_channels": w_int.shape[0],
                "kernel_size": w_int.shape[2],
                "padding": "valid",
                "threshold": v_t,
                "weights": push(w_int),
                "bias": push(b_int),
            })
            ci += 1
        else:
            layers.append({"kind": "maxpool", "window": params[0]})

    w = model.fc.weight.detach()
    scale = float(w.abs().max().clamp(min=1e-8) / QMAX)
    w_int = torch.clamp(torch.round(w / scale), -QMAX, QMAX).numpy().astype(np.int32)
    b_int = torch.clamp(torch.round(model.fc.bias.detach() / scale),
                        -QMAX, QMAX).numpy().astype(np.int32)
    layers.append({
        "kind": "dense",
        "out_features": w_int.shape[0],
        "weights": push(w_int),
        "bias": push(b_int),
    })

    blob_name = "mnist_int8_weights.bin"
    np.concatenate(blob).astype("<i4").tofile(out_dir / blob_name)
    manifest = {
        "name": "mnist-int8-single-spike",
        "timesteps": TIMESTEPS,
        "weight_bits": WEIGHT_BITS,
        "input": {"width": 28, "height": 28, "channels": 1},
        "weights_blob": blob_name,
        "layers": layers,
    }
    path = out_dir / "mnist_int8.json"
    path.write_text(json.dumps(manifest, indent=1) + "\n")
    return path


def integer_accuracy(manifest_path: Path, images: np.ndarray,
                     labels: np.ndarray) -> float:
    """Batch-evaluate the exported integer model (float32 sums stay exact)."""
    from aeqsim.model import load_model

    net = load_model(manifest_path)
    x = torch.from_numpy((images > 127)).float().unsqueeze(1)
    li = 0
    for layer in net.layers:
        if layer.kind == "conv":
            w = torch.from_numpy(net.weights[li].astype(np.float32))
            b = torch.from_numpy(net.biases[li].astype(np.float32))
            x = (F.conv2d(x, w, b) > float(layer.threshold)).float()
        elif layer.kind == "maxpool":
            x = F.max_pool2d(x, layer.pool_window)
        else:
            w = torch.from_numpy(net.weights[li].astype(np.float32))
            b = torch.from_numpy(net.biases[li].astype(np.float32))
            x = F.linear(x.permute(0, 2, 3, 1).reshape(x.shape[0], -1), w, b)
        li += 1
    pred = x.argmax(dim=1).numpy()
    return float((pred == labels).mean())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--data", default="data/mnist", help="dir with canonical MNIST")
    ap.add_argument("--epochs", type=int, default=6)
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--subset", type=int, default=2000,
                    help="test-subset size committed to assets/")
    args = ap.parse_args()

    torch.manual_seed(args.seed)
    np.random.seed(args.seed)

    data = Path(args.data)
    train_x = load_idx(data / "train-images-idx3-ubyte.gz")
    train_y = load_idx(data / "train-labels-idx1-ubyte.gz")
    test_x = load_idx(data / "t10k-images-idx3-ubyte.gz")
    test_y = load_idx(data / "t10k-labels-idx1-ubyte.gz")

    xb = torch.from_numpy((train_x > 127)).float().unsqueeze(1)
    yb = torch.from_numpy(train_y.astype(np.int64))
    xt = torch.from_numpy((test_x > 127)).float().unsqueeze(1)
    yt = torch.from_numpy(test_y.astype(np.int64))

    model = BinaryNet()
    opt = torch.optim.Adam(model.parameters(), lr=args.lr)
    n = len(xb)
    for epoch in range(args.epochs):
        model.train()
        perm = torch.randperm(n)
        total_loss = 0.0
        for i in range(0, n, args.batch):
            idx = perm[i:i + args.batch]
            opt.zero_grad()
            logits = model(xb[idx])
            loss = F.cross_entropy(logits, yb[idx])
            loss.backward()
            opt.step()
            total_loss += loss.item() * len(idx)
        model.eval()
        with torch.no_grad():
            acc = float((model(xt).argmax(1) == yt).float().mean())
        print(f"epoch {epoch + 1}: loss {total_loss / n:.4f}, "
              f"fake-quant test acc {acc:.4f}")

    model.eval()
    manifest_path = export_manifest(model, REPO / "assets" / "model")
    acc = integer_accuracy(manifest_path, test_x, test_y)
    print(f"exported integer model accuracy on 10,000 test images: {acc:.4f}")

    from aeqsim.idx import write_idx_images, write_idx_labels

    subset_dir = REPO / "assets" / "mnist_subset"
    subset_dir.mkdir(parents=True, exist_ok=True)
    k = args.subset
    write_idx_images(subset_dir / "images-idx3-ubyte", test_x[:k])
    write_idx_labels(subset_dir / "labels-idx1-ubyte", test_y[:k])
    for name in ("images-idx3-ubyte", "labels-idx1-ubyte"):
        raw = (subset_dir / name).read_bytes()
        (subset_dir / f"{name}.gz").write_bytes(gzip.compress(raw, 9))
        (subset_dir / name).unlink()
    sub_acc = integer_accuracy(manifest_path, test_x[:k], test_y[:k])
    print(f"subset ({k} images) accuracy: {sub_acc:.4f}")
    print(f"manifest: {manifest_path}")


if __name__ == "__main__":
    main()
