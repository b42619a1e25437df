"""Network topology, quantized parameters, and feature-map geometry.

A network is described by a JSON manifest (see README for the schema) with
integer weights either inline or in a little-endian int32 sidecar blob.
Models are immutable after loading and safe to share across workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

CONV = "conv"
MAXPOOL = "maxpool"
DENSE = "dense"

LAYER_KINDS = (CONV, MAXPOOL, DENSE)

VALID = "valid"
SAME = "same"


class ModelError(ValueError):
    """Raised when a manifest or parameter tensor violates the model contract."""


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the network with its geometry resolved.

    ``in_width``/``in_height``/``in_channels`` describe the layer's input
    feature map; ``out_*`` the produced map. Conv layers are stride-1 with
    valid padding unless ``padding="same"``; pooling windows do not overlap
    (stride = window).
    """

    kind: str
    in_width: int
    in_height: int
    in_channels: int
    out_channels: int
    kernel_size: int = 0          # conv only
    pool_window: int = 0          # maxpool only
    padding: str = VALID          # conv only
    threshold: Optional[int] = None
    weight_bits: int = 8

    @property
    def out_width(self) -> int:
        return output_geometry(self)[0]

    @property
    def out_height(self) -> int:
        return output_geometry(self)[1]


def output_geometry(layer: LayerSpec) -> tuple[int, int, int]:
    """Output (width, height, channels) of a validated layer.

    Conv: valid padding shrinks the map by K-1 per axis, same padding keeps
    it. MaxPool: floor division by the window. Dense: a 1x1 map of
    ``out_features`` channels.
    """
    if layer.kind == CONV:
        if layer.padding == SAME:
            w, h = layer.in_width, layer.in_height
        else:
            w = layer.in_width - layer.kernel_size + 1
            h = layer.in_height - layer.kernel_size + 1
        if w <= 0 or h <= 0:
            raise ModelError(
                f"conv K={layer.kernel_size} on {layer.in_width}x{layer.in_height} "
                f"map yields nonpositive output {w}x{h}"
            )
        return w, h, layer.out_channels
    if layer.kind == MAXPOOL:
        w = layer.in_width // layer.pool_window
        h = layer.in_height // layer.pool_window
        if w <= 0 or h <= 0:
            raise ModelError(
                f"pool window {layer.pool_window} on {layer.in_width}x"
                f"{layer.in_height} map yields nonpositive output"
            )
        return w, h, layer.in_channels
    if layer.kind == DENSE:
        return 1, 1, layer.out_channels
    raise ModelError(f"unknown layer kind {layer.kind!r}")


def flat_index(x: int, y: int, c: int, width: int, channels: int) -> int:
    """Flatten a (x, y, c) position row-major, channel-minor."""
    return (y * width + x) * channels + c


@dataclass(frozen=True)
class NetworkModel:
    """A validated, immutable network: layer specs plus integer parameters.

    ``weights[i]`` is ``None`` for pooling layers, an
    (out_channels, in_channels, K, K) int32 tensor for conv layers, and an
    (out_features, in_features) int32 matrix for dense layers. ``biases[i]``
    follows the same convention with int32 vectors.
    """

    layers: tuple[LayerSpec, ...]
    weights: tuple[Optional[np.ndarray], ...]
    biases: tuple[Optional[np.ndarray], ...]
    timesteps: int
    num_classes: int
    name: str = "unnamed"
    _geometry: tuple[tuple[int, int, int], ...] = field(default=(), repr=False)

    @property
    def input_geometry(self) -> tuple[int, int, int]:
        first = self.layers[0]
        return first.in_width, first.in_height, first.in_channels

    def layer_output_geometry(self, index: int) -> tuple[int, int, int]:
        return self._geometry[index]

    def parameter_count(self) -> int:
        total = 0
        for w, b in zip(self.weights, self.biases):
            if w is not None:
                total += w.size
            if b is not None:
                total += b.size
        return total


def _signed_range(bits: int) -> tuple[int, int]:
    return -(1 << (bits - 1)), (1 << (bits - 1)) - 1


def _check_weight_range(arr: np.ndarray, bits: int, where: str) -> None:
    lo, hi = _signed_range(bits)
    if arr.size and (arr.min() < lo or arr.max() > hi):
        raise ModelError(
            f"{where}: weight outside signed {bits}-bit range "
            f"[{lo}, {hi}] (min {arr.min()}, max {arr.max()})"
        )


class _BlobReader:
    """Reads int32 little-endian slices out of the sidecar weight blob."""

    def __init__(self, path: Path):
        self._data = np.fromfile(path, dtype="<i4")

    def slice(self, offset: int, count: int, where: str) -> np.ndarray:
        end = offset + count
        if offset < 0 or end > self._data.size:
            raise ModelError(
                f"{where}: blob slice [{offset}, {end}) outside blob of "
                f"{self._data.size} elements"
            )
        return self._data[offset:end].astype(np.int32)


def _tensor(entry, blob: Optional[_BlobReader], shape: tuple[int, ...], where: str) -> np.ndarray:
    """Resolve a manifest weight entry (inline nested list or blob ref)."""
    if isinstance(entry, dict):
        if blob is None:
            raise ModelError(f"{where}: blob reference but no weights_blob declared")
        arr = blob.slice(int(entry["offset"]), int(entry["count"]), where)
    else:
        arr = np.asarray(entry, dtype=np.int64).astype(np.int32)
    if arr.size != int(np.prod(shape)):
        raise ModelError(
            f"{where}: expected {int(np.prod(shape))} values for shape {shape}, "
            f"got {arr.size}"
        )
    return np.ascontiguousarray(arr.reshape(shape))


def load_model(path) -> NetworkModel:
    """Load and validate a model manifest from a JSON file path."""
    path = Path(path)
    with open(path) as f:
        manifest = json.load(f)
    return model_from_manifest(manifest, base_dir=path.parent, name=path.stem)


def model_from_manifest(manifest: dict, base_dir=None, name: str = "unnamed") -> NetworkModel:
    """Build a validated NetworkModel from a parsed manifest document."""
    layers_doc = manifest.get("layers", [])
    if not layers_doc:
        raise ModelError("empty network")

    timesteps = int(manifest.get("timesteps", 1))
    if timesteps < 1:
        raise ModelError(f"timesteps must be >= 1, got {timesteps}")
    weight_bits = int(manifest.get("weight_bits", 8))
    if not 1 < weight_bits <= 32:
        raise ModelError(f"weight_bits must be in (1, 32], got {weight_bits}")

    inp = manifest.get("input", {})
    width = int(inp.get("width", 0))
    height = int(inp.get("height", 0))
    channels = int(inp.get("channels", 1))
    if width < 1 or height < 1 or channels < 1:
        raise ModelError("input geometry must declare positive width/height/channels")

    blob = None
    if "weights_blob" in manifest:
        if base_dir is None:
            raise ModelError("weights_blob requires a base directory to resolve")
        blob = _BlobReader(Path(base_dir) / manifest["weights_blob"])

    layers: list[LayerSpec] = []
    weights: list[Optional[np.ndarray]] = []
    biases: list[Optional[np.ndarray]] = []
    geometry: list[tuple[int, int, int]] = []

    for i, doc in enumerate(layers_doc):
        kind = doc.get("kind")
        where = f"layer {i} ({kind})"
        if kind not in LAYER_KINDS:
            raise ModelError(f"{where}: unknown layer kind {kind!r}")
        is_last = i == len(layers_doc) - 1

        if kind == CONV:
            k = int(doc["kernel_size"])
            if k < 1 or k % 2 == 0:
                raise ModelError(f"{where}: kernel_size must be odd and >= 1, got {k}")
            padding = doc.get("padding", VALID)
            if padding not in (VALID, SAME):
                raise ModelError(f"{where}: padding must be 'valid' or 'same'")
            out_ch = int(doc["out_channels"])
            declared_in = doc.get("in_channels")
            if declared_in is not None and int(declared_in) != channels:
                raise ModelError(
                    f"{where}: declares {declared_in} input channels but previous "
                    f"layer produces {channels}"
                )
            layer = LayerSpec(
                kind=CONV, in_width=width, in_height=height, in_channels=channels,
                out_channels=out_ch, kernel_size=k, padding=padding,
                threshold=_read_threshold(doc, where, required=not is_last),
                weight_bits=weight_bits,
            )
            w = _tensor(doc["weights"], blob, (out_ch, channels, k, k), where)
            _check_weight_range(w, weight_bits, where)
            b = _read_bias(doc, blob, out_ch, where)
        elif kind == MAXPOOL:
            n = int(doc["window"])
            if n < 2:
                raise ModelError(f"{where}: pool window must be >= 2, got {n}")
            layer = LayerSpec(
                kind=MAXPOOL, in_width=width, in_height=height, in_channels=channels,
                out_channels=channels, pool_window=n, weight_bits=weight_bits,
            )
            w = b = None
        else:  # dense
            out_f = int(doc["out_features"])
            in_f = width * height * channels
            declared_in = doc.get("in_features")
            if declared_in is not None and int(declared_in) != in_f:
                raise ModelError(
                    f"{where}: declares {declared_in} input features but previous "
                    f"layer flattens to {in_f}"
                )
            layer = LayerSpec(
                kind=DENSE, in_width=width, in_height=height, in_channels=channels,
                out_channels=out_f,
                threshold=_read_threshold(doc, where, required=not is_last),
                weight_bits=weight_bits,
            )
            w = _tensor(doc["weights"], blob, (out_f, in_f), where)
            _check_weight_range(w, weight_bits, where)
            b = _read_bias(doc, blob, out_f, where)

        width, height, channels = output_geometry(layer)
        layers.append(layer)
        weights.append(w)
        biases.append(b)
        geometry.append((width, height, channels))

    if layers[-1].kind != DENSE:
        raise ModelError("last layer must be dense (it provides the class read-out)")
    for i in range(len(layers) - 1):
        if layers[i].kind == DENSE and layers[i + 1].kind != DENSE:
            raise ModelError(
                f"layer {i + 1}: only dense layers may follow a dense layer"
            )

    return NetworkModel(
        layers=tuple(layers),
        weights=tuple(weights),
        biases=tuple(biases),
        timesteps=timesteps,
        num_classes=layers[-1].out_channels,
        name=str(manifest.get("name", name)),
        _geometry=tuple(geometry),
    )


def _read_threshold(doc: dict, where: str, required: bool) -> Optional[int]:
    if "threshold" not in doc:
        if required:
            raise ModelError(f"{where}: spiking layer needs a threshold")
        return None
    vt = int(doc["threshold"])
    if vt <= 0:
        raise ModelError(f"{where}: threshold must be > 0, got {vt}")
    return vt


def _read_bias(doc: dict, blob: Optional[_BlobReader], n: int, where: str) -> np.ndarray:
    if "bias" not in doc:
        return np.zeros(n, dtype=np.int32)
    return _tensor(doc["bias"], blob, (n,), where)


def model_to_manifest(net: NetworkModel) -> dict:
    """Serialize a model back to an inline-weight manifest document.

    load(model_to_manifest(net)) reproduces the model bit for bit; used by
    the idempotence tests and the CLI's manifest echo.
    """
    first = net.layers[0]
    doc = {
        "name": net.name,
        "timesteps": net.timesteps,
        "weight_bits": first.weight_bits,
        "input": {
            "width": first.in_width,
            "height": first.in_height,
            "channels": first.in_channels,
        },
        "layers": [],
    }
    for layer, w, b in zip(net.layers, net.weights, net.biases):
        if layer.kind == CONV:
            entry = {
                "kind": CONV,
                "out_channels": layer.out_channels,
                "kernel_size": layer.kernel_size,
                "padding": layer.padding,
                "weights": w.tolist(),
                "bias": b.tolist(),
            }
        elif layer.kind == MAXPOOL:
            entry = {"kind": MAXPOOL, "window": layer.pool_window}
        else:
            entry = {
                "kind": DENSE,
                "out_features": layer.out_channels,
                "weights": w.tolist(),
                "bias": b.tolist(),
            }
        if layer.threshold is not None:
            entry["threshold"] = layer.threshold
        doc["layers"].append(entry)
    return doc


@dataclass
class SpikePlane:
    """Dense spike occupancy over (timestep, channel, y, x).

    ``bits[t, c, y, x]`` is True when that position spiked at timestep t.
    """

    bits: np.ndarray  # bool, shape (T, C, H, W)

    def __post_init__(self):
        self.bits = np.ascontiguousarray(self.bits, dtype=bool)
        if self.bits.ndim != 4:
            raise ModelError(f"spike plane must be 4-d (T,C,H,W), got {self.bits.ndim}-d")

    @property
    def timesteps(self) -> int:
        return self.bits.shape[0]

    @property
    def channels(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[2]

    @property
    def width(self) -> int:
        return self.bits.shape[3]

    def spike_count(self) -> int:
        return int(self.bits.sum())

    def single_spike_per_position(self) -> bool:
        """True when no position spikes more than once across all timesteps."""
        return bool((self.bits.sum(axis=0) <= 1).all())
