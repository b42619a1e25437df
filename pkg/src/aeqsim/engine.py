"""Event-driven accelerator simulator and its dense brute-force counterpart.

Execution proceeds layer by layer. Within a convolutional layer, output
channels are computed one at a time: for each output channel the layer's
input events are replayed timestep by timestep, every event adding its K*K
kernel weights to K*K distinct interlaced membrane memories in one modeled
cycle. After each timestep's drain the whole channel map is thresholded,
spikes are encoded into the next layer's queues, and the membrane buffer
pair swaps. Draining a segment of n events on P cores costs
ceil(n / P) + pipeline_fill cycles.

``run_dense_oracle`` evaluates the identical neuron semantics by direct
dense summation over every neuron, with no queues or interlacing; the two
paths must agree exactly on spike planes and classification.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .kernels import conv_scatter
from .model import (CONV, DENSE, MAXPOOL, ModelError, NetworkModel, SAME,
                    SpikePlane, flat_index)
from .neuron import (DEFAULT_ACC_BITS, DEFAULT_INPUT_THRESHOLD, InputScheme,
                     NeuronMode, acc_limits, encode_input)
from .queueing import AeqBank, EncodingScheme, to_address_event

DEFAULT_PIPELINE_FILL = 13  # fill/flush of the pipelined conv unit at K=3


class GeometryError(ModelError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    parallel: int = 1
    aeq_depth: int = 2048
    mode: NeuronMode = NeuronMode.MTTFS_SINGLE
    encoding: EncodingScheme = EncodingScheme.COMPRESSED
    pipeline_fill: int = DEFAULT_PIPELINE_FILL
    clock_mhz: float = 100.0
    acc_bits: int = DEFAULT_ACC_BITS
    input_scheme: InputScheme = InputScheme.THRESHOLD_ONCE
    input_threshold: int = DEFAULT_INPUT_THRESHOLD
    checked: bool = False  # interlacing/epoch assertions in the drain loop

    def __post_init__(self):
        if not 1 <= self.parallel <= 16:
            raise ValueError(f"parallel must be in [1, 16], got {self.parallel}")
        if self.aeq_depth < 1:
            raise ValueError("aeq_depth must be >= 1")
        if self.pipeline_fill < 0:
            raise ValueError("pipeline_fill must be >= 0")


def segment_cycles(events: int, parallel: int, pipeline_fill: int) -> int:
    """Cycles to drain one segment: one event per cycle per core, plus fill."""
    return -(-events // parallel) + pipeline_fill


@dataclass(frozen=True)
class SegmentRecord:
    layer: int
    channel: int
    timestep: int
    events: int
    cycles: int


@dataclass
class RunResult:
    cycles: int
    input_spikes: int
    layer_spikes: list[int]           # emitted per layer (final layer never fires)
    events_processed: int             # event visits across all segment drains
    predicted_class: int
    output_potentials: np.ndarray     # class read-out (membrane + bias)
    per_segment_cycles: list[SegmentRecord]
    queue_peaks: dict                 # (layer, core, queue) -> peak occupancy
    segment_peaks: list               # (layer, channel, t, queue, peak) rows
    spike_planes: list[SpikePlane] = field(default_factory=list)

    @property
    def total_spikes(self) -> int:
        return self.input_spikes + sum(self.layer_spikes)


class MembraneBank:
    """K*K interlaced memories with a compute/read-out buffer pair.

    The drain phase accumulates into the active buffer; ``boundary()`` swaps
    the pair at the compute/threshold boundary, so the threshold phase reads
    values no drain write can touch. With ``checked=True`` every word carries
    the epoch of its last write and reads assert the phase discipline, and
    every event's scatter is verified to hit pairwise-distinct memories.
    """

    def __init__(self, kernel: int, grid_w: int, grid_h: int, checked: bool = False):
        self.kernel = kernel
        self.grid_w = grid_w
        shape = (kernel * kernel, grid_w * grid_h)
        self._buffers = [np.zeros(shape, dtype=np.int64), np.zeros(shape, dtype=np.int64)]
        self._active = 0
        self.epoch = 0
        self.checked = checked
        self._write_epoch = np.zeros(shape, dtype=np.int64) if checked else None

    @property
    def active(self) -> np.ndarray:
        return self._buffers[self._active]

    @property
    def readout(self) -> np.ndarray:
        return self._buffers[1 - self._active]

    def reset(self) -> None:
        for buf in self._buffers:
            buf[:] = 0
        if self._write_epoch is not None:
            self._write_epoch[:] = 0
        self.epoch = 0

    def scatter(self, ex: np.ndarray, ey: np.ndarray, w_kk: np.ndarray,
                out_w: int, out_h: int, pad: int) -> None:
        if self.checked:
            self._check_distinct(ex, ey, out_w, out_h, pad)
            self._stamp(ex, ey, out_w, out_h, pad)
        conv_scatter(ex, ey, w_kk, self.active, self.kernel,
                     out_w, out_h, self.grid_w, pad)

    def boundary(self) -> None:
        """Compute/threshold boundary: publish the active buffer for read-out.

        The next drain continues from the published values, mirroring the
        pre/post buffer pair of the hardware.
        """
        self.readout[:] = self.active
        self._active = 1 - self._active
        self.epoch += 1

    def read_for_threshold(self, mem_idx: np.ndarray, addr_idx: np.ndarray) -> np.ndarray:
        if self.checked:
            stale = self._write_epoch[mem_idx, addr_idx] > self.epoch
            if stale.any():
                raise AssertionError(
                    "threshold read observed a same-pass membrane write"
                )
        return self.readout[mem_idx, addr_idx]

    def _stamp(self, ex, ey, out_w, out_h, pad) -> None:
        k = self.kernel
        d = np.arange(k)
        y = ey[:, None, None] + pad - d[None, :, None]
        x = ex[:, None, None] + pad - d[None, None, :]
        y, x = np.broadcast_arrays(y, x)
        valid = (y >= 0) & (y < out_h) & (x >= 0) & (x < out_w)
        yv, xv = y[valid], x[valid]
        self._write_epoch[(yv % k) * k + xv % k,
                          (yv // k) * self.grid_w + xv // k] = self.epoch + 1

    def _check_distinct(self, ex, ey, out_w, out_h, pad) -> None:
        k = self.kernel
        for px, py in zip(ex.tolist(), ey.tolist()):
            mems = set()
            for dy in range(k):
                for dx in range(k):
                    x, y = px + pad - dx, py + pad - dy
                    if 0 <= x < out_w and 0 <= y < out_h:
                        m = (y % k) * k + (x % k)
                        if m in mems:
                            raise AssertionError(
                                f"event ({px}, {py}) touches memory {m} twice"
                            )
                        mems.add(m)


def _interlace_indices(kernel: int, out_w: int, out_h: int, grid_w: int):
    """Static (memory, address) lookup for every output position."""
    ys, xs = np.mgrid[0:out_h, 0:out_w]
    mem_idx = (ys % kernel) * kernel + (xs % kernel)
    addr_idx = (ys // kernel) * grid_w + (xs // kernel)
    return mem_idx, addr_idx


def _bank_for_layer(net: NetworkModel, index: int, cfg: EngineConfig) -> AeqBank:
    layer = net.layers[index]
    if layer.kind == CONV:
        return AeqBank(kernel=layer.kernel_size, depth=cfg.aeq_depth,
                       channels=layer.in_channels, timesteps=net.timesteps,
                       cores=cfg.parallel)
    if layer.kind == MAXPOOL:
        return AeqBank(kernel=1, depth=cfg.aeq_depth, channels=layer.in_channels,
                       timesteps=net.timesteps, cores=cfg.parallel)
    return AeqBank(kernel=1, depth=cfg.aeq_depth, channels=1,
                   timesteps=net.timesteps, cores=cfg.parallel)


def _emit(bank: AeqBank, target_kind: str, target_kernel: int,
          xs: np.ndarray, ys: np.ndarray, channel: int, timestep: int,
          width: int, channels: int) -> None:
    """Encode spikes at (xs, ys) of `channel` into the consumer's queues."""
    if target_kind == CONV:
        for x, y in zip(xs.tolist(), ys.tolist()):
            bank.enqueue(to_address_event(x, y, target_kernel, channel, timestep))
    elif target_kind == MAXPOOL:
        for x, y in zip(xs.tolist(), ys.tolist()):
            bank.enqueue(to_address_event(x, y, 1, channel, timestep))
    else:  # dense consumer: row-major, channel-minor flatten
        for x, y in zip(xs.tolist(), ys.tolist()):
            idx = flat_index(x, y, channel, width, channels)
            bank.enqueue(to_address_event(idx, 0, 1, 0, timestep))


def run_sample(net: NetworkModel, input_plane: SpikePlane,
               cfg: EngineConfig) -> RunResult:
    """Simulate one sample end to end and account cycles per segment."""
    T = net.timesteps
    in_w, in_h, in_c = net.input_geometry
    if input_plane.bits.shape != (T, in_c, in_h, in_w):
        raise GeometryError(
            f"input plane shape {input_plane.bits.shape} does not match "
            f"(T={T}, C={in_c}, H={in_h}, W={in_w})"
        )
    if cfg.mode is NeuronMode.MTTFS_SINGLE and not input_plane.single_spike_per_position():
        raise GeometryError("single-spike mode requires single-spike input planes")

    lo, hi = acc_limits(cfg.acc_bits)
    mode = cfg.mode
    records: list[SegmentRecord] = []
    layer_spikes = [0] * len(net.layers)
    planes: list[SpikePlane] = []
    queue_peaks: dict = {}
    segment_peaks: list = []
    output_potentials = None

    banks: list[AeqBank] = [_bank_for_layer(net, 0, cfg)]
    for t in range(T):
        for c in range(in_c):
            ys, xs = np.nonzero(input_plane.bits[t, c])
            first = net.layers[0]
            _emit(banks[0], first.kind,
                  first.kernel_size if first.kind == CONV else 1,
                  xs, ys, c, t, in_w, in_c)

    for li, layer in enumerate(net.layers):
        is_last = li == len(net.layers) - 1
        out_w, out_h, out_c = net.layer_output_geometry(li)
        in_bank = banks[li]
        if not is_last:
            banks.append(_bank_for_layer(net, li + 1, cfg))
            nxt = net.layers[li + 1]
            nxt_kind, nxt_kernel = nxt.kind, (nxt.kernel_size if nxt.kind == CONV else 1)
        plane = np.zeros((T, out_c, out_h, out_w), dtype=bool)

        if layer.kind == CONV:
            k = layer.kernel_size
            pad = k // 2 if layer.padding == SAME else 0
            gw, gh = -(-out_w // k), -(-out_h // k)
            mem_idx, addr_idx = _interlace_indices(k, out_w, out_h, gw)
            bank = MembraneBank(k, gw, gh, checked=cfg.checked)
            weights = net.weights[li].astype(np.int64)
            bias = net.biases[li].astype(np.int64)
            vt = layer.threshold
            segments = [
                [_events_xy(in_bank, ci, t, k) for ci in range(layer.in_channels)]
                for t in range(T)
            ]
            for co in range(out_c):
                bank.reset()
                latched = np.zeros((out_h, out_w), dtype=bool)
                for t in range(T):
                    n_events = 0
                    for ci in range(layer.in_channels):
                        ex, ey = segments[t][ci]
                        n_events += len(ex)
                        if len(ex):
                            bank.scatter(ex, ey, weights[co, ci], out_w, out_h, pad)
                    records.append(SegmentRecord(
                        li, co, t, n_events,
                        segment_cycles(n_events, cfg.parallel, cfg.pipeline_fill),
                    ))
                    bank.boundary()
                    np.clip(bank.readout, lo, hi, out=bank.readout)
                    np.clip(bank.active, lo, hi, out=bank.active)
                    v = bank.read_for_threshold(mem_idx, addr_idx)
                    spikes = (v + bias[co]) > vt
                    if mode is NeuronMode.MTTFS_SINGLE:
                        spikes &= ~latched
                        latched |= spikes
                    elif mode is NeuronMode.IF_RESET:
                        bank.active[mem_idx[spikes], addr_idx[spikes]] = 0
                        bank.readout[mem_idx[spikes], addr_idx[spikes]] = 0
                    plane[t, co] = spikes
                    if not is_last and spikes.any():
                        sy, sx = np.nonzero(spikes)
                        _emit(banks[li + 1], nxt_kind, nxt_kernel,
                              sx, sy, co, t, out_w, out_c)
            for t in range(T):
                for ci in range(layer.in_channels):
                    in_bank.release_segment(ci, t)

        elif layer.kind == MAXPOOL:
            n = layer.pool_window
            latched = np.zeros((out_c, out_h, out_w), dtype=bool)
            for t in range(T):
                for c in range(layer.in_channels):
                    ex, ey = _events_xy(in_bank, c, t, 1)
                    records.append(SegmentRecord(
                        li, c, t, len(ex),
                        segment_cycles(len(ex), cfg.parallel, cfg.pipeline_fill),
                    ))
                    if len(ex) == 0:
                        continue
                    px, py = ex // n, ey // n
                    keep = (px < out_w) & (py < out_h)
                    hit = np.zeros((out_h, out_w), dtype=bool)
                    hit[py[keep], px[keep]] = True
                    if mode is NeuronMode.MTTFS_SINGLE:
                        hit &= ~latched[c]
                        latched[c] |= hit
                    plane[t, c] = hit
                    if not is_last and hit.any():
                        sy, sx = np.nonzero(hit)
                        _emit(banks[li + 1], nxt_kind, nxt_kernel,
                              sx, sy, c, t, out_w, out_c)
                    in_bank.release_segment(c, t)

        else:  # dense
            w = net.weights[li].astype(np.int64)
            bias = net.biases[li].astype(np.int64)
            v = np.zeros(layer.out_channels, dtype=np.int64)
            latched = np.zeros(layer.out_channels, dtype=bool)
            for t in range(T):
                ex, _ = _events_xy(in_bank, 0, t, 1)
                records.append(SegmentRecord(
                    li, 0, t, len(ex),
                    segment_cycles(len(ex), cfg.parallel, cfg.pipeline_fill),
                ))
                if len(ex):
                    v += w[:, ex].sum(axis=1)
                np.clip(v, lo, hi, out=v)
                if not is_last:
                    spikes = (v + bias) > layer.threshold
                    if mode is NeuronMode.MTTFS_SINGLE:
                        spikes &= ~latched
                        latched |= spikes
                    elif mode is NeuronMode.IF_RESET:
                        v[spikes] = 0
                    plane[t, :, 0, 0] = spikes
                    # a dense layer's (1, 1, N) output flattens to index = feature
                    for j in np.nonzero(spikes)[0].tolist():
                        banks[li + 1].enqueue(to_address_event(j, 0, 1, 0, t))
                in_bank.release_segment(0, t)
            if is_last:
                output_potentials = v + bias

        layer_spikes[li] = int(plane.sum())
        planes.append(SpikePlane(plane))

    for li, bank in enumerate(banks):
        for (core, q), peak in bank.queue_peaks.items():
            queue_peaks[(li, core, q)] = peak
        for (c, t, q), peak in bank.segment_peaks.items():
            segment_peaks.append((li, c, t, q, peak))

    if output_potentials is None:
        raise ModelError("network has no dense read-out layer")
    cycles = sum(r.cycles for r in records)
    return RunResult(
        cycles=cycles,
        input_spikes=input_plane.spike_count(),
        layer_spikes=layer_spikes,
        events_processed=sum(r.events for r in records),
        predicted_class=int(np.argmax(output_potentials)),
        output_potentials=output_potentials,
        per_segment_cycles=records,
        queue_peaks=queue_peaks,
        segment_peaks=segment_peaks,
        spike_planes=planes,
    )


def _events_xy(bank: AeqBank, channel: int, timestep: int, kernel: int):
    """Segment events as absolute-coordinate arrays (non-consuming read)."""
    events = bank.segment_events(channel, timestep)
    if not events:
        empty = np.zeros(0, dtype=np.int32)
        return empty, empty
    ex = np.fromiter(
        (e.win_x * kernel + e.kernel_pos % kernel for e in events),
        dtype=np.int32, count=len(events),
    )
    ey = np.fromiter(
        (e.win_y * kernel + e.kernel_pos // kernel for e in events),
        dtype=np.int32, count=len(events),
    )
    return ex, ey


def run_image(net: NetworkModel, image: np.ndarray, cfg: EngineConfig) -> RunResult:
    """Encode a raw pixel grid per the config and simulate it."""
    plane = encode_input(image, cfg.input_threshold, net.timesteps,
                         cfg.input_scheme, cfg.mode, cfg.acc_bits)
    return run_sample(net, plane, cfg)


# ---------------------------------------------------------------------------
# Dense brute-force reference
# ---------------------------------------------------------------------------

def run_dense_oracle(net: NetworkModel, input_plane: SpikePlane,
                     mode: Optional[NeuronMode] = None,
                     acc_bits: int = DEFAULT_ACC_BITS):
    """Evaluate every neuron of every layer at every timestep directly.

    No queues, no interlacing, no event representation: convolutions are
    dense shifted sums, pooling is a window OR, dense layers are full
    matrix-vector products over {0,1} activations. Returns the spike planes
    per layer, the predicted class, and the final read-out potentials.
    """
    if mode is None:
        mode = NeuronMode.MTTFS_SINGLE
    T = net.timesteps
    in_w, in_h, in_c = net.input_geometry
    if input_plane.bits.shape != (T, in_c, in_h, in_w):
        raise GeometryError(
            f"input plane shape {input_plane.bits.shape} does not match "
            f"(T={T}, C={in_c}, H={in_h}, W={in_w})"
        )
    lo, hi = acc_limits(acc_bits)

    x = input_plane.bits
    planes: list[SpikePlane] = []
    potentials = None

    for li, layer in enumerate(net.layers):
        is_last = li == len(net.layers) - 1
        out_w, out_h, out_c = net.layer_output_geometry(li)
        out = np.zeros((T, out_c, out_h, out_w), dtype=bool)

        if layer.kind == CONV:
            w = net.weights[li].astype(np.int64)
            bias = net.biases[li].astype(np.int64)[:, None, None]
            v = np.zeros((out_c, out_h, out_w), dtype=np.int64)
            latched = np.zeros((out_c, out_h, out_w), dtype=bool)
            pad = layer.kernel_size // 2 if layer.padding == SAME else 0
            for t in range(T):
                v = np.clip(v + _dense_conv(x[t], w, pad, out_w, out_h), lo, hi)
                spikes = (v + bias) > layer.threshold
                if mode is NeuronMode.MTTFS_SINGLE:
                    spikes &= ~latched
                    latched |= spikes
                elif mode is NeuronMode.IF_RESET:
                    v = v.copy()
                    v[spikes] = 0
                out[t] = spikes

        elif layer.kind == MAXPOOL:
            n = layer.pool_window
            latched = np.zeros((out_c, out_h, out_w), dtype=bool)
            for t in range(T):
                cropped = x[t][:, : out_h * n, : out_w * n]
                pooled = cropped.reshape(out_c, out_h, n, out_w, n).any(axis=(2, 4))
                if mode is NeuronMode.MTTFS_SINGLE:
                    pooled = pooled & ~latched
                    latched |= pooled
                out[t] = pooled

        else:  # dense
            w = net.weights[li].astype(np.int64)
            bias = net.biases[li].astype(np.int64)
            v = np.zeros(layer.out_channels, dtype=np.int64)
            latched = np.zeros(layer.out_channels, dtype=bool)
            for t in range(T):
                flat = np.transpose(x[t], (1, 2, 0)).reshape(-1).astype(np.int64)
                v = np.clip(v + w @ flat, lo, hi)
                if not is_last:
                    spikes = (v + bias) > layer.threshold
                    if mode is NeuronMode.MTTFS_SINGLE:
                        spikes &= ~latched
                        latched |= spikes
                    elif mode is NeuronMode.IF_RESET:
                        v = v.copy()
                        v[spikes] = 0
                    out[t, :, 0, 0] = spikes
            if is_last:
                potentials = v + bias

        planes.append(SpikePlane(out))
        x = out

    return planes, int(np.argmax(potentials)), potentials


def _dense_conv(xt: np.ndarray, w: np.ndarray, pad: int,
                out_w: int, out_h: int) -> np.ndarray:
    """Direct summation of one timestep's convolution contributions."""
    c_out, c_in, k, _ = w.shape
    xi = xt.astype(np.int64)
    if pad:
        xi = np.pad(xi, ((0, 0), (pad, pad), (pad, pad)))
    acc = np.zeros((c_out, out_h, out_w), dtype=np.int64)
    for dy in range(k):
        for dx in range(k):
            patch = xi[:, dy:dy + out_h, dx:dx + out_w]
            acc += np.tensordot(w[:, :, dy, dx], patch, axes=([1], [0]))
    return acc


# ---------------------------------------------------------------------------
# Dataset-level orchestration
# ---------------------------------------------------------------------------

@dataclass
class SampleStats:
    sample_id: int
    cycles: int
    spikes: int
    predicted: int
    label: int


def latency_histogram(net: NetworkModel, images: np.ndarray, labels: np.ndarray,
                      cfg: EngineConfig, n: Optional[int] = None):
    """Per-sample cycle counts and per-class mean spike totals.

    Returns (list of SampleStats ordered by sample id, dict class -> mean
    spikes). ``images`` is (N, H, W) or (N, C, H, W) uint8.
    """
    if n is None:
        n = len(images)
    if n < 1:
        raise ValueError("need at least one sample")
    stats = []
    for i in range(n):
        res = run_image(net, images[i], cfg)
        stats.append(SampleStats(i, res.cycles, res.total_spikes,
                                 res.predicted_class, int(labels[i])))
    per_class: dict[int, float] = {}
    for cls in sorted({s.label for s in stats}):
        members = [s.spikes for s in stats if s.label == cls]
        per_class[cls] = sum(members) / len(members)
    return stats, per_class
