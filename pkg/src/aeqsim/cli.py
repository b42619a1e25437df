"""Command-line interface: simulate, resources, power, compare-oracle, encode-check.

Exit codes: 0 ok, 1 input/usage error, 2 internal fault. The default output
directory comes from AEQSIM_OUTPUT_DIR (falling back to ./aeqsim-out), and
all CSV output is byte-deterministic for a given configuration and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .engine import EngineConfig, run_image, segment_cycles
from .idx import IdxError, find_dataset, load_dataset
from .kernels import BACKEND
from .model import ModelError, load_model
from .neuron import InputScheme, NeuronMode
from .powerenergy import energy_and_fpsw, estimate_power, load_profile
from .queueing import EncodingScheme, QueueError, check_fallback, resolve_encoding
from .resources import MemoryPolicy, plan_memories
from .synth import random_input, random_network

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


class _Activity:
    """Event-rate view of one evaluated sample for the power model."""

    def __init__(self, cycles: int, events_processed: int):
        self.cycles = cycles
        self.events_processed = events_processed


def _default_output() -> str:
    return os.environ.get("AEQSIM_OUTPUT_DIR", "aeqsim-out")


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _engine_config(args) -> EngineConfig:
    return EngineConfig(
        parallel=args.parallel,
        aeq_depth=args.depth,
        mode=NeuronMode(args.mode),
        encoding=EncodingScheme(args.encoding),
        pipeline_fill=args.pipeline_fill,
        clock_mhz=args.clock_mhz,
        input_scheme=InputScheme(args.input_scheme),
        input_threshold=args.input_threshold,
    )


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--parallel", "-p", type=int, default=1,
                   help="core count P, 1..16 (default 1)")
    p.add_argument("--depth", "-d", type=int, default=2048,
                   help="per-queue event capacity D (default 2048)")
    p.add_argument("--encoding", choices=[e.value for e in EncodingScheme],
                   default="compressed", help="event encoding (default compressed)")
    p.add_argument("--mode", choices=[m.value for m in NeuronMode],
                   default="mttfs-single", help="neuron mode (default mttfs-single)")
    p.add_argument("--pipeline-fill", type=int, default=13,
                   help="fixed cycles per segment drain (default 13)")
    p.add_argument("--clock-mhz", type=float, default=100.0)
    p.add_argument("--input-scheme", choices=[s.value for s in InputScheme],
                   default="threshold-once")
    p.add_argument("--input-threshold", type=int, default=127)


def _add_plan_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", choices=[m.value for m in MemoryPolicy],
                   default="auto", help="memory mapping policy (default auto)")
    p.add_argument("--mem-depth", type=int, default=256,
                   help="membrane words per interlaced memory (default 256)")
    p.add_argument("--mem-bits", type=int, default=8,
                   help="membrane word width for the plan (default 8)")
    p.add_argument("--aeq-bits", type=int, default=None,
                   help="override the event word width (default: from encoding)")
    p.add_argument("--no-weight-rom", action="store_true",
                   help="exclude the read-only weight ROM from the plan")


def _plan(net, args):
    return plan_memories(
        net,
        parallel=args.parallel,
        aeq_depth=args.depth,
        policy=MemoryPolicy(args.policy),
        encoding=EncodingScheme(args.encoding),
        membrane_depth=args.mem_depth,
        membrane_bits=args.mem_bits,
        aeq_bits=args.aeq_bits,
        include_weight_rom=not args.no_weight_rom,
    )


def _evaluate_sample(net, image, cfg, want_trace):
    res = run_image(net, image, cfg)
    trace = res.segment_peaks if want_trace else []
    return (res.cycles, res.total_spikes, res.predicted_class,
            res.events_processed, trace)


def _worker_chunk(payload):
    net, images, ids, cfg, want_trace = payload
    return [(i, _evaluate_sample(net, images[i], cfg, want_trace)) for i in ids]


def cmd_simulate(args) -> int:
    net = load_model(args.model)
    cfg = _engine_config(args)
    if args.images and args.labels:
        images_path, labels_path = Path(args.images), Path(args.labels)
    elif args.dataset:
        images_path, labels_path = find_dataset(args.dataset)
    else:
        print("simulate: need --dataset DIR or --images/--labels", file=sys.stderr)
        return EXIT_INPUT
    images, labels = load_dataset(images_path, labels_path)

    n = min(args.samples, len(images)) if args.samples else len(images)
    order = np.arange(len(images))
    if args.shuffle:
        np.random.default_rng(args.seed).shuffle(order)
    picked = np.sort(order[:n])

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)

    plan = _plan(net, args)
    coeffs = load_profile(args.profile)

    ids = picked.tolist()
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = [ids[i::args.workers] for i in range(args.workers)]
        payloads = [(net, images, chunk, cfg, args.queue_trace)
                    for chunk in chunks if chunk]
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            parts = list(pool.map(_worker_chunk, payloads))
        results = dict(pair for part in parts for pair in part)
    else:
        results = {i: _evaluate_sample(net, images[i], cfg, args.queue_trace)
                   for i in ids}

    latency_rows = []
    energy_rows = []
    trace_rows = []
    per_class_spikes: dict[int, list[int]] = {}
    for sample_id in ids:  # output ordered by sample id, not completion
        cycles, spikes, predicted, events, trace = results[sample_id]
        label = int(labels[sample_id])
        latency_rows.append((sample_id, cycles, spikes, predicted, label))
        power = estimate_power(plan, cfg, _Activity(cycles, events), coeffs)
        report = energy_and_fpsw(sum(power.values()), cycles,
                                 cfg.clock_mhz, power)
        energy_rows.append((sample_id, report.power_total, report.energy_mj,
                            report.fps_per_watt))
        per_class_spikes.setdefault(label, []).append(spikes)
        for layer, channel, t, queue, peak in trace:
            trace_rows.append((sample_id, layer, channel, t, queue, peak))

    _write_csv(outdir / "latency.csv",
               ["sample_id", "cycles", "spikes", "predicted", "label"],
               latency_rows)
    _write_csv(outdir / "energy.csv",
               ["sample_id", "power_w", "energy_mj", "fps_per_watt"],
               energy_rows)
    _write_csv(outdir / "per_class.csv", ["class", "mean_spikes"],
               [(cls, sum(v) / len(v)) for cls, v in sorted(per_class_spikes.items())])
    _write_csv(outdir / "resources.csv",
               ["structure", "tech", "brams", "lutram_bits", "depth", "width",
                "replication"],
               [(e.structure, e.tech, e.brams, e.lutram_bits, e.depth, e.width,
                 e.replication) for e in plan.entries])
    if args.queue_trace:
        _write_csv(outdir / "queue_trace.csv",
                   ["sample_id", "layer", "channel", "timestep", "queue",
                    "max_occupancy"], trace_rows)

    manifest = {
        "version": __version__,
        "kernel_backend": BACKEND,
        "model": str(args.model),
        "images": str(images_path),
        "labels": str(labels_path),
        "samples": int(n),
        "seed": args.seed,
        "shuffle": bool(args.shuffle),
        "parallel": cfg.parallel,
        "aeq_depth": cfg.aeq_depth,
        "timesteps": net.timesteps,
        "mode": cfg.mode.value,
        "encoding": cfg.encoding.value,
        "pipeline_fill": cfg.pipeline_fill,
        "clock_mhz": cfg.clock_mhz,
        "input_scheme": cfg.input_scheme.value,
        "input_threshold": cfg.input_threshold,
        "policy": args.policy,
        "profile": args.profile,
        "mem_depth": args.mem_depth,
        "mem_bits": args.mem_bits,
        "aeq_bits": args.aeq_bits,
        "workers": args.workers,
    }
    (outdir / "run_manifest.json").write_text(json.dumps(manifest, indent=2,
                                                         sort_keys=True) + "\n")
    correct = sum(1 for r in latency_rows if r[3] == r[4])
    print(f"{n} samples -> {outdir}  (accuracy {correct}/{n}, "
          f"cycles min {min(r[1] for r in latency_rows)} "
          f"max {max(r[1] for r in latency_rows)})")
    return EXIT_OK


def cmd_resources(args) -> int:
    net = load_model(args.model)
    _engine_config(args)  # validates the shared flag ranges
    plan = _plan(net, args)
    print(f"{'structure':<12}{'tech':<8}{'brams':>8}{'lutram_bits':>13}"
          f"{'depth':>8}{'width':>7}{'repl':>6}")
    for e in plan.entries:
        print(f"{e.structure:<12}{e.tech:<8}{e.brams:>8g}{e.lutram_bits:>13}"
              f"{e.depth:>8}{e.width:>7}{e.replication:>6}")
    print(f"total BRAMs: {plan.total_brams:g} "
          f"(excluding weight ROM: {plan.total_brams_without_rom:g}); "
          f"LUTRAM bits: {plan.total_lutram_bits}")
    if args.output:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        _write_csv(outdir / "resources.csv",
                   ["structure", "tech", "brams", "lutram_bits", "depth",
                    "width", "replication"],
                   [(e.structure, e.tech, e.brams, e.lutram_bits, e.depth,
                     e.width, e.replication) for e in plan.entries])
    return EXIT_OK


def cmd_power(args) -> int:
    net = load_model(args.model)
    plan = _plan(net, args)
    cfg = _engine_config(args)
    coeffs = load_profile(args.profile)
    categories = estimate_power(plan, cfg, None, coeffs)
    total = sum(categories.values())
    for name in ("signals", "brams", "logic", "clocks"):
        print(f"{name:<10}{categories[name]:.3f} W")
    print(f"{'total':<10}{total:.3f} W")
    if args.cycles:
        report = energy_and_fpsw(total, args.cycles, cfg.clock_mhz, categories)
        print(f"latency   {report.latency_s * 1e6:.1f} us")
        print(f"energy    {report.energy_mj:.4f} mJ")
        print(f"fps/W     {report.fps_per_watt:.0f}")
    return EXIT_OK


def cmd_compare_oracle(args) -> int:
    from .engine import run_dense_oracle, run_sample

    ok = 0
    for seed in range(args.seeds):
        rng = np.random.default_rng(seed)
        net = random_network(rng, max_size=args.max_size)
        mode = NeuronMode.MTTFS_SINGLE if seed % 2 == 0 else NeuronMode.IF_RESET
        plane = random_input(rng, net, mode)
        cfg = EngineConfig(parallel=int(rng.choice([1, 2, 4, 8, 16])), mode=mode)
        res = run_sample(net, plane, cfg)
        planes, predicted, _ = run_dense_oracle(net, plane, mode)
        same = predicted == res.predicted_class and all(
            np.array_equal(a.bits, b.bits)
            for a, b in zip(res.spike_planes, planes)
        )
        if same:
            ok += 1
        elif args.verbose:
            print(f"seed {seed}: MISMATCH", file=sys.stderr)
    print(f"{ok}/{args.seeds} equivalent")
    return EXIT_OK if ok == args.seeds else EXIT_INTERNAL


def cmd_encode_check(args) -> int:
    enc = resolve_encoding(args.width, args.kernel, EncodingScheme(args.encoding))
    fallback = check_fallback(args.width, args.kernel)
    print(f"windows per axis: {enc.windows}")
    print(f"bits per coordinate: {enc.bits_per_coord}")
    print(f"spare patterns per coordinate: {enc.spare_patterns}")
    print(f"event word bits: {enc.word_bits} ({enc.scheme.value})")
    print(f"fallback to plain: {'yes' if fallback else 'no'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeqsim",
        description="Event-driven spiking-accelerator simulator and cost model",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run samples and emit result CSVs")
    p.add_argument("--model", "-m", required=True)
    p.add_argument("--dataset", help="directory with an IDX image/label pair")
    p.add_argument("--images", help="explicit IDX image file")
    p.add_argument("--labels", help="explicit IDX label file")
    p.add_argument("--samples", "-n", type=int, default=0,
                   help="sample count (default: whole dataset)")
    p.add_argument("--output", "-o", default=_default_output())
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shuffle", action="store_true",
                   help="pick samples with the seeded shuffle instead of first-n")
    p.add_argument("--profile", default="pynq-z1-100mhz")
    p.add_argument("--workers", "-j", type=int, default=1,
                   help="sample-level worker processes (default 1)")
    p.add_argument("--queue-trace", action="store_true",
                   help="also emit per-segment queue occupancy peaks")
    _add_engine_flags(p)
    _add_plan_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("resources", help="print the memory plan")
    p.add_argument("--model", "-m", required=True)
    p.add_argument("--output", "-o", default=None)
    _add_engine_flags(p)
    _add_plan_flags(p)
    p.set_defaults(func=cmd_resources)

    p = sub.add_parser("power", help="estimate power (and energy with --cycles)")
    p.add_argument("--model", "-m", required=True)
    p.add_argument("--profile", default="pynq-z1-100mhz")
    p.add_argument("--cycles", type=int, default=0)
    _add_engine_flags(p)
    _add_plan_flags(p)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("compare-oracle",
                       help="randomized engine vs dense-reference equivalence")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--max-size", type=int, default=12)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_compare_oracle)

    p = sub.add_parser("encode-check", help="inspect the event encoding of a map")
    p.add_argument("--width", "-w", type=int, required=True)
    p.add_argument("--kernel", "-k", type=int, default=3)
    p.add_argument("--encoding", choices=[e.value for e in EncodingScheme],
                   default="compressed")
    p.set_defaults(func=cmd_encode_check)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelError, IdxError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QueueError as exc:
        print(f"fault: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
