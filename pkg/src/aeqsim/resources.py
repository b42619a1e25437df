"""FPGA memory cost model: BRAM capacity rules and the BRAM/LUTRAM planner.

A block RAM stores a fixed 32K bits of payload addressable at discrete word
widths; half-BRAM is the smallest unit the tools instantiate. Event queues
and membrane memories are replicated per queue and per core, so their BRAM
cost is driven by the access parallelism rather than by the raw data volume,
and sparsely filled BRAMs are better mapped onto distributed LUTRAM.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

from .model import NetworkModel, CONV
from .queueing import EncodingScheme, resolve_encoding

WEIGHT_ROM_BRAMS_PER_CORE = 2.5
DEFAULT_OCCUPANCY_THRESHOLD = 0.25


def bram_words(width: int) -> int:
    """Words one BRAM holds at word width ``width`` (1..36 bits).

    The depth halves at each aspect-ratio step; widths of 10..18 bits are the
    expensive band where a BRAM holds only 2048 words versus 4096 at 9 bits.
    """
    if not 1 <= width <= 36:
        raise ValueError(f"word width must be in [1, 36], got {width}")
    if width == 1:
        return 32768
    if width == 2:
        return 16384
    if width <= 4:
        return 8192
    if width <= 9:
        return 4096
    if width <= 18:
        return 2048
    return 1024


def half_bram_ceil(n: float) -> float:
    """Round a fractional BRAM count up to the next half BRAM."""
    if n < 0:
        raise ValueError(f"BRAM count must be >= 0, got {n}")
    return math.ceil(2 * n) / 2


def _half_ceil_ratio(depth: int, words: int) -> int:
    """ceil(depth / words) to half-BRAM granularity, returned in halves."""
    return -(-2 * depth // words)


def bram_count(queues: int, parallel: int, depth: int, width: int) -> float:
    """BRAMs for one replicated queue structure.

    ``queues`` is the queue count per core (kernel area for a KxK kernel),
    ``depth`` the per-queue word capacity and ``width`` the stored word width.
    Each (core, queue) pair needs its own half-BRAM multiple for single-cycle
    parallel access.
    """
    if queues < 1 or parallel < 1 or depth < 1:
        raise ValueError("queues, parallel, and depth must all be >= 1")
    halves = parallel * queues * _half_ceil_ratio(depth, bram_words(width))
    return halves / 2


def membrane_bram_count(queues: int, parallel: int, depth: int, width: int) -> float:
    """Membrane variant: doubled for the compute/threshold buffer pair."""
    return 2 * bram_count(queues, parallel, depth, width)


def weight_rom_brams(parallel: int) -> float:
    """Read-only weight storage allowance: 2.5 BRAMs per core."""
    if parallel < 1:
        raise ValueError(f"parallel must be >= 1, got {parallel}")
    return WEIGHT_ROM_BRAMS_PER_CORE * parallel


class MemoryPolicy(enum.Enum):
    ALL_BRAM = "all-bram"
    ALL_LUTRAM = "all-lutram"
    AUTO = "auto"


@dataclass(frozen=True)
class PlanEntry:
    structure: str            # "aeq" | "membrane" | "weight_rom"
    tech: str                 # "bram" | "lutram"
    brams: float              # multiple of 0.5
    lutram_bits: int
    depth: int
    width: int
    replication: int


@dataclass(frozen=True)
class MemoryPlan:
    entries: tuple[PlanEntry, ...]

    def entry(self, structure: str) -> PlanEntry:
        for e in self.entries:
            if e.structure == structure:
                return e
        raise KeyError(structure)

    @property
    def total_brams(self) -> float:
        return sum(e.brams for e in self.entries)

    @property
    def total_brams_without_rom(self) -> float:
        """Total with the read-only weight ROM excluded.

        Synthesis tools optimize ROMs aggressively, so measured BRAM counts
        tend to land between this figure and ``total_brams``.
        """
        return sum(e.brams for e in self.entries if e.structure != "weight_rom")

    @property
    def total_lutram_bits(self) -> int:
        return sum(e.lutram_bits for e in self.entries)

    @property
    def bram_halves(self) -> int:
        return int(round(2 * self.total_brams))


def _aeq_word_bits(net: NetworkModel, scheme: EncodingScheme) -> int:
    """Widest event word across layers (the shared queue must fit all)."""
    widest = 2  # degenerate floor: status bits only
    for layer in net.layers:
        if layer.kind != CONV:
            continue
        enc = resolve_encoding(layer.in_width, layer.kernel_size, scheme)
        widest = max(widest, enc.word_bits)
    return widest


def _max_queue_count(net: NetworkModel) -> int:
    return max((l.kernel_size ** 2 for l in net.layers if l.kind == CONV), default=1)


def plan_memories(net: NetworkModel, *,
                  parallel: int,
                  aeq_depth: int,
                  policy: MemoryPolicy = MemoryPolicy.AUTO,
                  encoding: EncodingScheme = EncodingScheme.COMPRESSED,
                  membrane_depth: int = 256,
                  membrane_bits: int = 8,
                  aeq_bits: Optional[int] = None,
                  occupancy_threshold: float = DEFAULT_OCCUPANCY_THRESHOLD,
                  include_weight_rom: bool = True) -> MemoryPlan:
    """Map every simulated memory structure onto BRAM or LUTRAM.

    AUTO sends a structure to LUTRAM when its BRAM fill ratio
    ``depth / words(width)`` falls below ``occupancy_threshold`` (for
    example 256 words in a 4096-word 8-bit BRAM is 6.25% full). LUTRAM cost
    is counted in raw bits: replication x depth x width.
    """
    queues = _max_queue_count(net)
    w_ae = aeq_bits if aeq_bits is not None else _aeq_word_bits(net, encoding)

    entries = []

    def place(structure: str, depth: int, width: int, replication: int,
              brams_fn) -> None:
        occupancy = depth / bram_words(width)
        if policy is MemoryPolicy.ALL_LUTRAM or (
            policy is MemoryPolicy.AUTO and occupancy < occupancy_threshold
        ):
            entries.append(PlanEntry(
                structure, "lutram", 0.0, replication * depth * width,
                depth, width, replication,
            ))
        else:
            entries.append(PlanEntry(
                structure, "bram", brams_fn(), 0, depth, width, replication,
            ))

    place("aeq", aeq_depth, w_ae, parallel * queues,
          lambda: bram_count(queues, parallel, aeq_depth, w_ae))
    place("membrane", membrane_depth, membrane_bits, 2 * parallel * queues,
          lambda: membrane_bram_count(queues, parallel, membrane_depth, membrane_bits))

    if include_weight_rom:
        rom_bits = net.parameter_count() * net.layers[0].weight_bits
        if policy is MemoryPolicy.ALL_LUTRAM:
            entries.append(PlanEntry(
                "weight_rom", "lutram", 0.0, rom_bits, net.parameter_count(),
                net.layers[0].weight_bits, 1,
            ))
        else:
            entries.append(PlanEntry(
                "weight_rom", "bram", weight_rom_brams(parallel), 0,
                net.parameter_count(), net.layers[0].weight_bits, parallel,
            ))

    return MemoryPlan(tuple(entries))
