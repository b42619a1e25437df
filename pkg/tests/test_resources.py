"""Memory cost model: capacity brackets, half-BRAM rounding, structure counts."""

import pytest
from hypothesis import given, strategies as st

from aeqsim.model import model_from_manifest
from aeqsim.queueing import EncodingScheme
from aeqsim.resources import (MemoryPolicy, bram_count, bram_words,
                              half_bram_ceil, membrane_bram_count,
                              plan_memories, weight_rom_brams)

from conftest import tiny_manifest


# Reference design points: (queues, cores, depth, width) -> expected BRAMs
GOLDEN_AEQ = [
    ((9, 1, 6100, 10), 27.0),
    ((9, 4, 2048, 10), 36.0),
    ((9, 8, 750, 10), 36.0),
]
GOLDEN_MEMBRANE = [
    ((9, 1, 256, 16), 9.0),
    ((9, 4, 256, 8), 36.0),
    ((9, 8, 256, 8), 72.0),
]


@pytest.mark.parametrize("args, expected", GOLDEN_AEQ)
def test_event_queue_bram_counts(args, expected):
    assert bram_count(*args) == expected


@pytest.mark.parametrize("args, expected", GOLDEN_MEMBRANE)
def test_membrane_bram_counts_doubled_for_buffer_pair(args, expected):
    assert membrane_bram_count(*args) == expected
    assert membrane_bram_count(*args) == 2 * bram_count(*args)


@pytest.mark.parametrize("width, words", [
    (1, 32768),
    (2, 16384),
    (3, 8192),
    (4, 8192),
    (5, 4096),
    (8, 4096),
    (9, 4096),
    (10, 2048),
    (18, 2048),
    (19, 1024),
    (36, 1024),
])
def test_bram_words_brackets(width, words):
    assert bram_words(width) == words


def test_bram_words_step_at_nine_bits():
    # the whole payoff of narrowing event words: 9 bits doubles the depth
    assert bram_words(9) == 4096
    assert bram_words(10) == 2048


@pytest.mark.parametrize("width", [0, -1, 37, 100])
def test_bram_words_rejects_out_of_range(width):
    with pytest.raises(ValueError):
        bram_words(width)


@pytest.mark.parametrize("n, expected", [
    (0.0625, 0.5),
    (2.978515625, 3.0),
    (1.0, 1.0),
    (0.0, 0.0),
    (0.5, 0.5),
])
def test_half_bram_ceil(n, expected):
    assert half_bram_ceil(n) == expected


def test_weight_rom_allowance():
    assert weight_rom_brams(1) == 2.5
    assert weight_rom_brams(8) == 20.0
    with pytest.raises(ValueError):
        weight_rom_brams(0)


@given(st.integers(1, 16), st.integers(1, 16), st.integers(1, 10000),
       st.integers(1, 36))
def test_bram_count_is_halves(queues, parallel, depth, width):
    n = bram_count(queues, parallel, depth, width)
    assert n > 0
    assert (2 * n) == int(2 * n)


@given(st.integers(1, 12), st.integers(1, 15), st.integers(1, 5000),
       st.integers(1, 35))
def test_bram_count_monotone(queues, parallel, depth, width):
    base = bram_count(queues, parallel, depth, width)
    assert bram_count(queues, parallel + 1, depth, width) >= base
    assert bram_count(queues, parallel, depth + 1, width) >= base
    assert bram_count(queues, parallel, depth, width + 1) >= base


@pytest.fixture()
def small_net():
    return model_from_manifest(tiny_manifest())


def test_plan_auto_sends_sparse_membrane_to_lutram(small_net):
    plan = plan_memories(small_net, parallel=4, aeq_depth=2048,
                         policy=MemoryPolicy.AUTO,
                         membrane_depth=256, membrane_bits=8)
    membrane = plan.entry("membrane")
    # 256 words in a 4096-word BRAM is 6.25% occupancy, well under the cutoff
    assert membrane.tech == "lutram"
    assert membrane.lutram_bits == 2 * 4 * 9 * 256 * 8


def test_plan_all_lutram_has_zero_brams(small_net):
    plan = plan_memories(small_net, parallel=8, aeq_depth=750,
                         policy=MemoryPolicy.ALL_LUTRAM)
    assert plan.total_brams == 0
    assert plan.total_lutram_bits > 0


def test_plan_all_bram_reference_totals(small_net):
    plan = plan_memories(small_net, parallel=4, aeq_depth=2048,
                         policy=MemoryPolicy.ALL_BRAM, aeq_bits=10,
                         membrane_depth=256, membrane_bits=8)
    assert plan.entry("aeq").brams == 36
    assert plan.entry("membrane").brams == 36
    assert plan.entry("weight_rom").brams == 10
    assert plan.total_brams == 82
    assert plan.total_brams_without_rom == 72


def test_plan_compressed_encoding_shrinks_event_queues(small_net):
    plain = plan_memories(small_net, parallel=4, aeq_depth=2048,
                          policy=MemoryPolicy.ALL_BRAM, aeq_bits=10)
    compressed = plan_memories(small_net, parallel=4, aeq_depth=2048,
                               policy=MemoryPolicy.ALL_BRAM, aeq_bits=8)
    assert compressed.entry("aeq").brams < plain.entry("aeq").brams


def test_plan_lists_every_structure_once(small_net):
    plan = plan_memories(small_net, parallel=2, aeq_depth=512)
    names = [e.structure for e in plan.entries]
    assert sorted(names) == ["aeq", "membrane", "weight_rom"]


def test_plan_capacity_covers_simulated_peaks(mnist_model, mnist_subset):
    """Planned depths must dominate what a real run actually queues/stores."""
    from aeqsim.engine import EngineConfig, run_image

    images, _ = mnist_subset
    cfg = EngineConfig(parallel=8, aeq_depth=2048)
    plan = plan_memories(mnist_model, parallel=8, aeq_depth=cfg.aeq_depth)
    res = run_image(mnist_model, images[0], cfg)

    peak_queue = max(res.queue_peaks.values())
    assert plan.entry("aeq").depth >= peak_queue

    # per-channel window-grid words is the live membrane footprint per memory
    worst_grid = 0
    for li, layer in enumerate(mnist_model.layers):
        if layer.kind == "conv":
            w, h, _ = mnist_model.layer_output_geometry(li)
            k = layer.kernel_size
            worst_grid = max(worst_grid, (-(-w // k)) * (-(-h // k)))
    assert plan.entry("membrane").depth >= worst_grid
