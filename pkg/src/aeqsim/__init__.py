"""Event-driven simulator and FPGA cost model for a queue-based spiking-CNN
accelerator: bit-faithful inference over interlaced spike queues plus memory,
latency, power, and energy-per-sample estimation."""

from .engine import (EngineConfig, RunResult, run_dense_oracle, run_image,
                     run_sample, segment_cycles)
from .kernels import BACKEND as kernel_backend
from .model import (LayerSpec, ModelError, NetworkModel, SpikePlane,
                    load_model, model_from_manifest, model_to_manifest,
                    output_geometry)
from .neuron import InputScheme, NeuronMode, NeuronState, encode_input, integrate, threshold
from .powerenergy import (EnergyReport, PowerCoefficients, energy_and_fpsw,
                          estimate_power, load_profile)
from .queueing import (AddressEvent, AeqBank, CapacityFault, EncodingScheme,
                       EventEncoding, check_fallback, decode_word,
                       encode_event, from_address_event, resolve_encoding,
                       to_address_event)
from .resources import (MemoryPlan, MemoryPolicy, bram_count, bram_words,
                        half_bram_ceil, membrane_bram_count, plan_memories,
                        weight_rom_brams)

__version__ = "0.1.0"

__all__ = [
    "AddressEvent", "AeqBank", "CapacityFault", "EncodingScheme",
    "EnergyReport", "EngineConfig", "EventEncoding", "InputScheme",
    "LayerSpec", "MemoryPlan", "MemoryPolicy", "ModelError", "NetworkModel",
    "NeuronMode", "NeuronState", "PowerCoefficients", "RunResult",
    "SpikePlane", "bram_count", "bram_words", "check_fallback", "decode_word",
    "encode_event", "encode_input", "energy_and_fpsw", "estimate_power",
    "from_address_event", "half_bram_ceil", "integrate", "kernel_backend",
    "load_model", "load_profile", "membrane_bram_count", "model_from_manifest",
    "model_to_manifest", "output_geometry", "plan_memories", "run_dense_oracle",
    "run_image", "run_sample", "segment_cycles", "threshold",
    "to_address_event", "weight_rom_brams",
]
