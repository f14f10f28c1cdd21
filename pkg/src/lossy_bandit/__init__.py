"""Backward-adaptive lossy compression with random codebooks and bandit-chosen codebook laws."""
from .codec import CodecConfig, decode_round, encode_round, first_match
from .core import (
    Categorical,
    DistortionSpec,
    Memoryless,
    SourceModel,
    TypeMixture,
    UniformOnType,
    match_probability,
)
from .lcb import LcbConfig, run_lcb_episode
from .oracle import average_cost, expected_bits, optimal_action_and_gaps

__all__ = [
    "Categorical",
    "CodecConfig",
    "DistortionSpec",
    "LcbConfig",
    "Memoryless",
    "SourceModel",
    "TypeMixture",
    "UniformOnType",
    "average_cost",
    "decode_round",
    "encode_round",
    "expected_bits",
    "first_match",
    "match_probability",
    "optimal_action_and_gaps",
    "run_lcb_episode",
]

__version__ = "0.1.0"
