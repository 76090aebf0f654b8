"""Bit-interleaved sparse tensor encodings.

Linearizes sparse tensors by interleaving coordinate bits, runs MTTKRP
directly on the linearized form, and learns tensor-specific interleavings
with a reinforcement-learning agent whose reward is measured speedup over
the expert default.
"""

from bitweave._core import (
    DomainError,
    ParseError,
    Tensor,
    alto_plan,
    benchmark,
    bit_budget,
    decode,
    encode,
    mttkrp,
    mttkrp_oracle,
    plan_count,
    train_synthetic,
)

__all__ = [
    "DomainError",
    "ParseError",
    "Tensor",
    "alto_plan",
    "benchmark",
    "bit_budget",
    "decode",
    "encode",
    "mttkrp",
    "mttkrp_oracle",
    "plan_count",
    "train_synthetic",
]

__version__ = "0.1.0"
