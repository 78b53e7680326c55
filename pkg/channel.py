"""The i.i.d. deletion channel and multi-trace generation."""
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core_model import BitString, Trace, as_bitstring

MASK64 = (1 << 64) - 1

# Stream tags inside one trial: 0 draws the codeword, j + 1 drives trace j.
CODEWORD_STREAM = 0


class ChannelSpec(BaseModel):
    """Deletion probability and number of traces."""

    model_config = ConfigDict(frozen=True)

    p: float = Field(ge=0.0, lt=0.5)
    t: int = Field(ge=1)


def _splitmix64(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """Fold integers into one 64-bit seed with an avalanche mix."""
    h = 0
    for part in parts:
        h = _splitmix64(h ^ (part & MASK64))
    return h


def substream(*parts: int) -> np.random.Generator:
    """Independent generator for a (master_seed, trial_index, stream) tuple."""
    return np.random.default_rng(mix_seed(*parts))


def transmit(x: BitString, p: float, rng: np.random.Generator) -> Trace:
    """Delete each bit of x independently with probability p.

    One uniform draw per input bit, consumed in index order.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"deletion probability must lie in [0, 1), got {p}")
    x = np.asarray(x)
    keep = rng.random(x.size) >= p
    return Trace(bits=as_bitstring(x[keep]), origin_len=int(x.size))


def generate_traces(x: BitString, spec: ChannelSpec, rng: np.random.Generator) -> List[Trace]:
    """Produce spec.t independent traces, each from its own child stream of rng."""
    return [transmit(x, spec.p, child) for child in rng.spawn(spec.t)]


def seeded_traces(x: BitString, spec: ChannelSpec, master_seed: int, trial_index: int) -> List[Trace]:
    """Traces for one trial: trace j uses the stream mixed from (master_seed, trial_index, j + 1)."""
    return [
        transmit(x, spec.p, substream(master_seed, trial_index, j + 1))
        for j in range(spec.t)
    ]
