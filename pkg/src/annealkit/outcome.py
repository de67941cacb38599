"""Result record shared by the annealers."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np


@dataclass
class AnnealOutcome:
    state: np.ndarray  # int8 over active sites
    energy: int | float
    algorithm: str
    seed: int | None = None
    params: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict, repr=False)

    @property
    def state_hash(self) -> str:
        return state_hash(self.state)


def state_hash(x) -> str:
    """Short stable digest of a spin state (for CSV output)."""
    bits = np.packbits(np.asarray(x) < 0)
    return hashlib.blake2b(bits.tobytes(), digest_size=8).hexdigest()
