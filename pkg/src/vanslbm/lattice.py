"""D3Q27 velocity set.

Direction ordering is fixed: rest, the 6 face neighbours, the 12 edge
neighbours, then the 8 corners. Within each group vectors are sorted
lexicographically. Checkpoints record this ordering under the tag
``D3Q27-rfec-v1``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

ORDERING_TAG = "D3Q27-rfec-v1"

_WEIGHT_BY_NORM2 = {
    0: Fraction(8, 27),
    1: Fraction(2, 27),
    2: Fraction(1, 54),
    3: Fraction(1, 216),
}


@dataclass(frozen=True)
class LatticeDescriptor:
    velocities: tuple[tuple[int, int, int], ...]
    weights: tuple[Fraction, ...]
    cs2: Fraction = Fraction(1, 3)
    opposite: tuple[int, ...] = field(default=())

    @property
    def q(self) -> int:
        return len(self.velocities)

    @property
    def c(self) -> np.ndarray:
        """Velocities as an (27, 3) float array."""
        return np.array(self.velocities, dtype=np.float64)

    @property
    def ci(self) -> np.ndarray:
        return np.array(self.velocities, dtype=np.int64)

    @property
    def w(self) -> np.ndarray:
        return np.array([float(x) for x in self.weights])

    @property
    def opp(self) -> np.ndarray:
        return np.array(self.opposite, dtype=np.int64)

    def index_of(self, vec) -> int:
        return self.velocities.index(tuple(int(v) for v in vec))


@lru_cache(maxsize=None)
def d3q27() -> LatticeDescriptor:
    vecs = list(itertools.product((-1, 0, 1), repeat=3))
    vecs.sort(key=lambda v: (sum(x * x for x in v), v))
    weights = tuple(_WEIGHT_BY_NORM2[sum(x * x for x in v)] for v in vecs)
    opposite = tuple(vecs.index(tuple(-x for x in v)) for v in vecs)
    return LatticeDescriptor(tuple(vecs), weights, Fraction(1, 3), opposite)


# Module-level float views used by the numeric code.
LATTICE = d3q27()
C = LATTICE.c
CI = LATTICE.ci
W = LATTICE.w
OPP = LATTICE.opp
CS2 = float(LATTICE.cs2)
Q = 27
