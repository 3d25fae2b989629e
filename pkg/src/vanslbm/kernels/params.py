from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..rheology import LatticeRheology


@dataclass(frozen=True)
class KernelParams:
    """Scalar inputs of the fused step, lattice units."""

    rheology: LatticeRheology
    nu_drag: float
    body_accel: tuple[float, float, float] = (0.0, 0.0, 0.0)
    anisotropic: bool = False
    a_inv: np.ndarray = field(default_factory=lambda: np.eye(3))
    a_inv_sqrt: np.ndarray = field(default_factory=lambda: np.eye(3))
    fp_tol: float = 1e-13
    fp_max_iter: int = 200


@dataclass
class KernelGeometry:
    """Per-cell static arrays.

    ``darcy = phi^2 nu / k`` and ``forch = phi^3 C_F / sqrt(k)`` are zero in
    pure-fluid cells. ``nb[c, i]`` is the cell receiving direction ``i`` from
    ``c`` (``c`` itself for reflected or outgoing links); ``dest[c, i]`` is the
    flat slot in the write buffer that receives the post-collision value.
    """

    phi: np.ndarray
    darcy: np.ndarray
    forch: np.ndarray
    nb: np.ndarray
    dest: np.ndarray
    graded: np.ndarray | None = None  # uint8: porosity differs from some neighbour

    def __post_init__(self):
        if self.graded is None:
            self.graded = np.any(self.phi[self.nb] != self.phi[:, None], axis=1).astype(np.uint8)

    @property
    def n(self):
        return self.phi.shape[0]


@dataclass
class KernelState:
    mu: np.ndarray
    omega: np.ndarray
    u: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray
