from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from .conf import settings
from .constants import BOUNDARY_DIRICHLET
from .grid import Grid2D
from .rotation import RotationSpec


@dataclass(frozen=True)
class Tolerances:
    virial: float = 1e-3
    dE0: float = 1e-3
    remesh_mass: float = field(default_factory=lambda: settings.REMESH_MASS_TOL)
    ell_imag: float = 1e-8
    phase_per_cell: float = np.pi


@dataclass(frozen=True)
class SimParams:
    '''
    Physical and discretisation parameters of

        i u_t = -kappa lap u + V u - mu |u|^(p-1) u + i (Mx).grad u

    with ``V = sgn(gamma) gamma^2 |x|^2``.  ``mu = 1`` is focusing, ``mu = 0``
    drops the nonlinearity.
    '''

    dim: int = 2
    p: float = 3.0
    gamma: float = 0.0
    omega: Tuple[float, ...] = ()
    kappa: float = 1.0
    mu: float = 1.0
    boundary: str = BOUNDARY_DIRICHLET
    half_width: float = 10.0
    nx: int = 128
    ny: int = 128
    anisotropic: Optional[Tuple[float, float]] = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        omega = tuple(float(w) for w in self.omega) or (0.0,) * (self.dim // 2)
        object.__setattr__(self, 'omega', omega)
        if not 1 <= self.dim <= 12:
            raise ValueError('dim must be in 1..12, got %r' % self.dim)
        if self.p < 1:
            raise ValueError('p must be >= 1, got %r' % self.p)
        if not self.kappa > 0:
            raise ValueError('kappa must be positive, got %r' % self.kappa)
        if self.mu not in (-1, 0, 1):
            raise ValueError('mu must be -1, 0 or 1, got %r' % self.mu)
        if len(self.omega) != self.dim // 2:
            raise ValueError(
                'omega needs %d entries for dim %d' % (self.dim // 2, self.dim)
            )
        if self.boundary != BOUNDARY_DIRICHLET:
            raise ValueError('unsupported boundary condition %r' % self.boundary)
        if self.anisotropic is not None and self.dim != 2:
            raise ValueError('the anisotropic potential is only defined for dim 2')

    @property
    def mass_critical(self):
        return abs(self.p - (1.0 + 4.0 / self.dim)) < 1e-12

    @property
    def potential_coefficient(self):
        return float(np.sign(self.gamma) * self.gamma ** 2)

    @property
    def rotation(self):
        return RotationSpec(self.dim, self.omega)

    def grid(self):
        return Grid2D(self.nx, self.ny, self.half_width)

    def potential(self, x, y):
        if self.anisotropic is not None:
            g1, g2 = self.anisotropic
            return np.sign(g1) * g1 ** 2 * x ** 2 + np.sign(g2) * g2 ** 2 * y ** 2
        return self.potential_coefficient * (x ** 2 + y ** 2)
