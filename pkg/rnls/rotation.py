"""Skew-symmetric rotation generators and their exact exponentials."""
from functools import cached_property

import numpy as np


class RotationSpec:
    """
    Block-diagonal generator ``M`` with blocks ``omega_j * [[0, -1], [1, 0]]``
    and a trailing zero row/column in odd dimension.
    """

    def __init__(self, dim, omegas=()):
        omegas = tuple(float(w) for w in omegas)
        if not omegas:
            omegas = (0.0,) * (dim // 2)
        if len(omegas) != dim // 2:
            raise ValueError(
                'dimension %d needs %d rotation frequencies, got %d'
                % (dim, dim // 2, len(omegas))
            )
        self.dim = dim
        self.omegas = omegas

    def __repr__(self):
        return 'RotationSpec(dim=%d, omegas=%r)' % (self.dim, self.omegas)

    @property
    def is_trivial(self):
        return not any(self.omegas)

    @cached_property
    def matrix(self):
        m = np.zeros((self.dim, self.dim))
        for j, omega in enumerate(self.omegas):
            a, b = 2 * j, 2 * j + 1
            m[a, b] = -omega
            m[b, a] = omega
        return m

    def expm(self, t):
        """``exp(tM)`` assembled from exact 2x2 rotations."""
        e = np.eye(self.dim)
        for j, omega in enumerate(self.omegas):
            a, b = 2 * j, 2 * j + 1
            c, s = np.cos(omega * t), np.sin(omega * t)
            e[a, a] = c
            e[a, b] = -s
            e[b, a] = s
            e[b, b] = c
        return e

    def apply(self, t, points):
        """Rotates points of shape ``(..., dim)`` by ``exp(tM)``."""
        return np.asarray(points) @ self.expm(t).T

    def field(self, points):
        """The vector potential ``A(x) = Mx``."""
        return np.asarray(points) @ self.matrix.T

    def effective_potential(self, points, gamma):
        '''
        ``sgn(gamma) gamma^2 |x|^2 - |Mx|^2 / 4``, the scalar potential of the
        Hamiltonian written in magnetic form.
        '''
        points = np.asarray(points)
        r2 = np.sum(points ** 2, axis=-1)
        a2 = np.sum(self.field(points) ** 2, axis=-1)
        return np.sign(gamma) * gamma ** 2 * r2 - a2 / 4.0
