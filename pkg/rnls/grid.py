"""
Uniform computational grids, curvilinear mesh maps and the 4th-order
finite-difference stencils everything else is built from.

The computational square is [-1, 1]^2 sampled at ``nx x ny`` nodes; axis 0 of
every array runs along xi, axis 1 along eta.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import MeshDegenerate


def diff1(a, h, axis=0):
    """4th-order first derivative along ``axis``; one-sided 4th order at the ends."""
    a = np.moveaxis(np.asarray(a), axis, 0)
    out = np.empty_like(a)
    out[2:-2] = (a[:-4] - 8 * a[1:-3] + 8 * a[3:-1] - a[4:]) / (12 * h)
    out[0] = (-25 * a[0] + 48 * a[1] - 36 * a[2] + 16 * a[3] - 3 * a[4]) / (12 * h)
    out[1] = (-3 * a[0] - 10 * a[1] + 18 * a[2] - 6 * a[3] + a[4]) / (12 * h)
    out[-1] = (25 * a[-1] - 48 * a[-2] + 36 * a[-3] - 16 * a[-4] + 3 * a[-5]) / (12 * h)
    out[-2] = (3 * a[-1] + 10 * a[-2] - 18 * a[-3] + 6 * a[-4] - a[-5]) / (12 * h)
    return np.moveaxis(out, 0, axis)


def diff2(a, h, axis=0):
    """4th-order second derivative along ``axis``; one-sided 4th order at the ends."""
    a = np.moveaxis(np.asarray(a), axis, 0)
    out = np.empty_like(a)
    h2 = 12 * h * h
    out[2:-2] = (-a[:-4] + 16 * a[1:-3] - 30 * a[2:-2] + 16 * a[3:-1] - a[4:]) / h2
    out[0] = (
        45 * a[0] - 154 * a[1] + 214 * a[2] - 156 * a[3] + 61 * a[4] - 10 * a[5]
    ) / h2
    out[1] = (10 * a[0] - 15 * a[1] - 4 * a[2] + 14 * a[3] - 6 * a[4] + a[5]) / h2
    out[-1] = (
        45 * a[-1] - 154 * a[-2] + 214 * a[-3] - 156 * a[-4] + 61 * a[-5] - 10 * a[-6]
    ) / h2
    out[-2] = (
        10 * a[-1] - 15 * a[-2] - 4 * a[-3] + 14 * a[-4] - 6 * a[-5] + a[-6]
    ) / h2
    return np.moveaxis(out, 0, axis)


def trapezoid_weights(n, h):
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    return w


@dataclass(frozen=True)
class Grid2D:
    """
    Uniform computational grid on [-1, 1]^2 paired with the physical box
    [-L, L]^2 it covers.
    """

    nx: int
    ny: int
    half_width: float

    def __post_init__(self):
        for name in ('nx', 'ny'):
            count = getattr(self, name)
            if count < 16 or count % 2:
                raise ValueError('%s must be even and >= 16, got %r' % (name, count))
        if not self.half_width > 0:
            raise ValueError('half_width must be positive, got %r' % self.half_width)

    @property
    def shape(self):
        return (self.nx, self.ny)

    @property
    def hxi(self):
        return 2.0 / (self.nx - 1)

    @property
    def heta(self):
        return 2.0 / (self.ny - 1)

    @cached_property
    def xi(self):
        return np.linspace(-1.0, 1.0, self.nx)

    @cached_property
    def eta(self):
        return np.linspace(-1.0, 1.0, self.ny)

    @cached_property
    def weights(self):
        """Trapezoid weights on the computational square."""
        return np.outer(
            trapezoid_weights(self.nx, self.hxi), trapezoid_weights(self.ny, self.heta)
        )

    def refined(self, factor=2):
        return Grid2D(self.nx * factor, self.ny * factor, self.half_width)


class MeshMetrics:
    """Covariant derivatives of a mesh map and its Laplacian coefficients."""

    def __init__(self, x_xi, x_eta, y_xi, y_eta, jacobian):
        self.x_xi = x_xi
        self.x_eta = x_eta
        self.y_xi = y_xi
        self.y_eta = y_eta
        self.jacobian = jacobian


@dataclass(frozen=True, eq=False)
class MeshMap:
    """
    Physical node positions ``x(xi, eta)``, ``y(xi, eta)`` over a
    computational grid.  Metrics are computed lazily and cached.
    """

    grid: Grid2D
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != self.grid.shape or y.shape != self.grid.shape:
            raise ValueError(
                'mesh arrays must have shape %r, got %r and %r'
                % (self.grid.shape, x.shape, y.shape)
            )
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', y)

    @classmethod
    def identity(cls, grid):
        L = grid.half_width
        x = np.broadcast_to(L * grid.xi[:, None], grid.shape).copy()
        y = np.broadcast_to(L * grid.eta[None, :], grid.shape).copy()
        return cls(grid, x, y)

    @cached_property
    def is_identity(self):
        ident = MeshMap.identity(self.grid)
        return np.array_equal(self.x, ident.x) and np.array_equal(self.y, ident.y)

    @cached_property
    def metrics(self):
        g = self.grid
        x_xi = diff1(self.x, g.hxi, 0)
        x_eta = diff1(self.x, g.heta, 1)
        y_xi = diff1(self.y, g.hxi, 0)
        y_eta = diff1(self.y, g.heta, 1)
        jac = x_xi * y_eta - x_eta * y_xi
        if not np.all(np.isfinite(jac)) or np.any(jac <= 0):
            bad = np.argwhere(~(jac > 0))
            raise MeshDegenerate(
                'non-positive mesh Jacobian at %d node(s), first at %s'
                % (len(bad), tuple(bad[0]))
            )
        return MeshMetrics(x_xi, x_eta, y_xi, y_eta, jac)

    @cached_property
    def laplace_coefficients(self):
        '''
        Returns ``(A, B, C, D_xi, D_eta)`` such that
        ``J * lap(u) = A u_xixi + 2B u_xieta + C u_etaeta + D_xi u_xi + D_eta u_eta``.
        '''
        m = self.metrics
        g = self.grid
        g11 = m.x_xi ** 2 + m.y_xi ** 2
        g12 = m.x_xi * m.x_eta + m.y_xi * m.y_eta
        g22 = m.x_eta ** 2 + m.y_eta ** 2
        A = g22 / m.jacobian
        B = -g12 / m.jacobian
        C = g11 / m.jacobian
        d_xi = diff1(A, g.hxi, 0) + diff1(B, g.heta, 1)
        d_eta = diff1(B, g.hxi, 0) + diff1(C, g.heta, 1)
        return A, B, C, d_xi, d_eta

    @property
    def jacobian(self):
        return self.metrics.jacobian

    def tangled(self):
        """True when the Jacobian is non-positive anywhere; never raises."""
        try:
            self.metrics
        except MeshDegenerate:
            return True
        return False

    @cached_property
    def quadrature_weights(self):
        return self.grid.weights * self.jacobian

    def cell_areas(self):
        return self.jacobian * self.grid.hxi * self.grid.heta

    def min_spacing(self):
        dx = np.hypot(np.diff(self.x, axis=0), np.diff(self.y, axis=0))
        dy = np.hypot(np.diff(self.x, axis=1), np.diff(self.y, axis=1))
        return float(min(dx.min(), dy.min()))

    def points(self):
        return np.stack([self.x, self.y], axis=-1)

    def boundary_matches(self, other):
        return all(
            np.array_equal(a[idx], b[idx])
            for a, b in ((self.x, other.x), (self.y, other.y))
            for idx in (
                (0, slice(None)),
                (-1, slice(None)),
                (slice(None), 0),
                (slice(None), -1),
            )
        )
