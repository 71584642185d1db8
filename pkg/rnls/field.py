"""Complex fields on a (possibly curvilinear) grid and the operators on them."""
from collections import namedtuple
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .exceptions import NonFiniteField
from .grid import MeshMap, diff1, diff2

FieldNorms = namedtuple('FieldNorms', ['l2', 'linf', 'grad_l2', 'weighted_l2', 'lp'])


@dataclass(frozen=True, eq=False)
class ComplexField:
    """
    Complex samples ``values[i, j]`` at the nodes of ``mesh``.

    When ``mesh`` is omitted the identity map of ``grid`` is used.
    """

    grid: object
    values: np.ndarray
    mesh: MeshMap = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            raise ValueError(
                'field shape %r does not match grid %r' % (values.shape, self.grid.shape)
            )
        object.__setattr__(self, 'values', values)
        if self.mesh is not None and self.mesh.grid != self.grid:
            raise ValueError('mesh was built on a different grid')

    @classmethod
    def from_function(cls, grid, func, mesh=None):
        """Samples ``func(x, y)`` at the physical nodes."""
        mesh = mesh if mesh is not None else MeshMap.identity(grid)
        return cls(grid, func(mesh.x, mesh.y), mesh)

    @classmethod
    def zeros(cls, grid, mesh=None):
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128), mesh)

    @cached_property
    def mesh_map(self):
        return self.mesh if self.mesh is not None else MeshMap.identity(self.grid)

    def with_values(self, values):
        return ComplexField(self.grid, values, self.mesh)

    def check_finite(self):
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteField(
                'field has %d non-finite sample(s)' % np.count_nonzero(~np.isfinite(self.values))
            )
        return self

    def sup(self):
        return float(np.max(np.abs(self.values)))


def computational_gradient(f):
    """Derivatives with respect to xi and eta."""
    g = f.grid
    return diff1(f.values, g.hxi, 0), diff1(f.values, g.heta, 1)


def gradient(f):
    '''
    Physical gradient ``(d/dx f, d/dy f)`` of ``f``, chain-ruled through the
    mesh Jacobian.  Raises MeshDegenerate on a folded mesh.
    '''
    mesh = f.mesh_map
    u_xi, u_eta = computational_gradient(f)
    if mesh.is_identity:
        L = f.grid.half_width
        return f.with_values(u_xi / L), f.with_values(u_eta / L)
    m = mesh.metrics
    u_x = (m.y_eta * u_xi - m.y_xi * u_eta) / m.jacobian
    u_y = (m.x_xi * u_eta - m.x_eta * u_xi) / m.jacobian
    return f.with_values(u_x), f.with_values(u_y)


def laplacian(f):
    '''
    Physical Laplacian of ``f``; on a curvilinear mesh the conservative
    transformed form is expanded with compact second-derivative stencils.
    '''
    g = f.grid
    mesh = f.mesh_map
    u_xixi = diff2(f.values, g.hxi, 0)
    u_etaeta = diff2(f.values, g.heta, 1)
    if mesh.is_identity:
        return f.with_values((u_xixi + u_etaeta) / g.half_width ** 2)
    A, B, C, d_xi, d_eta = mesh.laplace_coefficients
    u_xi, u_eta = computational_gradient(f)
    u_xieta = diff1(u_xi, g.heta, 1)
    lap = A * u_xixi + 2 * B * u_xieta + C * u_etaeta + d_xi * u_xi + d_eta * u_eta
    return f.with_values(lap / mesh.jacobian)


def integrate(values, mesh):
    """Trapezoid quadrature of node samples over the physical box."""
    return np.sum(mesh.quadrature_weights * values)


def norms(f, q=()):
    '''
    Returns FieldNorms(l2, linf, grad_l2, weighted_l2, lp) where ``lp`` maps
    every requested exponent ``q`` to ``||f||_q``.
    '''
    f.check_finite()
    mesh = f.mesh_map
    density = np.abs(f.values) ** 2
    fx, fy = gradient(f)
    grad_density = np.abs(fx.values) ** 2 + np.abs(fy.values) ** 2
    moment = (mesh.x ** 2 + mesh.y ** 2) * density
    lp = {
        exponent: float(integrate(np.abs(f.values) ** exponent, mesh)) ** (1.0 / exponent)
        for exponent in q
    }
    return FieldNorms(
        l2=float(np.sqrt(integrate(density, mesh))),
        linf=float(np.max(np.abs(f.values))),
        grad_l2=float(np.sqrt(integrate(grad_density, mesh))),
        weighted_l2=float(np.sqrt(integrate(moment, mesh))),
        lp=lp,
    )
