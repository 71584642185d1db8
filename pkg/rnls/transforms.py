"""
Exact solution kit for the rotational NLS in the ``kappa = 1`` convention.

The lens transform ``R`` maps solutions ``phi(tau, y)`` of the free equation
``i phi_t = -lap phi - mu |phi|^(p-1) phi`` onto solutions with the harmonic
potential ``sgn(gamma) gamma^2 |x|^2`` and rotation ``Mx``.  Negative
``gamma`` (repulsive) uses the hyperbolic time map ``tanh(2 gamma t)/(2 gamma)``;
positive ``gamma`` (attractive) uses ``tan``.  Point arrays always carry the
spatial dimension on the last axis.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .constants import (
    DIRECTION_ATTRACTIVE,
    DIRECTION_FREE,
    DIRECTION_REPULSIVE,
    LIFESPAN_FINITE,
    LIFESPAN_GLOBAL,
)
from .exceptions import (
    MappedTimeOutOfDomain,
    QuadratureUnderresolved,
    SingularTime,
    TimeOutOfRange,
)
from .field import ComplexField, gradient, integrate, laplacian, norms
from .grid import Grid2D, MeshMap
from .rotation import RotationSpec

logger = logging.getLogger(__name__)

# 2|gamma|T within a few ulps of 1 is the global boundary.
_BOUNDARY_SLACK = 4 * np.finfo(float).eps


def _rotation(rot, dim):
    return rot if rot is not None else RotationSpec(dim)


def _sq(points):
    return np.sum(np.asarray(points) ** 2, axis=-1)


def mapped_time(t, gamma):
    """Free-equation time reached by the transform at time ``t``."""
    if gamma < 0:
        return np.tanh(2 * gamma * t) / (2 * gamma)
    if gamma > 0:
        return np.tan(2 * gamma * t) / (2 * gamma)
    return t


def dilation(t, gamma):
    """Spatial stretch ``cosh(2 gamma t)`` (``cos`` when attractive, 1 when free)."""
    if gamma < 0:
        return np.cosh(2 * gamma * t)
    if gamma > 0:
        return np.cos(2 * gamma * t)
    return 1.0


def apply_R(phi_eval, t, x, gamma, rot=None, lifespan=np.inf):
    '''
    Evaluates ``(R phi)(t, x)``.

    ``phi_eval(tau, points)`` evaluates the free solution; ``lifespan`` is its
    maximal time, beyond which MappedTimeOutOfDomain is raised.
    '''
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    rot = _rotation(rot, n)
    if gamma > 0 and not abs(2 * gamma * t) < np.pi / 2:
        raise MappedTimeOutOfDomain(
            'attractive transform undefined at |2 gamma t| = %r >= pi/2' % abs(2 * gamma * t)
        )
    tau = mapped_time(t, gamma)
    if tau >= lifespan:
        raise MappedTimeOutOfDomain(
            'mapped time %r reaches the lifespan %r of the source solution' % (tau, lifespan)
        )
    stretch = dilation(t, gamma)
    y = rot.apply(t, x) / stretch
    if gamma < 0:
        chirp = np.exp(0.5j * gamma * _sq(x) * np.tanh(2 * gamma * t))
    elif gamma > 0:
        chirp = np.exp(-0.5j * gamma * _sq(x) * np.tan(2 * gamma * t))
    else:
        chirp = 1.0
    return stretch ** (-n / 2.0) * chirp * phi_eval(tau, y)


def apply_R_inverse(u_eval, t, x, gamma, rot=None):
    '''
    Evaluates ``(R^-1 u)(t, x)``, the free solution at free time ``t``.
    Repulsive transforms need ``|2 gamma t| < 1``.
    '''
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    rot = _rotation(rot, n)
    if gamma < 0:
        if not abs(2 * gamma * t) < 1:
            raise TimeOutOfRange('|2 gamma t| = %r must stay below 1' % abs(2 * gamma * t))
        s = np.arctanh(2 * gamma * t) / (2 * gamma)
        d = 1.0 - 4 * gamma ** 2 * t ** 2
        chirp = np.exp(-1j * gamma ** 2 * t * _sq(x) / d)
    elif gamma > 0:
        s = np.arctan(2 * gamma * t) / (2 * gamma)
        d = 1.0 + 4 * gamma ** 2 * t ** 2
        chirp = np.exp(1j * gamma ** 2 * t * _sq(x) / d)
    else:
        return u_eval(t, rot.apply(-t, x))
    y = rot.apply(-s, x) / np.sqrt(d)
    return d ** (-n / 4.0) * chirp * u_eval(s, y)


@dataclass(frozen=True)
class LifespanVerdict:
    kind: str
    tstar: Optional[float]
    direction: str

    @property
    def finite(self):
        return self.kind == LIFESPAN_FINITE


def map_lifespan(T_free, gamma):
    '''
    Lifespan of ``R phi`` given the lifespan ``T_free`` of ``phi``.

    A global ``phi`` stays global for every ``gamma``.
    '''
    if not T_free > 0:
        raise ValueError('T_free must be positive, got %r' % T_free)
    if gamma < 0:
        direction = DIRECTION_REPULSIVE
        reach = 2 * abs(gamma) * T_free
        if np.isinf(T_free) or reach >= 1.0 - _BOUNDARY_SLACK:
            return LifespanVerdict(LIFESPAN_GLOBAL, None, direction)
        return LifespanVerdict(
            LIFESPAN_FINITE, float(np.arctanh(2 * gamma * T_free) / (2 * gamma)), direction
        )
    if gamma > 0:
        direction = DIRECTION_ATTRACTIVE
        if np.isinf(T_free):
            return LifespanVerdict(LIFESPAN_GLOBAL, None, direction)
        return LifespanVerdict(
            LIFESPAN_FINITE, float(np.arctan(2 * gamma * T_free) / (2 * gamma)), direction
        )
    if np.isinf(T_free):
        return LifespanVerdict(LIFESPAN_GLOBAL, None, DIRECTION_FREE)
    return LifespanVerdict(LIFESPAN_FINITE, float(T_free), DIRECTION_FREE)


def _kernel_coefficients(t, gamma, n):
    '''
    Returns ``(prefactor, a, c, b)`` with the kernel equal to
    ``prefactor * exp(i a |x|^2) * exp(i c |y|^2) * exp(-i b (e^{tM} x).y)``.
    '''
    if t == 0:
        raise SingularTime('the propagator kernel is singular at t = 0')
    if gamma < 0:
        arg = 2 * gamma * t
        s = np.sinh(arg)
        a = 0.5 * gamma / np.tanh(arg)
        c = 0.5 * gamma / np.tanh(arg)
    elif gamma > 0:
        arg = 2 * gamma * t
        s = np.sin(arg)
        if abs(s) < 1e-14:
            raise SingularTime('the attractive kernel is singular at 2 gamma t = %r' % arg)
        a = 0.5 * gamma / np.tan(arg)
        c = 0.5 * gamma / np.tan(arg)
    else:
        prefactor = np.power(4j * np.pi * t, -n / 2.0)
        return prefactor, 0.25 / t, 0.25 / t, 0.5 / t
    prefactor = np.power(gamma / (2j * np.pi * s), n / 2.0)
    return prefactor, a, c, gamma / s


def eval_kernel(t, x, y, gamma, rot=None):
    """Fundamental solution ``U(t, x, y)`` of the linear equation."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[-1]
    rot = _rotation(rot, n)
    prefactor, a, c, b = _kernel_coefficients(t, gamma, n)
    cross = np.sum(rot.apply(t, x) * y, axis=-1)
    return prefactor * np.exp(1j * (a * _sq(x) + c * _sq(y) - b * cross))


def _require_uniform(f):
    if not f.mesh_map.is_identity:
        raise ValueError('kernel quadrature needs a field on the identity mesh')


def _phase_per_cell(f, t, gamma, rot, targets, cutoff=1e-10):
    '''
    Largest kernel phase advance per source cell, per axis, over the support
    of ``f`` (samples above ``cutoff`` of the peak) and the ``targets``.
    '''
    _, _, c, b = _kernel_coefficients(t, gamma, 2)
    mesh = f.mesh_map
    magnitude = np.abs(f.values)
    support = magnitude >= cutoff * magnitude.max()
    rotated = np.abs(rot.apply(t, targets)).reshape(-1, 2).max(axis=0)
    spacing = (mesh.x[1, 0] - mesh.x[0, 0], mesh.y[0, 1] - mesh.y[0, 0])
    advance = []
    for axis, coords in enumerate((mesh.x, mesh.y)):
        reach = np.abs(coords[support]).max()
        advance.append((2 * abs(c) * reach + abs(b) * rotated[axis]) * spacing[axis])
    return advance


def _phase_guard(f, t, gamma, rot, targets, limit):
    for axis, per_cell in enumerate(_phase_per_cell(f, t, gamma, rot, targets)):
        if per_cell > limit:
            raise QuadratureUnderresolved(
                'kernel phase advances %.3f rad per cell along axis %d at t=%r '
                '(limit %.3f); refine the source grid' % (per_cell, axis, t, limit)
            )


def resolving_source(sample, grid, t, gamma, rot=None, target=None, phase_per_cell=np.pi):
    '''
    ``sample(x, y)`` on ``grid``, or on a uniformly refined grid with the same
    half-width when the kernel phase at time ``t`` outruns ``grid``.
    '''
    rot = _rotation(rot, 2)
    f = ComplexField.from_function(grid, sample)
    target = target if target is not None else grid
    targets = MeshMap.identity(target).points().reshape(-1, 2)
    excess = max(_phase_per_cell(f, t, gamma, rot, targets)) / phase_per_cell
    if excess <= 1:
        return f
    factor = 1.1 * excess
    nx = 2 * int(np.ceil((factor * (grid.nx - 1) + 1) / 2))
    ny = 2 * int(np.ceil((factor * (grid.ny - 1) + 1) / 2))
    logger.info('refining the source grid from %dx%d to %dx%d for t=%r', grid.nx, grid.ny, nx, ny, t)
    return ComplexField.from_function(Grid2D(nx, ny, grid.half_width), sample)


def propagate(f, t, gamma, rot=None, target=None, phase_per_cell=np.pi, chunk=4096):
    '''
    ``U(t) f`` on the ``target`` grid (default: the grid of ``f``) by
    trapezoid quadrature against the kernel, summed one axis at a time.
    '''
    _require_uniform(f)
    rot = _rotation(rot, 2)
    target = target if target is not None else f.grid
    target_mesh = MeshMap.identity(target)
    targets = target_mesh.points().reshape(-1, 2)
    _phase_guard(f, t, gamma, rot, targets, phase_per_cell)

    prefactor, a, c, b = _kernel_coefficients(t, gamma, 2)
    mesh = f.mesh_map
    y1 = mesh.x[:, 0]
    y2 = mesh.y[0, :]
    weighted = f.values * mesh.quadrature_weights * np.exp(1j * c * _sq(mesh.points()))
    frequencies = b * rot.apply(t, targets)
    out = np.empty(len(targets), dtype=np.complex128)
    for start in range(0, len(targets), chunk):
        k = frequencies[start : start + chunk]
        partial = np.exp(-1j * np.outer(k[:, 0], y1)) @ weighted
        out[start : start + chunk] = np.sum(partial * np.exp(-1j * np.outer(k[:, 1], y2)), axis=1)
    out *= prefactor * np.exp(1j * a * _sq(targets))
    return ComplexField(target, out.reshape(target.shape), target_mesh)


@dataclass
class DispersiveReport:
    times: List[float]
    sup_norms: List[float]
    l2_norms: List[float]
    l2_initial: float
    scaled: List[float]
    small_t_bound: Optional[float] = None
    large_t_bound: Optional[float] = None
    small_t_ok: bool = True
    large_t_ok: bool = True
    regimes: List[str] = field(default_factory=list)

    @property
    def l2_error(self):
        return max(abs(v - self.l2_initial) / self.l2_initial for v in self.l2_norms)

    @property
    def ok(self):
        return self.small_t_ok and self.large_t_ok


def _spread(t, gamma, sigma):
    if gamma < 0:
        g = abs(gamma)
        return np.sqrt((np.cosh(2 * g * t) * sigma) ** 2 + (np.sinh(2 * g * t) / (g * sigma)) ** 2)
    if gamma > 0:
        return np.sqrt(
            (np.cos(2 * gamma * t) * sigma) ** 2 + (np.sin(2 * gamma * t) / (gamma * sigma)) ** 2
        )
    return np.sqrt(sigma ** 2 + (2 * t / sigma) ** 2)


def _trend_bound(values):
    if not values:
        return None, True
    coarse = values[::2]
    bound = 1.5 * max(coarse)
    return bound, all(v <= bound for v in values)


def check_dispersive(
    f, gamma, times, rot=None, target_points=48, phase_per_cell=np.pi, sample=None
):
    '''
    Sweeps ``U(t) f`` over ``times`` and checks the two dispersive regimes:
    ``t^(n/2) ||U(t) f||_inf`` stays bounded up to ``pi/(4|gamma|)`` and
    ``e^(2|gamma| t) ||U(t) f||_inf`` beyond it.  Bounds are 1.5 times the
    largest value on every other sample.

    With ``sample``, the callable ``f`` was sampled from, each time gets a
    source grid fine enough for the phase guard (see ``resolving_source``).
    '''
    base = norms(f)
    sigma = base.weighted_l2 / base.l2
    report = DispersiveReport([], [], [], base.l2, [])
    small, large = [], []
    switch = np.pi / (4 * abs(gamma)) if gamma else np.inf
    for t in times:
        half_width = 6.0 * _spread(t, gamma, sigma)
        target = Grid2D(target_points, target_points, half_width)
        source = f
        if sample is not None:
            source = resolving_source(sample, f.grid, t, gamma, rot, target, phase_per_cell)
        evolved = propagate(source, t, gamma, rot, target, phase_per_cell)
        result = norms(evolved)
        report.times.append(float(t))
        report.sup_norms.append(result.linf)
        report.l2_norms.append(result.l2)
        if t <= switch:
            value = t * result.linf
            small.append(value)
            report.regimes.append('small')
        else:
            value = np.exp(2 * abs(gamma) * t) * result.linf
            large.append(value)
            report.regimes.append('large')
        report.scaled.append(float(value))
        logger.debug('dispersive sweep t=%r sup=%.6e l2=%.12g', t, result.linf, result.l2)
    report.small_t_bound, report.small_t_ok = _trend_bound(small)
    report.large_t_bound, report.large_t_ok = _trend_bound(large)
    return report


def free_gaussian(tau, x, sigma=1.0):
    '''
    Exact solution of ``i phi_t = -lap phi`` with ``phi(0) = exp(-|x|^2/(2 sigma^2))``.
    '''
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    spread = sigma ** 2 + 2j * tau
    return (sigma ** 2 / spread) ** (n / 2.0) * np.exp(-_sq(x) / (2 * spread))


def eval_minimal_mass(t, x, profile, T, x0=None):
    '''
    Minimal-mass blowup solution of the free critical NLS,
    ``(T-t)^(-n/2) e^{i/(T-t) - i|x|^2/(4(T-t))} Q(x/(T-t) - x0)``.
    '''
    if not t < T:
        raise TimeOutOfRange('minimal-mass solution only exists for t < T = %r' % T)
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    s = T - t
    radius = np.sqrt(_sq(x / s - x0))
    phase = np.exp(1j / s - 1j * _sq(x) / (4 * s))
    return s ** (-n / 2.0) * phase * profile(radius)


def eval_exp_growth(t, x, profile, gamma, x0=None, rot=None, T=None):
    '''
    Global solution with exponentially growing gradient: the transform of
    the minimal-mass solution blowing up at ``T``.  Requires
    ``gamma <= -1/(2T)``; ``T`` defaults to ``-1/(2 gamma)``, where the closed
    form is used directly.
    '''
    if not gamma < 0:
        raise ValueError('exponential growth needs gamma < 0, got %r' % gamma)
    T = -0.5 / gamma if T is None else T
    if gamma > -0.5 / T * (1 - 1e-12):
        raise ValueError('gamma=%r must not exceed -1/(2T) = %r' % (gamma, -0.5 / T))
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    rot = _rotation(rot, n)
    if abs(gamma * 2 * T + 1) > 1e-12:
        return apply_R(
            lambda tau, y: eval_minimal_mass(tau, y, profile, T, x0),
            t,
            x,
            gamma,
            rot,
            lifespan=T,
        )
    g = abs(gamma)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    scale = 2 * g * np.exp(2 * g * t)
    radius = np.sqrt(_sq(scale * rot.apply(t, x) - x0))
    phase = np.exp(0.5j * gamma * _sq(x) + 1j * g * (np.exp(4 * g * t) + 1))
    return scale ** (n / 2.0) * phase * profile(radius)


def norm_relations(phi_eval, t, gamma, grid, rot=None):
    '''
    Samples ``R phi`` at time ``t`` and ``phi`` at the mapped time on
    matching grids; returns ``(||R phi||, ||phi||, ||x R phi||, D ||x phi||)``
    where ``D`` is the dilation factor.
    '''
    rot = _rotation(rot, 2)
    stretch = dilation(t, gamma)
    tau = mapped_time(t, gamma)
    source = ComplexField.from_function(
        grid, lambda x, y: phi_eval(tau, np.stack([x, y], axis=-1))
    )
    wide = Grid2D(grid.nx, grid.ny, grid.half_width * abs(stretch))
    image = ComplexField.from_function(
        wide, lambda x, y: apply_R(phi_eval, t, np.stack([x, y], axis=-1), gamma, rot)
    )
    a, b = norms(image), norms(source)
    return a.l2, b.l2, a.weighted_l2, abs(stretch) * b.weighted_l2


def pde_residual(u_eval, t, params, grid=None, mesh=None, dt=None):
    '''
    L2 norm over the grid of
    ``i u_t + kappa lap u - V u + mu |u|^(p-1) u - i A.grad u``
    with ``u_t`` from the 4th-order central difference in time.
    '''
    grid = grid if grid is not None else params.grid()
    mesh = mesh if mesh is not None else MeshMap.identity(grid)
    points = mesh.points()
    dt = dt if dt is not None else 2.0 * grid.half_width / (grid.nx - 1)

    def sample(at):
        return u_eval(at, points)

    u_t = (
        sample(t - 2 * dt) - 8 * sample(t - dt) + 8 * sample(t + dt) - sample(t + 2 * dt)
    ) / (12 * dt)
    u = ComplexField(grid, sample(t), mesh)
    residual = 1j * u_t + params.kappa * laplacian(u).values
    residual -= params.potential(mesh.x, mesh.y) * u.values
    if params.mu:
        residual += params.mu * np.abs(u.values) ** (params.p - 1) * u.values
    if not params.rotation.is_trivial:
        ux, uy = gradient(u)
        ax, ay = np.moveaxis(params.rotation.field(points), -1, 0)
        residual -= 1j * (ax * ux.values + ay * uy.values)
    return float(np.sqrt(integrate(np.abs(residual) ** 2, mesh)))
