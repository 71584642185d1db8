"""
Iterative grid redistribution.

The mesh map ``x(xi, eta)`` solves the variable-diffusion equation
``div_xi (w grad_xi x) = 0`` (and the same for ``y``) on the computational
square with the boundary pinned, so cell widths shrink like ``1/w``.  Each
outer iteration re-samples the monitor at the moved nodes and takes an
under-relaxed step towards the new solution.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.ndimage import map_coordinates, spline_filter, uniform_filter
from scipy.sparse.linalg import splu

from .conf import settings
from .exceptions import MeshTangled, NonConvergence, ZeroField
from .field import ComplexField, computational_gradient, gradient, integrate, laplacian
from .grid import MeshMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class MonitorField:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w < 1.0):
            raise ValueError('monitor samples must be finite and >= 1')
        object.__setattr__(self, 'w', w)


def compute_monitor(u, smoothing=None):
    '''
    ``w = sqrt(1 + |grad u|^2/||u||_inf^2 + |lap u|/||u||_inf)`` at every
    node, smoothed by ``smoothing`` passes of 3x3 averaging.
    '''
    smoothing = settings.MONITOR_SMOOTHING if smoothing is None else smoothing
    top = u.sup()
    if top == 0:
        raise ZeroField('the monitor is normalised by ||u||_inf, which is zero')
    ux, uy = gradient(u)
    slope = (np.abs(ux.values) ** 2 + np.abs(uy.values) ** 2) / top ** 2
    curvature = np.abs(laplacian(u).values) / top
    w = np.sqrt(1.0 + slope + curvature)
    for _ in range(smoothing):
        w = uniform_filter(w, size=3, mode='nearest')
    return MonitorField(np.maximum(w, 1.0))


def _face_coefficients(w, grid):
    east = 0.5 * (w[1:, :] + w[:-1, :]) / grid.hxi ** 2
    north = 0.5 * (w[:, 1:] + w[:, :-1]) / grid.heta ** 2
    return east[1:, 1:-1], east[:-1, 1:-1], north[1:-1, 1:], north[1:-1, :-1]


def _solve_direct(w, mesh):
    grid = mesh.grid
    nx, ny = grid.shape
    index = np.arange(nx * ny).reshape(nx, ny)
    c_e, c_w, c_n, c_s = _face_coefficients(w, grid)
    inner = index[1:-1, 1:-1].ravel()
    border = np.ones(grid.shape, dtype=bool)
    border[1:-1, 1:-1] = False
    edge = index[border]
    rows = np.concatenate([inner] * 5 + [edge])
    cols = np.concatenate(
        [
            inner,
            index[2:, 1:-1].ravel(),
            index[:-2, 1:-1].ravel(),
            index[1:-1, 2:].ravel(),
            index[1:-1, :-2].ravel(),
            edge,
        ]
    )
    vals = np.concatenate(
        [
            -(c_e + c_w + c_n + c_s).ravel(),
            c_e.ravel(),
            c_w.ravel(),
            c_n.ravel(),
            c_s.ravel(),
            np.ones(edge.size),
        ]
    )
    system = splu(sparse.csc_matrix((vals, (rows, cols)), shape=(nx * ny, nx * ny)))
    solved = []
    for coords in (mesh.x, mesh.y):
        rhs = np.zeros(nx * ny)
        rhs[edge] = coords[border]
        out = system.solve(rhs).reshape(nx, ny)
        out[border] = coords[border]
        solved.append(out)
    return solved


def _solve_red_black(w, mesh, sweeps, tol):
    c_e, c_w, c_n, c_s = _face_coefficients(w, mesh.grid)
    total = c_e + c_w + c_n + c_s
    ii, jj = np.meshgrid(
        np.arange(1, mesh.grid.nx - 1), np.arange(1, mesh.grid.ny - 1), indexing='ij'
    )
    colours = [(ii + jj) % 2 == 0, (ii + jj) % 2 == 1]
    solved = []
    for coords in (mesh.x, mesh.y):
        a = coords.copy()
        for sweep in range(sweeps):
            change = 0.0
            for colour in colours:
                update = (
                    c_e * a[2:, 1:-1]
                    + c_w * a[:-2, 1:-1]
                    + c_n * a[1:-1, 2:]
                    + c_s * a[1:-1, :-2]
                ) / total
                inner = a[1:-1, 1:-1]
                change = max(change, float(np.max(np.abs(update - inner)[colour])))
                inner[colour] = update[colour]
            if change < tol:
                break
        else:
            raise NonConvergence('red-black relaxation did not converge in %d sweeps' % sweeps)
        solved.append(a)
    return solved


class _SplineMap:
    """Cubic-spline view of node arrays for sampling at fractional indices."""

    def __init__(self, *arrays):
        self.coefficients = [spline_filter(a, order=3, mode='mirror') for a in arrays]

    def __call__(self, i, j):
        coords = np.array([np.ravel(i), np.ravel(j)])
        shape = np.shape(i)
        return [
            map_coordinates(c, coords, order=3, mode='mirror', prefilter=False).reshape(shape)
            for c in self.coefficients
        ]


def locate(mesh, x, y, guess=None, iterations=40, tol=1e-12):
    '''
    Fractional node indices ``(i, j)`` at which ``mesh`` reaches the
    physical points ``(x, y)``, by Newton iteration on the spline map.
    Returns ``(i, j, clamped)`` where ``clamped`` counts points that fell
    outside the mesh and were pulled back onto it.
    '''
    grid = mesh.grid
    m = mesh.metrics
    shape = np.shape(x)
    if guess is None:
        L = grid.half_width
        i = (np.asarray(x) / L + 1.0) / grid.hxi
        j = (np.asarray(y) / L + 1.0) / grid.heta
    else:
        i, j = (np.array(g, dtype=float) for g in guess)
    position = _SplineMap(mesh.x, mesh.y)
    slopes = _SplineMap(
        m.x_xi * grid.hxi, m.x_eta * grid.heta, m.y_xi * grid.hxi, m.y_eta * grid.heta
    )
    scale = grid.half_width
    top_i, top_j = grid.nx - 1, grid.ny - 1
    for _ in range(iterations):
        px, py = position(i, j)
        rx, ry = x - px, y - py
        if max(np.max(np.abs(rx)), np.max(np.abs(ry))) < tol * scale:
            break
        xi_, xj_, yi_, yj_ = slopes(i, j)
        det = xi_ * yj_ - xj_ * yi_
        i = np.clip(i + (yj_ * rx - xj_ * ry) / det, 0, top_i)
        j = np.clip(j + (xi_ * ry - yi_ * rx) / det, 0, top_j)
    px, py = position(i, j)
    miss = np.hypot(x - px, y - py) > 1e-8 * scale
    edge = (i <= 0) | (i >= top_i) | (j <= 0) | (j >= top_j)
    clamped = int(np.count_nonzero(miss & edge))
    return i.reshape(shape), j.reshape(shape), clamped


def _node_indices(grid):
    return np.meshgrid(
        np.arange(grid.nx, dtype=float), np.arange(grid.ny, dtype=float), indexing='ij'
    )


def resample(values, old, new):
    '''
    Real or complex node samples on ``old`` carried to the nodes of ``new``
    by bicubic spline interpolation (real and imaginary parts separately).
    Returns ``(values, clamped)``.
    '''
    i, j, clamped = locate(old, new.x, new.y, guess=_node_indices(old.grid))
    values = np.asarray(values)
    if np.iscomplexobj(values):
        re, im = _SplineMap(values.real, values.imag)(i, j)
        return re + 1j * im, clamped
    (out,) = _SplineMap(values)(i, j)
    return out, clamped


def interpolate(u, old, new, stats=None):
    '''
    Moves ``u`` from ``old`` onto ``new``.  An unchanged mesh returns an
    exact copy; points outside the old mesh are clamped and counted in
    ``stats['clamped']``.
    '''
    if new is old or (np.array_equal(new.x, old.x) and np.array_equal(new.y, old.y)):
        return ComplexField(u.grid, u.values.copy(), new)
    values, clamped = resample(u.values, old, new)
    if clamped:
        logger.warning('%d interpolation target(s) fell outside the old mesh', clamped)
    if stats is not None:
        stats['clamped'] = stats.get('clamped', 0) + clamped
    return ComplexField(u.grid, values, new)


def redistribute(mesh, monitor, iters=None, relax=None, method='direct', sweeps=5000):
    '''
    Runs ``iters`` outer redistribution iterations for ``monitor`` (sampled
    on ``mesh``).  Raises MeshTangled as soon as an iterate folds.
    '''
    iters = settings.REMESH_ITERS if iters is None else iters
    relax = settings.REMESH_RELAX if relax is None else relax
    if iters < 1:
        raise ValueError('iters must be >= 1, got %r' % iters)
    w = monitor.w
    current = mesh
    for k in range(iters):
        if k:
            w, _ = resample(monitor.w, mesh, current)
            w = np.maximum(w, 1.0)
        if method == 'direct':
            x_new, y_new = _solve_direct(w, current)
        elif method == 'red-black':
            x_new, y_new = _solve_red_black(w, current, sweeps, 1e-12 * mesh.grid.half_width)
        else:
            raise ValueError('unknown mesh solver %r' % method)
        candidate = MeshMap(
            mesh.grid,
            current.x + relax * (x_new - current.x),
            current.y + relax * (y_new - current.y),
        )
        if candidate.tangled():
            raise MeshTangled('mesh folded in redistribution iteration %d' % (k + 1))
        current = candidate
        logger.debug('redistribution iteration %d: min spacing %.3e', k + 1, current.min_spacing())
    return current


def equidistribution(mesh, w):
    """Relative variance of ``w * cell area``; 0 when perfectly equidistributed."""
    density = np.asarray(w) * mesh.cell_areas()
    return float(np.var(density) / np.mean(density) ** 2)


def shape_metric(u, mesh=None):
    '''
    ``max |grad_(xi,eta) u| / (L ||u||_inf)``: the computational gradient in
    physical units, so a Gaussian of unit width scores about 0.6 on the
    identity mesh whatever the half-width ``L``.
    '''
    if mesh is not None and mesh is not u.mesh_map:
        u = ComplexField(u.grid, u.values, mesh)
    top = u.sup()
    if top == 0:
        return 0.0
    u_xi, u_eta = computational_gradient(u)
    steepest = np.max(np.sqrt(np.abs(u_xi) ** 2 + np.abs(u_eta) ** 2))
    return float(steepest / (top * u.grid.half_width))


def shape_ok(u, mesh=None, C=None):
    C = settings.SHAPE_C if C is None else C
    return shape_metric(u, mesh) <= C


@dataclass
class RemeshOutcome:
    field: ComplexField
    mesh: MeshMap
    mass_delta: float
    relax: float
    accepted: bool


def adapt(
    u, iters=None, relax=None, smoothing=None, attempts=4, conserve_mass=True, mass_tol=None
):
    '''
    One remesh event: monitor, redistribution, interpolation and mass
    bookkeeping.  A candidate that tangles or moves the mass by more than
    ``mass_tol`` (relative) is rejected and retried with half the
    relaxation.  When every attempt is rejected the field is returned on
    its old mesh with ``accepted`` false.

    ``mass_delta`` is the raw relative change before ``conserve_mass``
    renormalises an accepted field.
    '''
    relax = settings.REMESH_RELAX if relax is None else relax
    mass_tol = settings.REMESH_MASS_TOL if mass_tol is None else mass_tol
    old = u.mesh_map
    monitor = compute_monitor(u, smoothing)
    before = float(integrate(np.abs(u.values) ** 2, old))
    delta = 0.0
    for attempt in range(attempts):
        try:
            new = redistribute(old, monitor, iters, relax)
        except MeshTangled as exc:
            logger.warning('%s; retrying with relaxation %.3g', exc, relax / 2)
            relax /= 2
            continue
        moved = interpolate(u, old, new)
        after = float(integrate(np.abs(moved.values) ** 2, new))
        delta = (after - before) / before if before else 0.0
        if abs(delta) > mass_tol:
            logger.warning(
                'remesh would change the mass by %.3e (relative, tol %.1e); '
                'retrying with relaxation %.3g',
                delta,
                mass_tol,
                relax / 2,
            )
            relax /= 2
            continue
        if conserve_mass and after > 0:
            moved = moved.with_values(moved.values * np.sqrt(before / after))
        return RemeshOutcome(moved, new, delta, relax, True)
    logger.warning('no acceptable mesh after %d attempts; keeping the previous mesh', attempts)
    return RemeshOutcome(u, old, delta, relax, False)
