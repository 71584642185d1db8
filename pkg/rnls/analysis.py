"""Blowup post-processing over diagnostics series and snapshots."""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import least_squares
from scipy.stats import linregress

from .conf import settings
from .constants import BLOWUP_TERMINATIONS
from .exceptions import DomainError, InsufficientDecades, RunDidNotBlowUp
from .field import norms
from .ground_state import free_energy, solve_ground_state

logger = logging.getLogger(__name__)

LOGLOG_LIMIT = 1.0 / math.sqrt(2.0 * math.pi)


def _column(rows, name):
    return np.array([r[name] if isinstance(r, dict) else getattr(r, name) for r in rows], dtype=float)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    residual: float
    window: Tuple[float, float]
    T_est: Optional[float]
    points: int
    stderr: float

    def as_dict(self):
        return {
            'slope': self.slope,
            'intercept': self.intercept,
            'residual': self.residual,
            'window': list(self.window),
            'T_est': self.T_est,
            'points': self.points,
            'stderr': self.stderr,
        }


@dataclass(frozen=True)
class ProfileFit:
    lam: float
    center: Tuple[float, float]
    residual: float


@dataclass(frozen=True)
class ConcentrationWindow:
    delta: float
    radius: float
    center: Tuple[float, float]
    captured_mass: float
    total_mass: float


@dataclass
class LogLogSeries:
    tau: np.ndarray
    values: np.ndarray
    limit: float = LOGLOG_LIMIT

    def bounded(self, lo=0.1, hi=2.0):
        return bool(np.all((self.values >= lo) & (self.values <= hi)))

    def drift(self):
        """Relative change between the first and last value."""
        return float((self.values[-1] - self.values[0]) / np.mean(self.values))


def reconstruct_T(rows, termination=None):
    '''
    Returns ``(T, tau)`` where ``tau[j] = T - t_j`` is the suffix sum of the
    step sizes logged after row ``j`` and ``T`` is the final time.
    '''
    if termination is not None and termination not in BLOWUP_TERMINATIONS:
        raise RunDidNotBlowUp('run ended with %r, not at the amplitude cap' % termination)
    if not len(rows):
        raise RunDidNotBlowUp('empty diagnostics series')
    dt = _column(rows, 'dt')
    tau = np.zeros_like(dt)
    tau[:-1] = np.cumsum(dt[::-1])[::-1][1:]
    return float(_column(rows, 't')[-1]), tau


def fit_rate(L, tau, T_est=None, window=None, min_points=20):
    '''
    Least-squares slope of ``log L`` against ``log(T - t)`` over ``window``
    (default RNLS_FIT_WINDOW).  Needs ``min_points`` samples spanning two
    decades.
    '''
    lo, hi = window if window is not None else settings.FIT_WINDOW
    L = np.asarray(L, dtype=float)
    tau = np.asarray(tau, dtype=float)
    mask = (tau >= lo) & (tau <= hi) & (tau > 0) & np.isfinite(L) & (L > 0)
    count = int(np.count_nonzero(mask))
    if count < min_points:
        raise InsufficientDecades(
            '%d point(s) in window [%g, %g], need %d' % (count, lo, hi, min_points)
        )
    span = math.log10(tau[mask].max() / tau[mask].min())
    if span < 2.0:
        raise InsufficientDecades('data span %.2f decade(s) of T - t, need 2' % span)
    x, y = np.log(tau[mask]), np.log(L[mask])
    fit = linregress(x, y)
    residual = float(np.sqrt(np.mean((y - (fit.intercept + fit.slope * x)) ** 2)))
    return RateFit(
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        residual=residual,
        window=(float(tau[mask].min()), float(tau[mask].max())),
        T_est=T_est,
        points=count,
        stderr=float(fit.stderr),
    )


def loglog_functional(gradl2, tau, gradQ):
    '''
    ``(||grad u|| / ||grad Q||) sqrt((T - t) / log|log(T - t)|)``; its
    log-log limit is ``1/sqrt(2 pi)``.
    '''
    tau = np.asarray(tau, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        loglog = np.log(np.abs(np.log(tau)))
    if np.any(~(loglog > 0)):
        raise DomainError('log|log(T - t)| must be positive; (T - t) < 1/e required')
    values = np.asarray(gradl2, dtype=float) / gradQ * np.sqrt(tau / loglog)
    return LogLogSeries(tau, values)


def _window_radius(tau, delta):
    if not 0 < delta < 0.5:
        raise ValueError('delta must lie in (0, 1/2), got %r' % delta)
    loglog = math.log(abs(math.log(tau))) if tau > 0 else -math.inf
    if not loglog > 0:
        raise DomainError('log|log(T - t)| must be positive, T - t = %r' % tau)
    return math.sqrt(tau) / loglog ** delta


def _peak(u):
    mesh = u.mesh_map
    i, j = np.unravel_index(np.argmax(np.abs(u.values)), u.grid.shape)
    return float(mesh.x[i, j]), float(mesh.y[i, j])


def compare_profile(u, profile=None, kappa=1.0):
    '''
    Fits ``|u|`` by ``lam^(-1) Q(|x - c| / lam)``.  ``lam`` starts from
    ``||grad Q|| / ||grad u||`` and ``c`` from the peak of ``|u|``; both are
    refined by least squares on the quadrature-weighted residual.
    '''
    profile = profile if profile is not None else solve_ground_state(2)
    if kappa != profile.kappa:
        profile = profile.for_kinetic(kappa)
    mesh = u.mesh_map
    base = norms(u)
    if base.l2 == 0:
        raise ValueError('cannot fit a profile to a zero field')
    modulus = np.abs(u.values).ravel()
    root_w = np.sqrt(mesh.quadrature_weights).ravel()
    points = mesh.points().reshape(-1, 2)
    start = np.array([math.log(profile.grad / base.grad_l2), *_peak(u)])

    def residuals(params):
        lam = math.exp(params[0])
        model = profile.rescaled(lam, params[1:])(points)
        return root_w * (modulus - model)

    solution = least_squares(residuals, start, method='lm', xtol=1e-14, ftol=1e-14, gtol=1e-14)
    lam = math.exp(solution.x[0])
    misfit = float(np.sqrt(np.sum(residuals(solution.x) ** 2))) / base.l2
    return ProfileFit(lam, (float(solution.x[1]), float(solution.x[2])), min(misfit, 2.0))


def _captured(cell_mass, x, y, center, radius):
    inside = (x - center[0]) ** 2 + (y - center[1]) ** 2 < radius ** 2
    return float(np.sum(cell_mass[inside]))


def mass_window(u, delta=None, tau=None, radius=None, center=None, candidates=256):
    '''
    Largest mass of ``u`` inside a disc of radius
    ``sqrt(T - t) / log|log(T - t)|^delta`` (or an explicit ``radius``).
    Disc centres start at the nodes where ``|u|`` is largest and climb to the
    best 8-neighbour until no neighbour captures more.  A given ``center``
    skips the search.
    '''
    delta = settings.DELTA if delta is None else delta
    if radius is None:
        radius = _window_radius(tau, delta)
    mesh = u.mesh_map
    cell_mass = mesh.quadrature_weights * np.abs(u.values) ** 2
    x, y = mesh.x, mesh.y
    if center is not None:
        return ConcentrationWindow(
            delta=delta,
            radius=radius,
            center=(float(center[0]), float(center[1])),
            captured_mass=_captured(cell_mass, x, y, center, radius),
            total_mass=float(np.sum(cell_mass)),
        )
    modulus = np.abs(u.values)
    order = np.argsort(modulus, axis=None)[::-1][:candidates]
    order = order[modulus.ravel()[order] >= 0.1 * modulus.max()]
    nx, ny = u.grid.shape
    cache = {}

    def score(i, j):
        if (i, j) not in cache:
            cache[i, j] = _captured(cell_mass, x, y, (x[i, j], y[i, j]), radius)
        return cache[i, j]

    best = max((divmod(int(k), ny) for k in order), key=lambda ij: score(*ij))
    while True:
        i, j = best
        neighbours = [
            (i + di, j + dj)
            for di in (-1, 0, 1)
            for dj in (-1, 0, 1)
            if (di or dj) and 0 <= i + di < nx and 0 <= j + dj < ny
        ]
        step = max(neighbours, key=lambda ij: score(*ij))
        if score(*step) <= score(*best):
            break
        best = step
    i, j = best
    return ConcentrationWindow(
        delta=delta,
        radius=radius,
        center=(float(x[i, j]), float(y[i, j])),
        captured_mass=score(i, j),
        total_mass=float(np.sum(cell_mass)),
    )


def check_uncertainty(u):
    """``(2/n) ||grad u||^2 ||x u||^2 - ||u||^4``; zero for centred Gaussians."""
    result = norms(u)
    return result.grad_l2 ** 2 * result.weighted_l2 ** 2 - result.l2 ** 4


@dataclass(frozen=True)
class InitialDataReport:
    mass: float
    threshold: float
    kappa_threshold: float
    energy: float
    kappa_energy: float

    @property
    def mass_excess(self):
        return self.mass - self.threshold

    @property
    def kappa_mass_excess(self):
        return self.mass - self.kappa_threshold

    @property
    def negative_energy(self):
        return self.energy < 0

    def as_dict(self):
        return {
            'mass': self.mass,
            'threshold': self.threshold,
            'kappa_threshold': self.kappa_threshold,
            'mass_excess': self.mass_excess,
            'energy': self.energy,
            'kappa_energy': self.kappa_energy,
            'negative_energy': self.negative_energy,
        }


def classify_initial_data(u0, kappa=1.0, profile=None):
    '''
    Mass of ``u0`` against ``||Q||^2`` and ``kappa ||Q||^2`` together with
    the free energy in the ``kappa = 1`` and ``kappa`` conventions.
    Negative energy above threshold is the sufficient blowup condition.
    '''
    profile = profile if profile is not None else solve_ground_state(2)
    result = norms(u0, q=(4,))
    quartic = result.lp[4] ** 4
    return InitialDataReport(
        mass=result.l2 ** 2,
        threshold=profile.mass,
        kappa_threshold=profile.for_kinetic(kappa).mass,
        energy=free_energy(u0),
        kappa_energy=kappa * result.grad_l2 ** 2 - 0.5 * quartic,
    )


@dataclass(frozen=True)
class LifespanComparison:
    attractive: float
    repulsive: float

    @property
    def ordered(self):
        return self.attractive < self.repulsive


def compare_lifespans(rows_attractive, rows_repulsive):
    """Reconstructed blowup times of an attractive and a repulsive run."""
    T_a, _ = reconstruct_T(rows_attractive)
    T_r, _ = reconstruct_T(rows_repulsive)
    if not T_a < T_r:
        logger.warning('attractive run outlived the repulsive one: %.8g >= %.8g', T_a, T_r)
    return LifespanComparison(T_a, T_r)


def snapshot_report(u, t, T_est, tau, gradQ, profile=None, kappa=1.0, delta=None):
    '''
    One JSON-ready record per snapshot: profile fit, window mass and the
    log-log functional (``None`` when ``T - t`` is outside its domain).
    '''
    fit = compare_profile(u, profile, kappa)
    record = {'t': t, 'lambda': fit.lam, 'residual': fit.residual}
    try:
        window = mass_window(u, delta, tau)
        record['captured_mass'] = window.captured_mass
        record['loglog_value'] = float(loglog_functional([norms(u).grad_l2], [tau], gradQ).values[0])
    except DomainError:
        record['captured_mass'] = None
        record['loglog_value'] = None
    record['T_est'] = T_est
    return record