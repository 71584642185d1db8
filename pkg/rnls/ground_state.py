"""
Ground state ``Q`` of ``lap Q - Q + Q^p = 0``: positive, radial, decreasing.

The profile is found by shooting on ``Q(0)``.  Bisection brackets the height
between undershoot (``Q'`` turns positive) and overshoot (``Q`` crosses
zero); the unstable far field is then replaced by an inward integration from
``r_max`` seeded with the decaying Bessel solution of the linearised problem
and matched in value to the outward solution.
"""
import logging
from dataclasses import dataclass, replace
from functools import cached_property, lru_cache

import numpy as np
from scipy.integrate import simpson, solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq
from scipy.special import gamma as gamma_function
from scipy.special import kv

from .exceptions import ExponentMismatch, NonConvergence, ShootingBracketFailure
from .field import ComplexField, norms
from .grid import MeshMap, diff1

logger = logging.getLogger(__name__)

OVERSHOOT = 1
UNDERSHOOT = -1

_IVP_OPTIONS = {'method': 'DOP853', 'rtol': 1e-13, 'atol': 1e-16}


def sphere_area(n):
    """Surface area of the unit sphere in R^n (2 for n = 1)."""
    return 2 * np.pi ** (n / 2.0) / gamma_function(n / 2.0)


def _power(q, p):
    return np.sign(q) * np.abs(q) ** p


def _radial_rhs(n, p):
    def rhs(r, state):
        q, dq = state
        return [dq, -(n - 1) / r * dq + q - _power(q, p)]

    return rhs


def _series_start(height, n, p, r0):
    curvature = (height - height ** p) / n
    return [height + 0.5 * curvature * r0 ** 2, curvature * r0]


def _decaying_mode(n, r):
    '''
    ``r^-nu K_nu(r)`` with ``nu = (n - 2) / 2`` and its derivative, the
    decaying solution of ``q'' + (n - 1)/r q' - q = 0``.
    '''
    nu = (n - 2) / 2.0
    value = r ** -nu * kv(nu, r)
    slope = -(r ** -nu) * kv(nu + 1, r)
    return value, slope


def _classify(heights, n, p, r0, r_max, samples=4001):
    '''
    Integrates every trial height together and labels each OVERSHOOT (Q
    crosses zero first), UNDERSHOOT (Q' turns positive first) or 0.
    '''
    heights = np.atleast_1d(np.asarray(heights, dtype=float))
    count = heights.size
    start = np.array([_series_start(h, n, p, r0) for h in heights])

    def rhs(r, state):
        q, dq = state[:count], state[count:]
        return np.concatenate([dq, -(n - 1) / r * dq + q - _power(q, p)])

    sol = solve_ivp(
        rhs,
        (r0, r_max),
        np.concatenate([start[:, 0], start[:, 1]]),
        t_eval=np.linspace(r0, r_max, samples),
        **_IVP_OPTIONS,
    )
    q, dq = sol.y[:count], sol.y[count:]
    width = q.shape[1]
    negative = q < 0
    rising = dq > 0
    first_negative = np.where(negative.any(axis=1), negative.argmax(axis=1), width)
    first_rising = np.where(rising.any(axis=1), rising.argmax(axis=1), width)
    return np.where(
        first_negative < first_rising,
        OVERSHOOT,
        np.where(first_rising < first_negative, UNDERSHOOT, 0),
    )


def _bracket(n, p, r0, r_max):
    lo = 1.0 + 1e-6
    if _classify(lo, n, p, r0, r_max)[0] != UNDERSHOOT:
        raise ShootingBracketFailure(
            'height %r does not undershoot for n=%d, p=%r' % (lo, n, p)
        )
    hi = 2.0
    while _classify(hi, n, p, r0, r_max)[0] != OVERSHOOT:
        lo, hi = hi, 2 * hi
        if hi > 2.0 ** 20:
            raise ShootingBracketFailure(
                'no overshoot below Q(0)=%r for n=%d, p=%r' % (hi, n, p)
            )
    return lo, hi


def _shoot(n, p, r0, r_max, max_depth, trials=16):
    '''
    Multisection on Q(0): each round integrates ``trials`` interior heights
    and keeps the sub-interval around the first overshoot.
    '''
    lo, hi = _bracket(n, p, r0, r_max)
    for depth in range(max_depth):
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            logger.debug('shooting for n=%d p=%r settled after %d rounds', n, p, depth)
            return lo
        heights = np.linspace(lo, hi, trials + 2)[1:-1]
        over = _classify(heights, n, p, r0, r_max) == OVERSHOOT
        k = int(over.argmax()) if over.any() else trials
        new_lo = heights[k - 1] if k > 0 else lo
        new_hi = heights[k] if k < trials else hi
        if new_lo == lo and new_hi == hi:
            return lo
        lo, hi = new_lo, new_hi
    raise NonConvergence(
        'shooting on Q(0) did not settle within %d rounds (bracket %r, %r)'
        % (max_depth, lo, hi)
    )


def _match_value(height, p, level):
    '''
    Matching height for the inward tail: ``level`` of ``Q(0)``, lowered until
    the nonlinear term is at most ``level`` of the linear one.
    '''
    return min(level * height, level ** (1.0 / (p - 1.0)))


def _match_bracket(residual, alpha0, expand=2.0, limit=1e8):
    '''
    Grows ``[alpha0 / s, alpha0 * s]`` geometrically until ``residual`` changes
    sign across it.
    '''
    lo = hi = alpha0
    f_lo = f_hi = residual(alpha0)
    if f_lo == 0:
        return alpha0, alpha0
    while f_lo * f_hi > 0:
        if hi / lo > limit:
            return None
        if f_lo > 0:
            lo /= expand
            f_lo = residual(lo)
        else:
            hi *= expand
            f_hi = residual(hi)
    return lo, hi


def _integrate_profile(height, n, p, r, match_level):
    rhs = _radial_rhs(n, p)
    r0, r_max = r[1], r[-1]
    q_match = _match_value(height, p, match_level)

    def reached(radius, state):
        return state[0] - q_match

    reached.terminal = True
    reached.direction = -1

    outward = solve_ivp(
        rhs, (r0, r_max), _series_start(height, n, p, r0), events=reached, **_IVP_OPTIONS
    )
    if not outward.t_events[0].size:
        raise NonConvergence('outward profile never decayed to the matching level')
    r_match = float(outward.t_events[0][0])
    head = (r > 0) & (r <= r_match)
    rest = r > r_match

    k_max, dk_max = _decaying_mode(n, r_max)
    k_match, _ = _decaying_mode(n, r_match)

    def inward(alpha, t_eval=None):
        return solve_ivp(
            rhs,
            (r_max, r_match),
            [alpha * k_max, alpha * dk_max],
            t_eval=t_eval,
            **_IVP_OPTIONS,
        )

    def mismatch(alpha):
        sol = inward(alpha)
        last = sol.y[0, -1]
        if sol.status != 0 or not np.isfinite(last):
            return 1e200 if np.isnan(last) else float(np.copysign(1e200, last))
        return sol.y[0, -1] - q_match

    alpha0 = q_match / k_match
    bracket = _match_bracket(mismatch, alpha0)
    if bracket is None:
        raise ShootingBracketFailure(
            'inward tail never matched Q=%r at r=%r for n=%d, p=%r' % (q_match, r_match, n, p)
        )
    lo, hi = bracket
    if lo == hi:
        alpha = lo
    else:
        try:
            alpha = brentq(
                mismatch, lo, hi, xtol=1e-16 * alpha0, rtol=4 * np.finfo(float).eps
            )
        except ValueError as exc:
            raise ShootingBracketFailure(
                'tail matching failed for n=%d, p=%r: %s' % (n, p, exc)
            ) from exc

    head_sol = solve_ivp(
        rhs,
        (r0, r[head][-1]),
        _series_start(height, n, p, r0),
        t_eval=r[head],
        **_IVP_OPTIONS,
    )
    tail = inward(alpha, t_eval=r[rest][::-1])

    q = np.empty_like(r)
    dq = np.empty_like(r)
    q[0], dq[0] = height, 0.0
    q[head], dq[head] = head_sol.y
    q[rest], dq[rest] = tail.y[:, ::-1]
    return q, dq


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Samples of a ground state on ``r = 0, hr, 2hr, ..., r_max``."""

    r: np.ndarray
    q: np.ndarray
    dq: np.ndarray
    dim: int
    p: float
    mass: float
    grad: float
    kappa: float = 1.0

    @property
    def qmax(self):
        return float(self.q[0])

    @property
    def r_max(self):
        return float(self.r[-1])

    @property
    def mass_critical(self):
        return abs(self.p - (1.0 + 4.0 / self.dim)) < 1e-12

    @cached_property
    def _spline(self):
        return CubicHermiteSpline(self.r, self.q, self.dq)

    def __call__(self, radius):
        radius = np.asarray(radius, dtype=float)
        inside = radius <= self.r_max
        return np.where(inside, self._spline(np.minimum(radius, self.r_max)), 0.0)

    def derivative(self, radius):
        radius = np.asarray(radius, dtype=float)
        inside = radius <= self.r_max
        return np.where(inside, self._spline(np.minimum(radius, self.r_max), 1), 0.0)

    def radial_integral(self, values):
        """``int_{R^n} values(|x|) dx`` for samples on ``r``."""
        return float(sphere_area(self.dim) * simpson(values * self.r ** (self.dim - 1), x=self.r))

    def lp_power(self, exponent):
        return self.radial_integral(self.q ** exponent)

    def for_kinetic(self, kappa):
        '''
        Ground state of ``kappa lap R - R + R^p = 0``, i.e. ``R(r) = Q(r/sqrt(kappa))``.
        '''
        scale = np.sqrt(kappa / self.kappa)
        n = self.dim
        return replace(
            self,
            r=self.r * scale,
            dq=self.dq / scale,
            mass=self.mass * scale ** n,
            grad=self.grad * scale ** ((n - 2) / 2.0),
            kappa=kappa,
        )

    def rescaled(self, lam=1.0, center=None):
        return RescaledQ(self, lam, center)

    def lift(self, grid, mesh=None, lam=1.0, center=None):
        """Samples ``lam^-1 Q(|x - center| / lam)`` on a 2D grid."""
        return RescaledQ(self, lam, center).sample(grid, mesh)


@dataclass(frozen=True, eq=False)
class RescaledQ:
    """``Q_lam(x) = lam^(-n/2) Q((x - center) / lam)``."""

    base: RadialProfile
    lam: float = 1.0
    center: tuple = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError('lam must be positive, got %r' % self.lam)
        center = self.center if self.center is not None else (0.0,) * self.base.dim
        object.__setattr__(self, 'center', tuple(float(c) for c in center))

    def mass(self):
        return self.base.mass

    def grad_l2(self):
        return self.base.grad / self.lam

    def __call__(self, points):
        points = np.asarray(points, dtype=float)
        radius = np.sqrt(np.sum((points - np.asarray(self.center)) ** 2, axis=-1))
        return self.lam ** (-self.base.dim / 2.0) * self.base(radius / self.lam)

    def sample(self, grid, mesh=None):
        if self.base.dim != 2:
            raise ValueError('only 2D profiles can be sampled on a grid')
        mesh = mesh if mesh is not None else MeshMap.identity(grid)
        return ComplexField(grid, self(mesh.points()), mesh)


def profile_residual(profile):
    '''
    Sup norm of the first-order radial system ``q' = dq``,
    ``dq' = -(n-1)/r dq + (q - q^p) / kappa`` away from the origin, with the
    left-hand sides from the 4th-order stencil.
    '''
    r, q, dq = profile.r, profile.q, profile.dq
    h = r[1] - r[0]
    n, p = profile.dim, profile.p
    inner = slice(10, len(r) - 3)
    slope = diff1(q, h)[inner] - dq[inner]
    curvature = diff1(dq, h)[inner] - (
        -(n - 1) / r[inner] * dq[inner] + (q[inner] - q[inner] ** p) / profile.kappa
    )
    return float(max(np.max(np.abs(slope)), np.max(np.abs(curvature))))


@lru_cache(maxsize=32)
def solve_ground_state(n, p=None, tol=1e-8, r_max=25.0, hr=1e-3, max_depth=60):
    '''
    Ground state of ``-Q = -lap Q - Q^p`` in dimension ``n``; ``p`` defaults
    to the mass-critical ``1 + 4/n``.
    '''
    if not 1 <= n <= 12:
        raise ValueError('n must be in 1..12, got %r' % n)
    p = 1.0 + 4.0 / n if p is None else float(p)
    if not p > 1:
        raise ValueError('p must exceed 1, got %r' % p)
    if not tol > 0:
        raise ValueError('tol must be positive, got %r' % tol)

    r = np.arange(int(round(r_max / hr)) + 1) * hr
    height = _shoot(n, p, r[1], r[-1], max_depth)
    q, dq = _integrate_profile(height, n, p, r, match_level=0.05)

    omega = sphere_area(n)
    mass = float(omega * simpson(q ** 2 * r ** (n - 1), x=r))
    grad = float(np.sqrt(omega * simpson(dq ** 2 * r ** (n - 1), x=r)))
    q.setflags(write=False)
    dq.setflags(write=False)
    r.setflags(write=False)
    profile = RadialProfile(r, q, dq, n, p, mass, grad)

    if np.any(q <= 0) or np.any(np.diff(q) >= 0):
        raise NonConvergence('profile for n=%d p=%r is not positive and decreasing' % (n, p))
    if q[-1] >= 1e-10 * q[0]:
        raise NonConvergence(
            'tail Q(%r)=%r has not decayed below 1e-10 Q(0); raise r_max' % (r_max, q[-1])
        )
    residual = profile_residual(profile)
    if residual >= tol:
        raise NonConvergence('profile residual %.3e exceeds tol %.3e' % (residual, tol))
    logger.debug(
        'ground state n=%d p=%r: Q(0)=%.15g mass=%.12g residual=%.2e',
        n,
        p,
        height,
        mass,
        residual,
    )
    return profile


def _mass_critical_profile(n):
    return solve_ground_state(n, 1.0 + 4.0 / n)


def free_energy(target, p=None):
    '''
    ``E(u) = ||grad u||^2 - n/(n+2) ||u||_{2+4/n}^{2+4/n}`` for a RadialProfile
    or a 2D ComplexField.
    '''
    if isinstance(target, RadialProfile):
        n = target.dim
        if not target.mass_critical:
            raise ExponentMismatch('profile exponent %r is not 1 + 4/%d' % (target.p, n))
        return target.grad ** 2 - n / (n + 2.0) * target.lp_power(2 + 4.0 / n)
    n = 2
    if p is not None and abs(p - (1.0 + 4.0 / n)) > 1e-12:
        raise ExponentMismatch('exponent %r is not mass-critical in 2D' % p)
    result = norms(target, q=(4,))
    return result.grad_l2 ** 2 - 0.5 * result.lp[4] ** 4


def gn_constant(n, profile=None):
    """Sharp Gagliardo-Nirenberg constant ``(n+2)/n ||Q||_2^(-4/n)``."""
    profile = profile if profile is not None else _mass_critical_profile(n)
    return (n + 2.0) / n * profile.mass ** (-2.0 / n)


def check_gn(target, profile=None, relative=False):
    '''
    Slack ``c_GN ||u||^(4/n) ||grad u||^2 - ||u||_{2+4/n}^{2+4/n}``; non-negative
    up to quadrature error.  ``relative`` divides by the left-hand side.
    '''
    if isinstance(target, RadialProfile):
        n = target.dim
        mass, grad2 = target.mass, target.grad ** 2
        nonlinear = target.lp_power(2 + 4.0 / n)
    else:
        n = 2
        result = norms(target, q=(4,))
        mass, grad2 = result.l2 ** 2, result.grad_l2 ** 2
        nonlinear = result.lp[4] ** 4
    bound = gn_constant(n, profile) * mass ** (2.0 / n) * grad2
    slack = bound - nonlinear
    if relative:
        return slack / bound if bound > 0 else 0.0
    return slack

