"""
Time integration of the rotational NLS on a (moving) mesh.

One step of the loop in ``run``: maybe remesh, pick the step size from the
current amplitude, take a classical RK4 step, log a diagnostics row.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from . import signals
from .conf import settings
from .constants import (
    DIAGNOSTICS_COLUMNS,
    TERMINATION_CAP,
    TERMINATION_ERROR,
    TERMINATION_MAX_STEPS,
    TERMINATION_NONFINITE,
    TERMINATION_REMESH_FAILED,
    TERMINATION_T_END,
)
from .exceptions import DomainError, NonFiniteField, WindowTooShort
from .field import ComplexField, gradient, integrate, laplacian
from .mesh import adapt, shape_ok

logger = logging.getLogger(__name__)


@dataclass
class SimState:
    field: ComplexField
    t: float = 0.0
    step: int = 0
    dt: float = 0.0

    @property
    def mesh(self):
        return self.field.mesh_map


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    dt: float
    mass: float
    energy: float
    E0: float
    ellOmega: float
    J: float
    Jprime: float
    umax: float
    gradl2: float
    L: float
    remesh: bool = False
    # kept in memory for the identity checks, not written to CSV
    nonlinear: float = 0.0
    dE0_rhs: float = math.nan
    remesh_delta: float = 0.0
    ell_imag: float = 0.0

    def as_record(self):
        return {name: getattr(self, name) for name in DIAGNOSTICS_COLUMNS}


def _check_2d(params):
    if params.dim != 2:
        raise ValueError('time integration is implemented for dim 2 only, got %d' % params.dim)


def _rotation_term(u, params):
    ux, uy = gradient(u)
    ax, ay = np.moveaxis(params.rotation.field(u.mesh_map.points()), -1, 0)
    return ux, uy, ax * ux.values + ay * uy.values


def rhs(u, params):
    '''
    ``u_t = i (kappa lap u - V u + mu |u|^(p-1) u) + (Mx).grad u`` with the
    Dirichlet boundary held at zero.
    '''
    _check_2d(params)
    u.check_finite()
    mesh = u.mesh_map
    values = u.values
    inner = params.kappa * laplacian(u).values - params.potential(mesh.x, mesh.y) * values
    if params.mu:
        inner += params.mu * np.abs(values) ** (params.p - 1) * values
    out = 1j * inner
    if not params.rotation.is_trivial:
        out += _rotation_term(u, params)[2]
    out[0, :] = out[-1, :] = 0
    out[:, 0] = out[:, -1] = 0
    return u.with_values(out)


def step_rk4(state, dt, params):
    if not dt > 0:
        raise ValueError('time step must be positive, got %r' % dt)
    u = state.field
    k1 = rhs(u, params).values
    k2 = rhs(u.with_values(u.values + 0.5 * dt * k1), params).values
    k3 = rhs(u.with_values(u.values + 0.5 * dt * k2), params).values
    k4 = rhs(u.with_values(u.values + dt * k3), params).values
    values = u.values + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    new = u.with_values(values).check_finite()
    return SimState(new, state.t + dt, state.step + 1, dt)


def default_dt0(mesh, kappa, cfl=None):
    cfl = settings.CFL if cfl is None else cfl
    return min(1.0, cfl * mesh.min_spacing() ** 2 / kappa)


def adaptive_dt(u, params, dt0=1.0, limit=None):
    '''
    ``dt0 / ||u||_inf^(p-1)``, capped by ``limit`` when one is given.  Linear
    runs (``mu = 0``) and zero fields use ``dt0`` unscaled.
    '''
    top = u.sup()
    dt = dt0
    if params.mu and top > 0:
        dt = dt0 / top ** (params.p - 1)
    if limit is not None:
        dt = min(dt, limit)
    return dt


def diagnostics(state, params, remesh=False, remesh_delta=0.0):
    _check_2d(params)
    u = state.field
    mesh = u.mesh_map
    values = u.values
    density = np.abs(values) ** 2
    ux, uy = gradient(u)
    grad2 = float(integrate(np.abs(ux.values) ** 2 + np.abs(uy.values) ** 2, mesh))
    mass = float(integrate(density, mesh))
    potential = float(integrate(params.potential(mesh.x, mesh.y) * density, mesh))
    nonlinear = float(integrate(np.abs(values) ** (params.p + 1), mesh))
    ell, ell_imag = 0.0, 0.0
    if not params.rotation.is_trivial:
        ax, ay = np.moveaxis(params.rotation.field(mesh.points()), -1, 0)
        momentum = 1j * integrate(np.conj(values) * (ax * ux.values + ay * uy.values), mesh)
        ell, ell_imag = float(momentum.real), float(momentum.imag)
        if abs(ell_imag) > params.tolerances.ell_imag * max(abs(ell), mass):
            logger.warning('angular momentum has imaginary part %.3e at t=%.6g', ell_imag, state.t)
    E0 = params.kappa * grad2 - 2.0 * params.mu / (params.p + 1) * nonlinear
    J = float(integrate((mesh.x ** 2 + mesh.y ** 2) * density, mesh))
    stretch = np.conj(values) * (mesh.x * ux.values + mesh.y * uy.values)
    Jprime = 4.0 * params.kappa * float(integrate(stretch, mesh).imag)
    gradl2 = math.sqrt(grad2)
    dE0_rhs = math.nan if params.anisotropic else -params.potential_coefficient * Jprime
    return DiagnosticsRow(
        t=state.t,
        dt=state.dt,
        mass=mass,
        energy=E0 + potential + ell,
        E0=E0,
        ellOmega=ell,
        J=J,
        Jprime=Jprime,
        umax=u.sup(),
        gradl2=gradl2,
        L=1.0 / gradl2 if gradl2 > 0 else math.inf,
        remesh=remesh,
        nonlinear=nonlinear,
        dE0_rhs=dE0_rhs,
        remesh_delta=remesh_delta,
        ell_imag=ell_imag,
    )


@dataclass
class IdentityReport:
    times: np.ndarray
    measured: np.ndarray
    predicted: np.ndarray
    residual: float
    tolerance: float

    @property
    def ok(self):
        return self.residual < self.tolerance


def _series(rows, params):
    if params.anisotropic:
        raise DomainError('the virial identities assume an isotropic potential')
    if len(rows) < 5:
        raise WindowTooShort('need at least 5 diagnostics rows, got %d' % len(rows))
    t = np.array([r.t for r in rows])
    if np.any(np.diff(t) <= 0):
        raise WindowTooShort('diagnostics times must be strictly increasing')
    return t


def check_virial(rows, params, tol=None):
    '''
    Compares ``J''`` (differenced from the logged ``J'``) with
    ``8 kappa (E - ell) - 16 kappa c J + 4 kappa mu (4 - n(p-1))/(p+1) int |u|^(p+1)``
    where ``c = sgn(gamma) gamma^2``.
    '''
    t = _series(rows, params)
    tol = params.tolerances.virial if tol is None else tol
    kappa, mu, p, n = params.kappa, params.mu, params.p, params.dim
    c = params.potential_coefficient
    Jpp = np.gradient(np.array([r.Jprime for r in rows]), t, edge_order=2)
    predicted = np.array(
        [
            8 * kappa * (r.energy - r.ellOmega)
            - 16 * kappa * c * r.J
            + 4 * kappa * mu * (4 - n * (p - 1)) / (p + 1) * r.nonlinear
            for r in rows
        ]
    )
    inner = slice(1, -1)
    scale = max(float(np.max(np.abs(Jpp[inner]))), 1.0)
    residual = float(np.max(np.abs(Jpp[inner] - predicted[inner]))) / scale
    return IdentityReport(t[inner], Jpp[inner], predicted[inner], residual, tol)


def check_dE0(rows, params, tol=None):
    """``dE0/dt`` differenced from the log against ``-sgn(gamma) gamma^2 J'``."""
    t = _series(rows, params)
    tol = params.tolerances.dE0 if tol is None else tol
    measured = np.gradient(np.array([r.E0 for r in rows]), t, edge_order=2)
    predicted = np.array([r.dE0_rhs for r in rows])
    inner = slice(1, -1)
    scale = max(float(np.max(np.abs(predicted[inner]))), 1.0)
    residual = float(np.max(np.abs(measured[inner] - predicted[inner]))) / scale
    return IdentityReport(t[inner], measured[inner], predicted[inner], residual, tol)


@dataclass
class StopCriteria:
    cap: float = None
    t_end: float = math.inf
    max_steps: Optional[int] = None

    def __post_init__(self):
        if self.cap is None:
            self.cap = settings.BLOWUP_CAP


@dataclass
class RemeshSettings:
    enabled: bool = True
    C: float = None
    iters: int = None
    relax: float = None
    growth: float = None
    smoothing: int = None
    interval: int = 20

    def __post_init__(self):
        self.C = settings.SHAPE_C if self.C is None else self.C
        self.iters = settings.REMESH_ITERS if self.iters is None else self.iters
        self.relax = settings.REMESH_RELAX if self.relax is None else self.relax
        self.growth = settings.REMESH_GROWTH if self.growth is None else self.growth
        if self.smoothing is None:
            self.smoothing = settings.MONITOR_SMOOTHING


@dataclass
class RunResult:
    rows: List[DiagnosticsRow]
    state: SimState
    termination: str
    snapshots: list = field(default_factory=list)
    remesh_count: int = 0

    @property
    def t_end(self):
        return self.state.t


class _Remesher:
    def __init__(self, config, start_sup, mass_tol=None):
        self.config = config
        self.mass_tol = mass_tol
        self.reference = start_sup
        self.since = config.interval
        self.count = 0

    def due(self, u):
        if not self.config.enabled:
            return False
        if u.sup() >= self.config.growth * self.reference:
            return True
        return self.since >= self.config.interval and not shape_ok(u, C=self.config.C)

    def __call__(self, state):
        signals.pre_remesh.send(sender=SimState, state=state)
        outcome = adapt(
            state.field,
            iters=self.config.iters,
            relax=self.config.relax,
            smoothing=self.config.smoothing,
            mass_tol=self.mass_tol,
        )
        state = replace(state, field=outcome.field)
        self.reference = state.field.sup()
        self.since = 0
        if outcome.accepted:
            self.count += 1
            logger.info(
                'remesh %d at t=%.8g (|u|max %.4g, mass delta %.2e)',
                self.count,
                state.t,
                self.reference,
                outcome.mass_delta,
            )
        signals.post_remesh.send(sender=SimState, state=state, mass_delta=outcome.mass_delta)
        return state, outcome


def _send(backends, **kwargs):
    for backend in backends:
        backend.send(**kwargs)


def run(
    params,
    u0,
    stop=None,
    dt0=None,
    remesh=None,
    backends=(),
    snap_every=0,
    cfl=None,
):
    '''
    Integrates from ``u0`` until the amplitude cap, ``t_end``, ``max_steps``
    or a non-finite field.  Backends receive ``kind='row'``, ``'snapshot'``
    and ``'finish'`` events; ``finish`` is sent on every exit path.
    '''
    _check_2d(params)
    stop = stop if stop is not None else StopCriteria()
    remesh = remesh if remesh is not None else RemeshSettings()
    cfl = settings.CFL if cfl is None else cfl
    u0.check_finite()
    if params.anisotropic:
        logger.warning('anisotropic potential %r: no stability guarantees', params.anisotropic)
    state = SimState(u0)
    dt0 = dt0 if dt0 is not None else default_dt0(state.mesh, params.kappa, cfl)
    remesher = _Remesher(remesh, u0.sup(), params.tolerances.remesh_mass)
    rows, snapshots = [], []
    termination = TERMINATION_ERROR

    def record(row):
        rows.append(row)
        signals.step_completed.send(sender=SimState, state=state, row=row)
        _send(backends, kind='row', row=row)
        if snap_every and state.step % snap_every == 0:
            snapshot(state)

    def snapshot(at):
        snapshots.append((at.t, at.field))
        _send(backends, kind='snapshot', state=at, params=params)

    logger.info('run started: dt0=%.3e, |u0|max=%.4g, cap=%.3g', dt0, u0.sup(), stop.cap)
    signals.run_started.send(sender=SimState, params=params, state=state)
    try:
        record(diagnostics(state, params))
        while True:
            if state.field.sup() >= stop.cap:
                termination = TERMINATION_CAP
                break
            if state.t >= stop.t_end:
                termination = TERMINATION_T_END
                break
            if stop.max_steps is not None and state.step >= stop.max_steps:
                termination = TERMINATION_MAX_STEPS
                break
            flagged, delta = False, 0.0
            if remesher.due(state.field):
                state, outcome = remesher(state)
                if not outcome.accepted:
                    logger.error(
                        'no acceptable mesh at t=%.10g (last mass delta %.3e); stopping',
                        state.t,
                        outcome.mass_delta,
                    )
                    termination = TERMINATION_REMESH_FAILED
                    break
                flagged, delta = True, outcome.mass_delta
            limit = cfl * state.mesh.min_spacing() ** 2 / params.kappa
            dt = adaptive_dt(state.field, params, dt0, limit)
            last = math.isfinite(stop.t_end) and stop.t_end - state.t <= dt * (1 + 1e-9)
            if last:
                dt = stop.t_end - state.t
            try:
                state = step_rk4(state, dt, params)
            except NonFiniteField as exc:
                logger.warning('stopping at t=%.10g: %s', state.t, exc)
                termination = TERMINATION_NONFINITE
                break
            if last:
                state = replace(state, t=stop.t_end)
            remesher.since += 1
            record(diagnostics(state, params, remesh=flagged, remesh_delta=delta))
            logger.debug('step %d t=%.10g dt=%.3e |u|max=%.4g', state.step, state.t, dt, rows[-1].umax)
    finally:
        logger.info(
            'run finished (%s) at t=%.10g after %d steps', termination, state.t, state.step
        )
        if snap_every and (not snapshots or snapshots[-1][0] != state.t):
            snapshot(state)
        signals.run_finished.send(sender=SimState, state=state, termination=termination)
        _send(backends, kind='finish', state=state, termination=termination)
    return RunResult(rows, state, termination, snapshots, remesher.count)
