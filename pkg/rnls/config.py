"""
TOML run recipes.

A recipe has the flat sections ``[physics]``, ``[grid]``, ``[initial]``,
``[time]``, ``[remesh]``, ``[output]`` and ``[tolerances]``; every key is
optional except ``initial.kind``.  ``parse_config`` reports every problem at once.
"""
import hashlib
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Optional, Tuple

import numpy as np
import tomli_w

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .constants import TERMINATION_ERROR
from .exceptions import SchemaError
from .evolution import RemeshSettings, StopCriteria
from .field import ComplexField
from .ground_state import solve_ground_state
from .params import SimParams, Tolerances
from .snapshot import read_snapshot

KIND_GAUSSIAN = 'gaussian'
KIND_GROUND_STATE = 'ground-state-rescaled'
KIND_FILE = 'file'
INITIAL_KINDS = (KIND_GAUSSIAN, KIND_GROUND_STATE, KIND_FILE)

_REAL = (int, float)

# section -> key -> (type(s), default)
SCHEMA = {
    'physics': {
        'p': (_REAL, 3.0),
        'gamma': (_REAL, 0.0),
        'omega': (list, [0.0]),
        'kappa': (_REAL, 1.0),
        'mu': (_REAL, 1.0),
        'anisotropic': (list, None),
    },
    'grid': {
        'nx': (int, 128),
        'ny': (int, 128),
        'half_width': (_REAL, 10.0),
    },
    'initial': {
        'kind': (str, None),
        'amplitude': (_REAL, 1.0),
        'ax': (_REAL, 1.0),
        'ay': (_REAL, 1.0),
        'center': (list, [0.0, 0.0]),
        'c': (_REAL, 1.0),
        'lam': (_REAL, 1.0),
        'path': (str, None),
    },
    'time': {
        'dt0': (_REAL, None),
        'cfl': (_REAL, 0.25),
        'cap': (_REAL, 1e6),
        't_end': (_REAL, math.inf),
        'max_steps': (int, None),
    },
    'remesh': {
        'enabled': (bool, True),
        'C': (_REAL, 5.0),
        'iters': (int, 5),
        'relax': (_REAL, 0.5),
        'growth': (_REAL, 2.0),
        'smoothing': (int, 4),
        'interval': (int, 20),
    },
    'output': {
        'directory': (str, 'out'),
        'snap_every': (int, 0),
    },
    'tolerances': {
        'remesh_mass': (_REAL, None),
        'virial': (_REAL, 1e-3),
        'dE0': (_REAL, 1e-3),
        'phase_per_cell': (_REAL, math.pi),
    },
}

# keys of [initial] that belong to each kind
_KIND_KEYS = {
    KIND_GAUSSIAN: ('amplitude', 'ax', 'ay', 'center'),
    KIND_GROUND_STATE: ('c', 'lam', 'center'),
    KIND_FILE: ('path',),
}


@dataclass(frozen=True)
class InitialDataSpec:
    kind: str
    amplitude: float = 1.0
    ax: float = 1.0
    ay: float = 1.0
    center: Tuple[float, float] = (0.0, 0.0)
    c: float = 1.0
    lam: float = 1.0
    path: Optional[str] = None


@dataclass
class RunConfig:
    params: SimParams
    initial: InitialDataSpec
    stop: StopCriteria
    remesh: RemeshSettings
    dt0: Optional[float] = None
    cfl: float = 0.25
    output_dir: str = 'out'
    snap_every: int = 0
    base_dir: str = field(default='.', compare=False)

    @property
    def config_hash(self):
        return hashlib.sha256(dump_config(self).encode('utf-8')).hexdigest()


@dataclass
class RunManifest:
    """Written next to the outputs when a run ends, on error paths too."""

    config_hash: str
    version: str
    started: str
    finished: Optional[str] = None
    termination: str = TERMINATION_ERROR
    T_est: Optional[float] = None
    final_umax: Optional[float] = None
    steps: int = 0
    remesh_count: int = 0
    error: Optional[str] = None

    def as_dict(self):
        return asdict(self)


def _is_type(value, kinds):
    if isinstance(value, bool) and kinds is not bool:
        return False
    return isinstance(value, kinds)


def _checked(document, errors):
    values = {}
    for section in document:
        if section not in SCHEMA:
            errors.append((section, 'unknown section'))
        elif not isinstance(document[section], dict):
            errors.append((section, 'must be a table'))
    for section, keys in SCHEMA.items():
        given = document.get(section, {})
        if not isinstance(given, dict):
            given = {}
        for key in given:
            if key not in keys:
                errors.append(('%s.%s' % (section, key), 'unknown key'))
        for key, (kinds, default) in keys.items():
            path = '%s.%s' % (section, key)
            if key not in given:
                values[path] = default
                continue
            value = given[key]
            if not _is_type(value, kinds):
                errors.append((path, 'wrong type %s' % type(value).__name__))
                values[path] = default
            else:
                values[path] = float(value) if kinds is _REAL else value
    return values


def _numbers(values, path, length, errors):
    seq = values[path]
    if seq is None:
        return None
    if len(seq) != length or not all(_is_type(v, _REAL) for v in seq):
        errors.append((path, 'expected %d number(s)' % length))
        return None
    return tuple(float(v) for v in seq)


def _positive(values, errors, *paths):
    for path in paths:
        value = values[path]
        if value is not None and not value > 0:
            errors.append((path, 'must be positive'))


def parse_config(text, base_dir='.'):
    '''
    Returns a validated RunConfig or raises SchemaError listing every
    problem found.  Relative ``initial.path`` values resolve against
    ``base_dir``.
    '''
    try:
        document = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError([('<document>', str(exc))])
    errors = []
    values = _checked(document, errors)

    kind = values['initial.kind']
    if kind is None:
        errors.append(('initial.kind', 'required, one of %s' % ', '.join(INITIAL_KINDS)))
    elif kind not in INITIAL_KINDS:
        errors.append(('initial.kind', 'unknown kind %r' % kind))
    else:
        given = document.get('initial', {})
        for key in given if isinstance(given, dict) else ():
            if key != 'kind' and key in SCHEMA['initial'] and key not in _KIND_KEYS[kind]:
                errors.append(('initial.%s' % key, 'not used by kind %r' % kind))
    if kind == KIND_FILE:
        path = values['initial.path']
        if path is None:
            errors.append(('initial.path', 'required for kind %r' % KIND_FILE))
        elif not os.path.isfile(os.path.join(base_dir, path)):
            errors.append(('initial.path', 'no such file %r' % path))

    _positive(
        values,
        errors,
        'grid.half_width',
        'initial.amplitude',
        'initial.ax',
        'initial.ay',
        'initial.lam',
        'initial.c',
        'time.dt0',
        'time.cfl',
        'time.cap',
        'time.t_end',
        'time.max_steps',
        'remesh.C',
        'remesh.iters',
        'remesh.relax',
        'remesh.interval',
        'tolerances.remesh_mass',
        'tolerances.virial',
        'tolerances.dE0',
        'tolerances.phase_per_cell',
    )
    if values['remesh.growth'] is not None and not values['remesh.growth'] > 1:
        errors.append(('remesh.growth', 'must exceed 1'))
    if values['remesh.relax'] > 1:
        errors.append(('remesh.relax', 'must not exceed 1'))
    if values['remesh.smoothing'] < 0:
        errors.append(('remesh.smoothing', 'must be non-negative'))
    if values['output.snap_every'] < 0:
        errors.append(('output.snap_every', 'must be non-negative'))
    for path in ('grid.nx', 'grid.ny'):
        if values[path] < 16 or values[path] % 2:
            errors.append((path, 'must be an even number >= 16'))
    center = _numbers(values, 'initial.center', 2, errors)
    omega = _numbers(values, 'physics.omega', 1, errors)
    anisotropic = _numbers(values, 'physics.anisotropic', 2, errors)

    tolerances = {
        key: values['tolerances.%s' % key]
        for key in SCHEMA['tolerances']
        if values['tolerances.%s' % key] is not None
    }
    params = None
    if not errors:
        try:
            params = SimParams(
                dim=2,
                p=values['physics.p'],
                gamma=values['physics.gamma'],
                omega=omega,
                kappa=values['physics.kappa'],
                mu=values['physics.mu'],
                half_width=values['grid.half_width'],
                nx=values['grid.nx'],
                ny=values['grid.ny'],
                anisotropic=anisotropic,
                tolerances=Tolerances(**tolerances),
            )
        except ValueError as exc:
            errors.append(('physics', str(exc)))
    if errors:
        raise SchemaError(errors)

    initial = InitialDataSpec(
        kind=kind,
        amplitude=values['initial.amplitude'],
        ax=values['initial.ax'],
        ay=values['initial.ay'],
        center=center,
        c=values['initial.c'],
        lam=values['initial.lam'],
        path=values['initial.path'],
    )
    return RunConfig(
        params=params,
        initial=initial,
        stop=StopCriteria(
            cap=values['time.cap'],
            t_end=values['time.t_end'],
            max_steps=values['time.max_steps'],
        ),
        remesh=RemeshSettings(
            enabled=values['remesh.enabled'],
            C=values['remesh.C'],
            iters=values['remesh.iters'],
            relax=values['remesh.relax'],
            growth=values['remesh.growth'],
            smoothing=values['remesh.smoothing'],
            interval=values['remesh.interval'],
        ),
        dt0=values['time.dt0'],
        cfl=values['time.cfl'],
        output_dir=values['output.directory'],
        snap_every=values['output.snap_every'],
        base_dir=base_dir,
    )


def load_config(path):
    with open(path, 'rb') as fh:
        text = fh.read().decode('utf-8')
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


def _initial_table(spec):
    table = {'kind': spec.kind}
    for key in _KIND_KEYS[spec.kind]:
        value = getattr(spec, key)
        table[key] = list(value) if isinstance(value, tuple) else value
    return table


def _drop_none(table):
    return {key: value for key, value in table.items() if value is not None}


def dump_config(config):
    """Canonical TOML text of ``config`` with every default spelled out."""
    params = config.params
    document = {
        'physics': _drop_none(
            {
                'p': params.p,
                'gamma': params.gamma,
                'omega': list(params.omega),
                'kappa': params.kappa,
                'mu': float(params.mu),
                'anisotropic': list(params.anisotropic) if params.anisotropic else None,
            }
        ),
        'grid': {'nx': params.nx, 'ny': params.ny, 'half_width': params.half_width},
        'initial': _initial_table(config.initial),
        'time': _drop_none(
            {
                'dt0': config.dt0,
                'cfl': config.cfl,
                'cap': config.stop.cap,
                't_end': config.stop.t_end,
                'max_steps': config.stop.max_steps,
            }
        ),
        'remesh': {
            'enabled': config.remesh.enabled,
            'C': config.remesh.C,
            'iters': config.remesh.iters,
            'relax': config.remesh.relax,
            'growth': config.remesh.growth,
            'smoothing': config.remesh.smoothing,
            'interval': config.remesh.interval,
        },
        'output': {'directory': config.output_dir, 'snap_every': config.snap_every},
        'tolerances': {
            'remesh_mass': params.tolerances.remesh_mass,
            'virial': params.tolerances.virial,
            'dE0': params.tolerances.dE0,
            'phase_per_cell': params.tolerances.phase_per_cell,
        },
    }
    return tomli_w.dumps(document)


def build_initial_field(config):
    '''
    Samples the configured initial data on the identity mesh.  Ground-state
    data use the ground state of ``kappa lap R - R + R^3 = 0``.
    '''
    params = config.params
    grid = params.grid()
    spec = config.initial
    cx, cy = spec.center if spec.center is not None else (0.0, 0.0)
    if spec.kind == KIND_GAUSSIAN:
        return ComplexField.from_function(
            grid,
            lambda x, y: spec.amplitude
            * np.exp(-((spec.ax * (x - cx)) ** 2) - (spec.ay * (y - cy)) ** 2),
        )
    if spec.kind == KIND_GROUND_STATE:
        profile = solve_ground_state(2).for_kinetic(params.kappa)
        lifted = profile.lift(grid, lam=spec.lam, center=(cx, cy))
        return lifted.with_values(spec.c * lifted.values)
    snapshot = read_snapshot(os.path.join(config.base_dir, spec.path))
    if snapshot.field.grid != grid:
        raise SchemaError([('initial.path', 'snapshot grid does not match [grid]')])
    return snapshot.field
