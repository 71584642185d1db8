"""
``rnls`` command line.

Human-readable messages go to stderr; ``--json`` puts a machine report on
stdout.  Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""
import argparse
import datetime
import glob
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, signals
from .analysis import fit_rate, reconstruct_T, snapshot_report
from .backends import (
    DiagnosticsCSVBackend,
    JSONLinesBackend,
    SnapshotBackend,
    read_diagnostics,
    write_manifest,
)
from .conf import settings
from .config import RunManifest, build_initial_field, dump_config, load_config
from .constants import (
    BLOWUP_TERMINATIONS,
    EXIT_FAILURE,
    EXIT_OK,
    EXIT_USAGE,
    TERMINATION_CAP,
    TERMINATION_ERROR,
    TERMINATION_NONFINITE,
)
from .evolution import run
from .exceptions import RNLSError, RunDidNotBlowUp, SchemaError
from .field import ComplexField
from .grid import Grid2D
from .ground_state import check_gn, free_energy, gn_constant, solve_ground_state
from .params import SimParams
from .register import RegistrationError
from .snapshot import read_snapshot
from .transforms import (
    apply_R,
    check_dispersive,
    eval_minimal_mass,
    map_lifespan,
    norm_relations,
    pde_residual,
)

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 100


def _emit(args, payload, lines):
    if args.json:
        sys.stdout.write(json.dumps(payload, sort_keys=True) + '\n')
    else:
        for line in lines:
            sys.stdout.write(line + '\n')


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _log_progress(sender, state, row, **kwargs):
    if state.step % PROGRESS_EVERY == 0:
        logger.info('step %d t=%.10g |u|max=%.6g mass=%.12g', state.step, row.t, row.umax, row.mass)


def cmd_run(args):
    config = load_config(args.config)
    if args.snap_every is not None:
        config.snap_every = args.snap_every
    if args.remesh_c is not None:
        config.remesh.C = args.remesh_c
    if args.remesh_iters is not None:
        config.remesh.iters = args.remesh_iters
    if args.no_remesh:
        config.remesh.enabled = False
    out = args.out or os.path.join(config.base_dir, config.output_dir)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, 'config.toml'), 'w') as fh:
        fh.write(dump_config(config))

    manifest = RunManifest(config_hash=config.config_hash, version=__version__, started=_now())
    backends = [DiagnosticsCSVBackend(os.path.join(out, 'diagnostics.csv'))]
    if config.snap_every:
        backends.append(SnapshotBackend(os.path.join(out, 'snapshots')))
    signals.step_completed.connect(_log_progress, dispatch_uid='rnls-cli-progress')
    try:
        u0 = build_initial_field(config)
        result = run(
            config.params,
            u0,
            stop=config.stop,
            dt0=config.dt0,
            remesh=config.remesh,
            backends=backends,
            snap_every=config.snap_every,
            cfl=config.cfl,
        )
        manifest.termination = result.termination
        manifest.steps = result.state.step
        manifest.final_umax = result.state.field.sup()
        manifest.remesh_count = result.remesh_count
        if result.termination in BLOWUP_TERMINATIONS:
            manifest.T_est = result.t_end
    except Exception as exc:
        manifest.error = '%s: %s' % (type(exc).__name__, exc)
        raise
    finally:
        for backend in backends:
            backend.close()
        signals.step_completed.disconnect(dispatch_uid='rnls-cli-progress')
        manifest.finished = _now()
        write_manifest(os.path.join(out, 'manifest.json'), manifest.as_dict())

    lines = [
        'termination: %s' % manifest.termination,
        'steps: %d' % manifest.steps,
        'final |u|max: %.6g' % manifest.final_umax,
    ]
    if manifest.T_est is not None:
        lines.append('T_est: %.10g' % manifest.T_est)
    _emit(args, manifest.as_dict(), lines)
    return EXIT_OK


def cmd_ground_state(args):
    p = args.p if args.p is not None else 1.0 + 4.0 / args.dim
    profile = solve_ground_state(args.dim, p, tol=args.tol)
    if args.kappa != 1.0:
        profile = profile.for_kinetic(args.kappa)
    payload = {
        'dim': args.dim,
        'p': p,
        'kappa': args.kappa,
        'qmax': profile.qmax,
        'mass': profile.mass,
        'grad': profile.grad,
        'r_max': profile.r_max,
    }
    if profile.mass_critical and args.kappa == 1.0:
        payload['energy'] = free_energy(profile)
        payload['gn_constant'] = gn_constant(args.dim, profile)
        payload['gn_slack'] = check_gn(profile, relative=True)
    _emit(args, payload, ['%s: %s' % (key, payload[key]) for key in sorted(payload)])
    return EXIT_OK


def cmd_lifespan(args):
    verdict = map_lifespan(args.T, args.gamma)
    payload = {'kind': verdict.kind, 'tstar': verdict.tstar, 'direction': verdict.direction}
    line = '%s (%s)' % (verdict.kind, verdict.direction)
    if verdict.finite:
        line += ' T* = %.12g' % verdict.tstar
    _emit(args, payload, [line])
    return EXIT_OK


def _ladder(finest):
    sizes = [64]
    while sizes[-1] * 2 <= finest:
        sizes.append(sizes[-1] * 2)
    return tuple(sizes)


def cmd_transform_check(args):
    '''
    Residual order of the transformed solution, the norm relations between
    it and its source, and the dispersive sweep of a Gaussian.  Without
    ``--T`` the source is the soliton ``e^{it}Q``; with it, the minimal-mass
    solution blowing up at ``T``.
    '''
    profile = solve_ground_state(2)
    params = SimParams(gamma=args.gamma, omega=(args.omega,), kappa=1.0, p=3.0)
    rot = params.rotation
    lifespan = np.inf if args.T is None else args.T
    verdict = map_lifespan(lifespan, args.gamma)
    if verdict.finite and not args.t < verdict.tstar:
        raise SchemaError([('--t', 'must precede the lifespan %.10g' % verdict.tstar)])

    if args.T is None:

        def source(tau, y):
            return np.exp(1j * tau) * profile(np.sqrt(np.sum(y ** 2, axis=-1)))

    else:

        def source(tau, y):
            return eval_minimal_mass(tau, y, profile, args.T)

    def evolved(t, points):
        return apply_R(source, t, points, args.gamma, rot, lifespan=lifespan)

    finest = 128 if args.quick else args.grid
    sizes = _ladder(finest)
    residuals = [pde_residual(evolved, args.t, params, Grid2D(n, n, 8.0)) for n in sizes]
    orders = [float(np.log2(a / b)) for a, b in zip(residuals, residuals[1:])]
    order_ok = orders[-1] >= (3.0 if args.quick else 3.5)

    relation_grid = Grid2D(finest, finest, 8.0)
    relations = []
    for t in (0.5 * args.t, args.t):
        image, base, image_x, base_x = norm_relations(source, t, args.gamma, relation_grid, rot)
        relations.append(max(abs(image - base) / base, abs(image_x - base_x) / base_x))
    relations_ok = max(relations) < 1e-6

    grid = Grid2D(320, 320, 7.0)

    def gaussian(x, y):
        return np.exp(-(x ** 2 + y ** 2) / 2)

    f = ComplexField.from_function(grid, gaussian)
    times = np.linspace(0.05, 1.2, 24) if args.gamma else np.linspace(0.05, 0.6, 12)
    report = check_dispersive(
        f, args.gamma, times, rot, phase_per_cell=params.tolerances.phase_per_cell, sample=gaussian
    )
    dispersive_ok = report.ok and report.l2_error < 1e-6

    passed = order_ok and relations_ok and dispersive_ok
    payload = {
        'T': args.T,
        't': args.t,
        'sizes': list(sizes),
        'residuals': residuals,
        'orders': orders,
        'norm_relations': relations,
        'dispersive_ok': report.ok,
        'l2_error': report.l2_error,
        'passed': passed,
    }

    def mark(ok):
        return 'ok  ' if ok else 'FAIL'

    lines = ['n=%d residual %.3e' % pair for pair in zip(sizes, residuals)]
    lines += [
        '%s residual order: %s' % (mark(order_ok), ', '.join('%.2f' % o for o in orders)),
        '%s norm relations: worst rel. difference %.2e' % (mark(relations_ok), max(relations)),
        '%s dispersive bounds, L2 drift %.2e' % (mark(dispersive_ok), report.l2_error),
    ]
    _emit(args, payload, lines)
    return EXIT_OK if passed else EXIT_FAILURE


def _termination(diagnostics, rows):
    '''
    How the run behind a diagnostics CSV ended: ``manifest.json`` next to
    it when present, otherwise the last ``umax`` against the cap of the
    ``config.toml`` beside it (RNLS_BLOWUP_CAP without one).
    '''
    directory = os.path.dirname(os.path.abspath(diagnostics))
    manifest = os.path.join(directory, 'manifest.json')
    if os.path.isfile(manifest):
        with open(manifest) as fh:
            return json.load(fh).get('termination', TERMINATION_ERROR)
    cap = settings.BLOWUP_CAP
    recipe = os.path.join(directory, 'config.toml')
    if os.path.isfile(recipe):
        cap = load_config(recipe).stop.cap
    last = rows[-1]['umax'] if rows else 0.0
    if not np.isfinite(last):
        return TERMINATION_NONFINITE
    if last >= cap:
        return TERMINATION_CAP
    raise RunDidNotBlowUp(
        'no manifest next to %s and the last |u|max %.4g is below the cap %.4g' % (diagnostics, last, cap)
    )


def cmd_fit_rate(args):
    rows = read_diagnostics(args.diagnostics)
    termination = _termination(args.diagnostics, rows)
    T, tau = reconstruct_T(rows, termination)
    fit = fit_rate([row['L'] for row in rows], tau, T_est=T, window=args.window)
    payload = fit.as_dict()
    payload['termination'] = termination
    lines = [
        'slope: %.6f +- %.2e' % (fit.slope, fit.stderr),
        'intercept: %.6f' % fit.intercept,
        'residual: %.3e' % fit.residual,
        'window: [%.3e, %.3e] (%d points)' % (fit.window + (fit.points,)),
        'T_est: %.10g' % T,
    ]
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_analyze(args):
    paths = sorted(glob.glob(os.path.join(args.snapshots, '*.bin')))
    if not paths:
        raise SchemaError([('snapshots', 'no snapshot files in %r' % args.snapshots)])
    parent = os.path.dirname(os.path.abspath(args.snapshots))
    diag = args.diagnostics or os.path.join(parent, 'diagnostics.csv')
    T, _ = reconstruct_T(read_diagnostics(diag))
    profile = solve_ground_state(2)

    def analyze_one(path):
        snap = read_snapshot(path)
        record = snapshot_report(
            snap.field,
            snap.t,
            T,
            T - snap.t,
            profile.for_kinetic(snap.kappa).grad,
            profile,
            snap.kappa,
            args.delta,
        )
        record['path'] = os.path.basename(path)
        return record

    sink = JSONLinesBackend(sys.stdout)
    with ThreadPoolExecutor(max_workers=settings.threads(args.threads)) as pool:
        for record in pool.map(analyze_one, paths):
            sink.send(record=record)
    return EXIT_OK


def cmd_verify(args):
    from . import checks, verification  # noqa: F401  (registers the built-in suites)

    if args.suite:
        suites = [verification.get_suite(name) for name in args.suite]
    else:
        suites = verification.suites(quick=args.quick)
    report, failed = {}, 0
    lines = []
    with ThreadPoolExecutor(max_workers=settings.threads(args.threads)) as pool:
        outcomes = list(pool.map(lambda suite: suite.run(quick=args.quick), suites))
    for suite, results in zip(suites, outcomes):
        report[suite.name] = [r._asdict() for r in results]
        for r in results:
            failed += not r.passed
            lines.append('%-4s %s: %s %s' % ('ok' if r.passed else 'FAIL', suite.name, r.label, r.detail))
    _emit(args, {'suites': report, 'failed': failed}, lines)
    return EXIT_OK if not failed else EXIT_FAILURE


def _positive(value):
    number = float(value)
    if not number > 0:
        raise argparse.ArgumentTypeError('must be positive, got %r' % value)
    return number


def _grid_size(value):
    number = int(value)
    if number < 128 or number % 2:
        raise argparse.ArgumentTypeError('must be an even number >= 128, got %r' % value)
    return number


def _window(value):
    lo, hi = (float(v) for v in value)
    if not 0 < lo < hi:
        raise argparse.ArgumentTypeError('window needs 0 < a < b')
    return lo, hi


def get_parser():
    parser = argparse.ArgumentParser(prog='rnls', description='Rotational NLS simulator and verification kit')
    parser.add_argument('--version', action='version', version=__version__)
    parser.add_argument('-v', '--verbose', action='store_true', help='debug logging')
    parser.add_argument('-q', '--quiet', action='store_true', help='warnings only')
    parser.add_argument('--json', action='store_true', help='machine-readable report on stdout')
    parser.add_argument('--threads', type=int, default=None, help='worker threads (default RNLS_THREADS)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('run', help='integrate a TOML recipe')
    p.add_argument('config')
    p.add_argument('--out', default=None, help='output directory (default from the recipe)')
    p.add_argument('--snap-every', type=int, default=None)
    p.add_argument('--remesh-c', type=float, default=None)
    p.add_argument('--remesh-iters', type=int, default=None)
    p.add_argument('--no-remesh', action='store_true')
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('ground-state', help='solve for the ground state Q')
    p.add_argument('--dim', type=int, default=2)
    p.add_argument('--p', type=float, default=None)
    p.add_argument('--kappa', type=float, default=1.0)
    p.add_argument('--tol', type=float, default=1e-8)
    p.set_defaults(func=cmd_ground_state)

    p = sub.add_parser('lifespan', help='lifespan of a transformed solution')
    p.add_argument('--T', type=_positive, required=True, help='lifespan of the free solution')
    p.add_argument('--gamma', type=float, required=True)
    p.set_defaults(func=cmd_lifespan)

    p = sub.add_parser(
        'transform-check', help='transform residual orders, norm relations and dispersive bounds'
    )
    p.add_argument('--gamma', type=float, default=-1.0)
    p.add_argument('--omega', type=float, default=1.0)
    p.add_argument(
        '--T', type=_positive, default=None, help='check the minimal-mass solution blowing up at T'
    )
    p.add_argument('--grid', type=_grid_size, default=512, help='finest grid of the residual ladder')
    p.add_argument('--t', type=_positive, default=0.1)
    p.add_argument('--quick', action='store_true')
    p.set_defaults(func=cmd_transform_check)

    p = sub.add_parser('fit-rate', help='fit L ~ (T - t)^slope from a diagnostics CSV')
    p.add_argument('diagnostics')
    p.add_argument('--window', nargs=2, default=None, metavar=('A', 'B'))
    p.set_defaults(func=cmd_fit_rate)

    p = sub.add_parser('analyze', help='profile and concentration report per snapshot')
    p.add_argument('snapshots')
    p.add_argument('--delta', type=float, default=settings.DELTA)
    p.add_argument('--diagnostics', default=None, help='diagnostics CSV (default next to the snapshots)')
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser('verify', help='run the verification suites')
    p.add_argument('--quick', action='store_true')
    p.add_argument('--suite', action='append', default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = get_parser()
    args = parser.parse_args(argv)
    if getattr(args, 'window', None) is not None:
        try:
            args.window = _window(args.window)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            parser.error(str(exc))
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except SchemaError as exc:
        sys.stderr.write('%s\n' % exc)
        return EXIT_USAGE
    except RegistrationError as exc:
        sys.stderr.write('error: %s\n' % exc)
        return EXIT_USAGE
    except RNLSError as exc:
        sys.stderr.write('error: %s\n' % exc)
        return EXIT_FAILURE
    except OSError as exc:
        sys.stderr.write('error: %s\n' % exc)
        return EXIT_USAGE


if __name__ == '__main__':
    sys.exit(main())
