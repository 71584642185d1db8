import math
from unittest import mock

import numpy as np
from django.test.testcases import SimpleTestCase

from rnls import signals
from rnls.constants import (
    TERMINATION_CAP,
    TERMINATION_MAX_STEPS,
    TERMINATION_NONFINITE,
    TERMINATION_REMESH_FAILED,
    TERMINATION_T_END,
)
from rnls.evolution import (
    RemeshSettings,
    SimState,
    StopCriteria,
    adaptive_dt,
    check_dE0,
    check_virial,
    default_dt0,
    diagnostics,
    rhs,
    run,
    step_rk4,
)
from rnls.exceptions import DomainError, NonFiniteField, WindowTooShort
from rnls.field import ComplexField, laplacian
from rnls.grid import MeshMap
from rnls.ground_state import solve_ground_state
from rnls.mesh import RemeshOutcome
from rnls.params import SimParams, Tolerances
from rnls.transforms import apply_R, free_gaussian
from tests.utils import gaussian


class RecordingBackend(object):
    def __init__(self):
        self.events = []

    def send(self, **kwargs):
        self.events.append(kwargs)

    def close(self):
        pass

    def kinds(self):
        return [event['kind'] for event in self.events]


def short_run(params, rows=40, dt=0.004, amplitude=1.0):
    state = SimState(gaussian(params.grid(), amplitude=amplitude))
    out = [diagnostics(state, params)]
    for _ in range(rows):
        state = step_rk4(state, dt, params)
        out.append(diagnostics(state, params))
    return out


class SimParamsTestCase(SimpleTestCase):
    def test_defaults(self):
        params = SimParams()
        self.assertEqual(params.omega, (0.0,))
        self.assertTrue(params.mass_critical)
        self.assertTrue(params.rotation.is_trivial)

    def test_potential(self):
        self.assertEqual(SimParams(gamma=-2.0).potential_coefficient, -4.0)
        params = SimParams(anisotropic=(1.0, -2.0))
        self.assertEqual(params.potential(1.0, 1.0), 1.0 - 4.0)

    def test_validation(self):
        self.assertRaises(ValueError, SimParams, mu=2.0)
        self.assertRaises(ValueError, SimParams, kappa=0.0)
        self.assertRaises(ValueError, SimParams, omega=(1.0, 2.0))
        self.assertRaises(ValueError, SimParams, boundary='periodic')
        self.assertRaises(ValueError, SimParams, dim=3, anisotropic=(1.0, 1.0))


class RightHandSideTestCase(SimpleTestCase):
    def setUp(self):
        self.params = SimParams(half_width=6.0, nx=32, ny=32)
        self.u = gaussian(self.params.grid())

    def test_boundary_held_at_zero(self):
        out = rhs(self.u, SimParams(gamma=1.0, omega=(2.0,), half_width=6.0, nx=32, ny=32)).values
        for edge in (out[0], out[-1], out[:, 0], out[:, -1]):
            self.assertTrue(np.all(edge == 0))

    def test_linear_free_part(self):
        params = SimParams(mu=0.0, half_width=6.0, nx=32, ny=32)
        out = rhs(self.u, params).values
        expected = 1j * laplacian(self.u).values
        np.testing.assert_allclose(out[1:-1, 1:-1], expected[1:-1, 1:-1], atol=1e-14)

    def test_rotation_vanishes_on_radial_data(self):
        params = SimParams(half_width=8.0)
        u = gaussian(params.grid())
        plain = rhs(u, params).values
        rotating = rhs(u, SimParams(omega=(3.0,), half_width=8.0)).values
        self.assertLess(np.max(np.abs(plain - rotating)), 5e-3)

    def test_only_two_dimensions(self):
        self.assertRaises(ValueError, rhs, self.u, SimParams(dim=3, omega=(0.0,)))

    def test_rejects_non_finite_input(self):
        values = self.u.values.copy()
        values[5, 5] = np.nan
        self.assertRaises(NonFiniteField, rhs, self.u.with_values(values), self.params)


class SolitonTestCase(SimpleTestCase):
    def test_right_hand_side_of_the_soliton_is_a_phase_rotation(self):
        profile = solve_ground_state(2)
        errors = []
        for n in (128, 256):
            params = SimParams(half_width=8.0, nx=n, ny=n)
            u = profile.lift(params.grid())
            out = rhs(u, params).values
            mesh = u.mesh_map
            interior = (np.abs(mesh.x) < 6.0) & (np.abs(mesh.y) < 6.0)
            errors.append(float(np.max(np.abs(out - 1j * u.values)[interior])))
        self.assertLess(errors[1], errors[0] / 10)
        self.assertLess(errors[1], 1e-3)


class TemporalOrderTestCase(SimpleTestCase):
    def evolve(self, params, u0, t, steps):
        state = SimState(u0)
        for _ in range(steps):
            state = step_rk4(state, t / steps, params)
        return state.field.values

    def test_fourth_order_on_the_harmonic_problem(self):
        params = SimParams(gamma=-1.0, mu=0.0, half_width=6.0, nx=48, ny=48)
        u0 = gaussian(params.grid())
        coarse, medium, fine = (self.evolve(params, u0, 0.1, steps) for steps in (10, 20, 40))
        order = np.log2(np.max(np.abs(coarse - medium)) / np.max(np.abs(medium - fine)))
        self.assertGreater(order, 3.6)

    def test_free_linear_gaussian(self):
        params = SimParams(mu=0.0, half_width=8.0, nx=96, ny=96)
        u0 = gaussian(params.grid())
        values = self.evolve(params, u0, 0.2, 40)
        exact = free_gaussian(0.2, u0.mesh_map.points())
        self.assertLess(np.max(np.abs(values - exact)), 1e-3)

    def test_harmonic_gaussian_matches_the_transformed_free_solution(self):
        params = SimParams(gamma=-1.0, mu=0.0, half_width=8.0, nx=96, ny=96)
        u0 = gaussian(params.grid())
        points = u0.mesh_map.points()
        exact = apply_R(free_gaussian, 0.2, points, params.gamma, params.rotation)
        values = self.evolve(params, u0, 0.2, 40)
        self.assertLess(np.max(np.abs(values - exact)), 1e-3)


class StepTestCase(SimpleTestCase):
    def setUp(self):
        self.params = SimParams(mu=0.0, half_width=6.0, nx=32, ny=32)
        self.state = SimState(gaussian(self.params.grid()))

    def test_positive_step(self):
        self.assertRaises(ValueError, step_rk4, self.state, 0.0, self.params)

    def test_step_advances_time(self):
        new = step_rk4(self.state, 0.01, self.params)
        self.assertEqual((new.t, new.step, new.dt), (0.01, 1, 0.01))
        self.assertIsNot(new.field, self.state.field)

    def test_linear_mass_drift(self):
        dt = default_dt0(self.state.mesh, self.params.kappa)
        state = self.state
        mass0 = diagnostics(state, self.params).mass
        for _ in range(10):
            state = step_rk4(state, dt, self.params)
        self.assertLess(abs(diagnostics(state, self.params).mass - mass0) / mass0, 1e-6)


class TimeStepTestCase(SimpleTestCase):
    def setUp(self):
        self.params = SimParams(half_width=6.0, nx=32, ny=32)
        self.u = gaussian(self.params.grid(), amplitude=4.0)

    def test_scales_with_amplitude(self):
        self.assertAlmostEqual(adaptive_dt(self.u, self.params, 1.0), 1.0 / self.u.sup() ** 2)

    def test_limit(self):
        self.assertEqual(adaptive_dt(self.u, self.params, 1.0, limit=1e-5), 1e-5)

    def test_linear_runs_use_dt0(self):
        self.assertEqual(adaptive_dt(self.u, SimParams(mu=0.0), 0.3), 0.3)

    def test_default_dt0(self):
        mesh = MeshMap.identity(self.params.grid())
        expected = 0.25 * mesh.min_spacing() ** 2 / 0.5
        self.assertAlmostEqual(default_dt0(mesh, 0.5, 0.25), expected)
        self.assertLessEqual(default_dt0(MeshMap.identity(SimParams(half_width=1e3).grid()), 1.0), 1.0)


class DiagnosticsTestCase(SimpleTestCase):
    def setUp(self):
        self.params = SimParams(gamma=-1.0, half_width=8.0)
        self.state = SimState(gaussian(self.params.grid()))

    def test_gaussian_values(self):
        row = diagnostics(self.state, self.params)
        self.assertAlmostEqual(row.mass, np.pi, places=8)
        self.assertAlmostEqual(row.J, np.pi, places=8)
        self.assertAlmostEqual(row.Jprime, 0.0, places=10)
        self.assertAlmostEqual(row.E0, np.pi - np.pi / 4, delta=1e-3)
        self.assertAlmostEqual(row.energy, row.E0 - np.pi, places=8)
        self.assertAlmostEqual(row.L, 1 / row.gradl2)
        self.assertEqual(row.ellOmega, 0.0)
        self.assertFalse(row.remesh)
        self.assertAlmostEqual(row.dE0_rhs, 0.0, places=10)

    def test_record_has_csv_columns(self):
        record = diagnostics(self.state, self.params).as_record()
        self.assertEqual(
            list(record),
            ['t', 'dt', 'mass', 'energy', 'E0', 'ellOmega', 'J', 'Jprime', 'umax', 'gradl2', 'L', 'remesh'],
        )

    def test_angular_momentum_of_a_vortex(self):
        params = SimParams(omega=(1.0,), half_width=8.0)
        grid = params.grid()
        u = ComplexField.from_function(grid, lambda x, y: (x + 1j * y) * np.exp(-(x ** 2 + y ** 2) / 2))
        row = diagnostics(SimState(u), params)
        mass = row.mass
        # i<u, (Mx).grad u> = -Omega * mass for the m = 1 vortex
        self.assertAlmostEqual(row.ellOmega / mass, -1.0, delta=1e-3)
        self.assertLess(abs(row.ell_imag), 1e-8 * mass)

    def test_anisotropic_has_no_dE0_prediction(self):
        params = SimParams(anisotropic=(1.0, 2.0), half_width=8.0)
        self.assertTrue(math.isnan(diagnostics(self.state, params).dE0_rhs))


class IdentityTestCase(SimpleTestCase):
    def test_virial_linear_repulsive(self):
        params = SimParams(gamma=-1.0, mu=0.0, kappa=1.0, half_width=8.0, nx=96, ny=96)
        report = check_virial(short_run(params), params)
        self.assertTrue(report.ok, report.residual)
        self.assertEqual(len(report.times), 39)

    def test_virial_free_nonlinear(self):
        params = SimParams(gamma=0.0, mu=1.0, kappa=1.0, half_width=8.0, nx=96, ny=96)
        rows = short_run(params)
        report = check_virial(rows, params)
        self.assertTrue(report.ok, report.residual)
        np.testing.assert_allclose(report.predicted, 8 * rows[0].energy, rtol=1e-3)

    def test_dE0(self):
        params = SimParams(gamma=-1.0, mu=0.0, kappa=1.0, half_width=8.0, nx=96, ny=96)
        report = check_dE0(short_run(params), params)
        self.assertTrue(report.ok, report.residual)

    def test_window_too_short(self):
        params = SimParams(mu=0.0, half_width=8.0, nx=32, ny=32)
        self.assertRaises(WindowTooShort, check_virial, short_run(params, rows=2), params)

    def test_times_must_increase(self):
        params = SimParams(mu=0.0, half_width=8.0, nx=32, ny=32)
        rows = short_run(params, rows=5)
        rows[3] = rows[2]
        self.assertRaises(WindowTooShort, check_dE0, rows, params)

    def test_anisotropic(self):
        params = SimParams(mu=0.0, half_width=8.0, nx=32, ny=32, anisotropic=(1.0, 2.0))
        self.assertRaises(DomainError, check_virial, short_run(params, rows=5), params)


class RunTestCase(SimpleTestCase):
    def setUp(self):
        self.params = SimParams(half_width=6.0, nx=32, ny=32)
        self.u0 = gaussian(self.params.grid())

    def test_max_steps(self):
        result = run(self.params, self.u0, StopCriteria(max_steps=5), remesh=RemeshSettings(enabled=False))
        self.assertEqual(result.termination, TERMINATION_MAX_STEPS)
        self.assertEqual(len(result.rows), 6)
        self.assertEqual(result.rows[0].dt, 0.0)
        self.assertEqual(result.state.step, 5)
        self.assertAlmostEqual(sum(r.dt for r in result.rows), result.t_end, places=14)
        self.assertTrue(all(a.t < b.t for a, b in zip(result.rows, result.rows[1:])))

    def test_lands_on_t_end(self):
        result = run(self.params, self.u0, StopCriteria(t_end=0.05), remesh=RemeshSettings(enabled=False))
        self.assertEqual(result.termination, TERMINATION_T_END)
        self.assertEqual(result.rows[-1].t, 0.05)
        self.assertEqual(result.t_end, 0.05)

    def test_cap(self):
        result = run(self.params, self.u0, StopCriteria(cap=0.5))
        self.assertEqual(result.termination, TERMINATION_CAP)
        self.assertEqual(len(result.rows), 1)

    def test_non_finite(self):
        with mock.patch('rnls.evolution.step_rk4', side_effect=NonFiniteField('nan')):
            result = run(self.params, self.u0, StopCriteria(max_steps=5))
        self.assertEqual(result.termination, TERMINATION_NONFINITE)
        self.assertEqual(len(result.rows), 1)

    def test_backend_events_and_snapshots(self):
        backend = RecordingBackend()
        result = run(
            self.params,
            self.u0,
            StopCriteria(max_steps=5),
            remesh=RemeshSettings(enabled=False),
            backends=[backend],
            snap_every=2,
        )
        kinds = backend.kinds()
        self.assertEqual(kinds.count('row'), 6)
        self.assertEqual(kinds.count('snapshot'), 4)
        self.assertEqual(kinds[-1], 'finish')
        self.assertEqual([t for t, _ in result.snapshots], [result.rows[k].t for k in (0, 2, 4, 5)])

    def test_finish_is_sent_on_errors(self):
        backend = RecordingBackend()
        with mock.patch('rnls.evolution.step_rk4', side_effect=RuntimeError('boom')):
            with self.assertRaises(RuntimeError):
                run(self.params, self.u0, StopCriteria(max_steps=5), backends=[backend])
        self.assertEqual(backend.kinds()[-1], 'finish')
        self.assertEqual(backend.events[-1]['termination'], 'error')

    def test_signals(self):
        seen = []

        def receiver(sender, **kwargs):
            seen.append(kwargs['row'].t)

        signals.step_completed.connect(receiver, dispatch_uid='test-step-completed')
        try:
            run(self.params, self.u0, StopCriteria(max_steps=3), remesh=RemeshSettings(enabled=False))
        finally:
            signals.step_completed.disconnect(dispatch_uid='test-step-completed')
        self.assertEqual(len(seen), 4)

    def test_remesh_on_shape(self):
        events = []

        def before(sender, state, **kwargs):
            events.append(('pre', state.step))

        def after(sender, state, mass_delta, **kwargs):
            events.append(('post', state.step))

        signals.pre_remesh.connect(before, dispatch_uid='test-pre-remesh')
        signals.post_remesh.connect(after, dispatch_uid='test-post-remesh')
        params = SimParams(half_width=6.0, nx=48, ny=48, tolerances=Tolerances(remesh_mass=1e-3))
        try:
            result = run(
                params,
                gaussian(params.grid(), amplitude=1.5),
                StopCriteria(max_steps=3),
                remesh=RemeshSettings(C=0.3),
            )
        finally:
            signals.pre_remesh.disconnect(dispatch_uid='test-pre-remesh')
            signals.post_remesh.disconnect(dispatch_uid='test-post-remesh')
        self.assertTrue(events)
        self.assertEqual(events[0][0], 'pre')
        self.assertEqual(result.remesh_count, sum(r.remesh for r in result.rows))

    def test_deterministic(self):
        first = run(self.params, self.u0, StopCriteria(max_steps=4))
        second = run(self.params, self.u0, StopCriteria(max_steps=4))
        self.assertEqual([r.as_record() for r in first.rows], [r.as_record() for r in second.rows])


class RemeshRejectionTestCase(SimpleTestCase):
    def setUp(self):
        self.params = SimParams(
            half_width=6.0, nx=32, ny=32, tolerances=Tolerances(remesh_mass=3e-5)
        )
        self.u0 = gaussian(self.params.grid())
        self.remesh = RemeshSettings(C=0.01)

    def test_unacceptable_mesh_stops_the_run(self):
        def rejected(field, **kwargs):
            return RemeshOutcome(field, field.mesh_map, 0.02, 0.0625, False)

        backend = RecordingBackend()
        with mock.patch('rnls.evolution.adapt', side_effect=rejected):
            with self.assertLogs('rnls.evolution', 'ERROR'):
                result = run(
                    self.params,
                    self.u0,
                    StopCriteria(max_steps=5),
                    remesh=self.remesh,
                    backends=[backend],
                )
        self.assertEqual(result.termination, TERMINATION_REMESH_FAILED)
        self.assertEqual(len(result.rows), 1)
        self.assertEqual(result.remesh_count, 0)
        self.assertEqual(backend.events[-1]['termination'], TERMINATION_REMESH_FAILED)

    def test_tolerance_and_raw_delta_flow_through(self):
        def accepted(field, **kwargs):
            return RemeshOutcome(field, field.mesh_map, 2e-7, kwargs['relax'], True)

        with mock.patch('rnls.evolution.adapt', side_effect=accepted) as remesher:
            result = run(self.params, self.u0, StopCriteria(max_steps=1), remesh=self.remesh)
        self.assertEqual(remesher.call_args.kwargs['mass_tol'], 3e-5)
        self.assertEqual(result.termination, TERMINATION_MAX_STEPS)
        self.assertTrue(result.rows[1].remesh)
        self.assertEqual(result.rows[1].remesh_delta, 2e-7)

    def test_default_tolerance_from_settings(self):
        with mock.patch('rnls.params.settings.REMESH_MASS_TOL', 5e-6):
            self.assertEqual(Tolerances().remesh_mass, 5e-6)
