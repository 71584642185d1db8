"""
Built-in verification suites, registered on import.

Each suite recomputes a property from first principles (closed forms,
refinement ratios, exact identities) and reports the measured value.
"""
import math

import numpy as np

from . import verification
from .analysis import check_uncertainty, fit_rate, reconstruct_T
from .evolution import SimState, check_dE0, check_virial, diagnostics, step_rk4
from .field import ComplexField, computational_gradient, integrate, laplacian, norms
from .grid import Grid2D, MeshMap, diff1, diff2
from .ground_state import check_gn, free_energy, solve_ground_state
from .mesh import adapt, compute_monitor, interpolate
from .params import SimParams
from .rotation import RotationSpec
from .suites import GenericSuite
from .transforms import (
    apply_R,
    check_dispersive,
    eval_exp_growth,
    eval_kernel,
    eval_minimal_mass,
    free_gaussian,
    map_lifespan,
    norm_relations,
    pde_residual,
    propagate,
)


def _order(errors, factor=2.0):
    return math.log(errors[-2] / errors[-1]) / math.log(factor)


def _gaussian(grid, sigma=1.0, mesh=None):
    return ComplexField.from_function(
        grid, lambda x, y: np.exp(-(x ** 2 + y ** 2) / (2 * sigma ** 2)), mesh
    )


def _linear_params():
    return SimParams(gamma=-1.0, mu=0.0, kappa=1.0, half_width=8.0, nx=96, ny=96)


def _linear_run(params, steps=40, dt=0.004):
    state = SimState(_gaussian(params.grid()))
    rows = [diagnostics(state, params)]
    for _ in range(steps):
        state = step_rk4(state, dt, params)
        rows.append(diagnostics(state, params))
    return rows


def _squeezed_mesh(grid, strength=0.3):
    L = grid.half_width
    xi, eta = np.meshgrid(grid.xi, grid.eta, indexing='ij')
    x = L * (xi + strength / np.pi * np.sin(np.pi * xi) * np.cos(0.5 * np.pi * eta))
    y = L * (eta + strength / np.pi * np.sin(np.pi * eta) * np.cos(0.5 * np.pi * xi))
    return MeshMap(grid, x, y)


class StencilSuite(GenericSuite):
    name = 'stencils'
    description = 'fourth-order derivative stencils'

    def check(self, quick=True):
        errors1, errors2 = [], []
        for n in (32, 64, 128):
            x = np.linspace(0, 1, n + 1)
            h = x[1] - x[0]
            f = np.sin(3 * x)
            errors1.append(np.max(np.abs(diff1(f, h) - 3 * np.cos(3 * x))))
            errors2.append(np.max(np.abs(diff2(f, h) + 9 * np.sin(3 * x))))
        x = np.linspace(-1, 1, 21)
        h = x[1] - x[0]
        exact = max(
            np.max(np.abs(diff1(x ** 4, h) - 4 * x ** 3)),
            np.max(np.abs(diff2(x ** 4, h) - 12 * x ** 2)),
        )
        order1, order2 = _order(errors1), _order(errors2)
        return [
            self.result('first derivative order', order1 > 3.7, 'order %.3f' % order1),
            self.result('second derivative order', order2 > 3.5, 'order %.3f' % order2),
            self.result('quartics differentiated exactly', exact < 1e-9, 'error %.2e' % exact),
        ]


class QuadratureSuite(GenericSuite):
    name = 'quadrature'
    description = 'trapezoid quadrature on identity and curvilinear meshes'

    def check(self, quick=True):
        grid = Grid2D(128, 128, 8.0)
        results = []
        for label, mesh in (('identity', None), ('curvilinear', _squeezed_mesh(grid))):
            u = _gaussian(grid, mesh=mesh)
            mass = float(integrate(np.abs(u.values) ** 2, u.mesh_map))
            error = abs(mass - np.pi) / np.pi
            results.append(self.result('%s mass' % label, error < 1e-5, 'rel. error %.2e' % error))
            lap = laplacian(u).values
            r2 = u.mesh_map.x ** 2 + u.mesh_map.y ** 2
            exact = (r2 - 2) * np.exp(-r2 / 2)
            err = float(np.max(np.abs(lap - exact)))
            results.append(self.result('%s laplacian' % label, err < 1e-3, 'sup error %.2e' % err))
        return results


class GroundStateSuite(GenericSuite):
    name = 'ground-state'
    description = 'shooting ground states against closed forms and E(Q) = 0'

    def check(self, quick=True):
        profile = solve_ground_state(1, 5.0)
        closed = (3.0 / np.cosh(2 * profile.r) ** 2) ** 0.25
        sup = float(np.max(np.abs(profile.q - closed)))
        results = [self.result('1D closed form', sup < 1e-6, 'sup error %.2e' % sup)]
        for n in (1, 2) if quick else (1, 2, 3):
            q = solve_ground_state(n)
            ratio = abs(free_energy(q)) / q.grad ** 2
            results.append(self.result('E(Q) = 0, n=%d' % n, ratio < 1e-5, '|E|/|grad Q|^2 %.2e' % ratio))
        return results


class GagliardoNirenbergSuite(GenericSuite):
    name = 'gagliardo-nirenberg'
    description = 'sharp Gagliardo-Nirenberg equality at Q and slack elsewhere'

    def check(self, quick=True):
        profile = solve_ground_state(2)
        slack = abs(check_gn(profile, relative=True))
        grid = Grid2D(256, 256, 8.0)
        lifted = profile.lift(grid)
        lifted_slack = abs(check_gn(lifted, profile, relative=True))
        gaussian = check_gn(_gaussian(grid), profile, relative=True)
        return [
            self.result('equality at Q (radial)', slack < 1e-3, 'rel. slack %.2e' % slack),
            self.result('equality at Q (grid)', lifted_slack < 1e-3, 'rel. slack %.2e' % lifted_slack),
            self.result('Gaussian strictly inside', gaussian > 1e-3, 'rel. slack %.3f' % gaussian),
        ]


class RotationSuite(GenericSuite):
    name = 'rotation'
    description = 'rotation flow and its action on radial data'

    def check(self, quick=True):
        rot = RotationSpec(2, (1.3,))
        R = rot.expm(0.7)
        orthogonal = float(np.max(np.abs(R @ R.T - np.eye(2))))
        grid = Grid2D(256, 256, 8.0)
        u = _gaussian(grid)
        u_xi, u_eta = computational_gradient(u)
        L = grid.half_width
        x, y = u.mesh_map.x, u.mesh_map.y
        term = 1.3 * (-y * u_xi / L + x * u_eta / L)
        radial = float(np.max(np.abs(term)))
        return [
            self.result('e^{tM} orthogonal', orthogonal < 1e-14, 'error %.2e' % orthogonal),
            self.result('A.grad kills radial data', radial < 1e-4, 'sup %.2e' % radial),
        ]


class LifespanSuite(GenericSuite):
    name = 'lifespan'
    description = 'global/finite boundary of the transformed lifespan'

    def check(self, quick=True):
        results = []
        for T in (0.1, 1.0, 10.0):
            gamma = -1.0 / (2 * T)
            at = map_lifespan(T, gamma)
            beyond = map_lifespan(T, gamma + 1e-6 * abs(gamma))
            results.append(
                self.result(
                    'T=%g boundary' % T,
                    not at.finite and beyond.finite,
                    '%s / %s' % (at.kind, beyond.kind),
                )
            )
        return results


class TransformSuite(GenericSuite):
    name = 'transforms'
    description = 'transformed soliton solves the rotational equation'

    def check(self, quick=True):
        profile = solve_ground_state(2)
        params = SimParams(gamma=-1.0, omega=(1.0,), kappa=1.0, p=3.0)
        rot = params.rotation

        def soliton(tau, y):
            return np.exp(1j * tau) * profile(np.sqrt(np.sum(y ** 2, axis=-1)))

        def evolved(t, points):
            return apply_R(soliton, t, points, params.gamma, rot)

        sizes = (64, 128) if quick else (64, 128, 256, 512)
        errors = [pde_residual(evolved, 0.1, params, Grid2D(n, n, 8.0)) for n in sizes]
        order = _order(errors)
        return [
            self.result(
                'residual order',
                order >= (3.0 if quick else 3.5),
                'residuals %s, order %.2f' % (', '.join('%.2e' % e for e in errors), order),
            )
        ]


class KernelSuite(GenericSuite):
    name = 'kernel'
    description = 'propagator limits and unitarity'

    def check(self, quick=True):
        x = np.array([[0.3, -0.2], [1.0, 0.5]])
        y = np.array([[0.1, 0.4], [-0.7, 0.2]])
        free = eval_kernel(0.2, x, y, 0.0)
        near = eval_kernel(0.2, x, y, -1e-4)
        limit = float(np.max(np.abs(near - free) / np.abs(free)))
        grid = Grid2D(192, 192, 7.0)
        f = _gaussian(grid)
        evolved = propagate(f, 0.2, -1.0, target=Grid2D(96, 96, 8.0))
        mass0 = float(integrate(np.abs(f.values) ** 2, f.mesh_map))
        mass = float(integrate(np.abs(evolved.values) ** 2, evolved.mesh_map))
        drift = abs(mass - mass0) / mass0
        return [
            self.result('gamma -> 0 limit', limit < 1e-4, 'rel. difference %.2e' % limit),
            self.result('L2 conserved', drift < 1e-5, 'rel. drift %.2e' % drift),
        ]


class MonitorSuite(GenericSuite):
    name = 'monitor'
    description = 'monitor normalisation'

    def check(self, quick=True):
        grid = Grid2D(64, 64, 6.0)
        u = _gaussian(grid)
        w1 = compute_monitor(u).w
        w2 = compute_monitor(u.with_values(2 * u.values)).w
        scale = float(np.max(np.abs(w1 - w2)))
        flat = compute_monitor(ComplexField(grid, np.ones(grid.shape))).w
        return [
            self.result('scale invariance', scale < 1e-12, 'difference %.2e' % scale),
            self.result('constant field', np.allclose(flat, 1.0, atol=1e-12), 'max %.15f' % flat.max()),
        ]


class RemeshSuite(GenericSuite):
    name = 'remesh'
    description = 'mesh redistribution and field transfer'

    def check(self, quick=True):
        grid = Grid2D(128, 128, 6.0)
        u = ComplexField.from_function(grid, lambda x, y: 4 * np.exp(-(x ** 2 + y ** 2)))
        same = interpolate(u, u.mesh_map, u.mesh_map)
        outcome = adapt(u, conserve_mass=False)
        mesh = outcome.mesh
        return [
            self.result('identity transfer exact', np.array_equal(same.values, u.values)),
            self.result('mesh untangled', not mesh.tangled()),
            self.result(
                'mass change below 1e-6',
                abs(outcome.mass_delta) < 1e-6,
                'rel. change %.2e' % outcome.mass_delta,
            ),
        ]


class VirialSuite(GenericSuite):
    name = 'virial'
    description = 'virial law on a short linear run'

    def check(self, quick=True):
        params = _linear_params()
        report = check_virial(_linear_run(params), params)
        return [self.result('virial residual', report.ok, 'residual %.2e' % report.residual)]


class ReferenceEnergySuite(GenericSuite):
    name = 'dE0'
    description = 'reference energy law on a short linear run'

    def check(self, quick=True):
        params = _linear_params()
        report = check_dE0(_linear_run(params), params)
        return [self.result('dE0 residual', report.ok, 'residual %.2e' % report.residual)]


class NormRelationSuite(GenericSuite):
    name = 'norm-relations'
    description = 'transform preserves L2 and dilates the weighted norm'

    def check(self, quick=True):
        grid = Grid2D(128, 128, 8.0)
        rot = RotationSpec(2, (1.0,))
        results = []
        for t in (0.05, 0.1, 0.2):
            image, source, image_x, source_x = norm_relations(free_gaussian, t, -1.0, grid, rot)
            l2 = abs(image - source) / source
            weighted = abs(image_x - source_x) / source_x
            results.append(
                self.result(
                    't=%g' % t,
                    l2 < 1e-6 and weighted < 1e-6,
                    'L2 %.2e, |x|-weighted %.2e' % (l2, weighted),
                )
            )
        return results


class DispersiveSuite(GenericSuite):
    name = 'dispersive'
    description = 'dispersive decay of the harmonic-potential propagator'
    quick = False

    def check(self, quick=True):
        grid = Grid2D(320, 320, 7.0)
        f = _gaussian(grid)
        report = check_dispersive(
            f,
            -1.0,
            np.linspace(0.05, 0.7, 14),
            sample=lambda x, y: np.exp(-(x ** 2 + y ** 2) / 2),
        )
        return [
            self.result(
                'small-t bound',
                report.small_t_ok,
                't sup <= %s' % report.small_t_bound,
            ),
            self.result(
                'large-t bound',
                report.large_t_ok,
                'e^(2t) sup <= %s' % report.large_t_bound,
            ),
            self.result('L2 conserved', report.l2_error < 1e-6, 'rel. drift %.2e' % report.l2_error),
        ]


class ExpGrowthSuite(GenericSuite):
    name = 'exp-growth'
    description = 'exponential gradient growth of the transformed minimal-mass solution'

    def check(self, quick=True):
        profile = solve_ground_state(2)
        gamma = -1.0
        times = np.linspace(2.0, 6.0, 9)
        logs = []
        for t in times:
            scale = 2 * abs(gamma) * np.exp(2 * abs(gamma) * t)
            u = ComplexField.from_function(
                Grid2D(128, 128, 10.0 / scale),
                lambda x, y: eval_exp_growth(t, np.stack([x, y], axis=-1), profile, gamma),
            )
            logs.append(math.log(norms(u).grad_l2))
        slope = float(np.polyfit(times, logs, 1)[0])
        error = abs(slope - 2 * abs(gamma)) / (2 * abs(gamma))
        return [self.result('growth rate 2|gamma|', error < 0.02, 'rate %.4f' % slope)]


class MinimalMassSuite(GenericSuite):
    name = 'minimal-mass'
    description = 'minimal-mass solution keeps the mass of Q and blows up at rate 1/(T-t)'

    def check(self, quick=True):
        profile = solve_ground_state(2)
        T = 1.0
        gaps = (1e-1, 1e-2, 1e-3)
        worst, logs = 0.0, []
        for s in gaps:
            u = ComplexField.from_function(
                Grid2D(256, 256, 10.0 * s),
                lambda x, y: eval_minimal_mass(T - s, np.stack([x, y], axis=-1), profile, T),
            )
            result = norms(u)
            worst = max(worst, abs(result.l2 ** 2 - profile.mass) / profile.mass)
            logs.append(math.log(result.grad_l2))
        exponent = -float(np.polyfit(np.log(gaps), logs, 1)[0])
        return [
            self.result('mass equals |Q|^2', worst < 1e-6, 'rel. error %.2e' % worst),
            self.result('gradient rate', abs(exponent - 1) < 0.02, 'exponent %.4f' % exponent),
        ]


class RateFitSuite(GenericSuite):
    name = 'rate-fit'
    description = 'rate fitting on synthetic pure powers'

    def check(self, quick=True):
        tau = np.logspace(-5, -2, 60)
        worst = 0.0
        for exponent in (0.3, 0.5, 1.0, 1.5):
            fit = fit_rate(tau ** exponent, tau)
            worst = max(worst, abs(fit.slope - exponent))
        return [self.result('pure powers exact', worst < 1e-8, 'worst error %.2e' % worst)]


class ReconstructSuite(GenericSuite):
    name = 'reconstruct'
    description = 'blowup time from suffix sums of steps'

    def check(self, quick=True):
        dt = [0.0] + [2.0 ** -k for k in range(1, 40)]
        t = np.cumsum(dt)
        rows = [{'t': a, 'dt': b} for a, b in zip(t, dt)]
        T, tau = reconstruct_T(rows)
        exact = all(tau[j] - tau[j + 1] == dt[j + 1] for j in range(len(dt) - 1))
        return [
            self.result('suffix sums exact', exact),
            self.result('T is the final time', T == t[-1], 'T=%r' % T),
        ]


class UncertaintySuite(GenericSuite):
    name = 'uncertainty'
    description = 'Heisenberg equality for centred Gaussians'

    def check(self, quick=True):
        grid = Grid2D(256, 256, 8.0)
        u = _gaussian(grid)
        slack = check_uncertainty(u)
        q_slack = check_uncertainty(solve_ground_state(2).lift(grid))
        return [
            self.result('Gaussian equality', abs(slack) < 1e-4 * np.pi ** 2, 'slack %.2e' % slack),
            self.result('Q strictly positive', q_slack > 0, 'slack %.3f' % q_slack),
        ]


BUILTIN_SUITES = (
    StencilSuite,
    QuadratureSuite,
    GroundStateSuite,
    GagliardoNirenbergSuite,
    RotationSuite,
    LifespanSuite,
    TransformSuite,
    KernelSuite,
    MonitorSuite,
    RemeshSuite,
    VirialSuite,
    ReferenceEnergySuite,
    NormRelationSuite,
    DispersiveSuite,
    ExpGrowthSuite,
    MinimalMassSuite,
    RateFitSuite,
    ReconstructSuite,
    UncertaintySuite,
)


def register_builtin_suites():
    registered = {s.name for s in verification.suites()}
    for suite_class in BUILTIN_SUITES:
        if suite_class.name not in registered:
            verification.register(suite_class)


register_builtin_suites()
