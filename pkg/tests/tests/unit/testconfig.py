import math
import os
import shutil
import tempfile

import numpy as np
from django.test.testcases import SimpleTestCase

from rnls.config import (
    KIND_FILE,
    KIND_GAUSSIAN,
    KIND_GROUND_STATE,
    RunManifest,
    build_initial_field,
    dump_config,
    load_config,
    parse_config,
)
from rnls.constants import TERMINATION_ERROR
from rnls.exceptions import SchemaError
from rnls.grid import Grid2D
from rnls.ground_state import solve_ground_state
from rnls.snapshot import write_snapshot
from tests.utils import gaussian, recipe_path

SMALL = '''
[grid]
nx = 32
ny = 32
half_width = 6.0

[initial]
kind = "%s"
%s
'''


def small(kind, extra=''):
    return SMALL % (kind, extra)


class ParseTestCase(SimpleTestCase):
    def test_minimal_recipe(self):
        config = load_config(recipe_path('fixtures', 'minimal.toml'))
        self.assertEqual(config.initial.kind, KIND_GAUSSIAN)
        self.assertEqual((config.params.nx, config.params.half_width), (128, 10.0))
        self.assertEqual(config.params.omega, (0.0,))
        self.assertEqual(config.stop.t_end, math.inf)
        self.assertIsNone(config.stop.max_steps)
        self.assertIsNone(config.dt0)
        self.assertTrue(config.remesh.enabled)
        self.assertEqual(config.snap_every, 0)

    def test_repulsive_recipe(self):
        config = load_config(recipe_path('repulsive.toml'))
        params = config.params
        self.assertEqual((params.gamma, params.kappa, params.p), (-1.0, 0.5, 3.0))
        self.assertEqual((params.nx, params.ny, params.half_width), (512, 512, 5.0))
        self.assertEqual((config.initial.amplitude, config.initial.ax, config.initial.ay), (5.0, 2.0, 1.0))
        self.assertEqual(config.stop.cap, 1e6)
        self.assertEqual(config.remesh.interval, 20)
        self.assertEqual(config.output_dir, 'out/repulsive')
        self.assertEqual(config.base_dir, os.path.dirname(recipe_path('repulsive.toml')))

    def test_attractive_recipe_differs_only_in_sign(self):
        repulsive = load_config(recipe_path('repulsive.toml'))
        attractive = load_config(recipe_path('attractive.toml'))
        self.assertEqual(attractive.params.gamma, -repulsive.params.gamma)
        self.assertEqual(attractive.initial, repulsive.initial)

    def test_integers_are_accepted_for_reals(self):
        config = parse_config('[physics]\ngamma = -1\n[initial]\nkind = "gaussian"\namplitude = 5\n')
        self.assertEqual(config.params.gamma, -1.0)
        self.assertIsInstance(config.initial.amplitude, float)

    def test_every_problem_is_reported(self):
        text = '''
[physics]
kappa = -1.0
spin = 2

[grid]
nx = 15

[initial]
kind = "gaussian"
amplitude = "big"

[remesh]
relax = 1.5

[extras]
'''
        with self.assertRaises(SchemaError) as raised:
            parse_config(text)
        paths = [path for path, _ in raised.exception.errors]
        for expected in ('physics.spin', 'grid.nx', 'initial.amplitude', 'remesh.relax', 'extras'):
            self.assertIn(expected, paths)
        self.assertIn('grid.nx', str(raised.exception))

    def test_physics_errors_are_reported(self):
        with self.assertRaises(SchemaError) as raised:
            parse_config('[physics]\nkappa = -1.0\n[initial]\nkind = "gaussian"\n')
        self.assertEqual(raised.exception.errors[0][0], 'physics')

    def test_kind_is_required(self):
        with self.assertRaises(SchemaError) as raised:
            parse_config('[grid]\nnx = 32\n')
        self.assertEqual([path for path, _ in raised.exception.errors], ['initial.kind'])

    def test_unknown_kind(self):
        self.assertRaises(SchemaError, parse_config, small('vortex'))

    def test_keys_must_match_the_kind(self):
        with self.assertRaises(SchemaError) as raised:
            parse_config(small(KIND_GAUSSIAN, 'lam = 0.5'))
        self.assertEqual(raised.exception.errors, [('initial.lam', "not used by kind 'gaussian'")])

    def test_file_kind_needs_an_existing_path(self):
        self.assertRaises(SchemaError, parse_config, small(KIND_FILE))
        self.assertRaises(SchemaError, parse_config, small(KIND_FILE, 'path = "missing.bin"'))

    def test_tolerances(self):
        extra = '[tolerances]\nremesh_mass = 1e-5\nphase_per_cell = 1.5\n'
        config = parse_config(small(KIND_GAUSSIAN) + extra)
        self.assertEqual(config.params.tolerances.remesh_mass, 1e-5)
        self.assertEqual(config.params.tolerances.phase_per_cell, 1.5)
        self.assertEqual(config.params.tolerances.virial, 1e-3)
        with self.assertRaises(SchemaError):
            parse_config(small(KIND_GAUSSIAN) + '[tolerances]\nremesh_mass = -1.0\n')

    def test_malformed_toml(self):
        with self.assertRaises(SchemaError) as raised:
            parse_config('[initial\nkind = ')
        self.assertEqual(raised.exception.errors[0][0], '<document>')


class DumpTestCase(SimpleTestCase):
    def test_round_trip(self):
        config = load_config(recipe_path('repulsive.toml'))
        again = parse_config(dump_config(config))
        self.assertEqual(again, config)
        self.assertEqual(again.config_hash, config.config_hash)

    def test_hash_tracks_content(self):
        a = parse_config(small(KIND_GAUSSIAN, 'amplitude = 2.0'))
        b = parse_config(small(KIND_GAUSSIAN, 'amplitude = 2.5'))
        self.assertNotEqual(a.config_hash, b.config_hash)
        self.assertEqual(len(a.config_hash), 64)

    def test_defaults_are_spelled_out(self):
        text = dump_config(load_config(recipe_path('fixtures', 'minimal.toml')))
        self.assertIn('t_end = inf', text)
        self.assertIn('[remesh]', text)
        self.assertNotIn('max_steps', text)


class BuildInitialFieldTestCase(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.directory)

    def test_gaussian(self):
        config = parse_config(small(KIND_GAUSSIAN, 'amplitude = 5.0\nax = 2.0\ncenter = [1.0, 0.0]'))
        u = build_initial_field(config)
        x, y = u.mesh_map.x, u.mesh_map.y
        np.testing.assert_allclose(u.values, 5.0 * np.exp(-(2 * (x - 1.0)) ** 2 - y ** 2))
        self.assertTrue(u.mesh_map.is_identity)

    def test_ground_state(self):
        config = parse_config(small(KIND_GROUND_STATE, 'c = 0.5\nlam = 0.8'))
        u = build_initial_field(config)
        expected = solve_ground_state(2).lift(Grid2D(32, 32, 6.0), lam=0.8)
        np.testing.assert_allclose(u.values, 0.5 * expected.values)

    def test_ground_state_follows_kappa(self):
        config = parse_config(small(KIND_GROUND_STATE) + '[physics]\nkappa = 0.5\n')
        u = build_initial_field(config)
        expected = solve_ground_state(2).for_kinetic(0.5).lift(Grid2D(32, 32, 6.0))
        np.testing.assert_allclose(u.values, expected.values)

    def test_snapshot_file(self):
        source = gaussian(Grid2D(32, 32, 6.0), amplitude=2.0)
        write_snapshot(os.path.join(self.directory, 'u0.bin'), source, 0.0, -1.0, 3.0, 1.0)
        path = os.path.join(self.directory, 'run.toml')
        with open(path, 'w') as fh:
            fh.write(small(KIND_FILE, 'path = "u0.bin"'))
        u = build_initial_field(load_config(path))
        np.testing.assert_array_equal(u.values, source.values)

    def test_snapshot_grid_must_match(self):
        write_snapshot(
            os.path.join(self.directory, 'u0.bin'), gaussian(Grid2D(16, 16, 6.0)), 0.0, -1.0, 3.0, 1.0
        )
        config = parse_config(small(KIND_FILE, 'path = "u0.bin"'), base_dir=self.directory)
        self.assertRaises(SchemaError, build_initial_field, config)


class RunManifestTestCase(SimpleTestCase):
    def test_defaults_describe_a_failed_run(self):
        manifest = RunManifest(config_hash='0' * 64, version='0.1.0', started='2024-01-01T00:00:00')
        payload = manifest.as_dict()
        self.assertEqual(payload['termination'], TERMINATION_ERROR)
        self.assertIsNone(payload['T_est'])
        self.assertIsNone(payload['finished'])
        self.assertEqual(payload['steps'], 0)
