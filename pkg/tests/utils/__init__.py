import os
import unittest

import numpy as np

RECIPES = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))), 'recipes')


def recipe_path(*parts):
    return os.path.join(RECIPES, *parts)


slow = unittest.skipUnless(
    os.environ.get('RNLS_SLOW_TESTS'), 'set RNLS_SLOW_TESTS=1 to run full simulations'
)


def gaussian(grid, sigma=1.0, amplitude=1.0, center=(0.0, 0.0), mesh=None):
    from rnls.field import ComplexField

    cx, cy = center
    return ComplexField.from_function(
        grid,
        lambda x, y: amplitude * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma ** 2)),
        mesh,
    )


def squeezed_mesh(grid, strength=0.3):
    '''
    A smooth curvilinear mesh whose boundary nodes coincide exactly with
    the identity mesh.
    '''
    from rnls.grid import MeshMap

    L = grid.half_width
    xi, eta = np.meshgrid(grid.xi, grid.eta, indexing='ij')
    x = L * (xi + strength * xi * (1 - xi ** 2) * (1 - eta ** 2))
    y = L * (eta + strength * eta * (1 - eta ** 2) * (1 - xi ** 2))
    return MeshMap(grid, x, y)


def power_rows(T, tau, L):
    '''
    Diagnostics dicts for a run that ends at ``T``: row ``j`` sits at
    ``T - tau[j]`` and logs the step that reached it.
    '''
    t = T - np.asarray(tau, dtype=float)
    dt = np.concatenate([[0.0], np.diff(t)])
    return [
        {'t': a, 'dt': b, 'L': c, 'gradl2': 1.0 / c if c > 0 else 0.0}
        for a, b, c in zip(t, dt, L)
    ]


def setup_verification(suites=None):
    from rnls import verification

    for suite_class in suites or ():
        verification.register(suite_class)
    return verification


def teardown_verification(names):
    from rnls import verification

    for name in names:
        try:
            verification.unregister(name)
        except Exception:
            pass
