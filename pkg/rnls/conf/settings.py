import os

from django.conf import settings


def get_setting(name, default, cast=None):
    '''
    Looks ``name`` up in the Django settings when they are configured, then
    in the environment, then falls back to ``default``.
    '''
    if settings.configured and hasattr(settings, name):
        value = getattr(settings, name)
    else:
        value = os.environ.get(name)
        if value is None or value == '':
            return default
    if cast is not None:
        value = cast(value)
    return value


def _pair(value):
    if isinstance(value, str):
        value = value.split(',')
    lo, hi = (float(v) for v in value)
    return (lo, hi)


BLOWUP_CAP = get_setting('RNLS_BLOWUP_CAP', 1e6, float)
SHAPE_C = get_setting('RNLS_SHAPE_C', 5.0, float)
MONITOR_SMOOTHING = get_setting('RNLS_MONITOR_SMOOTHING', 4, int)
REMESH_ITERS = get_setting('RNLS_REMESH_ITERS', 5, int)
REMESH_RELAX = get_setting('RNLS_REMESH_RELAX', 0.5, float)
REMESH_GROWTH = get_setting('RNLS_REMESH_GROWTH', 2.0, float)
REMESH_MASS_TOL = get_setting('RNLS_REMESH_MASS_TOL', 1e-6, float)
CFL = get_setting('RNLS_CFL', 0.25, float)
FIT_WINDOW = get_setting('RNLS_FIT_WINDOW', (1e-5, 1e-2), _pair)
DELTA = get_setting('RNLS_DELTA', 0.25, float)


def threads(requested=None):
    '''
    Number of worker threads: an explicit request wins over RNLS_THREADS.
    '''
    if requested is not None:
        count = int(requested)
    else:
        count = get_setting('RNLS_THREADS', 1, int)
    return max(1, count)
