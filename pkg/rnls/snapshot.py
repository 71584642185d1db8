"""
Binary snapshot format.

A 64-byte little-endian header::

    magic "RNLS" | version u32 | nx u32 | ny u32 |
    L f64 | t f64 | gamma f64 | p f64 | kappa f64 | has_mesh u32 | reserved u32

followed by ``nx * ny`` (re, im) f64 pairs in row-major order, then, when
``has_mesh`` is set, the ``x`` and ``y`` node arrays as ``nx * ny`` f64 each.
"""
import os
import struct
from collections import namedtuple

import numpy as np

from .constants import SNAPSHOT_MAGIC, SNAPSHOT_VERSION
from .field import ComplexField
from .grid import Grid2D, MeshMap

HEADER = struct.Struct('<4sIII5dII')

Snapshot = namedtuple('Snapshot', ['field', 't', 'gamma', 'p', 'kappa'])


def write_snapshot(path, field, t, gamma, p, kappa):
    grid = field.grid
    has_mesh = field.mesh is not None and not field.mesh.is_identity
    header = HEADER.pack(
        SNAPSHOT_MAGIC,
        SNAPSHOT_VERSION,
        grid.nx,
        grid.ny,
        grid.half_width,
        t,
        gamma,
        p,
        kappa,
        int(has_mesh),
        0,
    )
    tmp = '%s.tmp' % path
    with open(tmp, 'wb') as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype='<c16').tobytes())
        if has_mesh:
            fh.write(np.ascontiguousarray(field.mesh.x, dtype='<f8').tobytes())
            fh.write(np.ascontiguousarray(field.mesh.y, dtype='<f8').tobytes())
    os.replace(tmp, path)


def read_snapshot(path):
    with open(path, 'rb') as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise ValueError('%s: truncated snapshot header' % path)
    magic, version, nx, ny, L, t, gamma, p, kappa, has_mesh, _ = HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError('%s: bad magic %r' % (path, magic))
    if version != SNAPSHOT_VERSION:
        raise ValueError('%s: unsupported snapshot version %d' % (path, version))
    grid = Grid2D(nx, ny, L)
    count = nx * ny
    offset = HEADER.size
    values = np.frombuffer(raw, dtype='<c16', count=count, offset=offset)
    offset += 16 * count
    mesh = None
    if has_mesh:
        x = np.frombuffer(raw, dtype='<f8', count=count, offset=offset)
        y = np.frombuffer(raw, dtype='<f8', count=count, offset=offset + 8 * count)
        mesh = MeshMap(grid, x.reshape(nx, ny).copy(), y.reshape(nx, ny).copy())
    field = ComplexField(grid, values.reshape(nx, ny).copy(), mesh)
    return Snapshot(field, t, gamma, p, kappa)
