"""MGF1 binary field files and CSV exports.

An MGF1 file is a 36-byte little-endian header (magic ``MGF1``, nx, ny as int64, lx, ly as
float64) followed by nx*ny float64 samples in x-major order.
"""

import csv
from pathlib import Path

import numpy as np

from .exceptions import FieldFormatError
from .spectral import Field, make_grid

MAGIC = b'MGF1'
HEADER = np.dtype([('magic', 'S4'), ('nx', '<i8'), ('ny', '<i8'), ('lx', '<f8'), ('ly', '<f8')])


def write_field(path, field):
    grid = field.grid
    header = np.array([(MAGIC, grid.nx, grid.ny, grid.lx, grid.ly)], dtype=HEADER)
    with open(path, 'wb') as stream:
        stream.write(header.tobytes())
        stream.write(np.ascontiguousarray(field.values, dtype='<f8').tobytes())
    return Path(path)


def read_field(path):
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.itemsize:
        raise FieldFormatError(f'{path}: file shorter than the MGF1 header')
    header = np.frombuffer(raw[:HEADER.itemsize], dtype=HEADER)[0]
    if header['magic'] != MAGIC:
        raise FieldFormatError(f'{path}: bad magic {header["magic"]!r}')
    grid = make_grid(int(header['nx']), int(header['ny']), float(header['lx']), float(header['ly']))
    body = raw[HEADER.itemsize:]
    if len(body) != 8 * grid.size:
        raise FieldFormatError(f'{path}: expected {grid.size} samples, found {len(body) // 8}')
    return Field(grid, np.frombuffer(body, dtype='<f8').reshape(grid.shape))


def export_field_csv(path, field):
    """x, y, value rows for plotting."""
    xx, yy = field.grid.mesh
    with open(path, 'w', newline='') as stream:
        writer = csv.writer(stream)
        writer.writerow(['x', 'y', 'value'])
        for x, y, value in zip(xx.ravel(), yy.ravel(), field.values.ravel()):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(value))])
    return Path(path)
