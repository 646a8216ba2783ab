"""Plain-text dumps: field and contour CSV, report JSON.

Numbers are written with 17 significant digits so that a field read back
from disk is bit-identical to the one that was written.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DomainError
from .solver import GridField

FIELD_HEADER = "y,z,u,q1,q2"
CONTOUR_HEADER = "y,z"
REPORT_KEYS = ("lambda", "epsilons", "iters", "energy", "el_residual", "support_area", "runtime_s")


def _fmt(x):
    return format(float(x), ".17g")


def _write_rows(path, header, columns):
    path = Path(path)
    cols = [np.asarray(c, dtype=np.float64).ravel() for c in columns]
    with path.open("w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for row in zip(*cols):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return path


def write_field_csv(path, grid, q=None):
    """Rows ``y,z,u,q1,q2`` over nodes, ``y`` outer and ``z`` inner."""
    yy, zz = grid.mesh()
    if q is None:
        q = (np.zeros_like(yy), np.zeros_like(yy))
    return _write_rows(path, FIELD_HEADER, [yy, zz, grid.values, q[0], q[1]])


def read_field_csv(path):
    """Inverse of :func:`write_field_csv`; returns ``(GridField, (q1, q2))``."""
    path = Path(path)
    with path.open(encoding="ascii") as fh:
        header = fh.readline().strip()
    if header != FIELD_HEADER:
        raise DomainError(f"{path}: expected header {FIELD_HEADER!r}, got {header!r}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    y = np.unique(data[:, 0])
    z = np.unique(data[:, 1])
    ny, nz = y.size, z.size
    if ny * nz != data.shape[0]:
        raise DomainError(f"{path}: rows do not form a tensor grid")
    depth = -float(z[0])
    grid = GridField(ny, nz, depth, data[:, 2].reshape(ny, nz))
    yy, zz = grid.mesh()
    if not (np.array_equal(yy.ravel(), data[:, 0]) and np.array_equal(zz.ravel(), data[:, 1])):
        raise DomainError(f"{path}: node coordinates do not match a uniform grid")
    return grid, (data[:, 3].reshape(ny, nz), data[:, 4].reshape(ny, nz))


def write_contour_csv(path, polyline):
    """``y,z`` rows; a row ``nan,nan`` separates disconnected pieces."""
    poly = np.asarray(polyline, dtype=np.float64).reshape(-1, 2)
    return _write_rows(path, CONTOUR_HEADER, [poly[:, 0], poly[:, 1]])


def write_json(path, payload):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, allow_nan=True) + "\n", encoding="ascii")
    return path


def write_report_json(path, report, include_runtime=True):
    payload = report.as_json_dict(include_runtime=include_runtime)
    return write_json(path, {k: payload[k] for k in REPORT_KEYS})


def write_table_csv(path, header, rows):
    cols = list(zip(*rows)) if rows else [[] for _ in header.split(",")]
    return _write_rows(path, header, cols)
