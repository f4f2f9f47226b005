"""Deterministic CSV serialisation for grid data and scan reports.

All floats are rendered with ``%.12g`` and rows follow node (C) order, so the
same computation always produces byte-identical files regardless of worker
count or platform line conventions (newline is always LF).
"""

from __future__ import annotations

import io
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError
from .grid import GridFunction, GridSpec


def fmt(v) -> str:
    return "%.12g" % float(v)


def render_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Render rows (floats formatted, everything else str()) as CSV text."""
    buf = io.StringIO()
    buf.write(",".join(header))
    buf.write("\n")
    for row in rows:
        buf.write(",".join(fmt(v) if isinstance(v, (int, float, np.floating)) else str(v)
                           for v in row))
        buf.write("\n")
    return buf.getvalue()


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def grid_function_csv(u: GridFunction) -> str:
    """Node-ordered rows: ``x,u`` in one dimension, ``x0,x1,u`` in two."""
    mesh = u.grid.mesh().reshape(-1, u.grid.d)
    vals = u.values.ravel()
    if u.grid.d == 1:
        header = ["x", "u"]
        rows = ((mesh[i, 0], vals[i]) for i in range(vals.size))
    else:
        header = ["x0", "x1", "u"]
        rows = ((mesh[i, 0], mesh[i, 1], vals[i]) for i in range(vals.size))
    return render_csv(header, rows)


def read_grid_function(path: str, grid: GridSpec) -> GridFunction:
    """Read a ``grid_function_csv`` file back onto a matching grid."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        want = ["x", "u"] if grid.d == 1 else ["x0", "x1", "u"]
        if header != want:
            raise ConfigError(f"unexpected CSV header {header}; expected {want}")
        vals = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            vals.append(float(line.split(",")[-1]))
    arr = np.array(vals, dtype=np.float64)
    if arr.size != int(np.prod(grid.shape)):
        raise ConfigError(
            f"CSV has {arr.size} rows but the grid needs {int(np.prod(grid.shape))}"
        )
    return GridFunction(grid, arr.reshape(grid.shape))


def biconjugate_csv(plat: np.ndarray, hval: np.ndarray, biconj: np.ndarray,
                    err: np.ndarray) -> str:
    if plat.shape[1] == 1:
        header = ["p", "H", "Hstar2", "abs_err"]
        rows = ((plat[i, 0], hval[i], biconj[i], err[i]) for i in range(plat.shape[0]))
    else:
        header = ["p0", "p1", "H", "Hstar2", "abs_err"]
        rows = ((plat[i, 0], plat[i, 1], hval[i], biconj[i], err[i])
                for i in range(plat.shape[0]))
    return render_csv(header, rows)


def bracket_csv(pts: np.ndarray, vals: np.ndarray, d: int) -> str:
    if d == 1:
        header = ["x", "p", "u", "bracket"]
    else:
        header = ["x0", "x1", "p0", "p1", "u", "bracket"]
    rows = (tuple(pts[i]) + (vals[i],) for i in range(pts.shape[0]))
    return render_csv(header, rows)


def commutation_csv(reports) -> str:
    header = ["lambda", "mu", "dt", "sup_abs", "max_signed", "min_signed"]
    rows = ((r.lam, r.mu, r.dt, r.sup_abs_defect, r.max_signed, r.min_signed)
            for r in reports)
    return render_csv(header, rows)
