"""Jacobi bracket of contact Hamiltonians and box scans for (near-)commutation.

The bracket of ``H`` and ``F`` at ``(x, p, u)`` is

    {H, F} = D_x H . D_p F - D_p H . D_x F
           + (p . D_p F) dH/du - (p . D_p H) dF/du
           + dF/du H - dH/du F

Terms are summed as three explicit differences so that swapping the arguments
negates every partial sum exactly; antisymmetry therefore holds bit for bit,
not just to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .hamiltonian import HamiltonianSpec, eval_gradients

DEFAULT_SEED = 0x5EED
ANALYTIC_TOL = 1e-7
FD_TOL = 1e-4


def jacobi_bracket(h: HamiltonianSpec, f: HamiltonianSpec, x, p, u, fd_step: float = 1e-5):
    """Pointwise bracket values; broadcasts over leading axes of x, p, u."""
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    hx, hp, hu = eval_gradients(h, x, p, u, fd_step=fd_step)
    fx, fp, fu = eval_gradients(f, x, p, u, fd_step=fd_step)
    hval = h.eval(x, p, u)
    fval = f.eval(x, p, u)
    d1 = np.sum(hx * fp, axis=-1) - np.sum(hp * fx, axis=-1)
    d2 = np.sum(p * fp, axis=-1) * hu - np.sum(p * hp, axis=-1) * fu
    d3 = fu * hval - hu * fval
    return (d1 + d2) + d3


@dataclass(frozen=True)
class BracketReport:
    h_name: str
    f_name: str
    samples: int
    max_abs: float
    max_pos: float
    min_neg: float
    arg_extreme: tuple
    tolerance: float
    verdict: str
    seed: int


def _axis_ranges(box_entry, d: int, key: str):
    """Normalise a box entry to a list of (lo, hi) per coordinate."""
    if isinstance(box_entry, (tuple, list)) and len(box_entry) == 2 and np.isscalar(box_entry[0]):
        pairs = [tuple(map(float, box_entry))] * d
    else:
        pairs = [tuple(map(float, pair)) for pair in box_entry]
        if len(pairs) != d:
            raise ConfigError(f"box entry '{key}' needs {d} ranges, got {len(pairs)}")
    for lo, hi in pairs:
        if not (lo < hi):
            raise ConfigError(f"box entry '{key}' has an empty range [{lo}, {hi}]")
    return pairs


def bracket_scan(
    h: HamiltonianSpec,
    f: HamiltonianSpec,
    box: dict,
    d: int = 1,
    samples_per_axis: int = 7,
    random_points: int = 1000,
    tolerance: float | None = None,
    fd_step: float = 1e-5,
    seed: int = DEFAULT_SEED,
) -> BracketReport:
    """Scan the bracket over a lattice plus seeded random interior points.

    ``box`` maps 'x', 'p', 'u' to ranges ((lo, hi) or per-coordinate lists).
    The default tolerance is 1e-7 when both specs carry analytic gradients and
    1e-4 otherwise (finite differences).  Verdicts: 'commuting',
    'one_sided_le' (bracket <= tol everywhere), 'one_sided_ge', or 'none'.
    """
    for key in box:
        if key not in ("x", "p", "u"):
            raise ConfigError(f"unknown box key '{key}' (expected x, p, u)")
    for key in ("x", "p", "u"):
        if key not in box:
            raise ConfigError(f"box is missing key '{key}'")
    if samples_per_axis < 2:
        raise ConfigError("samples_per_axis must be >= 2")
    if random_points < 0:
        raise ConfigError("random_points must be >= 0")
    if tolerance is None:
        tolerance = ANALYTIC_TOL if (h.has_analytic_gradients and f.has_analytic_gradients) else FD_TOL
    x_rng = _axis_ranges(box["x"], d, "x")
    p_rng = _axis_ranges(box["p"], d, "p")
    u_rng = _axis_ranges([box["u"]] if np.isscalar(box["u"][0]) else box["u"], 1, "u")[0]

    axes = [np.linspace(lo, hi, samples_per_axis) for lo, hi in x_rng]
    axes += [np.linspace(lo, hi, samples_per_axis) for lo, hi in p_rng]
    axes.append(np.linspace(u_rng[0], u_rng[1], samples_per_axis))
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.stack([m.ravel() for m in mesh], axis=-1)

    rng = np.random.default_rng(seed)
    if random_points:
        lows = np.array([lo for lo, _ in x_rng + p_rng] + [u_rng[0]])
        highs = np.array([hi for _, hi in x_rng + p_rng] + [u_rng[1]])
        rand = rng.uniform(lows, highs, size=(random_points, 2 * d + 1))
        pts = np.concatenate([lattice, rand], axis=0)
    else:
        pts = lattice

    xs = pts[:, :d]
    ps = pts[:, d:2 * d]
    us = pts[:, 2 * d]
    vals = jacobi_bracket(h, f, xs, ps, us, fd_step=fd_step)

    i_abs = int(np.argmax(np.abs(vals)))
    max_pos = float(vals.max())
    min_neg = float(vals.min())
    max_abs = float(abs(vals[i_abs]))
    if max_abs <= tolerance:
        verdict = "commuting"
    elif max_pos <= tolerance:
        verdict = "one_sided_le"
    elif -min_neg <= tolerance:
        verdict = "one_sided_ge"
    else:
        verdict = "none"
    arg = (tuple(float(v) for v in xs[i_abs]), tuple(float(v) for v in ps[i_abs]), float(us[i_abs]))
    return BracketReport(
        h_name=h.name,
        f_name=f.name,
        samples=pts.shape[0],
        max_abs=max_abs,
        max_pos=max_pos,
        min_neg=min_neg,
        arg_extreme=arg,
        tolerance=float(tolerance),
        verdict=verdict,
        seed=seed,
    )


def scan_points(
    h: HamiltonianSpec,
    f: HamiltonianSpec,
    box: dict,
    d: int = 1,
    samples_per_axis: int = 5,
    fd_step: float = 1e-5,
):
    """Lattice-only bracket evaluation, returned as rows for CSV output."""
    x_rng = _axis_ranges(box["x"], d, "x")
    p_rng = _axis_ranges(box["p"], d, "p")
    u_rng = _axis_ranges([box["u"]] if np.isscalar(box["u"][0]) else box["u"], 1, "u")[0]
    axes = [np.linspace(lo, hi, samples_per_axis) for lo, hi in x_rng]
    axes += [np.linspace(lo, hi, samples_per_axis) for lo, hi in p_rng]
    axes.append(np.linspace(u_rng[0], u_rng[1], samples_per_axis))
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    vals = jacobi_bracket(h, f, pts[:, :d], pts[:, d:2 * d], pts[:, 2 * d], fd_step=fd_step)
    return pts, vals
