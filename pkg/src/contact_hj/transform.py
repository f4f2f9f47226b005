"""Discrete Legendre-Fenchel transforms on truncated velocity grids.

The conjugate ``H*(x, p, u) = sup_v (v.p - H(x, v, u))`` is approximated by a
direct scan over a finite symmetric velocity lattice.  Everything here is a
pure function of its inputs: ties go to the lexicographically smallest lattice
index, so results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .hamiltonian import HamiltonianSpec, eval_gradients

DEFAULT_VELOCITY_POINTS = 401


@dataclass(frozen=True)
class VelocityGrid:
    """Symmetric lattice ``{-v_max, ..., 0, ..., +v_max}^d`` with m odd nodes per axis."""

    v_max: float
    m: int = DEFAULT_VELOCITY_POINTS
    d: int = 1

    def __post_init__(self) -> None:
        if self.v_max <= 0:
            raise ConfigError("velocity grid v_max must be positive")
        if self.m < 3 or self.m % 2 == 0:
            raise ConfigError("velocity grid m must be odd and >= 3")
        if self.d not in (1, 2):
            raise ConfigError("velocity grid d must be 1 or 2")

    @property
    def spacing(self) -> float:
        return 2.0 * self.v_max / (self.m - 1)

    def axis_nodes(self) -> np.ndarray:
        return symmetric_axis(self.v_max, self.m)

    def lattice(self) -> np.ndarray:
        """All lattice points, shape ``(m**d, d)``, C-order (lexicographic)."""
        ax = self.axis_nodes()
        if self.d == 1:
            return ax[:, None]
        vx, vy = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([vx.ravel(), vy.ravel()], axis=-1)


def symmetric_axis(v_max: float, m: int) -> np.ndarray:
    """Odd-length axis containing 0 exactly and mirror-symmetric node pairs."""
    half = np.linspace(0.0, v_max, (m + 1) // 2)
    return np.concatenate([-half[:0:-1], half])


@dataclass(frozen=True)
class LegendreResult:
    value: float
    argmax_index: tuple[int, ...]
    argmax_v: np.ndarray
    interior: bool


def _quantize(u: float, q: float = 1e-9) -> int:
    return int(round(u / q))


def legendre_transform(
    spec: HamiltonianSpec,
    x,
    u: float,
    p,
    vg: VelocityGrid,
    memo: Optional[dict] = None,
) -> LegendreResult:
    """Conjugate of ``H(x, . , u)`` at momentum ``p`` by direct lattice scan.

    ``memo``, when supplied by the caller, caches results keyed on the
    quantized ``(x, p, u)`` triple (1e-9 quantum in u); hits and misses give
    identical values because the computation is a pure function.
    """
    if not spec.flags.superlinear_in_p:
        raise ConfigError(
            f"legendre transform of '{spec.name}' rejected: superlinear_in_p flag is off"
        )
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    p = np.atleast_1d(np.asarray(p, dtype=np.float64))
    if memo is not None:
        key = (x.tobytes(), p.tobytes(), _quantize(float(u)), vg.v_max, vg.m, vg.d)
        hit = memo.get(key)
        if hit is not None:
            return hit

    lat = vg.lattice()
    scores = lat @ p - spec.eval(x[None, :], lat, float(u))
    flat = int(np.argmax(scores))  # first occurrence = lexicographically smallest
    idx = np.unravel_index(flat, (vg.m,) * vg.d)
    interior = all(0 < i < vg.m - 1 for i in idx)
    res = LegendreResult(
        value=float(scores[flat]),
        argmax_index=tuple(int(i) for i in idx),
        argmax_v=lat[flat].copy(),
        interior=interior,
    )
    if memo is not None:
        memo.setdefault(key, res)
    return res


def conjugate_batch(
    spec: HamiltonianSpec,
    xs: np.ndarray,
    q: np.ndarray,
    ws: np.ndarray,
    v_lattice: np.ndarray,
):
    """Vectorised conjugate at one momentum ``q`` over many base points.

    ``xs``: (N, d) evaluation points, ``ws``: (N,) u-arguments, ``v_lattice``:
    (M, d).  Returns ``(values (N,), boundary_attained bool)`` where the flag
    reports whether any point attained its max on the lattice hull.
    """
    scores = v_lattice @ q - spec.eval(xs[:, None, :], v_lattice[None, :, :], ws[:, None])
    vals = scores.max(axis=1)
    m = v_lattice.shape[0]
    if m >= 3:
        # hull detection without a full argmax: compare against the max over
        # hull columns only (first/last along each axis in C-order)
        hull_mask = np.zeros(m, dtype=bool)
        hull_mask[0] = hull_mask[-1] = True
        d = v_lattice.shape[1]
        if d > 1:
            axis_m = int(round(m ** (1.0 / d)))
            idx = np.arange(m)
            for ax in range(d):
                coord = (idx // (axis_m ** (d - 1 - ax))) % axis_m
                hull_mask |= (coord == 0) | (coord == axis_m - 1)
        hull_max = scores[:, hull_mask].max(axis=1)
        boundary = bool(np.any(hull_max >= vals))
    else:
        boundary = True
    return vals, boundary


def biconjugate_profile(
    spec: HamiltonianSpec,
    x,
    u: float,
    vg: VelocityGrid,
    pg: VelocityGrid,
):
    """Rows ``(p, H, (H*)*, |err|)`` over the momentum lattice ``pg``.

    The inner conjugate is scanned over ``vg``; the outer one over ``pg``
    itself.  For convex superlinear ``H`` the biconjugate should reproduce
    ``H`` up to the lattice resolution.
    """
    if not (spec.flags.convex_in_p and spec.flags.superlinear_in_p):
        raise ConfigError(
            f"biconjugate check of '{spec.name}' rejected: needs convex_in_p and superlinear_in_p"
        )
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    plat = pg.lattice()  # (Mp, d)
    vlat = vg.lattice()  # (Mv, d)
    uval = float(u)
    # H*(p_i) for every momentum node
    hstar = (plat @ vlat.T - spec.eval(x[None, :], vlat, uval)[None, :]).max(axis=1)
    # (H*)*(q_j) = max_i (p_i . q_j - H*(p_i))
    biconj = (plat @ plat.T - hstar[:, None]).max(axis=0)
    hval = spec.eval(x[None, :], plat, uval)
    return plat, hval, biconj, np.abs(biconj - hval)


def biconjugate_check(spec: HamiltonianSpec, x, u: float, vg: VelocityGrid, pg: VelocityGrid) -> float:
    """Max pointwise deviation ``|(H*)* - H|`` over the momentum lattice."""
    _, _, _, err = biconjugate_profile(spec, x, u, vg, pg)
    return float(err.max())


def default_v_max(
    spec: HamiltonianSpec,
    x_bounds: tuple[float, float],
    p_bound: float,
    u_bounds: tuple[float, float],
    samples: int = 9,
) -> float:
    """Velocity-range default: max of ``|D_p H|`` over a sample box, plus 2.

    For convex ``H`` the variational minimizer moves with velocity ``D_p H``
    at the optimum, so this covers the argmax with slack; the interior flag
    of the transform audits the choice at run time.
    """
    xs = np.linspace(x_bounds[0], x_bounds[1], samples)
    ps = np.linspace(-abs(p_bound), abs(p_bound), samples)
    us = np.linspace(u_bounds[0], u_bounds[1], max(3, samples // 3))
    gx, gp, gu = np.meshgrid(xs, ps, us, indexing="ij")
    _, dp, _ = eval_gradients(spec, gx.ravel()[:, None], gp.ravel()[:, None], gu.ravel())
    return float(np.max(np.abs(dp))) + 2.0
