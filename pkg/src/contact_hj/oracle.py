"""Brute-force curve-enumeration oracle.

Values are obtained by exhaustively enumerating every piecewise-constant
velocity curve on a K-segment time lattice that ends at the query point,
charging each segment the conjugate running cost

    cost = u0(g_0) + sum_i  (t/K) * H*(g_i, v_i, w(g_i, tau_i))

where ``w`` is an auxiliary estimate of the value table, itself improved over
a few Picard rounds (round 0 transports ``u0`` unchanged in time).  The
conjugate here is an independent dense sup-scan tabulated in (node, u) and
interpolated; no minimisation code is shared with the semigroup stepper.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceWarning
from .grid import BIG, GridFunction
from .hamiltonian import HamiltonianSpec

ORACLE_SWEEP_TOL = 1e-6


@dataclass(frozen=True)
class OracleConfig:
    K: int = 8
    velocity_choices: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)
    picard_rounds: int = 5
    max_curves: int = 10_000_000
    w_points: int = 129
    dense_v_points: int = 1201
    chunk: int = 8192

    def __post_init__(self) -> None:
        if self.K < 1:
            raise ConfigError("oracle K must be >= 1")
        if len(self.velocity_choices) == 0:
            raise ConfigError("oracle velocity_choices must be nonempty")
        if not any(v == 0 for v in self.velocity_choices):
            raise ConfigError("oracle velocity_choices must contain 0 (resting curve)")
        if self.picard_rounds < 1:
            raise ConfigError("oracle picard_rounds must be >= 1")
        if len(self.velocity_choices) ** self.K > self.max_curves:
            raise ConfigError(
                f"curve count {len(self.velocity_choices)}^{self.K} exceeds the "
                f"enumeration cap {self.max_curves}"
            )
        if self.w_points < 2 or self.dense_v_points < 3:
            raise ConfigError("oracle table resolutions too small")


class _Interp1D:
    """Piecewise-linear field sampling with periodic wrap or edge clamping."""

    def __init__(self, grid):
        self.L = grid.half_width
        self.periodic = grid.periodic
        nodes = grid.axis_nodes()
        if self.periodic:
            self.xp = np.concatenate([nodes, [self.L]])
        else:
            self.xp = nodes

    def prep(self, values: np.ndarray) -> np.ndarray:
        if self.periodic:
            return np.concatenate([values, values[:1]])
        return values

    def pos(self, pts: np.ndarray) -> np.ndarray:
        if self.periodic:
            return (pts + self.L) % (2.0 * self.L) - self.L
        return np.clip(pts, -self.L, self.L)

    def __call__(self, values_prepped: np.ndarray, pts: np.ndarray) -> np.ndarray:
        return np.interp(self.pos(pts), self.xp, values_prepped)


class _HstarTable:
    """Dense-scan conjugates tabulated over (node, u) per velocity choice."""

    def __init__(self, spec: HamiltonianSpec, grid, choices, w_lo, w_hi, ocfg: OracleConfig):
        nodes = grid.axis_nodes()
        if grid.periodic:
            nodes = np.concatenate([nodes, [grid.half_width]])
        self.x0 = nodes[0]
        self.hx = nodes[1] - nodes[0]
        self.nx = nodes.size
        self.w_lo = w_lo
        self.hw = (w_hi - w_lo) / (ocfg.w_points - 1)
        self.nw = ocfg.w_points
        wg = np.linspace(w_lo, w_hi, ocfg.w_points)
        span = max(4.0, 3.0 * max(abs(v) for v in choices) + 1.0)
        vd = np.linspace(-span, span, ocfg.dense_v_points)
        tabs = np.empty((len(choices), self.nx, self.nw))
        xq = nodes[:, None, None, None]
        vq = vd[None, None, :, None]
        for i, vc in enumerate(choices):
            for a in range(0, self.nw, 32):
                b = min(a + 32, self.nw)
                wq = wg[None, a:b, None]
                scores = vd[None, None, :] * vc - spec.eval(xq, vq, wq)
                tabs[i, :, a:b] = scores.max(axis=2)
        self.tabs = tabs

    def lookup(self, vidx, pts, wq):
        """Bilinear sample of table ``vidx`` at positions ``pts``, u-values ``wq``."""
        fx = np.clip((pts - self.x0) / self.hx, 0.0, self.nx - 1 - 1e-12)
        ix = fx.astype(np.int64)
        tx = fx - ix
        fw = np.clip((wq - self.w_lo) / self.hw, 0.0, self.nw - 1 - 1e-12)
        iw = fw.astype(np.int64)
        tw = fw - iw
        t00 = self.tabs[vidx, ix, iw]
        t01 = self.tabs[vidx, ix, iw + 1]
        t10 = self.tabs[vidx, ix + 1, iw]
        t11 = self.tabs[vidx, ix + 1, iw + 1]
        return (1 - tx) * ((1 - tw) * t00 + tw * t01) + tx * ((1 - tw) * t10 + tw * t11)


def _w_range(spec: HamiltonianSpec, u0: GridFunction, t: float):
    """A-priori range of value-table entries, via a crude barrier estimate."""
    vals = u0.values
    h = u0.grid.h
    if u0.grid.periodic:
        du = (np.roll(vals, -1) - np.roll(vals, 1)) / (2.0 * h)
    else:
        du = np.gradient(vals, h, edge_order=1)
    h0 = spec.eval(u0.grid.mesh(), du[:, None], vals)
    c1 = float(np.max(np.abs(h0)))
    lam = spec.u_lipschitz
    width = c1 * t if lam == 0 else c1 * float(np.expm1(lam * t)) / lam
    return float(vals.min()) - width - 1.0, float(vals.max()) + width + 1.0


def brute_force_value(spec: HamiltonianSpec, u0: GridFunction, x: float, t: float,
                      ocfg: OracleConfig) -> float:
    """Least curve cost over all velocity tuples ending at ``x`` at time ``t``."""
    grid = u0.grid
    if grid.d != 1:
        raise ConfigError("the oracle supports one-dimensional grids only")
    if not spec.flags.superlinear_in_p:
        raise ConfigError(
            f"oracle rejected hamiltonian '{spec.name}': superlinear_in_p flag is off"
        )
    if t < 0:
        raise ConfigError("oracle time t must be nonnegative")
    if np.any(np.abs(u0.values) >= BIG / 2):
        raise ConfigError("oracle requires finite initial data")
    interp = _Interp1D(grid)
    u0p = interp.prep(u0.values.astype(np.float64))
    if t == 0:
        return float(interp(u0p, np.array([float(x)]))[0])

    K = ocfg.K
    delta = t / K
    choices = np.array(ocfg.velocity_choices, dtype=np.float64)
    nV = choices.size
    w_lo, w_hi = _w_range(spec, u0, t)
    table = _HstarTable(spec, grid, choices, w_lo, w_hi, ocfg)
    nodes = grid.axis_nodes()

    # Picard rounds on the auxiliary w table (one dynamic-programming pass per
    # round, endpoint-evaluated u-slot frozen from the previous round).
    w_tab = np.tile(u0.values.astype(np.float64), (K + 1, 1))
    prev_tab = w_tab
    for _ in range(ocfg.picard_rounds):
        prev_tab = w_tab
        new = np.empty_like(w_tab)
        new[0] = u0.values
        for j in range(1, K + 1):
            best = None
            for vi in range(nV):
                base = interp(interp.prep(new[j - 1]), nodes - delta * choices[vi])
                hst = table.lookup(np.full(nodes.size, vi), nodes, w_tab[j])
                cand = base + delta * hst
                best = cand if best is None else np.minimum(best, cand)
            new[j] = best
        w_tab = new

    def enumerate_value(wt: np.ndarray) -> float:
        wt_prepped = [interp.prep(wt[j]) for j in range(K + 1)]
        total = nV ** K
        best = np.inf
        for a in range(0, total, ocfg.chunk):
            b = min(a + ocfg.chunk, total)
            idx = np.arange(a, b, dtype=np.int64)
            digits = np.empty((b - a, K), dtype=np.int64)
            rem = idx
            for i in range(K - 1, -1, -1):
                digits[:, i] = rem % nV
                rem = rem // nV
            vels = choices[digits]
            cum = np.cumsum(vels, axis=1)
            pos = np.empty((b - a, K + 1))
            pos[:, 0] = float(x) - delta * cum[:, -1]
            pos[:, 1:] = pos[:, :1] + delta * cum
            cost = interp(u0p, pos[:, 0])
            for i in range(1, K + 1):
                wq = interp(wt_prepped[i], pos[:, i])
                hst = table.lookup(digits[:, i - 1], interp.pos(pos[:, i]), wq)
                cost = cost + delta * hst
            m = float(cost.min())
            if m < best:
                best = m
        return best

    value = enumerate_value(w_tab)
    value_prev = enumerate_value(prev_tab)
    if abs(value - value_prev) > ORACLE_SWEEP_TOL:
        warnings.warn(
            f"oracle value still moving after {ocfg.picard_rounds} picard rounds "
            f"(last change {abs(value - value_prev):.3e})",
            ConvergenceWarning,
            stacklevel=2,
        )
    return value
