"""Variational time stepping for contact Hamilton-Jacobi dynamics.

One step of size ``dt`` replaces the grid function ``u`` by

    u+(x) = min_y  u(y) + dt * H*(x, (x - y) / dt, u(y))

where ``y`` ranges over grid nodes within the admissible reach
``|x - y| <= v_max * dt`` (never fewer than the immediate neighbours) and
``H*`` is the velocity conjugate evaluated with the u-argument frozen at the
base point ``y``.  An optional three-point parabolic refinement through the
winning node's spatial neighbours removes the leading node-quantisation error;
it is exact for quadratic-in-velocity Hamiltonians acting on locally
linear or quadratic data.

The minimisation over nodes is resolved with first-occurrence argmin over
candidates ordered by ascending base-node index, so ties are reproducible.
Conjugates for node offsets faster than the configured velocity grid are
scanned on an internal widened lattice that doubles its range (keeping its
spacing) while the argmax sits on the hull, up to a fixed number of times.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericalError, TruncationWarning
from .grid import BIG, GridFunction, GridSpec, SpaceTimeFunction, point_source_values
from .hamiltonian import HamiltonianSpec
from .transform import VelocityGrid, conjugate_batch, symmetric_axis

_WIDE_POINTS = 513
_MAX_WIDENINGS = 4


@dataclass(frozen=True)
class SemigroupConfig:
    """Knobs for the variational stepper.

    ``search_radius`` widens the node search window beyond the derived
    geometric reach; it may never shrink it below that reach.
    """

    vg: VelocityGrid
    dt: float = 1e-3
    picard_tol: float = 1e-10
    picard_max_iter: int = 200
    refine: bool = True
    search_radius: Optional[int] = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ConfigError("dt must be positive")
        if self.picard_tol <= 0:
            raise ConfigError("picard_tol must be positive")
        if self.picard_max_iter < 1:
            raise ConfigError("picard_max_iter must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.search_radius is not None and self.search_radius < 1:
            raise ConfigError("search_radius must be >= 1 when given")


@dataclass
class EvolveResult:
    """Full time table of an evolution, with optional backpointers.

    ``backpointers[j, i]`` is the row into ``offsets`` of the winning base
    node when stepping from time level ``j`` to ``j + 1`` at flat node ``i``.
    """

    table: SpaceTimeFunction
    backpointers: Optional[np.ndarray]
    offsets: np.ndarray
    k_search: int


@dataclass
class FixedPointResult:
    table: SpaceTimeFunction
    iterations: int
    residuals: tuple[float, ...]
    converged: bool


@dataclass
class VariationalReport:
    """``max_excess`` is the largest sum of increments over any contiguous
    stretch of the curve; nonpositive means the variational inequality holds."""

    max_excess: float
    increments: np.ndarray


class _Stepper:
    """Precomputed machinery for repeated steps on one (spec, grid, dt)."""

    def __init__(self, spec: HamiltonianSpec, grid: GridSpec, dt: float, cfg: SemigroupConfig):
        if not (spec.flags.convex_in_p and spec.flags.superlinear_in_p):
            raise ConfigError(
                f"hamiltonian '{spec.name}' not admissible for variational stepping: "
                "needs convex_in_p and superlinear_in_p flags"
            )
        if dt <= 0:
            raise ConfigError("dt must be positive")
        if spec.u_lipschitz * dt >= 1.0:
            raise ConfigError(
                f"dt={dt:g} too large for u_lipschitz={spec.u_lipschitz:g}: need dt * u_lipschitz < 1"
            )
        if cfg.vg.d != grid.d:
            raise ConfigError("velocity grid dimension does not match spatial grid")
        self.spec = spec
        self.grid = grid
        self.dt = float(dt)
        self.cfg = cfg
        h = grid.h
        geometric = cfg.vg.v_max * self.dt / h
        need = max(1, int(math.ceil(geometric - 1e-12)))
        if cfg.search_radius is not None:
            if cfg.search_radius < need:
                raise ConfigError(
                    f"search_radius={cfg.search_radius} smaller than geometric reach {need}"
                )
            self.k_search = int(cfg.search_radius)
        else:
            self.k_search = need

        # Offsets ordered so that first-occurrence argmin picks the smallest
        # base-node index: descending k along each axis (y = i - k).
        ks = list(range(self.k_search + 1, -(self.k_search + 2), -1))
        if grid.d == 1:
            self.offsets = [(k,) for k in ks]
        else:
            self.offsets = [(k1, k2) for k1 in ks for k2 in ks]
        self.n_off = len(self.offsets)
        row_of = {off: r for r, off in enumerate(self.offsets)}
        self.cand_rows = np.array(
            [all(abs(k) <= self.k_search for k in off) for off in self.offsets]
        )
        self.edge_rows = np.array(
            [
                c and any(abs(k) == self.k_search for k in off)
                for off, c in zip(self.offsets, self.cand_rows)
            ]
        )
        # Spatial-neighbour rows: offset k+e_a means base node one step down axis a.
        self.row_plus = []
        self.row_minus = []
        for a in range(grid.d):
            plus = np.full(self.n_off, -1, dtype=np.int64)
            minus = np.full(self.n_off, -1, dtype=np.int64)
            for r, off in enumerate(self.offsets):
                up = list(off)
                up[a] += 1
                dn = list(off)
                dn[a] -= 1
                plus[r] = row_of.get(tuple(up), -1)
                minus[r] = row_of.get(tuple(dn), -1)
            self.row_plus.append(plus)
            self.row_minus.append(minus)

        self.xs = grid.mesh().reshape(-1, grid.d)
        self.n_nodes = self.xs.shape[0]
        self.offset_array = np.array(self.offsets, dtype=np.int64)
        self._config_lattice = cfg.vg.lattice()
        self._axis_state: dict[tuple, dict] = {}
        self._lattice_cache: dict[tuple, np.ndarray] = {}
        self._valid_masks = {off: self._make_valid_mask(off) for off in self.offsets}
        self._hstar_cache: dict[tuple, np.ndarray] = {}
        self._pool: Optional[ThreadPoolExecutor] = None
        self.trunc_hits = 0
        self.config_boundary = False
        self.wide_exhausted = False

    # -- plumbing ---------------------------------------------------------

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None

    def _chunks(self):
        w = self.cfg.workers
        n = self.n_nodes
        if w <= 1 or n < 2 * w:
            return [(0, n)]
        size = (n + w - 1) // w
        return [(a, min(a + size, n)) for a in range(0, n, size)]

    def _make_valid_mask(self, off):
        if self.grid.periodic:
            return None
        mask = np.ones(self.grid.shape, dtype=bool)
        for a, k in enumerate(off):
            sl = [slice(None)] * self.grid.d
            if k > 0:
                sl[a] = slice(0, k)
                mask[tuple(sl)] = False
            elif k < 0:
                sl[a] = slice(self.grid.shape[a] + k, None)
                mask[tuple(sl)] = False
        return mask.ravel()

    def _shift(self, shaped: np.ndarray, off) -> np.ndarray:
        return np.roll(shaped, off, axis=tuple(range(self.grid.d))).ravel()

    def _q_of(self, off) -> np.ndarray:
        return np.array(off, dtype=np.float64) * (self.grid.h / self.dt)

    def _state_of(self, off) -> dict:
        st = self._axis_state.get(off)
        if st is None:
            q = self._q_of(off)
            qmax = float(np.max(np.abs(q)))
            if qmax <= self.cfg.vg.v_max * (1 + 1e-9):
                st = {"kind": "config"}
            else:
                st = {
                    "kind": "wide",
                    "v": max(self.cfg.vg.v_max, 1.25 * qmax + 1.0),
                    "m": _WIDE_POINTS,
                    "widenings": 0,
                }
            self._axis_state[off] = st
        return st

    def _lattice_of(self, st) -> np.ndarray:
        if st["kind"] == "config":
            return self._config_lattice
        key = (st["v"], st["m"])
        lat = self._lattice_cache.get(key)
        if lat is None:
            ax = symmetric_axis(st["v"], st["m"])
            if self.grid.d == 1:
                lat = ax[:, None]
            else:
                vx, vy = np.meshgrid(ax, ax, indexing="ij")
                lat = np.stack([vx.ravel(), vy.ravel()], axis=-1)
            self._lattice_cache[key] = lat
        return lat

    def _conjugate_row(self, off, weval: np.ndarray) -> np.ndarray:
        """H*(x_i, q_off, w_i) for all nodes, with deterministic widening."""
        if self.spec.flags.u_independent:
            cached = self._hstar_cache.get(off)
            if cached is not None:
                return cached
        q = self._q_of(off)
        vals = np.empty(self.n_nodes)
        while True:
            st = self._state_of(off)
            lat = self._lattice_of(st)
            chunks = self._chunks()

            def run(ab):
                a, b = ab
                return ab, conjugate_batch(self.spec, self.xs[a:b], q, weval[a:b], lat)

            boundary = False
            if self._pool is not None and len(chunks) > 1:
                results = list(self._pool.map(run, chunks))
            else:
                results = [run(ab) for ab in chunks]
            for (a, b), (v, bflag) in results:
                vals[a:b] = v
                boundary = boundary or bflag
            if not boundary:
                break
            if st["kind"] == "config":
                self.config_boundary = True
                break
            if st["widenings"] >= _MAX_WIDENINGS:
                self.wide_exhausted = True
                break
            st["v"] *= 2.0
            st["m"] = 2 * st["m"] - 1
            st["widenings"] += 1
        if self.spec.flags.u_independent:
            self._hstar_cache[off] = vals
        return vals

    # -- the step ---------------------------------------------------------

    def step_values(self, values: np.ndarray, w_values: Optional[np.ndarray] = None,
                    want_rows: bool = False):
        """One variational step on flat node values.

        ``w_values`` overrides the u-argument fed to the conjugate (used by
        the fixed-point sweeps); by default the stepped values themselves are
        used, both read at the base point.
        """
        if self._pool is None and self.cfg.workers > 1:
            self._pool = ThreadPoolExecutor(max_workers=self.cfg.workers)
        shaped = values.reshape(self.grid.shape)
        wshaped = shaped if w_values is None else w_values.reshape(self.grid.shape)
        dt = self.dt
        F = np.empty((self.n_off, self.n_nodes))
        for r, off in enumerate(self.offsets):
            u_sh = self._shift(shaped, off)
            w_sh = u_sh if w_values is None else self._shift(wshaped, off)
            sent = (u_sh >= BIG / 2) | (w_sh >= BIG / 2)
            weval = np.where(sent, 0.0, w_sh)
            hstar = self._conjugate_row(off, weval)
            f = u_sh + dt * hstar
            f = np.where(sent, BIG, f)
            valid = self._valid_masks[off]
            if valid is not None:
                f = np.where(valid, f, np.inf)
            F[r] = f

        Fc = np.where(self.cand_rows[:, None], F, np.inf)
        r_star = np.argmin(Fc, axis=0)
        ar = np.arange(self.n_nodes)
        f0 = Fc[r_star, ar]
        out = f0.copy()
        ok0 = f0 < BIG / 2
        clean = ok0.copy()
        corr_total = np.zeros(self.n_nodes)
        for a in range(self.grid.d):
            rp = self.row_plus[a][r_star]
            rm = self.row_minus[a][r_star]
            fa = F[rp, ar]  # base node one step down axis a
            fb = F[rm, ar]  # base node one step up axis a
            fin = (fa < BIG / 2) & (fb < BIG / 2)
            clean &= fin
            if self.cfg.refine:
                fa_s = np.where(fin, fa, f0)
                fb_s = np.where(fin, fb, f0)
                C = fa_s + fb_s - 2.0 * f0
                ok = ok0 & fin & (fa_s >= f0) & (fb_s >= f0) & (C > 0)
                D = fa_s - fb_s
                C_safe = np.where(ok, C, 1.0)
                corr_total += np.where(ok, D * D / (8.0 * C_safe), 0.0)
        if self.cfg.refine:
            out = f0 - corr_total
        self.trunc_hits += int(np.count_nonzero(self.edge_rows[r_star] & clean))
        if want_rows:
            return out, r_star.astype(np.int32)
        return out, None

    def emit_warnings(self, context: str) -> None:
        if self.trunc_hits:
            warnings.warn(
                f"velocity truncation in {context}: argmin hit the node search window "
                f"edge at {self.trunc_hits} node-steps",
                TruncationWarning,
                stacklevel=3,
            )
        if self.wide_exhausted:
            warnings.warn(
                f"velocity truncation in {context}: widened conjugate lattice still "
                "attained its hull after maximum widenings",
                TruncationWarning,
                stacklevel=3,
            )
        if self.config_boundary:
            warnings.warn(
                f"conjugate argmax attained on the configured velocity grid boundary "
                f"in {context}; consider a larger v_max",
                TruncationWarning,
                stacklevel=3,
            )


def _check_steps(t: float, dt: float) -> int:
    if t < 0:
        raise ConfigError("evolution time t must be nonnegative")
    ratio = t / dt
    n = int(round(ratio))
    if abs(ratio - n) > 1e-9 * max(1.0, abs(ratio)):
        raise ConfigError(f"t/dt = {ratio:g} is not integral; choose dt dividing t")
    return n


def lax_oleinik_step(spec: HamiltonianSpec, u: GridFunction, dt: float,
                     cfg: SemigroupConfig, w_values: Optional[np.ndarray] = None) -> GridFunction:
    """A single variational step of size ``dt``."""
    stepper = _Stepper(spec, u.grid, dt, cfg)
    try:
        vals, _ = stepper.step_values(
            u.values.ravel().astype(np.float64),
            None if w_values is None else np.asarray(w_values, dtype=np.float64).ravel(),
        )
        stepper.emit_warnings("step")
    finally:
        stepper.close()
    return GridFunction(u.grid, vals.reshape(u.grid.shape))


def evolve(spec: HamiltonianSpec, u0: GridFunction, t: float, cfg: SemigroupConfig) -> GridFunction:
    """Apply the semigroup for time ``t`` (must be an exact multiple of dt)."""
    n = _check_steps(t, cfg.dt)
    if n == 0:
        return u0.copy()
    stepper = _Stepper(spec, u0.grid, cfg.dt, cfg)
    try:
        vals = u0.values.ravel().astype(np.float64)
        for _ in range(n):
            vals, _ = stepper.step_values(vals)
        stepper.emit_warnings("evolve")
    finally:
        stepper.close()
    return GridFunction(u0.grid, vals.reshape(u0.grid.shape))


def evolve_table(spec: HamiltonianSpec, u0: GridFunction, t: float, cfg: SemigroupConfig,
                 want_backpointers: bool = False) -> EvolveResult:
    """Evolve keeping every intermediate time level (and optional backpointers)."""
    n = _check_steps(t, cfg.dt)
    shape = u0.grid.shape
    table = np.empty((n + 1,) + shape)
    table[0] = u0.values
    bp = np.empty((n, u0.values.size), dtype=np.int32) if want_backpointers else None
    stepper = _Stepper(spec, u0.grid, cfg.dt, cfg)
    try:
        vals = u0.values.ravel().astype(np.float64)
        for j in range(n):
            vals, rows = stepper.step_values(vals, want_rows=want_backpointers)
            table[j + 1] = vals.reshape(shape)
            if want_backpointers:
                bp[j] = rows
        stepper.emit_warnings("evolve")
        offsets = stepper.offset_array.copy()
        k_search = stepper.k_search
    finally:
        stepper.close()
    return EvolveResult(
        table=SpaceTimeFunction(u0.grid, cfg.dt, table),
        backpointers=bp,
        offsets=offsets,
        k_search=k_search,
    )


def extract_backpointer_curve(result: EvolveResult, end_index) -> np.ndarray:
    """Trace the winning base nodes backwards from ``end_index`` at the final time.

    Returns per-axis node indices, shape ``(steps + 1, d)``, chronological.
    """
    if result.backpointers is None:
        raise ConfigError("evolution was run without backpointers")
    grid = result.table.grid
    shape = grid.shape
    idx = np.atleast_1d(np.asarray(end_index, dtype=np.int64))
    if idx.size != grid.d:
        raise ConfigError("end_index dimension does not match the grid")
    n_steps = result.backpointers.shape[0]
    curve = np.empty((n_steps + 1, grid.d), dtype=np.int64)
    curve[n_steps] = idx
    cur = idx.copy()
    for j in range(n_steps - 1, -1, -1):
        flat = int(np.ravel_multi_index(tuple(cur), shape))
        off = result.offsets[result.backpointers[j, flat]]
        cur = cur - off
        if grid.periodic:
            cur = np.mod(cur, shape)
        elif np.any(cur < 0) or np.any(cur >= np.array(shape)):
            raise NumericalError("backpointer left the domain on a clamped grid")
        curve[j] = cur
    return curve


def hopf_lax(spec: HamiltonianSpec, u0: GridFunction, t: float, cfg: SemigroupConfig) -> GridFunction:
    """Evolution for u-independent Hamiltonians (classical inf-convolution).

    For specs flagged ``u_independent`` the u-argument of the conjugate is
    inert, so this is exactly ``evolve``; the separate entry point documents
    and enforces the reduction.
    """
    if not spec.flags.u_independent:
        raise ConfigError(
            f"hopf_lax requires a u-independent hamiltonian; '{spec.name}' is not flagged so"
        )
    return evolve(spec, u0, t, cfg)


def fixed_point_A(spec: HamiltonianSpec, u0: GridFunction, T: float,
                  cfg: SemigroupConfig) -> FixedPointResult:
    """Solve for the space-time table fixed under sweeping with a frozen u-argument.

    Each Picard sweep rebuilds the whole table from ``u0`` using the previous
    sweep's table as the u-argument at the base point; at the fixed point the
    table coincides with the plain evolution.  Contraction needs
    ``T * u_lipschitz < 1``.
    """
    n = _check_steps(T, cfg.dt)
    if spec.u_lipschitz * T >= 1.0 and spec.u_lipschitz > 0:
        raise ConfigError(
            f"fixed_point_A requires T * u_lipschitz < 1 (got {spec.u_lipschitz * T:g})"
        )
    shape = u0.grid.shape
    flat0 = u0.values.ravel().astype(np.float64)
    prev = np.tile(flat0, (n + 1, 1))
    stepper = _Stepper(spec, u0.grid, cfg.dt, cfg)
    residuals: list[float] = []
    converged = False
    try:
        for it in range(1, cfg.picard_max_iter + 1):
            cur = np.empty_like(prev)
            cur[0] = flat0
            for j in range(n):
                cur[j + 1], _ = stepper.step_values(cur[j], w_values=prev[j])
            finite = (np.abs(prev) < BIG / 2) & (np.abs(cur) < BIG / 2)
            diff = np.where(finite, np.abs(cur - prev), np.where(cur == prev, 0.0, np.inf))
            res = float(diff.max())
            residuals.append(res)
            prev = cur
            if res <= cfg.picard_tol:
                converged = True
                break
        stepper.emit_warnings("fixed_point_A")
    finally:
        stepper.close()
    if not converged:
        raise NumericalError(
            f"fixed_point_A did not converge: residual {residuals[-1]:.3e} "
            f"after {len(residuals)} sweeps"
        )
    table = SpaceTimeFunction(u0.grid, cfg.dt, prev.reshape((n + 1,) + shape))
    return FixedPointResult(table=table, iterations=len(residuals),
                            residuals=tuple(residuals), converged=True)


def implicit_action(spec: HamiltonianSpec, x0, u0_val: float, T: float,
                    grid: GridSpec, cfg: SemigroupConfig) -> FixedPointResult:
    """Fixed-point table grown from a single finite seed value at the node x0.

    All other nodes start at the large sentinel, so the table records the
    accumulated action of curves emanating from the seed; unreached nodes
    keep the sentinel.  ``x0`` must coincide with a grid node.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    if x0.size != grid.d:
        raise ConfigError("x0 dimension does not match the grid")
    axis = grid.axis_nodes()
    idx = []
    for a in range(grid.d):
        i = int(round((x0[a] - axis[0]) / grid.h))
        if i < 0 or i >= grid.shape[a] or abs(axis[i] - x0[a]) > 1e-9 * max(1.0, grid.h):
            raise ConfigError(f"x0={tuple(x0)} is not a grid node")
        idx.append(i)
    u0 = GridFunction(grid, point_source_values(grid, tuple(idx), u0_val))
    return fixed_point_A(spec, u0, T, cfg)


def barrier_bounds(spec: HamiltonianSpec, u0: GridFunction, t: float):
    """Constant-in-space barriers ``u0 -/+ C1 * (exp(L t) - 1) / L``.

    ``C1`` is the max of ``|H(x, Du0, u0)|`` over nodes with central-difference
    slopes (one-sided at clamped edges); ``L`` is the entry's u_lipschitz bound,
    with the L -> 0 limit ``C1 * t``.  Returns ``(lower, upper, C1)``.
    """
    if t < 0:
        raise ConfigError("barrier horizon t must be nonnegative")
    grid = u0.grid
    vals = u0.values
    h = grid.h
    grads = []
    for a in range(grid.d):
        if grid.periodic:
            g = (np.roll(vals, -1, axis=a) - np.roll(vals, 1, axis=a)) / (2.0 * h)
        else:
            g = np.gradient(vals, h, axis=a, edge_order=1)
        grads.append(g)
    du = np.stack(grads, axis=-1)
    h_vals = spec.eval(grid.mesh(), du, vals)
    c1 = float(np.max(np.abs(h_vals)))
    lam = spec.u_lipschitz
    width = c1 * t if lam == 0 else c1 * float(np.expm1(lam * t)) / lam
    lower = GridFunction(grid, vals - width)
    upper = GridFunction(grid, vals + width)
    return lower, upper, c1


def check_variational_inequality(spec: HamiltonianSpec, table: SpaceTimeFunction,
                                 curve, cfg: SemigroupConfig) -> VariationalReport:
    """Test a lattice curve against the dynamic programming inequality.

    For each step the increment is
    ``u(y_{j+1}, t_{j+1}) - u(y_j, t_j) - dt * H*(y_{j+1}, v_j, u(y_j, t_j))``
    with ``v_j`` the node displacement over ``dt``; the report's
    ``max_excess`` is the largest contiguous sum of increments.  Values are
    computed with the same conjugate machinery as the stepper, so a curve
    traced from backpointers (with refinement off) reproduces equality.
    """
    grid = table.grid
    curve = np.atleast_2d(np.asarray(curve, dtype=np.int64))
    if curve.shape[0] == 1 and grid.d == 1 and curve.shape[1] > 1:
        curve = curve.T
    n_steps = table.values.shape[0] - 1
    if curve.shape != (n_steps + 1, grid.d):
        raise ConfigError(
            f"curve shape {curve.shape} does not match table with {n_steps} steps on a "
            f"{grid.d}-d grid"
        )
    n_ax = np.array(grid.shape)
    if np.any(curve < 0) or np.any(curve >= n_ax):
        raise ConfigError("curve contains node indices outside the grid")
    stepper = _Stepper(spec, grid, table.dt, cfg)
    try:
        incs = np.empty(n_steps)
        for j in range(n_steps):
            base = curve[j]
            tgt = curve[j + 1]
            k = tgt - base
            if grid.periodic:
                k = (k + n_ax // 2) % n_ax - n_ax // 2
            if np.any(np.abs(k) > stepper.k_search):
                raise ConfigError(
                    f"curve step {j} jumps {k} nodes, beyond the search radius "
                    f"{stepper.k_search}"
                )
            off = tuple(int(v) for v in k)
            w = float(table.values[j][tuple(base)])
            u_next = float(table.values[j + 1][tuple(tgt)])
            u_base = float(table.values[j][tuple(base)])
            if abs(w) >= BIG / 2 or abs(u_base) >= BIG / 2 or abs(u_next) >= BIG / 2:
                raise ConfigError(f"curve passes through an unreached node at step {j}")
            x_t = grid.mesh()[tuple(tgt)]
            st = stepper._state_of(off)
            lat = stepper._lattice_of(st)
            hstar, _ = conjugate_batch(spec, x_t[None, :], stepper._q_of(off),
                                       np.array([w]), lat)
            incs[j] = u_next - (u_base + table.dt * float(hstar[0]))
    finally:
        stepper.close()
    best = -math.inf
    run = 0.0
    for v in incs:
        run = max(float(v), run + float(v))
        best = max(best, run)
    return VariationalReport(max_excess=best, increments=incs)
