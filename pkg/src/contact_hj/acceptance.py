"""Self-contained acceptance cells: one per shipped guarantee.

Each cell returns a CellResult with a single measured number, its threshold,
and deterministic CSV artifacts.  The CLI ``selftest`` subcommand runs the
whole table; the test suite asserts every cell individually.  Cells accept a
profile ("full" or "quick") so the determinism cell can re-run the others at
reduced scale, and a worker count that is threaded into the stepper.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import csvio
from .bracket import jacobi_bracket, scan_points
from .grid import GridFunction, GridSpec
from .hamiltonian import builtin_catalog, compose_scalar, get_hamiltonian, scale
from .harness import commutation_defect, multitime_solve, reparam_check, scaling_check
from .oracle import OracleConfig, brute_force_value
from .semigroup import SemigroupConfig, barrier_bounds, evolve
from .transform import VelocityGrid, biconjugate_profile

SEED = 0x5EED


@dataclass
class CellResult:
    cell_id: str
    description: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""
    artifacts: dict = field(default_factory=dict)


def _cfg(dt: float, workers: int, refine: bool = True, m: int = 161) -> SemigroupConfig:
    return SemigroupConfig(vg=VelocityGrid(8.0, m), dt=dt, workers=workers, refine=refine)


def _pl_values(grid: GridSpec, rng: np.random.Generator, lo: float, hi: float,
               knots: int = 9) -> np.ndarray:
    xs = np.linspace(-grid.half_width, grid.half_width, knots)
    ys = rng.uniform(lo, hi, knots)
    if grid.periodic:
        ys[-1] = ys[0]
    return np.interp(grid.axis_nodes(), xs, ys)


def _cos_initial(grid: GridSpec) -> GridFunction:
    return GridFunction.from_callable(
        grid, lambda xs: np.cos(np.pi * xs[..., 0] / grid.half_width)
    )


def _abs_initial(grid: GridSpec) -> GridFunction:
    return GridFunction.from_callable(grid, lambda xs: np.abs(xs[..., 0]))


def hopf_lax_abs_exact(x: np.ndarray, t: float) -> np.ndarray:
    """Closed-form evolution of |x| under H = |p|^2/2."""
    ax = np.abs(x)
    return np.where(ax >= t, ax - t / 2.0, x * x / (2.0 * t))


# ---------------------------------------------------------------- cells


def cell_a1(profile: str, workers: int) -> CellResult:
    spec = get_hamiltonian("quadratic")
    vg = VelocityGrid(8.0, 801)
    pg = VelocityGrid(2.0, 201)
    plat, hval, biconj, err = biconjugate_profile(spec, 0.0, 0.0, vg, pg)
    measured = float(err.max())
    return CellResult(
        "A1", "legendre biconjugate recovery", measured <= 1e-3, measured, 1e-3,
        detail="H=|p|^2/2 on |p|<=2, v_max=8, m=801",
        artifacts={"a1_biconjugate.csv": csvio.biconjugate_csv(plat, hval, biconj, err)},
    )


def cell_a2(profile: str, workers: int) -> CellResult:
    if profile == "quick":
        grid = GridSpec(101, 4.0, boundary="clamped")
        dt, t = 2e-3, 0.5
    else:
        grid = GridSpec(201, 4.0, boundary="clamped")
        dt, t = 1e-3, 1.0
    spec = get_hamiltonian("quadratic")
    u0 = _abs_initial(grid)
    u = evolve(spec, u0, t, _cfg(dt, workers))
    x = grid.axis_nodes()
    exact = hopf_lax_abs_exact(x, t)
    mask = np.abs(x) <= 2.0
    err = np.abs(u.values - exact)
    measured = float(err[mask].max())
    thr = 5.0 * grid.h
    rows = ((x[i], u.values[i], exact[i], err[i]) for i in range(x.size))
    return CellResult(
        "A2", "quadratic front regression", measured <= thr, measured, thr,
        detail=f"t={t}, dt={dt}, compared on |x|<=2",
        artifacts={"a2_hopflax.csv": csvio.render_csv(["x", "u", "exact", "abs_err"], rows)},
    )


def cell_a3(profile: str, workers: int) -> CellResult:
    grid = GridSpec(201, 4.0)
    dt, t = (2e-3, 0.5) if profile == "quick" else (1e-3, 1.0)
    spec = get_hamiltonian("discount")
    u0 = GridFunction(grid, np.ones(grid.shape))
    u = evolve(spec, u0, t, _cfg(dt, workers))
    target = float(np.exp(-t))
    measured = float(np.max(np.abs(u.values - target)))
    return CellResult(
        "A3", "contact uniform decay", measured <= 2e-3, measured, 2e-3,
        detail=f"u0=1, t={t}, target e^-{t:g}",
        artifacts={"a3_decay.csv": csvio.grid_function_csv(u)},
    )


def _admissible_entries():
    return [e for e in builtin_catalog()
            if e.flags.convex_in_p and e.flags.superlinear_in_p]


def cell_a4(profile: str, workers: int) -> CellResult:
    grid = GridSpec(201, 4.0)
    if profile == "quick":
        n_data, dt, t = 3, 5e-3, 0.1
    else:
        n_data, dt, t = 10, 2.5e-3, 0.25
    # containment rests on the comparison principle, i.e. the plain monotone
    # minimisation; the parabolic refinement can dip below a kink
    cfg = _cfg(dt, workers, refine=False)
    worst = -np.inf
    worst_case = ""
    for i in range(n_data):
        rng = np.random.default_rng(SEED + i)
        u0 = GridFunction(grid, _pl_values(grid, rng, -1.0, 1.0))
        for spec in _admissible_entries():
            u = evolve(spec, u0, t, cfg)
            lower, upper, _ = barrier_bounds(spec, u0, t)
            v = max(float(np.max(lower.values - u.values)),
                    float(np.max(u.values - upper.values)))
            if v > worst:
                worst = v
                worst_case = f"{spec.name}, data {i}"
    return CellResult(
        "A4", "barrier containment", worst <= 0.0, worst, 0.0,
        detail=f"{n_data} seeded piecewise-linear u0 x {len(_admissible_entries())} "
               f"catalog entries, t={t}; worst at {worst_case}",
    )


def cell_a5(profile: str, workers: int) -> CellResult:
    grid = GridSpec(201, 4.0)
    if profile == "quick":
        n_pairs, dt, t = 3, 5e-3, 0.1
    else:
        n_pairs, dt, t = 10, 2e-3, 0.2
    # the plain minimisation step is order-preserving; the parabolic
    # refinement is not, so this cell runs unrefined
    cfg = _cfg(dt, workers, refine=False)
    worst = -np.inf
    for j, name in enumerate(("discount", "quadratic")):
        spec = get_hamiltonian(name)
        for i in range(n_pairs):
            rng = np.random.default_rng(SEED + 1000 * j + 2 * i)
            rng2 = np.random.default_rng(SEED + 1000 * j + 2 * i + 1)
            u0 = GridFunction(grid, _pl_values(grid, rng, -1.0, 1.0))
            v0 = GridFunction(grid, u0.values + _pl_values(grid, rng2, 0.0, 1.0))
            ut = evolve(spec, u0, t, cfg)
            vt = evolve(spec, v0, t, cfg)
            worst = max(worst, float(np.max(ut.values - vt.values)))
    return CellResult(
        "A5", "monotone comparison", worst <= 0.0, worst, 0.0,
        detail=f"{2 * n_pairs} seeded ordered pairs, t={t}, refine off",
    )


def cell_a6(profile: str, workers: int) -> CellResult:
    p1 = get_hamiltonian("p1")
    x1 = get_hamiltonian("x1")
    ucoord = get_hamiltonian("u")
    contact = get_hamiltonian("contact")
    qpot = get_hamiltonian("quadratic_potential")
    xs = np.linspace(-2.0, 2.0, 5)
    ps = np.linspace(-2.0, 2.0, 5)
    us = np.linspace(-1.0, 1.0, 3)
    gx, gp, gu = np.meshgrid(xs, ps, us, indexing="ij")
    x = gx.ravel()[:, None]
    p = gp.ravel()[:, None]
    u = gu.ravel()
    devs = {
        "p1_x1": float(np.max(np.abs(jacobi_bracket(p1, x1, x, p, u) + 1.0))),
        "contact_2contact": float(np.max(np.abs(
            jacobi_bracket(contact, scale(contact, 2.0), x, p, u)))),
        "u_p1": float(np.max(np.abs(jacobi_bracket(ucoord, p1, x, p, u)))),
        "antisymmetry": float(np.max(np.abs(
            jacobi_bracket(qpot, contact, x, p, u)
            + jacobi_bracket(contact, qpot, x, p, u)))),
    }
    measured = max(devs.values())
    pts, vals = scan_points(p1, x1, {"x": (-2, 2), "p": (-2, 2), "u": (-1, 1)},
                            samples_per_axis=5)
    return CellResult(
        "A6", "bracket exact values", measured <= 1e-9, measured, 1e-9,
        detail=", ".join(f"{k}={v:.2e}" for k, v in devs.items()),
        artifacts={"a6_bracket_p1x1.csv": csvio.bracket_csv(pts, vals, 1)},
    )


def cell_a7(profile: str, workers: int) -> CellResult:
    grid = GridSpec(201, 4.0)
    u0 = _cos_initial(grid)
    h = get_hamiltonian("contact")
    f = get_hamiltonian("scaled")
    lam = mu = 0.25
    if profile == "quick":
        dts = [5e-3, 2.5e-3, 1.25e-3]
        dt_tol = 2.5e-3
    else:
        dts = [1e-3, 5e-4, 2.5e-4]
        dt_tol = 1e-3
    reports = []
    sups = []
    for dt in dts:
        rep = commutation_defect(h, f, u0, lam, mu, _cfg(dt, workers))
        reports.append(rep)
        sups.append(rep.sup_abs_defect)
    tol_rep = reports[dts.index(dt_tol)]
    ratios = [sups[i] / sups[i + 1] if sups[i + 1] > 0 else np.inf
              for i in range(len(sups) - 1)]
    ok = tol_rep.sup_abs_defect <= tol_rep.tolerance and all(r >= 1.5 for r in ratios)
    return CellResult(
        "A7", "commuting pair defect shrink", ok, tol_rep.sup_abs_defect,
        tol_rep.tolerance,
        detail=f"sup_abs over dt={dts}: {[f'{s:.3e}' for s in sups]}, "
               f"shrink ratios {[f'{r:.2f}' for r in ratios]} (need >= 1.5)",
        artifacts={"a7_commutation.csv": csvio.commutation_csv(reports)},
    )


def cell_a8(profile: str, workers: int) -> CellResult:
    grid = GridSpec(201, 4.0)
    u0 = _cos_initial(grid)
    h = get_hamiltonian("discount")
    f = get_hamiltonian("shifted")
    lam = mu = 0.25
    dt = 2.5e-3 if profile == "quick" else 1e-3
    rep = commutation_defect(h, f, u0, lam, mu, _cfg(dt, workers))
    floor = -0.05 * lam * mu
    ok = rep.max_signed <= rep.tolerance and rep.min_signed <= floor
    measured = rep.min_signed
    return CellResult(
        "A8", "one-sided composition defect", ok, measured, floor,
        detail=f"max_signed={rep.max_signed:.4e} (tol {rep.tolerance:.4e}), "
               f"min_signed={rep.min_signed:.4e} (must be <= {floor:.4e})",
        artifacts={"a8_onesided.csv": csvio.commutation_csv([rep])},
    )


def cell_a9(profile: str, workers: int) -> CellResult:
    grid = GridSpec(201, 4.0)
    u0 = GridFunction(grid, np.ones(grid.shape))
    dt = 5e-3 if profile == "quick" else 1e-3
    defect, u_direct, _ = reparam_check(get_hamiltonian("discount"), u0, 2.0,
                                        _cfg(dt, workers))
    return CellResult(
        "A9", "time reparametrisation", defect <= 5e-3, defect, 5e-3,
        detail=f"t=2 direct vs scaled-generator unit-time run, dt={dt}",
        artifacts={"a9_reparam.csv": csvio.grid_function_csv(u_direct)},
    )


def cell_a10(profile: str, workers: int) -> CellResult:
    grid = GridSpec(201, 4.0)
    u0 = _abs_initial(grid)
    dt = 2.5e-3 if profile == "quick" else 1e-3
    h = get_hamiltonian("quadratic")
    f = get_hamiltonian("scaled(k=2,base=quadratic)")
    defect, u_a, _ = scaling_check(h, f, u0, 0.5, 1.0, 1.0, 2.0, _cfg(dt, workers))
    thr = 10.0 * dt
    return CellResult(
        "A10", "generator scaling", defect <= thr, defect, thr,
        detail=f"t=0.5, k=2, dt={dt}",
        artifacts={"a10_scaling.csv": csvio.grid_function_csv(u_a)},
    )


def cell_a11(profile: str, workers: int) -> CellResult:
    grid = GridSpec(201, 4.0)
    u0 = _abs_initial(grid)
    dt = 5e-3 if profile == "quick" else 1e-3
    cfg = _cfg(dt, workers)
    h1 = get_hamiltonian("quadratic")
    h2 = get_hamiltonian("scaled(k=2,base=quadratic)")
    u_multi = multitime_solve([h1, h2], (0.2, 0.4), u0, cfg)
    u_ref = evolve(h1, u0, 1.0, cfg)
    defect = float(np.max(np.abs(u_multi.values - u_ref.values)))
    thr = 20.0 * dt
    return CellResult(
        "A11", "multitime consistency", defect <= thr, defect, thr,
        detail="t_vec=(0.2,0.4) over (|p|^2/2, |p|^2) vs unit-time |p|^2/2 run",
        artifacts={"a11_multitime.csv": csvio.grid_function_csv(u_multi)},
    )


def cell_a12(profile: str, workers: int) -> CellResult:
    grid = GridSpec(41, 4.0, boundary="clamped")
    spec = get_hamiltonian("discount")
    u0 = _abs_initial(grid)
    if profile == "quick":
        points = [(-1.0, 0.25), (0.0, 0.5), (1.0, 0.25)]
        ocfg = OracleConfig(K=6, picard_rounds=3)
        dt = 2.5e-3
    else:
        points = [(-2.0, 0.5), (-1.0, 0.25), (0.0, 0.5), (1.0, 0.25), (2.0, 0.5)]
        ocfg = OracleConfig(K=8, picard_rounds=5)
        dt = 1e-3
    cfg = _cfg(dt, workers)
    rows = []
    worst = -np.inf
    for x, t in points:
        engine = evolve(spec, u0, t, cfg)
        ix = int(round((x + grid.half_width) / grid.h))
        ev = float(engine.values[ix])
        ov = brute_force_value(spec, u0, x, t, ocfg)
        thr = 0.05 + 5.0 * (t / ocfg.K)
        diff = abs(ov - ev)
        rows.append((x, t, ev, ov, diff, thr))
        worst = max(worst, diff - thr)
    return CellResult(
        "A12", "oracle agreement", worst <= 0.0, worst, 0.0,
        detail=f"max(|oracle-engine| - threshold) over {len(points)} points, K={ocfg.K}",
        artifacts={"a12_oracle.csv": csvio.render_csv(
            ["x", "t", "engine", "oracle", "abs_diff", "threshold"], rows)},
    )


_A13_QUICK_IDS = ["A1", "A3", "A6", "A8", "A10"]


def cell_a13(profile: str, workers: int) -> CellResult:
    ids = _A13_QUICK_IDS if profile == "quick" else [c for c in CELL_IDS if c != "A13"]
    arts = []
    for w in (1, 8):
        out = {}
        for cid in ids:
            out.update(run_cell(cid, "quick", w).artifacts)
        arts.append(out)
    same_keys = set(arts[0]) == set(arts[1])
    diffs = [k for k in arts[0] if not same_keys or arts[0][k] != arts[1].get(k)]
    n_diff = len(diffs) if same_keys else max(len(arts[0]), len(arts[1]))
    checks = [(k, len(arts[0][k])) for k in sorted(arts[0])]
    return CellResult(
        "A13", "worker determinism", same_keys and n_diff == 0, float(n_diff), 0.0,
        detail=f"{len(arts[0])} artifacts compared between 1 and 8 workers"
               + (f"; differing: {diffs}" if diffs else ""),
        artifacts={"a13_checksums.csv": csvio.render_csv(
            ["artifact", "bytes"], checks)},
    )


CELLS = {
    "A1": cell_a1, "A2": cell_a2, "A3": cell_a3, "A4": cell_a4, "A5": cell_a5,
    "A6": cell_a6, "A7": cell_a7, "A8": cell_a8, "A9": cell_a9, "A10": cell_a10,
    "A11": cell_a11, "A12": cell_a12, "A13": cell_a13,
}
CELL_IDS = list(CELLS)


def run_cell(cell_id: str, profile: str = "full", workers: int = 1) -> CellResult:
    if cell_id not in CELLS:
        raise KeyError(f"unknown acceptance cell '{cell_id}'")
    return CELLS[cell_id](profile, workers)


def function_of_generator_info(profile: str, workers: int) -> CellResult:
    """Informational only: defect of the discount semigroup against f(H), f(t)=t^2.

    The bracket of H and f(H) does not vanish when H depends on u, so no
    threshold is asserted; the measured defect is recorded for the record.
    """
    grid = GridSpec(201, 4.0)
    u0 = GridFunction.from_callable(
        grid, lambda xs: 1.0 + 0.5 * np.cos(np.pi * xs[..., 0] / 4.0)
    )
    h = get_hamiltonian("discount")
    fh = compose_scalar(h, lambda v: v * v, f_prime=lambda v: 2.0 * v,
                        name="discount_squared", u_lipschitz=12.0,
                        convex_in_p=True, superlinear_in_p=True)
    dt = 2.5e-3
    rep = commutation_defect(h, fh, u0, 0.1, 0.1, _cfg(dt, workers))
    return CellResult(
        "I1", "f(H) commutation defect (informational)", True,
        rep.sup_abs_defect, float("nan"),
        detail="f(t)=t^2 against the discount entry; recorded, not asserted",
        artifacts={"i1_fh_defect.csv": csvio.commutation_csv([rep])},
    )


def run_suite(profile: str = "full", workers: int = 1, ids=None,
              include_info: bool = True) -> list[CellResult]:
    results = [run_cell(cid, profile, workers) for cid in (ids or CELL_IDS)]
    if include_info and ids is None:
        results.append(function_of_generator_info(profile, workers))
    return results
