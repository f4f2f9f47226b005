"""Command-line front end: config ingestion, dispatch, CSV artifact emission.

Every run is described by a RunConfig that is fully validated before any
compute starts.  A plain-text ``key=value`` config file can seed the options
(``--config FILE``); explicit command-line flags win.  Exit codes: 0 success,
1 numerical failure (non-convergence, or truncation warnings escalated by
``--strict``), 2 configuration error (including unknown keys and missing
output directories).
"""

from __future__ import annotations

import argparse
import os
import re
import sys
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import csvio
from .acceptance import run_suite
from .bracket import bracket_scan, scan_points
from .errors import ConfigError, EvaluationError, NumericalError, TruncationWarning
from .grid import BIG, GridFunction, GridSpec
from .hamiltonian import HamiltonianSpec, get_hamiltonian
from .harness import commutation_defect, multitime_solve, reparam_check, scaling_check
from .oracle import OracleConfig, brute_force_value
from .semigroup import SemigroupConfig, evolve
from .transform import VelocityGrid, biconjugate_profile, default_v_max

DEFAULT_SEED = 0x5EED

SUBCOMMANDS = (
    "evolve", "legendre", "bracket", "commute", "reparam", "multitime",
    "scale", "oracle", "selftest",
)


@dataclass
class RunConfig:
    """Validated description of one CLI run (plain data, no live objects)."""

    subcommand: str
    hamiltonian: Optional[str] = None
    f_hamiltonian: Optional[str] = None
    hamiltonians: tuple = ()
    n: int = 201
    L: float = 4.0
    boundary: str = "periodic"
    dt: float = 1e-3
    vmax: Optional[float] = None
    vpoints: int = 401
    lam: float = 0.25
    mu: float = 0.25
    t: Optional[float] = None
    t_vec: tuple = ()
    k: float = 2.0
    box: dict = field(default_factory=dict)
    u0: str = "abs(x)"
    x: float = 0.0
    u: float = 0.0
    pmax: float = 2.0
    ppoints: int = 201
    K: int = 8
    vels: tuple = (-2.0, -1.0, 0.0, 1.0, 2.0)
    rounds: int = 5
    samples: int = 7
    random_points: int = 1000
    tolerance: Optional[float] = None
    fd_step: float = 1e-5
    out: Optional[str] = None
    outdir: str = "."
    seed: int = DEFAULT_SEED
    workers: int = 1
    strict: bool = False
    profile: str = "full"


# ------------------------------------------------------------ u0 grammar

_FLOAT_RE = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"


def _split_terms(s: str) -> list[str]:
    """Split a sum into signed terms at top-level +/- (parens respected)."""
    terms: list[str] = []
    cur: list[str] = []
    depth = 0
    for i, ch in enumerate(s):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ConfigError(f"unbalanced parentheses in expression '{s}'")
        if ch in "+-" and depth == 0 and cur and s[i - 1] not in "eE+-":
            terms.append("".join(cur))
            cur = []
        cur.append(ch)
    if depth != 0:
        raise ConfigError(f"unbalanced parentheses in expression '{s}'")
    if cur:
        terms.append("".join(cur))
    return terms


def parse_initial_expression(text: str):
    """Compile a sum of c, abs(x), cos(k*x), sin(k*x), x^2 into a callable.

    Returns a vectorised function of the node coordinate array.
    """
    s = text.replace(" ", "")
    if not s:
        raise ConfigError("empty u0 expression")
    parts = []
    for term in _split_terms(s):
        sign = 1.0
        while term and term[0] in "+-":
            if term[0] == "-":
                sign = -sign
            term = term[1:]
        if not term:
            raise ConfigError(f"dangling sign in u0 expression '{text}'")
        m = re.fullmatch(r"(cos|sin)\((?:(%s)\*)?x\)" % _FLOAT_RE, term)
        if m:
            fn = np.cos if m.group(1) == "cos" else np.sin
            kk = float(m.group(2)) if m.group(2) else 1.0
            parts.append((sign, lambda x, fn=fn, kk=kk: fn(kk * x)))
            continue
        if term == "abs(x)":
            parts.append((sign, np.abs))
            continue
        if term == "x^2":
            parts.append((sign, lambda x: x * x))
            continue
        if re.fullmatch(_FLOAT_RE, term):
            c = float(term)
            parts.append((sign, lambda x, c=c: c + 0.0 * x))
            continue
        raise ConfigError(
            f"u0 expression term '{term}' not recognised; allowed terms are a "
            "constant, abs(x), cos(k*x), sin(k*x), x^2"
        )

    def build(x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(x, dtype=np.float64))
        for sign, fn in parts:
            out = out + sign * fn(x)
        return out

    return build


def resolve_u0(text: str, grid: GridSpec) -> GridFunction:
    """Initial data from a CSV file path or a micro-grammar expression."""
    if os.path.exists(text):
        return csvio.read_grid_function(text, grid)
    try:
        fn = parse_initial_expression(text)
    except ConfigError as exc:
        raise ConfigError(
            f"u0 '{text}' is neither an existing file nor a valid expression ({exc})"
        ) from exc
    return GridFunction.from_callable(grid, lambda pts: fn(pts[..., 0]))


# ------------------------------------------------------------ other parsers

def parse_box(text: str) -> dict:
    """Parse 'x=-3:3,p=-3:3,u=-2:2' into a range dict."""
    box = {}
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "=" not in piece:
            raise ConfigError(f"box entry '{piece}' is not key=lo:hi")
        key, rng = piece.split("=", 1)
        key = key.strip()
        if key not in ("x", "p", "u"):
            raise ConfigError(f"unknown box key '{key}' (expected x, p, u)")
        if ":" not in rng:
            raise ConfigError(f"box entry '{piece}' is not key=lo:hi")
        lo, hi = rng.split(":", 1)
        try:
            box[key] = (float(lo), float(hi))
        except ValueError as exc:
            raise ConfigError(f"box entry '{piece}' has non-numeric bounds") from exc
    for key in ("x", "p", "u"):
        if key not in box:
            raise ConfigError(f"box is missing key '{key}'")
    return box


def split_selectors(text: str) -> list[str]:
    """Split 'a,b(k=2,base=c)' on top-level commas only."""
    parts: list[str] = []
    cur: list[str] = []
    depth = 0
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ConfigError(f"unbalanced parentheses in '{text}'")
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ConfigError(f"unbalanced parentheses in '{text}'")
    parts.append("".join(cur).strip())
    return [p for p in parts if p]


def parse_float_list(text: str, what: str) -> tuple:
    try:
        vals = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"{what} '{text}' is not a comma-separated number list") from exc
    if not vals:
        raise ConfigError(f"{what} '{text}' is empty")
    return vals


def _parse_seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError as exc:
        raise ConfigError(f"seed '{text}' is not an integer") from exc


# ------------------------------------------------------------ argument schema

def _build_parser():
    """The argparse tree plus a per-subcommand registry of option types."""
    parser = argparse.ArgumentParser(
        prog="contact-hj",
        description="Variational solvers and commutation diagnostics for "
                    "contact Hamilton-Jacobi equations.",
    )
    subs = parser.add_subparsers(dest="subcommand")
    registry: dict[str, dict] = {}
    subparser_map: dict[str, argparse.ArgumentParser] = {}

    def new_sub(name: str, help_text: str):
        sp = subs.add_parser(name, help=help_text)
        registry[name] = {}
        subparser_map[name] = sp

        def add(*flags, **kw):
            action = sp.add_argument(*flags, **kw)
            if kw.get("action") in ("store_true", "store_false"):
                typ = "flag"
            else:
                typ = kw.get("type", str)
            # config-file keys: the flag spelling(s) and the dest both work
            for flag in flags:
                if flag.startswith("--"):
                    registry[name][flag[2:].replace("-", "_")] = (action.dest, typ)
            registry[name][action.dest] = (action.dest, typ)
            return action

        add("--config", type=str, default=None,
            help="key=value file merged under the command line")
        add("--out", type=str, default=None, help="output CSV path")
        add("--workers", type=int, default=1, help="worker threads for stepping")
        add("--seed", type=str, default=None, help="RNG seed (decimal or 0x hex)")
        add("--strict", action="store_true",
            help="escalate truncation warnings to a numerical failure")
        return sp, add

    def grid_flags(add):
        add("--n", type=int, default=201, help="nodes per axis")
        add("--L", type=float, default=4.0, help="domain half width")
        add("--boundary", type=str, default="periodic",
            choices=("periodic", "clamped"))

    def stepping_flags(add):
        add("--dt", type=float, default=1e-3, help="time step")
        add("--vmax", type=float, default=None,
            help="velocity range (default: derived from |D_p H| + 2)")
        add("--vpoints", type=int, default=401, help="velocity nodes (odd)")

    sp, add = new_sub("evolve", "apply the semigroup to initial data")
    add("--hamiltonian", type=str, default=None)
    add("--u0", type=str, default="abs(x)", help="CSV file or expression")
    add("--t", type=float, default=None)
    grid_flags(add)
    stepping_flags(add)

    sp, add = new_sub("legendre", "biconjugate profile of a catalog Hamiltonian")
    add("--hamiltonian", type=str, default=None)
    add("--vmax", type=float, default=None)
    add("--vpoints", type=int, default=401)
    add("--pmax", type=float, default=2.0, help="momentum range of the profile")
    add("--ppoints", type=int, default=201, help="momentum nodes (odd)")
    add("--x", type=float, default=0.0)
    add("--u", type=float, default=0.0)

    sp, add = new_sub("bracket", "Jacobi bracket scan over a box")
    add("--H", dest="hamiltonian", type=str, default=None)
    add("--F", dest="f_hamiltonian", type=str, default=None)
    add("--box", type=str, default="x=-3:3,p=-3:3,u=-2:2")
    add("--samples", type=int, default=7, help="lattice samples per axis")
    add("--random-points", type=int, default=1000)
    add("--tolerance", type=float, default=None)
    add("--fd-step", type=float, default=1e-5)

    sp, add = new_sub("commute", "compare the two composition orders")
    add("--H", dest="hamiltonian", type=str, default=None)
    add("--F", dest="f_hamiltonian", type=str, default=None)
    add("--lambda", dest="lam", type=float, default=0.25)
    add("--mu", type=float, default=0.25)
    add("--u0", type=str, default="abs(x)")
    add("--tolerance", type=float, default=None)
    grid_flags(add)
    stepping_flags(add)

    sp, add = new_sub("reparam", "evolve H for t vs t*H for unit time")
    add("--hamiltonian", type=str, default=None)
    add("--t", type=float, default=None)
    add("--u0", type=str, default="abs(x)")
    grid_flags(add)
    stepping_flags(add)

    sp, add = new_sub("multitime", "combined generator sum_i t_i H_i for unit time")
    add("--H", dest="hamiltonians", type=str, default=None,
        help="comma-separated selectors")
    add("--t", dest="t_vec", type=str, default=None, help="comma-separated times")
    add("--u0", type=str, default="abs(x)")
    grid_flags(add)
    stepping_flags(add)

    sp, add = new_sub("scale", "mu*H + lam*F for t vs the k-scaled generator for t/k")
    add("--H", dest="hamiltonian", type=str, default=None)
    add("--F", dest="f_hamiltonian", type=str, default=None)
    add("--k", type=float, default=2.0)
    add("--t", type=float, default=None)
    add("--lambda", dest="lam", type=float, default=1.0)
    add("--mu", type=float, default=1.0)
    add("--u0", type=str, default="abs(x)")
    grid_flags(add)
    stepping_flags(add)

    sp, add = new_sub("oracle", "brute-force curve-enumeration value")
    add("--hamiltonian", type=str, default=None)
    add("--u0", type=str, default="abs(x)")
    add("--x", type=float, default=0.0)
    add("--t", type=float, default=None)
    add("--K", type=int, default=8, help="curve segments")
    add("--vels", type=str, default="-2,-1,0,1,2", help="velocity choices")
    add("--rounds", type=int, default=5, help="picard rounds on the value table")
    grid_flags(add)

    sp, add = new_sub("selftest", "run the acceptance suite and print a table")
    add("--profile", type=str, default="full", choices=("full", "quick"))
    add("--outdir", type=str, default=".", help="artifact directory")

    return parser, registry, subparser_map


def _merge_config_file(path: str, argv: list[str], sub: str, registry: dict) -> dict:
    """Typed defaults from a key=value file, validated against known keys."""
    if not os.path.exists(path):
        raise ConfigError(f"config file '{path}' not found")
    known = registry[sub]
    merged = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"config file '{path}' line {lineno}: expected key=value"
                )
            key, val = (s.strip() for s in line.split("=", 1))
            alias = key.replace("-", "_")
            if alias not in known or alias == "config":
                raise ConfigError(f"unknown config key '{key}'")
            dest, typ = known[alias]
            if typ == "flag":
                low = val.lower()
                if low not in ("true", "false", "0", "1", "yes", "no"):
                    raise ConfigError(f"config key '{key}' needs a boolean, got '{val}'")
                merged[dest] = low in ("true", "1", "yes")
            elif typ in (int, float):
                try:
                    merged[dest] = typ(val)
                except ValueError as exc:
                    raise ConfigError(
                        f"config key '{key}' needs a {typ.__name__}, got '{val}'"
                    ) from exc
            else:
                merged[dest] = val
    return merged


def _check_integral(num: float, dt: float, label: str) -> None:
    ratio = num / dt
    if abs(ratio - round(ratio)) > 1e-9 * max(1.0, abs(ratio)):
        raise ConfigError(f"{label}/dt not integral ({label}={num:g}, dt={dt:g})")


def _require(value, flag: str):
    if value is None:
        raise ConfigError(f"missing required option {flag}")
    return value


def _check_outputs(rc: RunConfig) -> None:
    if rc.out is not None:
        parent = os.path.dirname(rc.out) or "."
        if not os.path.isdir(parent):
            raise ConfigError(f"output directory '{parent}' does not exist")
    if rc.subcommand == "selftest" and not os.path.isdir(rc.outdir):
        raise ConfigError(f"output directory '{rc.outdir}' does not exist")


def parse_config(argv: Optional[list[str]] = None) -> RunConfig:
    """Parse argv (plus optional config file) into a validated RunConfig."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, registry, subparser_map = _build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        parser.print_usage(sys.stderr)
        raise ConfigError("a subcommand is required")
    if getattr(ns, "config", None):
        defaults = _merge_config_file(ns.config, argv, ns.subcommand, registry)
        # Defaults must land on the subparser: the subcommand parses into a
        # fresh namespace whose action defaults overwrite parser-level ones.
        subparser_map[ns.subcommand].set_defaults(**defaults)
        ns = parser.parse_args(argv)  # explicit flags win over file values

    rc = RunConfig(subcommand=ns.subcommand)
    for fld in vars(ns):
        if fld in ("config",):
            continue
        val = getattr(ns, fld)
        if fld == "seed":
            rc.seed = _parse_seed(val) if val is not None else DEFAULT_SEED
        elif fld == "box":
            rc.box = parse_box(val)
        elif fld == "vels":
            rc.vels = parse_float_list(val, "vels")
        elif fld == "hamiltonians":
            rc.hamiltonians = tuple(split_selectors(_require(val, "--H")))
        elif fld == "t_vec":
            rc.t_vec = parse_float_list(_require(val, "--t"), "t")
        else:
            setattr(rc, fld, val)

    _validate(rc)
    return rc


def _validate(rc: RunConfig) -> None:
    """Every numeric field checked against module preconditions, pre-compute."""
    sub = rc.subcommand
    uses_grid = sub in ("evolve", "commute", "reparam", "multitime", "scale", "oracle")
    uses_stepping = sub in ("evolve", "commute", "reparam", "multitime", "scale")

    if uses_grid:
        GridSpec(rc.n, rc.L, 1, rc.boundary)  # constructor validates
    if uses_stepping:
        if rc.dt <= 0:
            raise ConfigError("dt must be positive")
        if rc.vmax is not None:
            VelocityGrid(rc.vmax, rc.vpoints)
        else:
            VelocityGrid(1.0, rc.vpoints)  # validates vpoints alone
    if rc.workers < 1:
        raise ConfigError("workers must be >= 1")

    if sub in ("evolve", "reparam", "scale"):
        t = _require(rc.t, "--t")
        if t < 0:
            raise ConfigError("t must be nonnegative")
        if t > 0:
            _check_integral(t, rc.dt, "t")
    if sub in ("evolve", "legendre", "reparam", "oracle"):
        _require(rc.hamiltonian, "--hamiltonian")
        get_hamiltonian(rc.hamiltonian)
    if sub in ("bracket", "commute", "scale"):
        get_hamiltonian(_require(rc.hamiltonian, "--H"))
        get_hamiltonian(_require(rc.f_hamiltonian, "--F"))
    if sub == "commute":
        if rc.lam < 0 or rc.mu < 0:
            raise ConfigError("lambda and mu must be nonnegative")
        if rc.lam > 0:
            _check_integral(rc.lam, rc.dt, "lambda")
        if rc.mu > 0:
            _check_integral(rc.mu, rc.dt, "mu")
    if sub == "multitime":
        for sel in rc.hamiltonians:
            get_hamiltonian(sel)
        if len(rc.hamiltonians) != len(rc.t_vec):
            raise ConfigError(
                f"multitime got {len(rc.hamiltonians)} hamiltonians "
                f"but {len(rc.t_vec)} times"
            )
        if any(s < 0 for s in rc.t_vec):
            raise ConfigError("multitime times must be nonnegative")
        ratio = 1.0 / rc.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ConfigError(
                f"1/dt not integral (dt={rc.dt:g}); the combined run takes unit time"
            )
    if sub == "scale":
        if rc.k <= 0:
            raise ConfigError("scaling factor k must be positive")
    if sub == "legendre":
        VelocityGrid(rc.pmax, rc.ppoints)
        if rc.vmax is not None:
            VelocityGrid(rc.vmax, rc.vpoints)
    if sub == "bracket":
        if rc.samples < 2:
            raise ConfigError("samples must be >= 2")
        if rc.random_points < 0:
            raise ConfigError("random-points must be >= 0")
        if rc.fd_step <= 0:
            raise ConfigError("fd-step must be positive")
    if sub == "oracle":
        t = _require(rc.t, "--t")
        if t < 0:
            raise ConfigError("t must be nonnegative")
        OracleConfig(K=rc.K, velocity_choices=rc.vels, picard_rounds=rc.rounds)
    _check_outputs(rc)


# ------------------------------------------------------------ runners

def _grid(rc: RunConfig) -> GridSpec:
    return GridSpec(rc.n, rc.L, 1, rc.boundary)


def _stepper_config(rc: RunConfig, specs: list[HamiltonianSpec],
                    u0: GridFunction) -> SemigroupConfig:
    """Semigroup knobs with the velocity range derived per run when unset."""
    if rc.vmax is not None:
        vmax = rc.vmax
    else:
        p_bound = max(1.0, u0.lip_estimate) + 1.0
        finite = u0.values[np.abs(u0.values) < BIG / 2]
        u_lo = float(finite.min()) - 1.0
        u_hi = float(finite.max()) + 1.0
        vmax = max(
            default_v_max(s, (-rc.L, rc.L), p_bound, (u_lo, u_hi)) for s in specs
        )
    return SemigroupConfig(vg=VelocityGrid(vmax, rc.vpoints), dt=rc.dt,
                           workers=rc.workers)


def _write_out(rc: RunConfig, text: str) -> None:
    if rc.out is not None:
        csvio.write_text(rc.out, text)
        print(f"wrote {rc.out}")


def run_evolve(rc: RunConfig) -> int:
    spec = get_hamiltonian(rc.hamiltonian)
    grid = _grid(rc)
    u0 = resolve_u0(rc.u0, grid)
    cfg = _stepper_config(rc, [spec], u0)
    u = evolve(spec, u0, rc.t, cfg)
    _write_out(rc, csvio.grid_function_csv(u))
    print(f"evolve {spec.name}: t={rc.t:g} dt={rc.dt:g} "
          f"min={csvio.fmt(u.values.min())} max={csvio.fmt(u.values.max())}")
    return 0


def run_legendre(rc: RunConfig) -> int:
    spec = get_hamiltonian(rc.hamiltonian)
    if rc.vmax is not None:
        vmax = rc.vmax
    else:
        vmax = default_v_max(spec, (-4.0, 4.0), rc.pmax, (-2.0, 2.0))
    vg = VelocityGrid(vmax, rc.vpoints)
    pg = VelocityGrid(rc.pmax, rc.ppoints)
    plat, hval, biconj, err = biconjugate_profile(spec, rc.x, rc.u, vg, pg)
    _write_out(rc, csvio.biconjugate_csv(plat, hval, biconj, err))
    print(f"legendre {spec.name}: vmax={vmax:g} vpoints={rc.vpoints} "
          f"max|H**-H|={csvio.fmt(err.max())}")
    return 0


def run_bracket(rc: RunConfig) -> int:
    h = get_hamiltonian(rc.hamiltonian)
    f = get_hamiltonian(rc.f_hamiltonian)
    report = bracket_scan(h, f, rc.box, samples_per_axis=rc.samples,
                          random_points=rc.random_points, tolerance=rc.tolerance,
                          fd_step=rc.fd_step, seed=rc.seed)
    pts, vals = scan_points(h, f, rc.box, samples_per_axis=rc.samples,
                            fd_step=rc.fd_step)
    _write_out(rc, csvio.bracket_csv(pts, vals, 1))
    print(f"bracket {{{h.name}, {f.name}}}: verdict={report.verdict} "
          f"max_abs={csvio.fmt(report.max_abs)} max_pos={csvio.fmt(report.max_pos)} "
          f"min_neg={csvio.fmt(report.min_neg)} tol={csvio.fmt(report.tolerance)} "
          f"samples={report.samples} seed={hex(report.seed)}")
    return 0


def run_commute(rc: RunConfig) -> int:
    h = get_hamiltonian(rc.hamiltonian)
    f = get_hamiltonian(rc.f_hamiltonian)
    grid = _grid(rc)
    u0 = resolve_u0(rc.u0, grid)
    cfg = _stepper_config(rc, [h, f], u0)
    rep = commutation_defect(h, f, u0, rc.lam, rc.mu, cfg, tolerance=rc.tolerance)
    _write_out(rc, csvio.commutation_csv([rep]))
    print(f"commute {h.name} then {f.name} vs reverse: verdict={rep.verdict} "
          f"sup_abs={csvio.fmt(rep.sup_abs_defect)} max_signed={csvio.fmt(rep.max_signed)} "
          f"min_signed={csvio.fmt(rep.min_signed)} tol={csvio.fmt(rep.tolerance)}")
    return 0


def run_reparam(rc: RunConfig) -> int:
    spec = get_hamiltonian(rc.hamiltonian)
    grid = _grid(rc)
    u0 = resolve_u0(rc.u0, grid)
    cfg = _stepper_config(rc, [spec], u0)
    defect, u_direct, _ = reparam_check(spec, u0, rc.t, cfg)
    _write_out(rc, csvio.grid_function_csv(u_direct))
    print(f"reparam {spec.name}: t={rc.t:g} defect={csvio.fmt(defect)}")
    return 0


def run_multitime(rc: RunConfig) -> int:
    specs = [get_hamiltonian(sel) for sel in rc.hamiltonians]
    grid = _grid(rc)
    u0 = resolve_u0(rc.u0, grid)
    cfg = _stepper_config(rc, specs, u0)
    u = multitime_solve(specs, rc.t_vec, u0, cfg)
    _write_out(rc, csvio.grid_function_csv(u))
    names = ", ".join(s.name for s in specs)
    print(f"multitime ({names}) at t={rc.t_vec}: "
          f"min={csvio.fmt(u.values.min())} max={csvio.fmt(u.values.max())}")
    return 0


def run_scale(rc: RunConfig) -> int:
    h = get_hamiltonian(rc.hamiltonian)
    f = get_hamiltonian(rc.f_hamiltonian)
    grid = _grid(rc)
    u0 = resolve_u0(rc.u0, grid)
    cfg = _stepper_config(rc, [h, f], u0)
    defect, u_a, _ = scaling_check(h, f, u0, rc.t, rc.lam, rc.mu, rc.k, cfg)
    _write_out(rc, csvio.grid_function_csv(u_a))
    print(f"scale k={rc.k:g}: t={rc.t:g} defect={csvio.fmt(defect)}")
    return 0


def run_oracle(rc: RunConfig) -> int:
    spec = get_hamiltonian(rc.hamiltonian)
    grid = _grid(rc)
    u0 = resolve_u0(rc.u0, grid)
    ocfg = OracleConfig(K=rc.K, velocity_choices=rc.vels, picard_rounds=rc.rounds)
    value = brute_force_value(spec, u0, rc.x, rc.t, ocfg)
    _write_out(rc, csvio.render_csv(["x", "t", "value"], [(rc.x, rc.t, value)]))
    print(f"oracle {spec.name}: x={rc.x:g} t={rc.t:g} K={rc.K} "
          f"value={csvio.fmt(value)}")
    return 0


def run_selftest(rc: RunConfig) -> int:
    results = run_suite(rc.profile, rc.workers)
    width = max(len(r.description) for r in results)
    failures = 0
    for r in results:
        for name, text in r.artifacts.items():
            csvio.write_text(os.path.join(rc.outdir, name), text)
        if np.isnan(r.threshold):
            status = "INFO"
            bound = ""
        else:
            status = "PASS" if r.passed else "FAIL"
            bound = f" threshold={csvio.fmt(r.threshold)}"
            failures += 0 if r.passed else 1
        print(f"{r.cell_id:<4} {r.description:<{width}}  {status}  "
              f"measured={csvio.fmt(r.measured)}{bound}")
        if not r.passed and not np.isnan(r.threshold):
            print(f"     {r.detail}")
    total = sum(1 for r in results if not np.isnan(r.threshold))
    print(f"{total - failures}/{total} cells passed ({rc.profile} profile)")
    return 0 if failures == 0 else 1


RUNNERS = {
    "evolve": run_evolve,
    "legendre": run_legendre,
    "bracket": run_bracket,
    "commute": run_commute,
    "reparam": run_reparam,
    "multitime": run_multitime,
    "scale": run_scale,
    "oracle": run_oracle,
    "selftest": run_selftest,
}


def run(rc: RunConfig) -> int:
    """Dispatch a validated RunConfig; exit code semantics as in main()."""
    try:
        with warnings.catch_warnings():
            if rc.strict:
                warnings.simplefilter("error", TruncationWarning)
            return RUNNERS[rc.subcommand](rc)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TruncationWarning as exc:
        print(f"numerical failure (strict): {exc}", file=sys.stderr)
        return 1
    except (NumericalError, EvaluationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


def main(argv: Optional[list[str]] = None) -> int:
    try:
        rc = parse_config(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse --help or bad flags
        return int(exc.code or 0)
    return run(rc)


if __name__ == "__main__":
    sys.exit(main())
