"""Hamiltonian descriptions and the built-in catalog.

A Hamiltonian here is a callable ``H(x, p, u)`` where ``x`` and ``p`` carry
the spatial dimension in their *last* axis and ``u`` is the value of the
unknown (scalar or broadcastable array).  All built-ins are plain numpy
expressions, so batched evaluation over grids of points is cheap.

Analytic gradients are optional; :func:`eval_gradients` falls back to central
finite differences per missing piece.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, EvaluationError

#: FD gradients larger than this trigger a warning (working-box boundedness).
DEFAULT_GRADIENT_CAP = 1e8


def _sq(p: np.ndarray) -> np.ndarray:
    return np.sum(p * p, axis=-1)


def _batch_zero(x, p, u):
    """A zero array with the full broadcast batch shape of (x, p, u)."""
    return 0.0 * (x[..., 0] + p[..., 0] + np.asarray(u, dtype=np.float64))


@dataclass(frozen=True)
class HamiltonianFlags:
    convex_in_p: bool = False
    superlinear_in_p: bool = False
    u_independent: bool = False


@dataclass(frozen=True)
class HamiltonianSpec:
    """A named Hamiltonian with optional analytic gradients.

    ``u_lipschitz`` is a certified bound on ``|dH/du|`` (the constant called
    Lambda by the growth estimates downstream).
    """

    name: str
    eval: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    grad_x: Optional[Callable] = None
    grad_p: Optional[Callable] = None
    grad_u: Optional[Callable] = None
    u_lipschitz: float = 0.0
    flags: HamiltonianFlags = HamiltonianFlags()

    def __post_init__(self) -> None:
        if self.u_lipschitz < 0:
            raise ConfigError("u_lipschitz must be non-negative")

    @property
    def has_analytic_gradients(self) -> bool:
        return (
            self.grad_x is not None
            and self.grad_p is not None
            and self.grad_u is not None
        )


def _as_point(v) -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr[None]
    return arr


def eval_hamiltonian(spec: HamiltonianSpec, x, p, u) -> np.ndarray | float:
    """Evaluate ``H(x, p, u)`` and fail loudly on non-finite output."""
    x = _as_point(x)
    p = _as_point(p)
    val = spec.eval(x, p, np.asarray(u, dtype=np.float64))
    if not np.all(np.isfinite(val)):
        raise EvaluationError(f"hamiltonian overflow at (x={x}, p={p}, u={u})")
    return val if np.ndim(val) else float(val)


def eval_gradients(
    spec: HamiltonianSpec,
    x,
    p,
    u,
    fd_step: float = 1e-5,
    grad_cap: float = DEFAULT_GRADIENT_CAP,
):
    """Return ``(D_x H, D_p H, dH/du)`` at one point or a batch of points.

    Analytic callables are used where the entry provides them; every missing
    piece is filled in by central differences with step ``fd_step``.
    """
    x = _as_point(x)
    p = _as_point(p)
    u = np.asarray(u, dtype=np.float64)
    d = x.shape[-1]

    def fd_vec(arg: str) -> np.ndarray:
        base = x if arg == "x" else p
        cols = []
        for i in range(d):
            e = np.zeros(d)
            e[i] = fd_step
            hi = (base + e, p, u) if arg == "x" else (x, base + e, u)
            lo = (base - e, p, u) if arg == "x" else (x, base - e, u)
            cols.append((spec.eval(*hi) - spec.eval(*lo)) / (2.0 * fd_step))
        return np.stack(np.broadcast_arrays(*cols), axis=-1) if d > 1 else np.asarray(cols[0])[..., None]

    gx = spec.grad_x(x, p, u) if spec.grad_x is not None else fd_vec("x")
    gp = spec.grad_p(x, p, u) if spec.grad_p is not None else fd_vec("p")
    if spec.grad_u is not None:
        gu = spec.grad_u(x, p, u)
    else:
        gu = (spec.eval(x, p, u + fd_step) - spec.eval(x, p, u - fd_step)) / (2.0 * fd_step)
    gx = np.asarray(gx, dtype=np.float64)
    gp = np.asarray(gp, dtype=np.float64)
    gu = np.asarray(gu, dtype=np.float64)
    worst = max(np.max(np.abs(gx), initial=0.0), np.max(np.abs(gp), initial=0.0))
    if worst > grad_cap:
        warnings.warn(
            f"gradient magnitude {worst:.3g} exceeds cap {grad_cap:.3g} for '{spec.name}'",
            stacklevel=2,
        )
    return gx, gp, gu


def compose_scalar(
    spec: HamiltonianSpec,
    f: Callable,
    f_prime: Optional[Callable] = None,
    name: Optional[str] = None,
    u_lipschitz: Optional[float] = None,
    convex_in_p: bool = False,
    superlinear_in_p: bool = False,
) -> HamiltonianSpec:
    """The composed Hamiltonian ``f(H)``.

    Convexity/superlinearity of a composition cannot be inferred in general,
    so the flags are off unless the caller asserts them.  Same story for
    ``u_lipschitz``: pass a bound valid on your working box (defaults to the
    base bound, which is only correct when ``|f'| <= 1`` there).
    """

    def ev(x, p, u):
        return f(spec.eval(x, p, u))

    gx = gp = gu = None
    if spec.has_analytic_gradients and f_prime is not None:
        def gx(x, p, u):
            return f_prime(spec.eval(x, p, u))[..., None] * spec.grad_x(x, p, u)

        def gp(x, p, u):
            return f_prime(spec.eval(x, p, u))[..., None] * spec.grad_p(x, p, u)

        def gu(x, p, u):
            return f_prime(spec.eval(x, p, u)) * spec.grad_u(x, p, u)

    return HamiltonianSpec(
        name=name or f"compose({spec.name})",
        eval=ev,
        grad_x=gx,
        grad_p=gp,
        grad_u=gu,
        u_lipschitz=spec.u_lipschitz if u_lipschitz is None else u_lipschitz,
        flags=HamiltonianFlags(
            convex_in_p=convex_in_p,
            superlinear_in_p=superlinear_in_p,
            u_independent=spec.flags.u_independent,
        ),
    )


def linear_combination(
    specs: list[HamiltonianSpec],
    coeffs: list[float],
    name: Optional[str] = None,
) -> HamiltonianSpec:
    """``sum_i c_i H_i`` with combined analytic gradients where available.

    Flags follow the convex-cone rules: non-negative coefficients preserve
    convexity, and the sum is superlinear as soon as one superlinear term has
    a strictly positive coefficient.
    """
    if len(specs) != len(coeffs) or not specs:
        raise ConfigError("linear_combination needs matching non-empty specs/coeffs")
    coeffs = [float(c) for c in coeffs]

    def ev(x, p, u):
        out = coeffs[0] * specs[0].eval(x, p, u)
        for c, s in zip(coeffs[1:], specs[1:]):
            out = out + c * s.eval(x, p, u)
        return out

    gx = gp = gu = None
    if all(s.has_analytic_gradients for s in specs):
        def gx(x, p, u):
            out = coeffs[0] * specs[0].grad_x(x, p, u)
            for c, s in zip(coeffs[1:], specs[1:]):
                out = out + c * s.grad_x(x, p, u)
            return out

        def gp(x, p, u):
            out = coeffs[0] * specs[0].grad_p(x, p, u)
            for c, s in zip(coeffs[1:], specs[1:]):
                out = out + c * s.grad_p(x, p, u)
            return out

        def gu(x, p, u):
            out = coeffs[0] * specs[0].grad_u(x, p, u)
            for c, s in zip(coeffs[1:], specs[1:]):
                out = out + c * s.grad_u(x, p, u)
            return out

    nonneg = all(c >= 0 for c in coeffs)
    return HamiltonianSpec(
        name=name or "+".join(f"{c:g}*{s.name}" for c, s in zip(coeffs, specs)),
        eval=ev,
        grad_x=gx,
        grad_p=gp,
        grad_u=gu,
        u_lipschitz=sum(abs(c) * s.u_lipschitz for c, s in zip(coeffs, specs)),
        flags=HamiltonianFlags(
            convex_in_p=nonneg and all(s.flags.convex_in_p for s in specs),
            superlinear_in_p=nonneg
            and all(s.flags.convex_in_p for s in specs)
            and any(c > 0 and s.flags.superlinear_in_p for c, s in zip(coeffs, specs)),
            u_independent=all(
                s.flags.u_independent or c == 0 for c, s in zip(coeffs, specs)
            ),
        ),
    )


def scale(spec: HamiltonianSpec, k: float, name: Optional[str] = None) -> HamiltonianSpec:
    """``k*H`` (the reparametrisation building block)."""
    return linear_combination([spec], [k], name=name or f"{k:g}*{spec.name}")


def shift(spec: HamiltonianSpec, c: float, name: Optional[str] = None) -> HamiltonianSpec:
    """``H + c``."""
    def ev(x, p, u):
        return spec.eval(x, p, u) + c

    gx = gp = gu = None
    if spec.has_analytic_gradients:
        gx, gp, gu = spec.grad_x, spec.grad_p, spec.grad_u
    return replace(
        spec,
        name=name or f"{spec.name}+{c:g}",
        eval=ev,
        grad_x=gx,
        grad_p=gp,
        grad_u=gu,
    )


# ---------------------------------------------------------------------------
# catalog

def _make_quadratic() -> HamiltonianSpec:
    return HamiltonianSpec(
        name="quadratic",
        eval=lambda x, p, u: 0.5 * _sq(p) + _batch_zero(x, p, u),
        grad_x=lambda x, p, u: 0.0 * (x + p),
        grad_p=lambda x, p, u: p + 0.0 * x,
        grad_u=lambda x, p, u: _batch_zero(x, p, u),
        u_lipschitz=0.0,
        flags=HamiltonianFlags(True, True, True),
    )


def _make_quadratic_potential() -> HamiltonianSpec:
    return HamiltonianSpec(
        name="quadratic_potential",
        eval=lambda x, p, u: 0.5 * _sq(p)
        + np.sum(1.0 - np.cos(x), axis=-1)
        + 0.0 * np.asarray(u, dtype=np.float64),
        grad_x=lambda x, p, u: np.sin(x) + 0.0 * p,
        grad_p=lambda x, p, u: p + 0.0 * x,
        grad_u=lambda x, p, u: _batch_zero(x, p, u),
        u_lipschitz=0.0,
        flags=HamiltonianFlags(True, True, True),
    )


def _make_discount(alpha: float = 1.0) -> HamiltonianSpec:
    return HamiltonianSpec(
        name=f"discount(alpha={alpha:g})",
        eval=lambda x, p, u: 0.5 * _sq(p) + alpha * np.asarray(u, dtype=np.float64)
        + 0.0 * x[..., 0],
        grad_x=lambda x, p, u: 0.0 * (x + p),
        grad_p=lambda x, p, u: p + 0.0 * x,
        grad_u=lambda x, p, u: alpha + _batch_zero(x, p, u),
        u_lipschitz=abs(alpha),
        flags=HamiltonianFlags(True, True, alpha == 0.0),
    )


def _make_contact(alpha: float = 1.0) -> HamiltonianSpec:
    return HamiltonianSpec(
        name=f"contact(alpha={alpha:g})",
        eval=lambda x, p, u: 0.5 * _sq(p)
        + np.sum(1.0 - np.cos(x), axis=-1)
        + alpha * np.asarray(u, dtype=np.float64),
        grad_x=lambda x, p, u: np.sin(x) + 0.0 * p,
        grad_p=lambda x, p, u: p + 0.0 * x,
        grad_u=lambda x, p, u: alpha + _batch_zero(x, p, u),
        u_lipschitz=abs(alpha),
        flags=HamiltonianFlags(True, True, alpha == 0.0),
    )


def _make_shifted(c: float = 1.0, alpha: float = 1.0) -> HamiltonianSpec:
    base = _make_discount(alpha)
    return replace(
        shift(base, c),
        name=f"shifted(c={c:g},alpha={alpha:g})",
    )


def _make_scaled(k: float = 2.0, base: str = "contact") -> HamiltonianSpec:
    inner = get_hamiltonian(base)
    return scale(inner, k, name=f"scaled(k={k:g},base={inner.name})")


def _make_eikonal_sine() -> HamiltonianSpec:
    # a(x)|p| + sin(u) with a(x) = 1 + cos(x1)/2, so 1/2 <= a <= 3/2.
    def a(x):
        return 1.0 + 0.5 * np.cos(x[..., 0])

    return HamiltonianSpec(
        name="eikonal_sine",
        eval=lambda x, p, u: a(x) * np.sqrt(_sq(p)) + np.sin(np.asarray(u, dtype=np.float64)),
        grad_x=None,  # |p| is not smooth at p=0; keep FD and live with it
        grad_p=None,
        grad_u=lambda x, p, u: np.cos(np.asarray(u, dtype=np.float64)) + _batch_zero(x, p, u),
        u_lipschitz=1.0,
        flags=HamiltonianFlags(convex_in_p=True, superlinear_in_p=False, u_independent=False),
    )


def _make_p1() -> HamiltonianSpec:
    return HamiltonianSpec(
        name="p1",
        eval=lambda x, p, u: p[..., 0] + _batch_zero(x, p, u),
        grad_x=lambda x, p, u: 0.0 * (x + p),
        grad_p=lambda x, p, u: np.concatenate(
            [np.ones_like(p[..., :1]), np.zeros_like(p[..., 1:])], axis=-1
        ) + 0.0 * x,
        grad_u=lambda x, p, u: _batch_zero(x, p, u),
        u_lipschitz=0.0,
        flags=HamiltonianFlags(convex_in_p=True, superlinear_in_p=False, u_independent=True),
    )


def _make_x1() -> HamiltonianSpec:
    return HamiltonianSpec(
        name="x1",
        eval=lambda x, p, u: x[..., 0] + _batch_zero(x, p, u),
        grad_x=lambda x, p, u: np.concatenate(
            [np.ones_like(x[..., :1]), np.zeros_like(x[..., 1:])], axis=-1
        ) + 0.0 * p,
        grad_p=lambda x, p, u: 0.0 * (x + p),
        grad_u=lambda x, p, u: _batch_zero(x, p, u),
        u_lipschitz=0.0,
        flags=HamiltonianFlags(convex_in_p=True, superlinear_in_p=False, u_independent=True),
    )


def _make_ucoord() -> HamiltonianSpec:
    return HamiltonianSpec(
        name="u",
        eval=lambda x, p, u: np.asarray(u, dtype=np.float64) + 0.0 * (x[..., 0] + p[..., 0]),
        grad_x=lambda x, p, u: 0.0 * (x + p),
        grad_p=lambda x, p, u: 0.0 * (x + p),
        grad_u=lambda x, p, u: 1.0 + _batch_zero(x, p, u),
        u_lipschitz=1.0,
        flags=HamiltonianFlags(convex_in_p=True, superlinear_in_p=False, u_independent=False),
    )


_CATALOG: dict[str, Callable[..., HamiltonianSpec]] = {
    "quadratic": _make_quadratic,
    "quadratic_potential": _make_quadratic_potential,
    "discount": _make_discount,
    "contact": _make_contact,
    "shifted": _make_shifted,
    "scaled": _make_scaled,
    "eikonal_sine": _make_eikonal_sine,
    "p1": _make_p1,
    "x1": _make_x1,
    "u": _make_ucoord,
}

_SELECTOR_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")


def builtin_catalog() -> list[HamiltonianSpec]:
    """All catalog entries with their default parameters."""
    return [build() for build in _CATALOG.values()]


def get_hamiltonian(selector: str) -> HamiltonianSpec:
    """Resolve a textual selector like ``discount(alpha=1)``.

    Parameters are ``key=value`` pairs; values are floats except ``base=``,
    which names another catalog entry.
    """
    m = _SELECTOR_RE.match(selector)
    if not m:
        raise ConfigError(f"cannot parse hamiltonian selector '{selector}'")
    name, argstr = m.group(1), m.group(2)
    if name not in _CATALOG:
        raise ConfigError(f"unknown hamiltonian '{name}'")
    kwargs: dict[str, object] = {}
    if argstr is not None and argstr.strip():
        for piece in argstr.split(","):
            if "=" not in piece:
                raise ConfigError(f"bad parameter '{piece.strip()}' in '{selector}'")
            key, val = (s.strip() for s in piece.split("=", 1))
            if key == "base":
                kwargs[key] = val
            else:
                try:
                    kwargs[key] = float(val)
                except ValueError as exc:
                    raise ConfigError(f"parameter '{key}' must be a number in '{selector}'") from exc
    try:
        return _CATALOG[name](**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for hamiltonian '{name}': {exc}") from exc
