"""Catalog entries, algebra helpers, and selector parsing."""

import dataclasses

import numpy as np
import pytest

from contact_hj import ConfigError, eval_gradients, eval_hamiltonian, scale, shift
from contact_hj.hamiltonian import (
    builtin_catalog,
    compose_scalar,
    get_hamiltonian,
    linear_combination,
)


def _catalog():
    return {s.name.split("(")[0]: s for s in builtin_catalog()}


def test_catalog_pointwise_values():
    cat = _catalog()
    assert eval_hamiltonian(cat["quadratic"], 1.5, 2.0, 7.0) == 2.0
    assert eval_hamiltonian(cat["discount"], 0.0, 1.0, 0.5) == 1.0
    # the shifted entry adds its constant on top of the discount value
    base = eval_hamiltonian(cat["discount"], 0.7, 1.2, -0.3)
    assert np.isclose(eval_hamiltonian(cat["shifted"], 0.7, 1.2, -0.3), base + 1.0)
    assert np.isclose(
        eval_hamiltonian(cat["scaled"], 0.7, 1.2, -0.3),
        2.0 * eval_hamiltonian(cat["contact"], 0.7, 1.2, -0.3),
    )


def test_contact_at_zero_u_matches_potential_entry():
    """With the u slot frozen at zero the contact entry is the plain kinetic
    plus potential Hamiltonian, bit for bit."""
    cat = _catalog()
    rng = np.random.default_rng(0x5EED)
    for _ in range(20):
        x, p = rng.uniform(-3, 3), rng.uniform(-3, 3)
        a = eval_hamiltonian(cat["contact"], x, p, 0.0)
        b = eval_hamiltonian(cat["quadratic_potential"], x, p, 0.0)
        assert a == b


def test_catalog_flags_and_lipschitz():
    cat = _catalog()
    admissible = [s for s in builtin_catalog()
                  if s.flags.convex_in_p and s.flags.superlinear_in_p]
    assert len(admissible) == 6
    assert cat["quadratic"].flags.u_independent
    assert not cat["discount"].flags.u_independent
    assert cat["discount"].u_lipschitz == 1.0
    assert cat["scaled"].u_lipschitz == 2.0


def test_linear_combination_matches_manual_sum():
    cat = _catalog()
    combo = linear_combination([cat["quadratic"], cat["discount"]], [0.3, 0.7])
    x, p, u = 0.4, -1.1, 0.6
    want = 0.3 * eval_hamiltonian(cat["quadratic"], x, p, u) \
        + 0.7 * eval_hamiltonian(cat["discount"], x, p, u)
    assert np.isclose(eval_hamiltonian(combo, x, p, u), want)


@pytest.mark.parametrize("k", [-1.0, 0.5, 2.0, 10.0])
def test_scale_multiplies_value_and_u_lipschitz(k):
    cat = _catalog()
    s = scale(cat["discount"], k)
    assert np.isclose(
        eval_hamiltonian(s, 0.2, 1.3, -0.4),
        k * eval_hamiltonian(cat["discount"], 0.2, 1.3, -0.4),
    )
    assert s.u_lipschitz == abs(k) * cat["discount"].u_lipschitz


def test_shift_adds_constant():
    cat = _catalog()
    s = shift(cat["quadratic"], -2.5)
    assert eval_hamiltonian(s, 0.0, 2.0, 0.0) == 2.0 - 2.5


def test_compose_scalar_applies_outer_function():
    cat = _catalog()
    sq = compose_scalar(cat["discount"], lambda t: t * t,
                        f_prime=lambda t: 2.0 * t,
                        name="discount_squared", u_lipschitz=12.0)
    v = eval_hamiltonian(cat["discount"], 0.3, 1.0, 0.2)
    assert np.isclose(eval_hamiltonian(sq, 0.3, 1.0, 0.2), v * v)
    assert sq.u_lipschitz == 12.0
    assert sq.name == "discount_squared"


def test_selector_plain_and_parameterised():
    q = get_hamiltonian("quadratic")
    assert eval_hamiltonian(q, 0.0, 2.0, 0.0) == 2.0
    d2 = get_hamiltonian("discount(alpha=2)")
    d1 = get_hamiltonian("discount")
    assert np.isclose(
        eval_hamiltonian(d2, 0.0, 0.0, 1.0),
        2.0 * eval_hamiltonian(d1, 0.0, 0.0, 1.0),
    )
    s3 = get_hamiltonian("scaled(k=3,base=quadratic)")
    assert np.isclose(eval_hamiltonian(s3, 0.0, 2.0, 0.0), 6.0)


@pytest.mark.parametrize("bad", [
    "nope",
    "scale(contact,2)",          # positional parameters are not a thing
    "discount(alpha=fast)",
    "quadratic(oops=1)",
])
def test_selector_rejects_malformed_input(bad):
    with pytest.raises(ConfigError):
        get_hamiltonian(bad)


def test_gradients_fall_back_to_finite_differences():
    """Stripping analytic gradients must not change eval_gradients beyond
    finite-difference accuracy."""
    cat = _catalog()
    spec = cat["quadratic_potential"]
    bare = dataclasses.replace(spec, grad_x=None, grad_p=None, grad_u=None)
    rng = np.random.default_rng(7)
    x = rng.uniform(-2, 2, size=(6, 1))
    p = rng.uniform(-2, 2, size=(6, 1))
    u = rng.uniform(-1, 1, size=6)
    gx, gp, gu = eval_gradients(spec, x, p, u)
    fx, fp_, fu = eval_gradients(bare, x, p, u)
    np.testing.assert_allclose(fx, gx, atol=1e-6)
    np.testing.assert_allclose(fp_, gp, atol=1e-6)
    np.testing.assert_allclose(fu, gu, atol=1e-6)
