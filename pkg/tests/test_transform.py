"""Discrete Legendre conjugates on symmetric velocity lattices."""

import numpy as np
import pytest

from contact_hj import ConfigError, VelocityGrid, eval_hamiltonian
from contact_hj.hamiltonian import builtin_catalog
from contact_hj.transform import (
    biconjugate_check,
    biconjugate_profile,
    default_v_max,
    legendre_transform,
    symmetric_axis,
)

CAT = {s.name.split("(")[0]: s for s in builtin_catalog()}


def test_symmetric_axis_is_odd_and_centered():
    ax = symmetric_axis(8.0, 161)
    assert len(ax) == 161
    assert ax[80] == 0.0
    np.testing.assert_array_equal(ax, -ax[::-1])
    with pytest.raises(ConfigError):
        VelocityGrid(8.0, 160)


def test_quadratic_conjugate_exact_on_lattice_slopes():
    """sup_v (q v - v^2/2) = q^2/2, attained exactly whenever q is itself a
    lattice velocity."""
    vg = VelocityGrid(8.0, 161)
    lattice = symmetric_axis(8.0, 161)
    for q in lattice[16:-16:16]:
        res = legendre_transform(CAT["quadratic"], np.array([0.0]), 0.0,
                                 np.array([q]), vg)
        assert res.value == pytest.approx(q * q / 2.0, abs=1e-14)


def test_conjugate_never_below_resting_velocity():
    # v = 0 is always on the lattice, so H*(q) >= -H(x, 0, u) exactly
    vg = VelocityGrid(6.0, 121)
    rng = np.random.default_rng(0x5EED)
    for spec in builtin_catalog():
        if not (spec.flags.convex_in_p and spec.flags.superlinear_in_p):
            continue
        x = rng.uniform(-3, 3)
        u = rng.uniform(-1, 1)
        q = rng.uniform(-2, 2)
        res = legendre_transform(spec, np.array([x]), u, np.array([q]), vg)
        assert res.value >= -eval_hamiltonian(spec, x, 0.0, u) - 1e-15


def test_nested_lattice_refinement_is_monotone():
    """Doubling the lattice keeps the old nodes, so the discrete sup cannot
    decrease."""
    coarse = VelocityGrid(8.0, 17)
    fine = VelocityGrid(8.0, 33)
    rng = np.random.default_rng(11)
    for _ in range(10):
        q = rng.uniform(-3, 3)
        x = rng.uniform(-2, 2)
        a = legendre_transform(CAT["quadratic_potential"], np.array([x]), 0.0,
                               np.array([q]), coarse).value
        b = legendre_transform(CAT["quadratic_potential"], np.array([x]), 0.0,
                               np.array([q]), fine).value
        assert b >= a - 1e-15


def test_biconjugate_recovers_convex_entry():
    vg = VelocityGrid(8.0, 401)
    pg = VelocityGrid(2.0, 81)
    err = biconjugate_check(CAT["quadratic"], np.array([0.0]), 0.0, vg, pg)
    assert err <= 1e-3


def test_biconjugate_profile_is_midpoint_convex():
    vg = VelocityGrid(8.0, 401)
    pg = VelocityGrid(2.0, 81)
    _, _, hstar2, _ = biconjugate_profile(CAT["quadratic_potential"],
                                          np.array([0.4]), 0.0, vg, pg)
    mid = 0.5 * (hstar2[:-2] + hstar2[2:])
    assert np.all(hstar2[1:-1] <= mid + 1e-12)


def test_memoised_and_fresh_conjugates_agree():
    vg = VelocityGrid(8.0, 161)
    memo = {}
    args = (CAT["quadratic"], np.array([0.0]), 0.0, np.array([1.0]), vg)
    first = legendre_transform(*args, memo=memo)
    second = legendre_transform(*args, memo=memo)
    fresh = legendre_transform(*args)
    assert first.value == second.value == fresh.value == 0.5


def test_interior_flag_reports_boundary_argmax():
    vg = VelocityGrid(8.0, 161)
    # slope outside the lattice range: the sup runs away to the lattice edge
    res = legendre_transform(CAT["quadratic"], np.array([0.0]), 0.0,
                             np.array([10.0]), vg)
    assert not res.interior
    assert res.argmax_v == pytest.approx(8.0)
    ok = legendre_transform(CAT["quadratic"], np.array([0.0]), 0.0,
                            np.array([1.0]), vg)
    assert ok.interior


def test_transform_rejects_non_superlinear_entries():
    vg = VelocityGrid(8.0, 161)
    with pytest.raises(ConfigError, match="superlinear"):
        legendre_transform(CAT["p1"], np.array([0.0]), 0.0, np.array([0.5]), vg)


def test_default_v_max_adds_margin_over_gradient_range():
    got = default_v_max(CAT["quadratic"], (-4.0, 4.0), 3.0, (-1.0, 1.0))
    assert got == pytest.approx(5.0)
