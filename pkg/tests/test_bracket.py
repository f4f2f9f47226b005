"""Pointwise bracket values and box scans."""

import dataclasses

import numpy as np
import pytest

from contact_hj import scale, shift
from contact_hj.bracket import bracket_scan, jacobi_bracket, scan_points
from contact_hj.hamiltonian import builtin_catalog

CAT = {s.name.split("(")[0]: s for s in builtin_catalog()}
BOX = {"x": (-2.0, 2.0), "p": (-2.0, 2.0), "u": (-1.0, 1.0)}


def _pts(n, seed=0x5EED):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, size=(n, 1))
    p = rng.uniform(-2, 2, size=(n, 1))
    u = rng.uniform(-1, 1, size=n)
    return x, p, u


def test_translation_pair_is_constant():
    x, p, u = _pts(12)
    vals = jacobi_bracket(CAT["p1"], CAT["x1"], x, p, u)
    np.testing.assert_allclose(vals, -1.0, atol=1e-9)
    np.testing.assert_allclose(jacobi_bracket(CAT["x1"], CAT["p1"], x, p, u),
                               1.0, atol=1e-9)


def test_bracket_is_antisymmetric():
    x, p, u = _pts(12, seed=3)
    ab = jacobi_bracket(CAT["quadratic_potential"], CAT["discount"], x, p, u)
    ba = jacobi_bracket(CAT["discount"], CAT["quadratic_potential"], x, p, u)
    np.testing.assert_allclose(ab, -ba, atol=1e-12)


def test_self_bracket_vanishes():
    x, p, u = _pts(12, seed=4)
    np.testing.assert_allclose(
        jacobi_bracket(CAT["contact"], CAT["contact"], x, p, u), 0.0, atol=1e-12)


@pytest.mark.parametrize("k", [-1.0, 0.5, 2.0, 10.0])
def test_bracket_with_own_multiple_vanishes(k):
    x, p, u = _pts(10, seed=5)
    vals = jacobi_bracket(CAT["contact"], scale(CAT["contact"], k), x, p, u)
    np.testing.assert_allclose(vals, 0.0, atol=1e-9)


def test_value_independent_pairs_reduce_to_canonical_form():
    """Without u dependence the bracket is H_x F_p - H_p F_x."""
    x, p, u = _pts(12, seed=6)
    h, f = CAT["quadratic"], CAT["x1"]
    vals = jacobi_bracket(h, f, x, p, u)
    np.testing.assert_allclose(vals, -p[:, 0], atol=1e-9)


def test_finite_differences_track_analytic_gradients():
    x, p, u = _pts(8, seed=7)
    h = CAT["quadratic_potential"]
    bare = dataclasses.replace(h, grad_x=None, grad_p=None, grad_u=None)
    a = jacobi_bracket(h, CAT["discount"], x, p, u)
    b = jacobi_bracket(bare, CAT["discount"], x, p, u)
    np.testing.assert_allclose(b, a, atol=1e-6)


def test_scan_verdict_commuting():
    r = bracket_scan(CAT["quadratic"], scale(CAT["quadratic"], 2.0), BOX,
                     random_points=200)
    assert r.verdict == "commuting"
    assert r.max_abs <= r.tolerance


def test_scan_verdict_one_sided():
    r = bracket_scan(CAT["p1"], CAT["x1"], BOX, random_points=200)
    assert r.verdict == "one_sided_le"
    assert r.max_abs == pytest.approx(1.0)
    swapped = bracket_scan(CAT["x1"], CAT["p1"], BOX, random_points=200)
    assert swapped.verdict == "one_sided_ge"


def test_scan_verdict_none_for_sign_changing_pair():
    r = bracket_scan(CAT["quadratic_potential"], CAT["quadratic"], BOX,
                     random_points=200)
    assert r.verdict == "none"
    assert r.max_pos > 0 > r.min_neg


def test_scan_is_deterministic_in_the_seed():
    a = bracket_scan(CAT["quadratic_potential"], CAT["discount"], BOX,
                     random_points=300, seed=123)
    b = bracket_scan(CAT["quadratic_potential"], CAT["discount"], BOX,
                     random_points=300, seed=123)
    assert a.max_abs == b.max_abs
    assert a.max_pos == b.max_pos
    assert a.min_neg == b.min_neg
    assert a.arg_extreme == b.arg_extreme
    assert a.samples == b.samples


def test_scan_points_lattice_shape():
    pts, vals = scan_points(CAT["p1"], CAT["x1"], BOX, samples_per_axis=5)
    assert pts.shape[0] == vals.shape[0] == 5 ** 3
    np.testing.assert_allclose(vals, -1.0, atol=1e-9)


def test_constant_offset_changes_nothing_without_u_dependence():
    x, p, u = _pts(10, seed=8)
    h = CAT["quadratic"]
    vals = jacobi_bracket(h, shift(h, 3.0), x, p, u)
    np.testing.assert_allclose(vals, 0.0, atol=1e-9)
