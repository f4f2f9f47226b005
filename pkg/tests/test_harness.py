"""Composition-order experiments: defects, reparametrisation, scaling,
multi-time consistency."""

import warnings

import numpy as np
import pytest

from contact_hj import (
    ConfigError,
    GridFunction,
    GridSpec,
    SemigroupConfig,
    TruncationWarning,
    VelocityGrid,
    commutation_defect,
    consistency_tolerance,
    evolve,
    multitime_solve,
    reparam_check,
    scale,
    scaling_check,
)
from contact_hj.hamiltonian import builtin_catalog

CAT = {s.name.split("(")[0]: s for s in builtin_catalog()}


def _grid_and_cos(n=81):
    g = GridSpec(n, 4.0, 1, "periodic")
    u0 = GridFunction.from_callable(g, lambda x: np.cos(np.pi * x / 4.0))
    return g, u0


def _cfg(dt, refine=True):
    return SemigroupConfig(vg=VelocityGrid(8.0, 161), dt=dt, refine=refine)


def test_zero_time_leg_gives_bitwise_zero_defect():
    _, u0 = _grid_and_cos()
    rep = commutation_defect(CAT["contact"], CAT["discount"], u0, 0.0, 0.25,
                             _cfg(5e-3))
    assert rep.sup_abs_defect == 0.0
    assert rep.max_signed == 0.0 and rep.min_signed == 0.0


def test_swapping_the_pair_negates_the_defect():
    _, u0 = _grid_and_cos()
    ab = commutation_defect(CAT["discount"], CAT["shifted"], u0, 0.2, 0.15,
                            _cfg(5e-3))
    ba = commutation_defect(CAT["shifted"], CAT["discount"], u0, 0.15, 0.2,
                            _cfg(5e-3))
    assert ab.max_signed == -ba.min_signed
    assert ab.min_signed == -ba.max_signed
    assert ab.sup_abs_defect == ba.sup_abs_defect


def test_commuting_pair_defect_shrinks_with_dt():
    _, u0 = _grid_and_cos()
    sups = []
    for dt in (5e-3, 2.5e-3, 1.25e-3):
        rep = commutation_defect(CAT["contact"], scale(CAT["contact"], 2.0),
                                 u0, 0.2, 0.2, _cfg(dt))
        assert rep.sup_abs_defect <= rep.tolerance
        sups.append(rep.sup_abs_defect)
    assert sups[0] / sups[1] >= 1.5
    assert sups[1] / sups[2] >= 1.5


def test_one_sided_pair_keeps_its_sign():
    """Discount first, then the shifted flow, ends weakly below the reverse
    order, stably across step sizes."""
    _, u0 = _grid_and_cos()
    for dt in (5e-3, 2.5e-3):
        rep = commutation_defect(CAT["discount"], CAT["shifted"], u0,
                                 0.25, 0.25, _cfg(dt))
        assert rep.max_signed <= rep.tolerance
        assert rep.min_signed < 0.0


def test_consistency_tolerance_formula():
    lam, mu, big = 0.25, 0.25, 2.0
    got = consistency_tolerance(1e-3, lam, mu, big)
    want = 20 * 1e-3 * (1 + big * (lam + mu)) * np.exp(big * (lam + mu))
    assert got == pytest.approx(want, rel=1e-12)


def test_reparam_identity_at_unit_time():
    _, u0 = _grid_and_cos()
    defect, direct, scaled = reparam_check(CAT["discount"], u0, 1.0, _cfg(5e-3))
    assert defect == 0.0
    np.testing.assert_array_equal(direct.values, scaled.values)


def test_reparam_discount_double_time():
    """On constant data the t=2 run and the doubled-generator unit run apply
    the same per-step factor (1 - dt) vs (1 - 2 * dt/2): identical bits."""
    g = GridSpec(81, 4.0, 1, "periodic")
    ones = GridFunction(g, np.ones(g.n))
    defect, direct, scaled = reparam_check(CAT["discount"], ones, 2.0, _cfg(5e-3))
    assert defect == 0.0
    np.testing.assert_array_equal(direct.values, scaled.values)


def test_scaling_identity_at_k_equal_one():
    _, u0 = _grid_and_cos()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        defect, ua, ub = scaling_check(CAT["quadratic"], CAT["quadratic"], u0,
                                       0.2, 1.0, 1.0, 1.0, _cfg(5e-3))
    assert defect == 0.0
    np.testing.assert_array_equal(ua.values, ub.values)


def test_generator_scaling_within_tolerance():
    _, u0 = _grid_and_cos()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        defect, _, _ = scaling_check(CAT["quadratic"],
                                     scale(CAT["quadratic"], 2.0), u0,
                                     0.5, 1.0, 1.0, 2.0, _cfg(5e-3))
    assert defect <= 10 * 5e-3


def test_multitime_zero_vector_returns_initial_data():
    _, u0 = _grid_and_cos()
    out = multitime_solve([CAT["quadratic"], CAT["discount"]], (0.0, 0.0), u0,
                          _cfg(5e-3))
    assert out is not u0
    np.testing.assert_array_equal(out.values, u0.values)


def test_multitime_single_entry_matches_direct_run():
    _, u0 = _grid_and_cos()
    cfg = _cfg(5e-3)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        combined = multitime_solve([CAT["quadratic"]], (0.3,), u0, cfg)
        direct = evolve(CAT["quadratic"], u0, 0.3, cfg)
    assert np.max(np.abs(combined.values - direct.values)) <= 20 * cfg.dt


def test_clamped_core_must_be_nonempty():
    g = GridSpec(41, 4.0, 1, "clamped")
    u0 = GridFunction.from_callable(g, np.abs)
    with pytest.raises(ConfigError, match="core"):
        commutation_defect(CAT["discount"], CAT["shifted"], u0, 0.3, 0.3,
                           _cfg(5e-3))
