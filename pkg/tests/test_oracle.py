"""Brute-force curve enumeration as an independent reference."""

import numpy as np
import pytest

from contact_hj import (
    ConfigError,
    ConvergenceWarning,
    GridFunction,
    GridSpec,
    OracleConfig,
)
from contact_hj.hamiltonian import builtin_catalog
from contact_hj.oracle import brute_force_value

CAT = {s.name.split("(")[0]: s for s in builtin_catalog()}


def _clamped(n=41):
    return GridSpec(n, 4.0, 1, "clamped")


def test_resting_at_a_minimum_costs_nothing():
    g = _clamped()
    u0 = GridFunction.from_callable(g, np.abs)
    val = brute_force_value(CAT["quadratic"], u0, 0.0, 0.5, OracleConfig(K=4))
    assert val == pytest.approx(0.0, abs=1e-12)


@pytest.mark.filterwarnings("ignore::contact_hj.ConvergenceWarning")
def test_uniform_decay_against_closed_form():
    g = _clamped()
    ones = GridFunction(g, np.ones(g.n))
    val = brute_force_value(CAT["discount"], ones, 0.0, 0.5,
                            OracleConfig(K=4, picard_rounds=6))
    assert abs(val - np.exp(-0.5)) <= 0.05


def test_richer_velocity_menu_never_hurts():
    """Enlarging the velocity choices can only lower a minimum over curves
    (value-independent Hamiltonian, so no feedback loop)."""
    g = _clamped()
    u0 = GridFunction.from_callable(g, np.abs)
    small = brute_force_value(CAT["quadratic"], u0, 0.6, 0.3,
                              OracleConfig(K=4, velocity_choices=(-1.0, 0.0, 1.0)))
    big = brute_force_value(CAT["quadratic"], u0, 0.6, 0.3,
                            OracleConfig(K=4))
    assert big <= small + 1e-12


def test_enumeration_budget_is_enforced():
    with pytest.raises(ConfigError, match="cap"):
        OracleConfig(K=12, max_curves=100)


def test_velocity_menu_must_allow_resting():
    with pytest.raises(ConfigError, match="contain 0"):
        OracleConfig(velocity_choices=(1.0, 2.0))


def test_negative_horizon_rejected():
    g = _clamped()
    u0 = GridFunction.from_callable(g, np.abs)
    with pytest.raises(ConfigError):
        brute_force_value(CAT["quadratic"], u0, 0.0, -0.5, OracleConfig(K=4))
