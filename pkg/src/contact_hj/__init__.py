"""Variational solvers and commutation diagnostics for contact Hamilton-Jacobi
equations: Lax-Oleinik stepping, discrete Legendre transforms, Jacobi brackets,
semigroup composition harnesses, and a brute-force curve-enumeration oracle.
"""

from .errors import (
    ConfigError,
    ConvergenceWarning,
    EvaluationError,
    NumericalError,
    TruncationWarning,
)
from .grid import BIG, GridFunction, GridSpec, SpaceTimeFunction
from .hamiltonian import (
    HamiltonianFlags,
    HamiltonianSpec,
    builtin_catalog,
    compose_scalar,
    eval_gradients,
    eval_hamiltonian,
    get_hamiltonian,
    linear_combination,
    scale,
    shift,
)
from .transform import (
    LegendreResult,
    VelocityGrid,
    biconjugate_check,
    biconjugate_profile,
    default_v_max,
    legendre_transform,
)
from .semigroup import (
    EvolveResult,
    FixedPointResult,
    SemigroupConfig,
    VariationalReport,
    barrier_bounds,
    check_variational_inequality,
    evolve,
    evolve_table,
    extract_backpointer_curve,
    fixed_point_A,
    hopf_lax,
    implicit_action,
    lax_oleinik_step,
)
from .bracket import BracketReport, bracket_scan, jacobi_bracket
from .harness import (
    CommutationReport,
    commutation_defect,
    compose,
    consistency_tolerance,
    multitime_solve,
    reparam_check,
    scaling_check,
)
from .oracle import OracleConfig, brute_force_value

__version__ = "0.1.0"

__all__ = [
    "BIG",
    "BracketReport",
    "CommutationReport",
    "ConfigError",
    "ConvergenceWarning",
    "EvaluationError",
    "EvolveResult",
    "FixedPointResult",
    "GridFunction",
    "GridSpec",
    "HamiltonianFlags",
    "HamiltonianSpec",
    "LegendreResult",
    "NumericalError",
    "OracleConfig",
    "SemigroupConfig",
    "SpaceTimeFunction",
    "TruncationWarning",
    "VariationalReport",
    "VelocityGrid",
    "barrier_bounds",
    "biconjugate_check",
    "biconjugate_profile",
    "bracket_scan",
    "brute_force_value",
    "builtin_catalog",
    "check_variational_inequality",
    "commutation_defect",
    "compose",
    "compose_scalar",
    "consistency_tolerance",
    "default_v_max",
    "eval_gradients",
    "eval_hamiltonian",
    "evolve",
    "evolve_table",
    "extract_backpointer_curve",
    "fixed_point_A",
    "get_hamiltonian",
    "hopf_lax",
    "implicit_action",
    "jacobi_bracket",
    "lax_oleinik_step",
    "legendre_transform",
    "linear_combination",
    "multitime_solve",
    "reparam_check",
    "scale",
    "scaling_check",
    "shift",
]
