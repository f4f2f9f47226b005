"""Shared exception and warning types."""


class ConfigError(ValueError):
    """A run configuration is invalid (bad key, bad value, inconsistent pair)."""


class EvaluationError(ArithmeticError):
    """A Hamiltonian produced a non-finite value for finite inputs."""


class NumericalError(RuntimeError):
    """An iteration failed to converge or a computed field blew up."""


class TruncationWarning(UserWarning):
    """A discrete minimizer or argmax landed on the edge of its search window."""


class ConvergenceWarning(UserWarning):
    """An iterative estimate was still moving when its round budget ran out."""
