"""Exception types shared across the package."""


class SaddleLabError(Exception):
    """Base class for all errors raised by this package."""


class RankDeficient(SaddleLabError):
    """Constraint matrix does not have full row rank."""


class DegenerateKernelOperator(SaddleLabError):
    """The operator restricted to the kernel is singular."""


class SingularSystem(SaddleLabError):
    """A linear system required to be solvable is numerically singular."""


class NotSymmetric(SaddleLabError):
    """An operation requiring a symmetric operator got a nonsymmetric one."""


class NotCoercive(SaddleLabError):
    """An operation requiring a positive definite operator got an indefinite one."""


class NonlinearDivergence(SaddleLabError):
    """Nonlinear iteration failed to converge within the iteration budget."""


class QuadratureTooLow(SaddleLabError):
    """Quadrature rule cannot integrate the declared integrand exactly."""


class ConfigError(SaddleLabError):
    """Invalid experiment configuration."""


class ValidationFailure(SaddleLabError):
    """Emitted experiment outputs violate a required invariant."""


class UnstablePairWarning(UserWarning):
    """Scott-Vogelius requested on a mesh without the barycentric split."""
