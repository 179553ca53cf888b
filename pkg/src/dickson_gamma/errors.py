"""Exception hierarchy shared by every module of the package."""


class DicksonGammaError(Exception):
    """Base class for all errors raised by this package."""


class PoleError(DicksonGammaError, ZeroDivisionError):
    """A function was evaluated at one of its poles."""


class KernelConvergenceError(DicksonGammaError, ArithmeticError):
    """An iterative kernel (series or continued fraction) ran out of budget."""


class DomainError(DicksonGammaError, ValueError):
    """Arguments fall outside the region an operation supports."""


class SingularConfigurationError(DomainError):
    """A closed form cannot be assembled because a precondition is violated."""


class IncompatiblePolicyError(DicksonGammaError, ValueError):
    """The truncation policy does not match the convergence regime of a case."""


class SeriesDivergenceError(DicksonGammaError, ArithmeticError):
    """Outer terms keep growing where the policy expected them to shrink."""


class BranchAmbiguityError(DicksonGammaError, ValueError):
    """A multivalued power sits too close to its branch cut to trust."""


class DiscretizationError(DicksonGammaError, ArithmeticError):
    """Quadrature did not settle under node doubling."""


class PoleProximityError(DomainError):
    """An integration contour passes too close to a pole of the integrand."""


class ConfigError(DicksonGammaError, ValueError):
    """A suite configuration failed to parse or validate."""
