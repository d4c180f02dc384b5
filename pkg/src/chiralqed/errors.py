"""Exception hierarchy.

Config-level problems derive from :class:`ConfigError`, numerical failures
from :class:`NumericError`. The CLI maps the two families onto distinct exit
codes.
"""


class ChiralQEDError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ChiralQEDError, ValueError):
    pass


class NumericError(ChiralQEDError, ArithmeticError):
    pass


# lattice
class BadParams(ConfigError):
    pass


class EvenDiamond(ConfigError):
    pass


class WidthTooLarge(ConfigError):
    pass


class AlreadyDisordered(ConfigError):
    pass


# spectral
class NoConvergence(NumericError):
    def __init__(self, order: int, residual: float, iterations: int):
        self.order = order
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"QL iteration did not converge for matrix of order {order} "
            f"after {iterations} sweeps (off-diagonal residual {residual:.3e})"
        )


class EmptyBand(NumericError):
    pass


class GapCollapse(NumericError):
    def __init__(self, gap: float, tol: float):
        self.gap = gap
        self.tol = tol
        super().__init__(f"flat band not separated: gap {gap:.3e} <= 10*tol ({10 * tol:.3e})")


class UnsupportedDisorder(ConfigError):
    pass


# emitter dynamics
class BadSite(ConfigError):
    pass


class ZeroWeight(NumericError):
    pass


class WeakCouplingViolated(NumericError):
    def __init__(self, g: float, gap: float):
        self.g = g
        self.gap = gap
        super().__init__(f"coupling g={g:.3e} is not below the gap {gap:.3e}")


class MissingTau(ChiralQEDError, LookupError):
    pass


# observables
class NotNormalized(ChiralQEDError, ValueError):
    pass


class AllRealizationsFailed(NumericError):
    pass


# config
class ParseError(ConfigError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class ValidationError(ConfigError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
