"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid knob, preset, or config-file entry."""


class DomainError(ValueError):
    """Geometric input outside the computational domain, or invalid bounds."""


class NumericalError(RuntimeError):
    """Singular operator, non-convergent quadrature, or similar failure."""
