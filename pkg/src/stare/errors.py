"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid or inconsistent physical/dimensionless parameters."""


class DimensionError(ValueError):
    """Operator or state of the wrong shape."""


class InvalidStateError(ValueError):
    """A matrix that is not a valid density matrix."""


class IntegrationError(RuntimeError):
    """The ODE driver gave up before reaching the end of the span."""

    def __init__(self, message, t_last=None, state_last=None):
        super().__init__(message)
        self.t_last = t_last
        self.state_last = state_last


class StiffnessError(IntegrationError):
    """Step size underflowed; carries the last accepted state."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach its tolerance."""
