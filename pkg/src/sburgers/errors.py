"""Exception types raised across the package."""


class SBurgersError(Exception):
    pass


class InvalidInputError(SBurgersError, ValueError):
    pass


class DomainError(SBurgersError, ValueError):
    pass


class ResolutionError(SBurgersError, ValueError):
    """The grid cannot resolve a heat kernel of the requested width."""


class ConfigurationError(SBurgersError, ValueError):
    pass


class BlowUpError(SBurgersError, FloatingPointError):
    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


class IterationError(SBurgersError, RuntimeError):
    def __init__(self, iterations, distance):
        self.iterations = iterations
        self.distance = distance
        super().__init__(
            f"Picard iteration did not converge after {iterations} iterations "
            f"(last distance {distance:.3e})"
        )


class CostGuardError(SBurgersError, ValueError):
    pass


class CheckpointError(SBurgersError, ValueError):
    pass
