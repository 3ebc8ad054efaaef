"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Arrays or objects that should share a state/action grid do not."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (singular system, divergence, ...)."""


class ConvergenceError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    def __init__(self, message, condition_number=float("inf")):
        super().__init__(f"{message} (condition number {condition_number:.3e})")
        self.condition_number = condition_number


class DivergenceError(NumericalError):
    pass
