"""Error types raised across the package."""


class ParameterError(ValueError):
    """An argument is outside its documented range."""


class DomainError(ArithmeticError):
    """A transform is evaluated outside its convergence domain."""


class SingularityError(ZeroDivisionError):
    """A density denominator vanishes at the requested point."""


class NumericError(ArithmeticError):
    """A numerical routine (eigensolver, quadrature) failed."""


class UnsupportedModeError(ValueError):
    """The operation is not defined for the model's composition mode."""


class ConvergenceError(RuntimeError):
    """A fixed-point solver stopped before reaching its tolerance.

    Parameters
    ----------
    message : str
        Human-readable description.
    residual : float
        Residual of the last iterate.
    iterations : int
        Number of iterations performed.
    """

    def __init__(self, message, residual=float("nan"), iterations=0):
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations
