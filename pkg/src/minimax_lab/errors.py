"""Exception types raised across the package."""


class MinimaxLabError(Exception):
    """Base class for all package errors."""


class ParameterDomainError(MinimaxLabError, ValueError):
    """A parameter point lies outside its model's natural space."""


class ShapeError(MinimaxLabError, ValueError):
    pass


class ArgumentError(MinimaxLabError, ValueError):
    pass


class LossDomainError(MinimaxLabError, ValueError):
    pass


class DecompositionError(MinimaxLabError, ValueError):
    pass


class UnsupportedProjectionError(MinimaxLabError):
    pass


class NumericalError(MinimaxLabError):
    """Base for failures of a numerical routine (CLI exit status 3)."""


class ConvergenceError(NumericalError):
    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class UnderflowError(NumericalError):
    pass


class EmbeddingError(NumericalError):
    """No shifted copy of a prior support fits inside the restricted space."""


class FamilyMismatchError(NumericalError):
    """An equivariant family whose risk is not constant for the given model."""


class EstimatorFailure(NumericalError):
    def __init__(self, message, replicate=None):
        super().__init__(message)
        self.replicate = replicate
