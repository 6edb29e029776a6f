"""Exception hierarchy."""


class BeamAlignError(Exception):
    """Base class for all package errors."""


class DimensionError(BeamAlignError, ValueError):
    pass


class ContractViolation(BeamAlignError, ValueError):
    """An input broke a documented precondition (e.g. non-unit beamformer)."""


class DegenerateError(BeamAlignError, ArithmeticError):
    """A zero vector had to be normalized (probability zero under noise)."""


class RankDeficiencyError(BeamAlignError, ArithmeticError):
    def __init__(self, message: str, dimension: int | None = None, iteration: int | None = None):
        super().__init__(message)
        self.dimension = dimension
        self.iteration = iteration


class NonConvergenceError(BeamAlignError, ArithmeticError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ConfigError(BeamAlignError, ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
