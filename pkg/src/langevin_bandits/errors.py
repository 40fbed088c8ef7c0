"""Exception types shared across the library."""


class BanditError(Exception):
    """Base class for all library errors."""


class InvalidInputError(BanditError):
    """Malformed argument: dimension mismatch, bad shape, out-of-range value."""


class NumericalError(BanditError):
    """Linear-algebra failure, e.g. a factorization of a non-PD matrix."""


class DivergenceError(BanditError):
    """A gradient chain left the finite range; carries the offending step size."""

    def __init__(self, message, eta=None, lam_max_estimate=None):
        super().__init__(message)
        self.eta = eta
        self.lam_max_estimate = lam_max_estimate


class OptimizationError(BanditError):
    """An iterative minimizer failed to make progress."""


class UnsupportedModelError(BanditError):
    """Operation not defined for this reward-model family."""


class InvalidScheduleError(BanditError):
    """Chain schedule violates the spectral stability bound."""


class ConfigError(BanditError):
    """Experiment configuration failed validation."""


class DataFormatError(BanditError):
    """Dataset file failed to parse or contradicts its declared shape."""


class EndOfDataError(BanditError):
    """A dataset-backed environment ran out of instances."""


class RunError(BanditError):
    """A simulation run aborted; carries the round and seed where it failed."""

    def __init__(self, message, round_index=None, seed=None):
        super().__init__(message)
        self.round_index = round_index
        self.seed = seed
