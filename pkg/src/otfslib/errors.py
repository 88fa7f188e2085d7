"""Exception types shared across the library."""


class ConfigurationError(ValueError):
    """Frame/channel combination is inconsistent (bad lengths, delays, kinds)."""


class FractionalDopplerError(ValueError):
    """A closed-form matrix path was asked for a model with non-integer Doppler."""


class SingularChannelError(ValueError):
    """Channel has (near-)zero eigenvalues and cannot be inverted bin-wise."""

    def __init__(self, message, zero_bins=()):
        super().__init__(message)
        self.zero_bins = tuple(zero_bins)


class SingularMatrixError(ValueError):
    """Matrix inversion requested on a rank-deficient matrix."""


class StructureError(ValueError):
    """Input matrix does not have the structure the operation requires."""


class DetectionError(RuntimeError):
    """Iterative detector hit a numerical failure."""

    def __init__(self, message, iteration=None):
        super().__init__(message)
        self.iteration = iteration
