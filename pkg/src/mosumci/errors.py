"""Exception types raised by the package."""


class MosumError(ValueError):
    """Base class for invalid inputs and configurations."""


class InvalidBandwidthError(MosumError):
    pass


class DegenerateConfigurationError(MosumError):
    pass


class ConfigurationError(MosumError):
    pass


class BandwidthConditionWarning(UserWarning):
    """A per-change bandwidth violates ``2 * G_j < delta_j``."""


class DiscreteErrorsWarning(UserWarning):
    """Discrete error laws make argmax ties occur with positive probability."""


class DataError(MosumError):
    """Malformed or empty input data."""
