"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericalError -> 4.
"""


class LayactError(Exception):
    pass


class ConfigError(LayactError):
    """Invalid configuration: bad hyperparameter, unknown key, shape mismatch."""


class DataError(LayactError):
    """Malformed input data: annotation schema violations, bad boxes, bad labels."""


class NumericalError(LayactError):
    """Numerical failure: non-finite values where finite ones are required."""


class FullyMaskedRowError(DataError):
    """An attention row had no unmasked source position to attend to."""
