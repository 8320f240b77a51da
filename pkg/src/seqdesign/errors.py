"""Exception types shared across the package."""


class SeqDesignError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SeqDesignError):
    """Invalid run configuration or criterion specification."""


class FactorizationError(SeqDesignError):
    """Correlation matrix could not be factorized (near-singular).

    Usually means the design has near-duplicate points or the correlation
    parameters make the process almost perfectly correlated; a larger
    nugget typically fixes it.
    """


class FitError(SeqDesignError):
    """Model fitting failed for every start."""


class TransformationError(SeqDesignError):
    """Output transformation applied outside its domain."""
