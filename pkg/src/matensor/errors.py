"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A scenario or sweep setting violates an invariant.

    The message names the offending key so command-line users can fix the
    config file without reading a traceback.
    """


class DegenerateColumnError(ValueError):
    """A factor column is unusable for phase-ratio estimation.

    Raised when the leading subvector of a column is exactly zero or the
    resulting ratio is not finite.
    """


class EstimationError(RuntimeError):
    """A stage of the estimation pipeline failed.

    The message is prefixed with the step name so failures can be attributed
    to decomposition, angle extraction, gain estimation, or reconstruction.
    """
