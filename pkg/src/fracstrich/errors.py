"""Exception types shared across the package.

Each error class carries the process exit code used by the command line
harness, so library failures map onto CLI statuses without a lookup table.
"""


class FracstrichError(Exception):
    exit_code = 1


class ConfigError(FracstrichError, ValueError):
    """Malformed or schema-violating experiment configuration."""

    exit_code = 2


class ResolutionError(FracstrichError, ValueError):
    """A grid or quadrature cannot resolve the requested computation."""

    exit_code = 3


class HypothesisError(FracstrichError, ValueError):
    """Parameters outside the window where the estimate is asserted."""

    exit_code = 4


class SingularSamplingError(ResolutionError):
    """A weight evaluated to a non-finite value on a sampled cell."""


class DivisionGuardError(FracstrichError, ValueError):
    """A weight vanished where its reciprocal is needed."""

    exit_code = 3
