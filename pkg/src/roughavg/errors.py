"""Exception hierarchy shared across the library and the CLI.

The CLI maps these onto distinct exit codes, so keep the split between
configuration problems, grid problems and numerical failures.
"""


class RoughAvgError(Exception):
    """Base class for all library errors."""


class ConfigError(RoughAvgError):
    """Invalid or inconsistent configuration (bad keys, bad ladders, ...)."""


class GridError(RoughAvgError):
    """Interval outside the grid, incompatible grids, misaligned steps."""


class NumericalError(RoughAvgError):
    """Blow-up, failed factorization, non-convergent iteration."""


class CheckFailed(RoughAvgError):
    """A verification battery reported a failing invariant."""
