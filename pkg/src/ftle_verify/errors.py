"""Exception types shared across the package."""


class FtleVerifyError(Exception):
    """Base class for all package errors."""


class InvalidStateError(FtleVerifyError):
    """A state is outside bounds or sits on an obstacle cell."""


class DegenerateStencilError(FtleVerifyError):
    """No valid perturbation neighbor exists along some axis."""


class LayoutError(FtleVerifyError):
    """A grid layout is malformed or its goal is unreachable."""


class RegionError(FtleVerifyError):
    """A region does not intersect the valid field domain."""


class ShapeMismatchError(FtleVerifyError):
    """Network weights are inconsistent with the declared layer sizes."""


class ConfigError(FtleVerifyError):
    """An experiment configuration is invalid or references missing files."""


class InvariantError(FtleVerifyError):
    """An internal consistency check failed."""
