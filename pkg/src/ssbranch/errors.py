"""Exception types shared across the package.

Each maps to a CLI exit code where relevant (see cli.py): configuration
problems exit 2, a missing Malthusian exponent exits 3, an exceeded node
cap exits 4, and unsupported parameter regimes exit 5.
"""


class SSBranchError(Exception):
    """Base class for all package errors."""


class ConfigError(SSBranchError):
    """Invalid run configuration or law specification."""


class NoMalthusianExponent(SSBranchError):
    """The bracket scan found no root of kappa.

    Carries a diagnostic dict with the scan's closest approach to a root.
    """

    def __init__(self, message, diagnostic=None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


class CapExceeded(SSBranchError):
    """Tree growth hit the node cap before reaching the target."""


class UnsupportedRegime(SSBranchError):
    """Parameters outside the regime the method is valid for."""


class NotGrown(SSBranchError):
    """A tree query beyond the region that has been materialized."""


class InvalidLine(SSBranchError):
    """A label set that is not an antichain."""


class PathTooShort(SSBranchError):
    """A simulated path does not extend far enough for the requested query."""
