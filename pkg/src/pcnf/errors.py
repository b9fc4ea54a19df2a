"""Exception types shared across the package."""


class PcnfError(Exception):
    """Base class for all pcnf errors."""


class InputError(PcnfError):
    """Malformed network file or invalid model parameters."""


class InfeasibleError(PcnfError):
    """Raised when a stage certifies infeasibility.

    ``stage`` is one of ``"discretization"``, ``"tightening"``, ``"lp"``.
    """

    def __init__(self, message, stage):
        super().__init__(message)
        self.stage = stage


class CapExceededError(PcnfError):
    """A configured resource cap (enumeration budget, member count) was hit."""


class SolverError(PcnfError):
    """Internal LP solver failure (iteration cap, unexpected unboundedness)."""
