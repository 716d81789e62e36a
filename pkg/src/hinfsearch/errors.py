"""Exception types shared across the package."""


class HinfSearchError(Exception):
    """Base class for package-specific failures."""


class UnstablePolicyError(HinfSearchError):
    """The closed loop is not Schur stable; the H-infinity cost is +inf."""

    def __init__(self, rho, msg=None):
        self.rho = float(rho)
        super().__init__(msg or f"policy not stabilizing: rho={self.rho:.6g}")


class NondifferentiablePointError(HinfSearchError):
    """The cost fails the differentiability gap test at this policy."""


class InfeasibleBallError(HinfSearchError):
    """A sampling ball around the current policy leaves the stabilizing set."""


class OracleError(HinfSearchError):
    """An oracle could not produce a value (e.g. too many redraws)."""


class ProblemFormatError(HinfSearchError):
    """A problem file is malformed; the message names the offending field."""


class GenerationError(HinfSearchError):
    """Random instance generation exhausted its rejection budget."""
