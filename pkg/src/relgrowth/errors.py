"""Exception hierarchy. Every error carries a stable machine-readable ``code``."""


class RelGrowthError(Exception):
    code = "ERROR"

    def __init__(self, message: str = "", **diagnostics):
        super().__init__(message or self.code)
        self.diagnostics = diagnostics

    def to_dict(self) -> dict:
        return {"code": self.code, "message": str(self), **self.diagnostics}


class DominantWitnessNotFound(RelGrowthError):
    code = "DOMINANT_WITNESS_NOT_FOUND"


class OrderInconclusive(RelGrowthError):
    code = "ORDER_INCONCLUSIVE"


class NegativeUnderTolerance(RelGrowthError):
    code = "NEGATIVE_UNDER_TOLERANCE"


class BisectionStall(RelGrowthError):
    code = "BISECTION_STALL"


class RotFNearZero(RelGrowthError):
    code = "ROT_F_NEAR_ZERO"


class FNotPositive(RelGrowthError):
    code = "F_NOT_POSITIVE"


class DimensionMismatch(RelGrowthError):
    code = "DIMENSION_MISMATCH"


class ZeroClass(RelGrowthError):
    code = "ZERO_CLASS"


class HypothesisFailed(RelGrowthError):
    code = "HYPOTHESIS_FAILED"


class ResolutionTooCoarse(RelGrowthError):
    code = "RESOLUTION_TOO_COARSE"


class InvalidParameters(RelGrowthError, ValueError):
    code = "INVALID_PARAMETERS"
