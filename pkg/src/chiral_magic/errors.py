"""Exception types raised across the package."""
from __future__ import annotations


class ChiralMagicError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class NearDiracPoint(ChiralMagicError):
    code = "NearDiracPoint"


class NonInvariant(ChiralMagicError):
    code = "NonInvariant"


class TruncationUnstable(ChiralMagicError):
    code = "TruncationUnstable"


class AmbiguousCluster(ChiralMagicError):
    code = "AmbiguousCluster"


class EmptyKernel(ChiralMagicError):
    code = "EmptyKernel"


class NonConvergent(ChiralMagicError):
    code = "NonConvergent"


class InexactCoefficients(ChiralMagicError):
    code = "InexactCoefficients"


class InconclusiveGap(ChiralMagicError):
    code = "InconclusiveGap"


class PoleAt(ChiralMagicError):
    code = "PoleAt"


class IllConditionedZero(ChiralMagicError):
    code = "IllConditionedZero"


class SingularSample(ChiralMagicError):
    code = "SingularSample"


class NonQuantized(ChiralMagicError):
    code = "NonQuantized"


class ContourTooClose(ChiralMagicError):
    code = "ContourTooClose"


class PotentialError(ChiralMagicError):
    code = "PotentialError"
