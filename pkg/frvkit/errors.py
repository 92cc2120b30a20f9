#!/usr/bin/env python3
"""
FRVKit exception hierarchy

Library code raises these; the verification runner and the CLI turn them
into result dictionaries and exit codes.
"""

from typing import Any, Optional


class FRVError(Exception):
    """Base class for every FRVKit failure"""


class NonFiniteValue(FRVError, ValueError):
    """NaN or Inf reached a public operation"""


class SingularQuaternion(FRVError, ZeroDivisionError):
    """Quaternion with |a|^2 + |b|^2 below the inversion threshold"""


class DegenerateQuadratic(FRVError):
    """u1 == u2: the |c| = 1, d = 0 ray of the unitary quadratic"""


class ZeroC(FRVError):
    """c = 0; the caller must use the first-moment formula"""


class OnUnitCircle(FRVError):
    """Complex Green's function evaluated on its cut |z| = 1"""


class OnUnitCircleSingularity(FRVError):
    """Quaternion Green's function on the divergent |c| = 1, d = 0 ray"""


class NoConvergence(FRVError):
    """Newton inversion failed for every seed"""

    def __init__(self, message: str, best_residual: float = float('inf'), best: Optional[Any] = None):
        super().__init__(message)
        self.best_residual = best_residual
        self.best = best


class StencilFailure(FRVError):
    """A finite-difference stencil point could not be evaluated"""


class NoBracket(FRVError):
    """No inside/outside transition along a scan ray"""


class PolePoint(FRVError):
    """|z/scale| = M, pole of the CUE-sum rational formulas"""


class DenominatorCollapse(FRVError):
    """2p^2 omega - x vanished, omega' undefined"""


class NoValidRoot(FRVError):
    """Cubic branch rule could not select a unique real root"""


class DensityDenominatorZero(FRVError):
    """Implicit-differentiation denominator of the cubic vanished"""


class ConvergenceFailure(FRVError):
    """Eigensolver failed or its residual check did not pass"""


class EmptyCloud(FRVError):
    """Comparison requested on an empty eigenvalue cloud"""


class IllConditionedEigenbasis(FRVError):
    """Eigenvector matrix condition number above the overlap limit"""

    def __init__(self, message: str, condition: float = float('inf')):
        super().__init__(message)
        self.condition = condition


class ConfigHashMismatch(FRVError):
    """Sidecar configuration hash does not match its data"""


class ModelParseError(FRVError, ValueError):
    """Model string, bounds or config file could not be parsed"""
