"""Custom exceptions for twigkit"""

from typing import Optional


class TwigError(Exception):
    """Base exception for twigkit"""
    pass


class ConfigurationError(TwigError):
    """Configuration error"""
    pass


class ModelError(TwigError):
    """Unknown model, unsupported order or malformed model document"""
    pass


class DivergenceError(TwigError):
    """Right-hand side produced a non-finite value"""

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class IntegrationError(TwigError):
    """Trajectory integration failed"""
    pass


class HorizonExceededError(IntegrationError):
    """Trajectory left the representable range before the horizon was reached"""

    def __init__(self, message: str, time: Optional[float] = None):
        super().__init__(message)
        self.time = time


class StiffnessError(IntegrationError):
    """Step size underflow in the explicit integrator"""
    pass


class FixedPointError(TwigError):
    """Fixed point search failed"""
    pass


class NoConvergenceError(FixedPointError):
    """Newton iteration did not reach the residual tolerance"""
    pass


class SingularJacobianError(FixedPointError):
    """State Jacobian is singular at a Newton iterate"""
    pass


class NonOscillatoryError(FixedPointError):
    """Samples handed to the interior fixed point search do not oscillate"""
    pass


class SpectrumError(TwigError):
    """SVD of a trajectory Jacobian failed"""

    def __init__(self, message: str, t_max: Optional[float] = None):
        super().__init__(message)
        self.t_max = t_max


class ClassificationError(TwigError):
    """Sweep cannot be classified"""
    pass


class OracleError(TwigError):
    """Closed-form reference evaluation failed"""
    pass


class SingularityError(OracleError):
    """Closed form evaluated at or beyond its singular time"""
    pass


class UnsupportedOracleError(OracleError):
    """No closed form exists for the requested family/sensitivity pair"""
    pass
