"""
Exceptions raised by voltfield.

Every failure mode has its own class so that callers (the harness, the CLI) can
decide which ones are recoverable. All of them derive from VoltfieldError.
"""

class VoltfieldError(Exception):
    """Base class of all voltfield errors."""

class ConfigError(VoltfieldError):
    """
    Invalid scenario or network description.

    Inputs:
        field -> [str] dotted path of the offending field, such as 'estimator.tau_min'
        message -> [str] what is wrong with it
    """
    def __init__(self,field,message):
        self.field = field
        self.message = message
        super().__init__('{:s}: {:s}'.format(field,message))

# grid

class GridError(VoltfieldError):
    pass

class NetworkValidationError(GridError,ConfigError):
    pass

class NonConvergence(GridError):
    """Newton-Raphson did not reach the tolerance; the operating point is likely infeasible."""
    def __init__(self,iterations,mismatch):
        self.iterations = iterations
        self.mismatch = mismatch
        super().__init__('power flow did not converge in {:d} iterations (mismatch {:.3e} pu)'.format(iterations,mismatch))

class SingularJacobian(GridError):
    pass

# estimation

class EstimationError(VoltfieldError):
    pass

class SingularSystem(EstimationError):
    """H^T H + lambda I is not invertible: raise lambda or extend the window."""

class NumericalBlowup(EstimationError):
    """Covariance eigenvalue above the configured cap (RLS windup)."""

class EigenFailure(EstimationError):
    pass

# control

class ControlError(VoltfieldError):
    pass

class MissingEstimate(ControlError):
    pass

class InconsistentDimensions(ControlError):
    pass

class TooManyVertices(ControlError):
    pass

class QpInfeasible(ControlError):
    """The QP has no feasible point. `certificate` holds the Farkas multipliers of the phase-1 LP."""
    def __init__(self,message,certificate=None):
        self.certificate = certificate
        super().__init__(message)

class QpMaxIterations(ControlError):
    pass

# forecast

class ForecastError(VoltfieldError):
    pass

class StaleData(ForecastError):
    pass

# metrics

class MetricsError(VoltfieldError):
    pass

class ZeroNormTruth(MetricsError):
    pass

class ZeroMax(MetricsError):
    pass

# harness

class HarnessError(VoltfieldError):
    pass

class ProfileGap(HarnessError):
    pass

class PowerFlowDiverged(HarnessError):
    """Raised by the day loop; `runlog` holds everything recorded before the failure."""
    def __init__(self,message,runlog=None):
        self.runlog = runlog
        super().__init__(message)

# telemetry

class TelemetryError(VoltfieldError):
    pass

class DatagramError(TelemetryError):
    """Datagram with a wrong length, magic number or version."""

class CrcMismatch(DatagramError):
    pass
