"""
voltfield package

This package simulates model-less robust voltage control of PV plants in a low voltage distribution grid.
Currently, it covers:

1. Load a radial network and solve its power flow; compute model-based voltage sensitivities as reference;
2. Estimate the voltage sensitivity coefficients from measurements only (least squares bootstrap, forgetting-factor and
   smoothing-factor recursive least squares) together with their confidence intervals;
3. Compute PV setpoints with a robust quadratic program that keeps every node within the voltage band for any
   coefficient inside the intervals, and audit them afterwards;
4. Run a simulated day in closed loop with noisy measurements and a persistence forecast, optionally streaming the
   measurements over a UDP telemetry loopback;
5. Score the estimated intervals (RMSE, PICP, PINAW, CWC) against the reference coefficients.
"""

__version__ = '0.1.0'

from .vfclasses.networkclass import NetworkModel
from .vfclasses.scenarioclass import ScenarioConfig
from .vfclasses.runlogclass import RunLog
from .harness.harness_run import run_day,no_control_baseline
