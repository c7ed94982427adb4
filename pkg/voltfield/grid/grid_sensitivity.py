from dataclasses import dataclass
from typing import Optional

import numpy as np

from .grid_powerflow import GridState,solve_power_flow

ORACLE_STEP = 1e-4

@dataclass(frozen=True)
class SensitivityMatrix:
    """
    Voltage magnitude sensitivity coefficients in non-slack order: kp[i,j] = d|v_i|/dp_j and
    kq[i,j] = d|v_i|/dq_j, pu-volt per pu-power.
    """
    kp: np.ndarray
    kq: np.ndarray
    computed_at: Optional[float] = None

def oracle_sensitivities(model,state,h=ORACLE_STEP,computed_at=None):
    """
    Model-based sensitivity coefficients by central finite differences of the power flow.

    Usage:
        sens = oracle_sensitivities(model,state)

    Inputs:
        model -> [object] instance of class NetworkModel
        state -> [GridState] converged operating point

    Parameters:
        h -> [float, default=1e-4] perturbation step in pu
        computed_at -> [float, default=None] timestamp stored with the result (second of day in the harness)

    Outputs:
        sens -> [SensitivityMatrix] N_b x N_b matrices kp and kq

    Note:
        (1) Each column j is (|v(x + h e_j)| - |v(x - h e_j)|)/(2h) with the slack voltage held fixed.
        The truncation error is O(h^2): halving h changes the coefficients by roughly a quarter of
        the previous difference, down to the floor set by the power-flow tolerance (1e-10/h).
        (2) Perturbed solves are warm-started from `state`; their errors propagate unchanged.
    """
    ns = model.nonslack
    n_b = len(ns)
    kp,kq = np.zeros((n_b,n_b)),np.zeros((n_b,n_b))
    p0,q0 = state.p_inj.copy(),state.q_inj.copy()

    def solve(p,q):
        return solve_power_flow(model,p,q,state.slack_v,v0=state).v_mag[ns]

    for col,k in enumerate(ns):
        step = np.zeros(model.n_bus)
        step[k] = h
        kp[:,col] = (solve(p0+step,q0) - solve(p0-step,q0))/(2*h)
        kq[:,col] = (solve(p0,q0+step) - solve(p0,q0-step))/(2*h)

    return SensitivityMatrix(kp=kp,kq=kq,computed_at=computed_at)

def linearized_voltage(prev,sens,dp,dq):
    """
    First-order prediction of the non-slack voltage magnitudes after injection variations.

    Usage:
        v = linearized_voltage(state,sens,dp,dq)

    Inputs:
        prev -> [GridState or float array] previous operating point, or its N_b non-slack voltage magnitudes
        sens -> [SensitivityMatrix or SensitivityEstimate] coefficients (kp/kq or kp_hat/kq_hat)
        dp,dq -> [float array] N_b per-unit injection variations

    Outputs:
        v -> [float array] |v_i,prev| + dp.K^p_i + dq.K^q_i for every non-slack bus i
    """
    v_prev = prev.v_nonslack if isinstance(prev,GridState) else np.asarray(prev,dtype=float)
    kp = getattr(sens,'kp',None)
    if kp is None:
        kp,kq = sens.kp_hat,sens.kq_hat
    else:
        kq = sens.kq
    dp,dq = np.asarray(dp,dtype=float),np.asarray(dq,dtype=float)
    n_b = v_prev.size
    if kp.shape != (n_b,n_b) or kq.shape != (n_b,n_b) or dp.size != n_b or dq.size != n_b:
        raise ValueError('dimension mismatch: N_b = {:d}'.format(n_b))
    return v_prev + kp @ dp + kq @ dq
