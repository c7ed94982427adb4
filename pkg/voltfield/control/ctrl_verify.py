from dataclasses import dataclass
from itertools import product

import numpy as np
import pandas as pd

from ..utils.errors import TooManyVertices

MAX_INTERVAL_COEFFS = 10

@dataclass(frozen=True)
class RobustnessReport:
    """
    Worst-case voltages over the vertices of the coefficient box.

    Attributes:
        v_nominal -> [float array] prediction with the estimated coefficients
        v_worst_max,v_worst_min -> [float array] highest / lowest prediction over all vertices, per node
        upper_violation,lower_violation -> [float array] amount by which v_max / v_min is crossed (0 if not)
        n_vertices -> [int] vertices enumerated per node
    """
    v_nominal: np.ndarray
    v_worst_max: np.ndarray
    v_worst_min: np.ndarray
    upper_violation: np.ndarray
    lower_violation: np.ndarray
    n_vertices: int

    def holds(self,tol=1e-6):
        return bool(np.all(self.upper_violation <= tol) and np.all(self.lower_violation <= tol))

def verify_robustness(setpoint,problem,plants,max_coeffs=MAX_INTERVAL_COEFFS):
    """
    Audit a setpoint by enumerating every sign vertex of the uncertain coefficients of the plant columns.

    Usage:
        report = verify_robustness(setpoint,problem,plants)

    Inputs:
        setpoint -> [Setpoint] solved setpoint with p_pv / q_pv in W / var
        problem -> [RobustControlProblem] the problem the setpoint was computed for
        plants -> [list of PvPlantConfig] resolved plants

    Parameters:
        max_coeffs -> [int, default=10] largest number of interval coefficients per node

    Outputs:
        report -> [RobustnessReport]

    Note:
        For node i the prediction at vertex s is v_i + sum_j (K^p_ij + s_j dK^p_ij) dp_j + (K^q_ij + s'_j dK^q_ij) dq_j
        over the plant columns j, with dp, dq the setpoint minus the previous injection in per-unit.
    """
    cols = np.array([plant.column for plant in plants])
    n_coeffs = 2*cols.size
    if n_coeffs > max_coeffs:
        raise TooManyVertices('{:d} interval coefficients per node, at most {:d} can be enumerated'.format(n_coeffs,max_coeffs))
    est = problem.estimates
    base = problem.power_base
    dp = (np.asarray(setpoint.p_pv,dtype=float) - np.asarray(problem.p_prev,dtype=float))/base
    dq = (np.asarray(setpoint.q_pv,dtype=float) - np.asarray(problem.q_prev,dtype=float))/base
    delta = np.r_[dp,dq]

    k_hat = np.hstack([est.kp_hat[:,cols],est.kq_hat[:,cols]])
    dk = np.hstack([est.dkp[:,cols],est.dkq[:,cols]])
    v_prev = np.asarray(problem.v_prev,dtype=float)
    return _report(v_prev,k_hat,dk,delta,problem.v_min,problem.v_max)

def _report(v_prev,k_hat,dk,delta,v_min,v_max):
    signs = np.array(list(product((-1.0,1.0),repeat=delta.size)))
    # vertices x nodes
    v_vertices = v_prev[None,:] + (k_hat[None,:,:] + signs[:,None,:]*dk[None,:,:]) @ delta
    v_max_w,v_min_w = v_vertices.max(axis=0),v_vertices.min(axis=0)
    return RobustnessReport(v_nominal=v_prev + k_hat @ delta,v_worst_max=v_max_w,v_worst_min=v_min_w,
                            upper_violation=np.clip(v_max_w - v_max,0,None),
                            lower_violation=np.clip(v_min - v_min_w,0,None),
                            n_vertices=len(signs))

def audit_runlog(runlog,tol=1e-6,max_coeffs=MAX_INTERVAL_COEFFS):
    """
    Re-check every optimal control cycle of a run log against its audit record.

    Usage:
        df = audit_runlog(RunLog.read('out/2022-07-18'))

    Inputs:
        runlog -> [RunLog] controlled run with its audit and control tables

    Outputs:
        df -> [pandas DataFrame] one row per audited cycle: sod, worst_max, worst_min, upper_violation,
        lower_violation, holds

    Note:
        Cycles that kept the previous setpoint are skipped: their setpoint was computed for another cycle.
    """
    plants = runlog.plant_names
    if 2*len(plants) > max_coeffs:
        raise TooManyVertices('{:d} interval coefficients per node, at most {:d} can be enumerated'.format(2*len(plants),max_coeffs))
    audit,ctrl = runlog.audit,runlog.control
    rows = []
    for sod,cyc in ctrl.groupby('sod',sort=True):
        if not (cyc['status'] == 'optimal').all():
            continue
        cyc = cyc.set_index('plant').loc[plants]
        aud = audit[audit['sod'] == sod]
        if aud.empty:
            continue
        base = float(aud['power_base'].iloc[0])
        delta = np.r_[(cyc['p_sp'] - cyc['p_prev']).to_numpy(dtype=float),
                      (cyc['q_sp'] - cyc['q_prev']).to_numpy(dtype=float)]/base
        k_hat = aud[['kp_'+p for p in plants] + ['kq_'+p for p in plants]].to_numpy(dtype=float)
        dk = aud[['dkp_'+p for p in plants] + ['dkq_'+p for p in plants]].to_numpy(dtype=float)
        rep = _report(aud['v_prev'].to_numpy(dtype=float),k_hat,dk,delta,
                      aud['v_min'].to_numpy(dtype=float),aud['v_max'].to_numpy(dtype=float))
        rows.append((sod,float(rep.v_worst_max.max()),float(rep.v_worst_min.min()),float(rep.upper_violation.max()),
                     float(rep.lower_violation.max()),rep.holds(tol)))
    return pd.DataFrame(rows,columns=['sod','worst_max','worst_min','upper_violation','lower_violation','holds'])
