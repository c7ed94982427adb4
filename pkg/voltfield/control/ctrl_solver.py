import logging
from dataclasses import dataclass,field
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from ..utils.errors import QpInfeasible,QpMaxIterations

log = logging.getLogger(__name__)

QP_TOLERANCE = 1e-8
QP_MAX_ITER = 500

@dataclass
class Setpoint:
    """
    Result of a QP solve.

    Attributes:
        solve_status -> [str] 'optimal', 'infeasible' or 'max_iterations'
        objective -> [float] objective value in solver units (per-unit squared for the robust QP)
        x -> [float array] raw solution vector, None when infeasible
        p_pv,q_pv -> [float array] plant setpoints in W / var, None for QPs without a plant layout
        aux -> [dict] audit variables: yp, yq (W, var), z, g (pu volt)
        plant_names -> [list of str]
        multipliers -> [float array] inequality multipliers (>= 0 at the optimum)
        kkt -> [dict] stationarity, primal_feasibility, dual_feasibility, complementarity residuals
        iterations -> [int] active-set iterations
        certificate -> [float array] phase-1 multipliers proving infeasibility
    """
    solve_status: str
    objective: float = np.nan
    x: Optional[np.ndarray] = None
    p_pv: Optional[np.ndarray] = None
    q_pv: Optional[np.ndarray] = None
    aux: dict = field(default_factory=dict)
    plant_names: list = field(default_factory=list)
    multipliers: Optional[np.ndarray] = None
    kkt: dict = field(default_factory=dict)
    iterations: int = 0
    certificate: Optional[np.ndarray] = None

    @property
    def ok(self):
        return self.solve_status == 'optimal'

    def raise_for_status(self):
        """Raise QpInfeasible or QpMaxIterations unless the solve was optimal."""
        if self.solve_status == 'infeasible':
            raise QpInfeasible('QP is infeasible',certificate=self.certificate)
        if self.solve_status == 'max_iterations':
            raise QpMaxIterations('active set did not terminate in {:d} iterations'.format(self.iterations))
        return self

def _phase_one(qp,tol):
    """
    Feasible starting point from the elastic LP  min 1^T s  s.t. G x - s <= h, -s_e <= A x - b <= s_e, s >= 0.
    Its optimum is zero exactly when the QP is feasible; otherwise its multipliers certify infeasibility.
    """
    n,m,me = qp.n,qp.G.shape[0],qp.A.shape[0]
    nv = n + m + me
    cost = np.r_[np.zeros(n),np.ones(m + me)]
    A_ub = np.zeros((m + 2*me + m + me,nv))
    b_ub = np.zeros(A_ub.shape[0])
    A_ub[:m,:n] = qp.G
    A_ub[:m,n:n+m] = -np.eye(m)
    b_ub[:m] = qp.h
    A_ub[m:m+me,:n] = qp.A
    A_ub[m:m+me,n+m:] = -np.eye(me)
    b_ub[m:m+me] = qp.b
    A_ub[m+me:m+2*me,:n] = -qp.A
    A_ub[m+me:m+2*me,n+m:] = -np.eye(me)
    b_ub[m+me:m+2*me] = -qp.b
    A_ub[m+2*me:,n:] = -np.eye(m + me)
    res = linprog(cost,A_ub=A_ub,b_ub=b_ub,bounds=[(None,None)]*nv,method='highs')
    if res.status != 0:
        return None,None,res.message
    infeasibility = res.fun
    scale = 1 + max(np.max(np.abs(qp.h),initial=0),np.max(np.abs(qp.b),initial=0))
    if infeasibility > tol*scale:
        certificate = -np.asarray(res.ineqlin.marginals[:m + 2*me])
        return None,certificate,'phase-1 infeasibility {:.3e}'.format(infeasibility)
    return res.x[:n],None,None

def _solve_eqp(qp,x,working):
    """Step d and multipliers of the equality-constrained QP on the working set."""
    n = qp.n
    Gw = qp.G[working]
    C = np.vstack([qp.A,Gw])
    k = C.shape[0]
    K = np.block([[qp.Q,C.T],[C,np.zeros((k,k))]])
    rhs = np.r_[-(qp.Q @ x + qp.c),np.zeros(k)]
    try:
        sol = np.linalg.solve(K,rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K,rhs,rcond=None)[0]
    return sol[:n],sol[n:n+qp.A.shape[0]],sol[n+qp.A.shape[0]:]

def kkt_residuals(qp,x,lam,nu):
    """Infinity norms of the KKT conditions at (x,lam,nu)."""
    slack = qp.G @ x - qp.h
    grad = qp.Q @ x + qp.c + qp.G.T @ lam + qp.A.T @ nu
    return {'stationarity':float(np.max(np.abs(grad),initial=0)),
            'primal_feasibility':float(max(np.max(slack,initial=0),np.max(np.abs(qp.A @ x - qp.b),initial=0))),
            'dual_feasibility':float(np.max(-lam,initial=0)),
            'complementarity':float(np.max(np.abs(lam*slack),initial=0))}

def solve_qp(qp,tol=QP_TOLERANCE,max_iter=QP_MAX_ITER):
    """
    Solve a convex QP with a primal active-set method.

    Usage:
        setpoint = solve_qp(qp)
        setpoint = solve_qp(qp).raise_for_status()

    Inputs:
        qp -> [QuadraticProgram] Q must be positive definite on the null space of the equality rows

    Parameters:
        tol -> [float, default=1e-8] tolerance on steps, multipliers and feasibility
        max_iter -> [int, default=500] active-set iterations before giving up

    Outputs:
        setpoint -> [Setpoint] status, solution, plant setpoints in physical units and KKT residuals

    Note:
        A feasible start comes from an elastic phase-1 LP (HiGHS). From there each iteration solves
        the KKT system of the working set, takes the longest feasible step along it and adds the
        blocking constraint, or, once the step vanishes, drops the constraint with the most
        negative multiplier. The result does not depend on anything but the QP data.
    """
    x,certificate,reason = _phase_one(qp,tol)
    if x is None:
        log.debug('QP infeasible: %s',reason)
        return Setpoint(solve_status='infeasible',certificate=certificate,plant_names=list(qp.plant_names))

    working = []
    lam_w,nu = np.zeros(0),np.zeros(qp.A.shape[0])
    status,iteration = 'max_iterations',0
    for iteration in range(1,max_iter+1):
        d,nu,lam_w = _solve_eqp(qp,x,working)
        if np.max(np.abs(d),initial=0) <= tol*(1 + np.max(np.abs(x),initial=0)):
            if lam_w.size == 0 or np.min(lam_w) >= -tol:
                status = 'optimal'
                break
            working.pop(int(np.argmin(lam_w)))
            continue
        Gd = qp.G @ d
        alpha,blocking = 1.0,None
        slack = qp.h - qp.G @ x
        for i in np.flatnonzero(Gd > tol):
            if i in working:
                continue
            step = max(slack[i],0.0)/Gd[i]
            if step < alpha:
                alpha,blocking = step,i
        x = x + alpha*d
        if blocking is not None:
            working.append(int(blocking))

    lam = np.zeros(qp.G.shape[0])
    if working and status == 'optimal':
        lam[working] = np.clip(lam_w,0,None)
    kkt = kkt_residuals(qp,x,lam,nu)
    log.debug('active set finished after %d iterations with status %s',iteration,status)
    return _to_setpoint(qp,x,status,lam,kkt,iteration)

def _to_setpoint(qp,x,status,lam,kkt,iterations):
    out = Setpoint(solve_status=status,objective=float(qp.objective(x)),x=x,plant_names=list(qp.plant_names),
                   multipliers=lam,kkt=kkt,iterations=iterations)
    if 'p' in qp.layout:
        out.p_pv = x[qp.layout['p']]*qp.scale['p']
        out.q_pv = x[qp.layout['q']]*qp.scale['q']
        n_pv = out.p_pv.size
        out.aux = {name:x[qp.layout[name]]*qp.scale[name] for name in ('yp','yq','z')}
        out.aux['g'] = (x[qp.layout['g']]*qp.scale['g']).reshape(-1,n_pv)
    return out
