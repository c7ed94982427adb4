import logging
from dataclasses import dataclass

import numpy as np
from numpy import conj,exp,r_

from ..utils.errors import NonConvergence,SingularJacobian

log = logging.getLogger(__name__)

PF_TOLERANCE = 1e-10
PF_MAX_ITER = 50

@dataclass(frozen=True)
class GridState:
    """
    Converged operating point. Arrays cover every bus (slack included); powers are per-unit
    injections with generation positive, the slack entries being the computed balance.
    """
    v_mag: np.ndarray
    v_ang: np.ndarray
    p_inj: np.ndarray
    q_inj: np.ndarray
    slack_v: float
    nonslack: np.ndarray
    iterations: int = 0
    mismatch: float = 0.0

    @property
    def v_complex(self):
        return self.v_mag*exp(1j*self.v_ang)

    @property
    def v_nonslack(self):
        return self.v_mag[self.nonslack]

def expand_injections(model,p,q):
    """
    Bring nodal injections to full-bus vectors.

    Inputs:
        model -> [object] instance of class NetworkModel
        p,q -> [float array] per-unit injections, either one entry per bus (slack entry ignored)
        or one entry per non-slack bus (model.nonslack order)

    Outputs:
        p_full,q_full -> [float array] per-unit injections for every bus, zero at the slack
    """
    p_full,q_full = np.zeros(model.n_bus),np.zeros(model.n_bus)
    for src,dst in ((p,p_full),(q,q_full)):
        src = np.asarray(src,dtype=float).ravel()
        if src.size == model.n_bus:
            dst[:] = src
        elif src.size == model.n_b:
            dst[model.nonslack] = src
        else:
            raise ValueError('injection vector of length {:d} matches neither {:d} buses nor {:d} non-slack buses'.format(src.size,model.n_bus,model.n_b))
        if not np.all(np.isfinite(dst)):
            raise ValueError('injections must be finite')
    p_full[model.slack] = q_full[model.slack] = 0.0
    return p_full,q_full

def dsbus_dv(ybus,V):
    """
    Partial derivatives of the complex bus power injections with respect to voltage magnitude and angle.

    Usage:
        dS_dVm,dS_dVa = dsbus_dv(ybus,V)

    Inputs:
        ybus -> [2d complex array] bus admittance matrix
        V -> [complex array] bus voltages

    Outputs:
        dS_dVm -> [2d complex array] dS/d|V|
        dS_dVa -> [2d complex array] dS/dtheta
    """
    ibus = ybus @ V
    vnorm = V/np.abs(V)
    dS_dVm = V[:,None]*conj(ybus*vnorm[None,:]) + np.diag(conj(ibus)*vnorm)
    dS_dVa = 1j*V[:,None]*conj(np.diag(ibus) - ybus*V[None,:])
    return dS_dVm,dS_dVa

def solve_power_flow(model,p,q,slack_v=1.0,v0=None,tol=PF_TOLERANCE,max_iter=PF_MAX_ITER):
    """
    Solve the AC power flow with a full Newton-Raphson method in polar coordinates.

    Usage:
        state = solve_power_flow(model,p,q)
        state = solve_power_flow(model,p,q,slack_v=1.02,v0=previous_state)

    Inputs:
        model -> [object] instance of class NetworkModel
        p -> [float array] per-unit active injections (per bus or per non-slack bus), generation positive
        q -> [float array] per-unit reactive injections, same layout as p

    Parameters:
        slack_v -> [float, default=1.0] slack voltage magnitude in pu
        v0 -> [GridState or complex array, default=None] initial guess; flat start when None
        tol -> [float, default=1e-10] infinity norm of the power mismatch in pu
        max_iter -> [int, default=50] maximum number of Newton iterations

    Outputs:
        state -> [GridState] converged operating point

    Note:
        NonConvergence is raised when the tolerance is not met within max_iter iterations, which
        signals an infeasible operating point; SingularJacobian when a Newton step cannot be solved.
    """
    p_spec,q_spec = expand_injections(model,p,q)
    if not slack_v > 0:
        raise ValueError('slack voltage must be positive')
    ybus = model._ybus
    pq = model.nonslack
    npq = len(pq)

    if v0 is None:
        V = np.ones(model.n_bus,dtype=complex)
    elif isinstance(v0,GridState):
        V = v0.v_complex.astype(complex)
    else:
        V = np.asarray(v0,dtype=complex).copy()
    # slack is the angle reference
    V[model.slack] = slack_v
    vm,va = np.abs(V),np.angle(V)

    for iteration in range(max_iter+1):
        S = V*conj(ybus @ V)
        F = r_[S[pq].real - p_spec[pq],S[pq].imag - q_spec[pq]]
        mismatch = np.max(np.abs(F))
        if mismatch < tol:
            break
        if iteration == max_iter or not np.isfinite(mismatch):
            log.debug('Newton-Raphson stopped at iteration %d with mismatch %.3e',iteration,mismatch)
            raise NonConvergence(iteration,mismatch)

        dS_dVm,dS_dVa = dsbus_dv(ybus,V)
        J = np.block([[dS_dVa[np.ix_(pq,pq)].real,dS_dVm[np.ix_(pq,pq)].real],
                      [dS_dVa[np.ix_(pq,pq)].imag,dS_dVm[np.ix_(pq,pq)].imag]])
        try:
            dx = np.linalg.solve(J,-F)
        except np.linalg.LinAlgError as err:
            raise SingularJacobian('singular Jacobian at iteration {:d}: {:s}'.format(iteration,str(err)))
        va[pq] += dx[:npq]
        vm[pq] += dx[npq:]
        if np.any(vm <= 0):
            raise NonConvergence(iteration+1,mismatch)
        V = vm*exp(1j*va)

    return GridState(v_mag=vm.copy(),v_ang=va.copy(),p_inj=S.real.copy(),q_inj=S.imag.copy(),
                     slack_v=float(slack_v),nonslack=pq.copy(),iterations=iteration,mismatch=float(mismatch))

def branch_currents(model,state):
    """
    Branch current magnitudes and loading.

    Usage:
        amps,loading = branch_currents(model,state)

    Outputs:
        amps -> [float array] current magnitude of every branch in A
        loading -> [float array] amps divided by the branch ampacity
    """
    V = state.v_complex
    amps = np.zeros(len(model.branches))
    for k,br in enumerate(model.branches):
        z = complex(br.r_ohm,br.x_ohm)/model.z_base
        amps[k] = abs((V[br.from_bus] - V[br.to_bus])/z)*model.i_base
    ampacity = np.array([br.ampacity_a for br in model.branches])
    return amps,amps/ampacity
