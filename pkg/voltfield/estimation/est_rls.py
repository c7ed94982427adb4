import logging
from dataclasses import replace

import numpy as np

from .est_jacobi import jacobi_eigh
from ..utils.errors import NumericalBlowup

log = logging.getLogger(__name__)

BLOWUP_CAP = 1e12

def _split_sample(state,sample):
    gamma,h = sample
    h = np.asarray(h,dtype=float).ravel()
    if h.size != state.n_params:
        raise ValueError('regressor row has {:d} entries, the estimator has {:d} unknowns'.format(h.size,state.n_params))
    gamma = np.asarray(gamma,dtype=float)
    return gamma,h

def _innovate(state,gamma,h,gain):
    """A priori residual, updated coefficients and updated residual variance."""
    X = state.x_hat
    e = gamma - h @ X
    if X.ndim == 1:
        x_new = X + gain*e
    else:
        x_new = X + np.outer(gain,e)
    weight = state.mu*state.weight + 1
    rv = state.residual_var + (np.square(e) - state.residual_var)/weight
    return x_new,np.asarray(rv,dtype=float),weight

def rls_f_update(state,sample,mu=None,blowup_cap=BLOWUP_CAP):
    """
    One step of recursive least squares with a scalar forgetting factor (RLS-F).

    Usage:
        state = rls_f_update(state,(gamma_k,h_k))
        state = rls_f_update(state,(gamma_k,h_k),mu=0.98,blowup_cap=None)

    Inputs:
        state -> [EstimatorState] previous state, usually from ls_bootstrap
        sample -> [tuple] (gamma_k,h_k): voltage delta(s) of the monitored node(s) and the 2N_b regressor row

    Parameters:
        mu -> [float, default=None] forgetting factor in (0,1]; the state's mu when None
        blowup_cap -> [float, default=1e12] largest covariance eigenvalue tolerated; None disables the check

    Outputs:
        state -> [EstimatorState] updated state

    Note:
        e = gamma - h X, G = P h/(mu + h P h), X <- X + G e, P <- (P - G h P)/mu.
        With h = 0 the coefficients stay put and P is only scaled by 1/mu, which is how the
        covariance winds up under poor excitation; NumericalBlowup is raised once its largest
        eigenvalue passes blowup_cap.
    """
    mu = state.mu if mu is None else float(mu)
    if not 0 < mu <= 1:
        raise ValueError('forgetting factor must lie in (0,1]')
    gamma,h = _split_sample(state,sample)
    P = state.p_cov

    Ph = P @ h
    gain = Ph/(mu + h @ Ph)
    state = replace(state,mu=mu)
    x_new,rv,weight = _innovate(state,gamma,h,gain)
    P_new = (P - np.outer(gain,Ph))/mu
    P_new = 0.5*(P_new + P_new.T)
    R_new = mu*state.r_mat + np.outer(h,h)

    if blowup_cap is not None:
        peak = np.linalg.norm(P_new,2) if np.all(np.isfinite(P_new)) else np.inf
        if peak > blowup_cap:
            raise NumericalBlowup('covariance eigenvalue {:.3e} above cap {:.3e} after {:d} steps'.format(peak,blowup_cap,state.steps+1))

    return replace(state,x_hat=x_new,p_cov=P_new,r_mat=R_new,residual_var=rv,weight=weight,steps=state.steps+1)

def _next_tau(lam,tau_prev,tau_min,tau_max,tau_rule):
    if tau_rule == 'printed':
        grown = tau_min + (1 - tau_min/tau_max)*tau_prev
    elif tau_rule == 'eigen':
        grown = tau_min + (1 - tau_min/tau_max)*lam
    else:
        raise ValueError("tau_rule must be 'printed' or 'eigen', got {!r}".format(tau_rule))
    tau = np.where(lam > tau_max,1.0,np.where(tau_prev <= tau_max,grown,lam))
    return np.clip(tau,tau_min,tau_max)

def rls_sf_update(state,sample,tau_min=None,tau_max=None,mu_vec=None,tau_rule='printed',update_tau=True):
    """
    One step of recursive least squares with selective forgetting (RLS-SF).

    Usage:
        state = rls_sf_update(state,(gamma_k,h_k))
        state = rls_sf_update(state,(gamma_k,h_k),tau_rule='eigen')

    Inputs:
        state -> [EstimatorState] previous state
        sample -> [tuple] (gamma_k,h_k) as in rls_f_update

    Parameters:
        tau_min,tau_max -> [float, default=None] eigenvalue bounds; the state's bounds when None
        mu_vec -> [float or float array, default=None] forgetting factor per eigendirection; the state's mu when None
        tau_rule -> [str, default='printed'] 'printed' grows tau from its previous value,
        'eigen' grows it from the current eigenvalue of the updated covariance
        update_tau -> [bool, default=True] when False, tau is taken equal to the eigenvalues (no rule, no clipping)

    Outputs:
        state -> [EstimatorState] updated state, with tau sorted ascending

    Note:
        (1) The gain denominator is offset by 1, not by mu: G = P h/(1 + h P h).
        (2) The covariance after the information update, P - G h P, is decomposed with the Jacobi
        method into eigenpairs (lambda_i,u_i) and rebuilt as sum_i tau_i/mu_i u_i u_i^T.
        (3) Eigenvalues are paired with the previous tau by rank. The rule is
                tau_i = 1                                       if lambda_i > tau_max
                tau_i = tau_min + (1 - tau_min/tau_max) tau_i'  if tau_i' <= tau_max
                tau_i = lambda_i                                otherwise
            with tau_i' the previous value, followed by clipping to [tau_min,tau_max].
    """
    tau_min = state.tau_min if tau_min is None else float(tau_min)
    tau_max = state.tau_max if tau_max is None else float(tau_max)
    if not 0 < tau_min < tau_max:
        raise ValueError('0 < tau_min < tau_max is required')
    n = state.n_params
    mu_vec = np.full(n,state.mu) if mu_vec is None else np.broadcast_to(np.asarray(mu_vec,dtype=float),(n,))
    if np.any(mu_vec <= 0) or np.any(mu_vec > 1):
        raise ValueError('forgetting factors must lie in (0,1]')
    gamma,h = _split_sample(state,sample)
    P = state.p_cov

    Ph = P @ h
    gain = Ph/(1 + h @ Ph)
    x_new,rv,weight = _innovate(state,gamma,h,gain)
    lam,U = jacobi_eigh(P - np.outer(gain,Ph))

    if update_tau:
        tau = _next_tau(lam,np.sort(state.tau),tau_min,tau_max,tau_rule)
    else:
        tau = lam
    P_new = (U*(tau/mu_vec)) @ U.T
    P_new = 0.5*(P_new + P_new.T)
    R_new = state.r_mat + np.outer(h,h)

    return replace(state,x_hat=x_new,p_cov=P_new,r_mat=R_new,tau=np.sort(tau),residual_var=rv,
                   weight=weight,steps=state.steps+1,tau_min=tau_min,tau_max=tau_max)

def run_rls(state,window,method='rls_sf',**kwargs):
    """
    Feed every row of a regression window through one of the recursive updates.

    Usage:
        state = run_rls(state,window)
        state = run_rls(state,window,method='rls_f',mu=0.98)

    Outputs:
        state -> [EstimatorState] state after the last row
    """
    if method == 'rls_sf':
        update = rls_sf_update
    elif method == 'rls_f':
        update = rls_f_update
    else:
        raise ValueError("method must be 'rls_sf' or 'rls_f', got {!r}".format(method))
    gamma = np.asarray(window.gamma)
    for k in range(window.m):
        state = update(state,(gamma[k],window.h_rows[k]),**kwargs)
    return state
