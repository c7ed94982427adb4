import logging
from dataclasses import dataclass
from typing import Optional
from warnings import warn

import numpy as np
from scipy import linalg

from ..utils.errors import SingularSystem

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_REG = 1e-6
DEFAULT_TAU_MIN = 0.01
DEFAULT_TAU_MAX = 100.0
# condition number above which H^T H is treated as not invertible
COND_LIMIT = 1e12

@dataclass(frozen=True)
class RegressionWindow:
    """
    Measurement window in regression form: gamma[k] = h_rows[k] @ X. gamma holds one column per
    monitored node when several nodes share the same regressor rows.
    """
    gamma: np.ndarray
    h_rows: np.ndarray
    timestamps: Optional[np.ndarray] = None

    @property
    def m(self):
        return self.h_rows.shape[0]

    def __post_init__(self):
        if self.h_rows.ndim != 2 or self.gamma.shape[0] != self.h_rows.shape[0]:
            raise ValueError('gamma has {:d} rows but H has shape {!r}'.format(self.gamma.shape[0],self.h_rows.shape))

@dataclass(frozen=True)
class EstimatorState:
    """
    State of the recursive estimator.

    x_hat is 2N_b (K^p stacked over K^q) for a single node, or 2N_b x n_nodes when the per-node
    problems are stacked; they share h, so p_cov, r_mat and tau are common and residual_var holds
    one entry per node.
    """
    x_hat: np.ndarray
    p_cov: np.ndarray
    r_mat: np.ndarray
    mu: float
    tau: np.ndarray
    residual_var: np.ndarray
    tau_min: float = DEFAULT_TAU_MIN
    tau_max: float = DEFAULT_TAU_MAX
    weight: float = 1.0
    steps: int = 0

    @property
    def n_params(self):
        return self.p_cov.shape[0]

    @property
    def n_b(self):
        return self.p_cov.shape[0]//2

def build_regression_window(v,p,q,timestamps=None,sample_period=None):
    """
    Build the regression window from consecutive measurement rows.

    Usage:
        window = build_regression_window(v,p,q)

    Inputs:
        v -> [2d float array] (M+1) x n_nodes voltage magnitudes of the monitored nodes in pu
        p,q -> [2d float array] (M+1) x N_b non-slack injections in pu

    Parameters:
        timestamps -> [float array, default=None] M+1 sample times in seconds
        sample_period -> [float, default=None] when given together with timestamps, consecutive rows
        must be exactly one period apart

    Outputs:
        window -> [RegressionWindow] gamma = diff(v) and H = [diff(p) diff(q)], M rows
    """
    v,p,q = np.asarray(v,dtype=float),np.atleast_2d(p),np.atleast_2d(q)
    if v.ndim == 1: v = v[:,None]
    if not (v.shape[0] == p.shape[0] == q.shape[0]):
        raise ValueError('v, p and q must have the same number of rows')
    if v.shape[0] < 2:
        raise ValueError('at least two measurement rows are needed')
    ts = None
    if timestamps is not None:
        ts = np.asarray(timestamps,dtype=float)
        if sample_period is not None:
            gaps = np.diff(ts)
            if np.any(np.abs(gaps - sample_period) > 1e-9*max(1.0,sample_period)):
                raise ValueError('measurement rows are not one sample period apart')
        ts = ts[1:]
    gamma = np.diff(v,axis=0)
    if gamma.shape[1] == 1: gamma = gamma[:,0]
    h_rows = np.hstack([np.diff(p,axis=0),np.diff(q,axis=0)])
    return RegressionWindow(gamma=gamma,h_rows=h_rows,timestamps=ts)

def excitation_rank(window,columns=None):
    """
    Numerical rank of the regressor matrix, optionally restricted to some columns.

    Outputs:
        rank -> [int]
        n_cols -> [int] number of columns considered
    """
    H = window.h_rows if columns is None else window.h_rows[:,columns]
    if H.size == 0:
        return 0,H.shape[1]
    return int(np.linalg.matrix_rank(H)),H.shape[1]

def ls_bootstrap(window,lambda_reg=DEFAULT_LAMBDA_REG,mu=1.0,tau_min=DEFAULT_TAU_MIN,tau_max=DEFAULT_TAU_MAX):
    """
    Offline regularized least squares estimate used to initialize the recursive estimator.

    Usage:
        state = ls_bootstrap(window)
        state = ls_bootstrap(window,lambda_reg=0.0)

    Inputs:
        window -> [RegressionWindow] M regression rows

    Parameters:
        lambda_reg -> [float, default=1e-6] ridge parameter (pu^2)
        mu -> [float, default=1.0] forgetting factor stored in the state for the online stage
        tau_min,tau_max -> [float, default=0.01,100] eigenvalue bounds stored for selective forgetting

    Outputs:
        state -> [EstimatorState] x_hat = (H^T H + lambda I)^-1 H^T Gamma, r_mat = H^T H + lambda I,
        p_cov = (H^T H)^-1 when it is invertible and (H^T H + lambda I)^-1 otherwise

    Note:
        SingularSystem is raised when H^T H + lambda I cannot be inverted (insufficient excitation);
        the caller must raise lambda or extend the window.
    """
    if lambda_reg < 0:
        raise ValueError('lambda_reg must be non-negative')
    if not 0 < mu <= 1:
        raise ValueError('forgetting factor must lie in (0,1]')
    H = np.asarray(window.h_rows,dtype=float)
    gamma = np.asarray(window.gamma,dtype=float)
    m,n_par = H.shape
    if m < n_par:
        warn('LS window has {:d} rows for {:d} unknowns; at least 2N_b rows are recommended'.format(m,n_par))

    R = H.T @ H
    A = R + lambda_reg*np.eye(n_par)
    if not np.all(np.isfinite(A)) or np.linalg.cond(A) > 1/np.finfo(float).eps:
        raise SingularSystem('H^T H + lambda I is singular (lambda = {:g}); raise lambda or extend the window'.format(lambda_reg))
    try:
        factor = linalg.cho_factor(A)
    except linalg.LinAlgError:
        raise SingularSystem('H^T H + lambda I is not positive definite (lambda = {:g})'.format(lambda_reg))
    x_hat = linalg.cho_solve(factor,H.T @ gamma)

    if np.linalg.cond(R) < COND_LIMIT:
        p_cov = np.linalg.inv(R)
    else:
        log.debug('H^T H ill-conditioned, using the regularized inverse as covariance')
        p_cov = linalg.cho_solve(factor,np.eye(n_par))
    p_cov = 0.5*(p_cov + p_cov.T)

    resid = gamma - H @ x_hat
    dof = max(m - n_par,1)
    residual_var = np.sum(resid**2,axis=0)/dof
    tau = np.clip(np.linalg.eigvalsh(p_cov),tau_min,tau_max)

    return EstimatorState(x_hat=x_hat,p_cov=p_cov,r_mat=A,mu=float(mu),tau=tau,
                          residual_var=np.asarray(residual_var,dtype=float),tau_min=tau_min,tau_max=tau_max,
                          weight=float(m),steps=0)
