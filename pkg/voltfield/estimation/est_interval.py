from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import norm

DEFAULT_ALPHA = 0.99

@dataclass(frozen=True)
class SensitivityEstimate:
    """
    Interval estimate of the sensitivity coefficients: the true K^p lies in [kp_hat - dkp, kp_hat + dkp]
    with the stated confidence, likewise for K^q.

    Row r holds the coefficients of monitored node nodes[r] (non-slack position); columns follow
    the non-slack bus order. When every non-slack node is monitored the matrices are N_b x N_b and
    can be passed to linearized_voltage directly.
    """
    kp_hat: np.ndarray
    kq_hat: np.ndarray
    dkp: np.ndarray
    dkq: np.ndarray
    confidence: float = DEFAULT_ALPHA
    nodes: Optional[np.ndarray] = None
    computed_at: Optional[float] = None

    def __post_init__(self):
        if np.any(self.dkp < 0) or np.any(self.dkq < 0):
            raise ValueError('interval half-widths must be non-negative')

    def row(self,node):
        """Row index of a monitored node (non-slack position)."""
        if self.nodes is None:
            return int(node)
        pos = np.flatnonzero(np.asarray(self.nodes) == node)
        if pos.size == 0:
            raise KeyError('node {!r} is not monitored'.format(node))
        return int(pos[0])

def gaussian_quantile(alpha):
    """Two-sided standard normal quantile z with P(|Z| <= z) = alpha."""
    if not 0 < alpha < 1:
        raise ValueError('confidence level must lie in (0,1)')
    return norm.ppf(0.5 + alpha/2)

def interval_from_covariance(state,alpha=DEFAULT_ALPHA,nodes=None,computed_at=None):
    """
    Turn an estimator state into interval estimates of the sensitivity coefficients.

    Usage:
        est = interval_from_covariance(state)
        est = interval_from_covariance(state,alpha=0.999)

    Inputs:
        state -> [EstimatorState] x_hat holds K^p stacked over K^q, one column per monitored node

    Parameters:
        alpha -> [float, default=0.99] confidence level of the intervals
        nodes -> [int array, default=None] non-slack positions of the monitored nodes, in x_hat column order
        computed_at -> [float, default=None] timestamp stored with the result

    Outputs:
        est -> [SensitivityEstimate]

    Note:
        The half-width of coefficient j for node i is dK_j = z(alpha) sqrt(s_i^2 P_jj), where s_i^2 is the
        node's residual variance and z(alpha) the two-sided Gaussian quantile (2.576 at 99%).
    """
    z = gaussian_quantile(alpha)
    X = np.asarray(state.x_hat,dtype=float)
    if X.ndim == 1: X = X[:,None]
    rv = np.clip(np.atleast_1d(state.residual_var).astype(float),0,None)
    if rv.size != X.shape[1]:
        raise ValueError('residual variance has {:d} entries for {:d} nodes'.format(rv.size,X.shape[1]))
    diag = np.clip(np.diag(state.p_cov),0,None)
    n_b = state.n_b

    # rows are nodes
    half = z*np.sqrt(np.outer(rv,diag))
    coeffs = X.T
    return SensitivityEstimate(kp_hat=coeffs[:,:n_b],kq_hat=coeffs[:,n_b:],dkp=half[:,:n_b],dkq=half[:,n_b:],
                               confidence=alpha,nodes=None if nodes is None else np.asarray(nodes,dtype=int),
                               computed_at=computed_at)
