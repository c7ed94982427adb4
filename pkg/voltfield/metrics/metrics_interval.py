from dataclasses import dataclass

import numpy as np

from ..utils.errors import ZeroNormTruth,ZeroMax

NU = 50.0
CONVENTIONS = ('coverage','inverted')

@dataclass(frozen=True)
class IntervalSeries:
    """
    Time series of one sensitivity coefficient: true value, estimate and interval half-width per step.
    """
    truth: np.ndarray
    hat: np.ndarray
    half_width: np.ndarray

    def __post_init__(self):
        for name in ('truth','hat','half_width'):
            object.__setattr__(self,name,np.asarray(getattr(self,name),dtype=float).ravel())
        if not (self.truth.size == self.hat.size == self.half_width.size):
            raise ValueError('truth, hat and half_width must have equal lengths')
        if np.any(self.half_width < 0):
            raise ValueError('half widths must be non-negative')

    @property
    def steps(self):
        return self.truth.size

def rmse(truth,hat):
    """
    Normalized estimation error ||truth - hat||_2 / ||truth||_2.

    Usage:
        err = rmse([3,4],[3,0]) # 0.8
    """
    truth,hat = np.asarray(truth,dtype=float).ravel(),np.asarray(hat,dtype=float).ravel()
    if truth.size != hat.size:
        raise ValueError('truth and hat must have equal lengths')
    norm = np.linalg.norm(truth)
    if norm == 0:
        raise ZeroNormTruth('true coefficient series has zero norm')
    return float(np.linalg.norm(truth - hat)/norm)

def picp(series):
    """Prediction interval coverage probability: share of steps with |truth - hat| <= half_width."""
    if series.steps == 0:
        raise ValueError('empty series')
    inside = np.abs(series.truth - series.hat) <= series.half_width
    return float(np.mean(inside))

def pinaw(series):
    """
    Prediction interval normalized average width, sum(2 half_width)/(M K_max).

    K_max is the largest magnitude of the true coefficient over the series; ZeroMax is raised when it is 0.
    """
    if series.steps == 0:
        raise ValueError('empty series')
    k_max = np.max(np.abs(series.truth))
    if k_max == 0:
        raise ZeroMax('true coefficient series is identically zero')
    return float(np.sum(2*series.half_width)/(series.steps*k_max))

def cwc(picp_value,pinaw_value,alpha=0.99,nu=NU,convention='coverage'):
    """
    Coverage width-based criterion PINAW (1 + eta PICP exp(-nu (PICP - alpha))).

    Parameters:
        alpha -> [float, default=0.99] nominal confidence
        nu -> [float, default=50] penalty steepness
        convention -> [str, default='coverage'] 'coverage': eta = 1 when PICP < alpha, 0 otherwise;
        'inverted': eta = 0 when PICP <= alpha, 1 otherwise
    """
    if not 0 <= picp_value <= 1:
        raise ValueError('PICP must lie in [0,1]')
    if convention == 'coverage':
        eta = 1.0 if picp_value < alpha else 0.0
    elif convention == 'inverted':
        eta = 0.0 if picp_value <= alpha else 1.0
    else:
        raise ValueError('convention must be one of {!r}'.format(CONVENTIONS))
    return float(pinaw_value*(1 + eta*picp_value*np.exp(-nu*(picp_value - alpha))))
