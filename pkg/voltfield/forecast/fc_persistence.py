import logging
from dataclasses import dataclass
from typing import Any

from ..utils.errors import StaleData

log = logging.getLogger(__name__)

MAX_AGE_PERIODS = 2

@dataclass(frozen=True)
class Observation:
    """A timestamped observation (GHI, demand, a weather sample ...) in seconds of day."""
    value: Any
    timestamp: float

def persistence_forecast(latest,now,sample_period=1.0,max_age_periods=MAX_AGE_PERIODS):
    """
    Persistence forecast: the next value equals the latest observed one.

    Usage:
        ghi_next = persistence_forecast(Observation(812.0,43200),now=43201)

    Inputs:
        latest -> [Observation or None] most recent observation
        now -> [float] current time in seconds of day

    Parameters:
        sample_period -> [float, default=1.0] sampling period in seconds
        max_age_periods -> [float, default=2] largest accepted age of the observation, in sample periods

    Outputs:
        value -> the observed value, unchanged

    Note:
        StaleData is raised when the observation is missing or older than max_age_periods sample periods;
        the harness then keeps its previous forecast.
    """
    if latest is None or latest.value is None:
        raise StaleData('no observation available at t = {:.0f} s'.format(now))
    age = now - latest.timestamp
    if age > max_age_periods*sample_period + 1e-9:
        raise StaleData('latest observation is {:.1f} s old (limit {:.1f} s)'.format(age,max_age_periods*sample_period))
    return latest.value
