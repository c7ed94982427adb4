from dataclasses import dataclass,replace
from typing import Optional

import numpy as np

from ..forecast.fc_pv import WeatherSample

VOLTAGE_CLASS = 0.2
POWER_CLASS = 0.5
CLASS_SIGMAS = 3.0

@dataclass(frozen=True)
class NoiseParams:
    """
    Transducer noise model. A class c (percent) is read as a bound of class_sigmas standard
    deviations, so the relative standard deviation is c/100/class_sigmas.
    """
    enabled: bool = True
    voltage_class: float = VOLTAGE_CLASS
    power_class: float = POWER_CLASS
    class_sigmas: float = CLASS_SIGMAS
    weather_dropout: float = 0.0

    def __post_init__(self):
        if self.voltage_class < 0 or self.power_class < 0:
            raise ValueError('measurement classes must be non-negative')
        if not self.class_sigmas > 0:
            raise ValueError('class_sigmas must be positive')
        if not 0 <= self.weather_dropout < 1:
            raise ValueError('weather_dropout must lie in [0,1)')

    @property
    def sigma_v(self):
        return self.voltage_class/100/self.class_sigmas

    @property
    def sigma_power(self):
        return self.power_class/100/self.class_sigmas

@dataclass(frozen=True)
class MeasurementSample:
    """
    One second of measurements.

    Attributes:
        timestamp -> [float] second of day
        v -> [float array] voltage magnitude of every bus (pu)
        p,q -> [float array] injection of every bus, generation positive (W, var)
        p_pv,q_pv -> [float array] plant meter readings (W, var)
        weather -> [WeatherSample or None] None when the weather station sample is missing
    """
    timestamp: float
    v: np.ndarray
    p: np.ndarray
    q: np.ndarray
    p_pv: np.ndarray
    q_pv: np.ndarray
    weather: Optional[WeatherSample] = None

def apply_noise(true_sample,noise_params,rng):
    """
    Corrupt a true sample with multiplicative Gaussian transducer noise.

    Usage:
        meas = apply_noise(sample,NoiseParams(),rng)

    Inputs:
        true_sample -> [MeasurementSample] noiseless values
        noise_params -> [NoiseParams]
        rng -> [numpy Generator]

    Outputs:
        meas -> [MeasurementSample] reading * (1 + sigma n) on every channel, n ~ N(0,1) independent
        per channel; the weather sample is dropped with probability weather_dropout

    Note:
        The number of draws does not depend on the values, so runs sharing a seed consume the
        generator identically. Nothing is drawn when the noise is disabled.
    """
    if not noise_params.enabled:
        return true_sample
    s = true_sample
    sv,sp = noise_params.sigma_v,noise_params.sigma_power
    v = s.v*(1 + sv*rng.standard_normal(s.v.shape))
    p = s.p*(1 + sp*rng.standard_normal(s.p.shape))
    q = s.q*(1 + sp*rng.standard_normal(s.q.shape))
    p_pv = s.p_pv*(1 + sp*rng.standard_normal(s.p_pv.shape))
    q_pv = s.q_pv*(1 + sp*rng.standard_normal(s.q_pv.shape))
    drop = rng.random() < noise_params.weather_dropout
    weather = None if (drop or s.weather is None) else s.weather
    return replace(s,v=v,p=p,q=q,p_pv=p_pv,q_pv=q_pv,weather=weather)
