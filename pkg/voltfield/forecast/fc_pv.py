from dataclasses import dataclass
from typing import Optional

import numpy as np

T_REF = 25.0
CELL_TEMP_COEFF = 0.03

@dataclass(frozen=True)
class WeatherSample:
    """Global horizontal irradiance (W/m^2) and air temperature (degC) at a second of day."""
    ghi: float
    air_temp: float
    timestamp: Optional[float] = None

    def __post_init__(self):
        if not self.ghi >= 0:
            raise ValueError('ghi must be non-negative, got {!r}'.format(self.ghi))

@dataclass(frozen=True)
class PvModel:
    """
    Simplified PV plant: DC power proportional to irradiance with a linear temperature derating.

    Attributes:
        panel_area -> [float] m^2
        efficiency -> [float] module efficiency at 25 degC, in (0,1)
        temp_coeff -> [float] relative power change per degC (negative for silicon, e.g. -0.004)
        derate -> [float] DC/AC derating in (0,1]
        cell_temp_coeff -> [float] cell heating per unit irradiance, degC m^2/W
        s_max -> [float] converter rating in VA, upper clamp of the MPP
    """
    panel_area: float
    efficiency: float
    temp_coeff: float = -0.004
    derate: float = 1.0
    cell_temp_coeff: float = CELL_TEMP_COEFF
    s_max: float = np.inf

    def __post_init__(self):
        if not self.panel_area > 0:
            raise ValueError('panel_area must be positive')
        if not 0 < self.efficiency < 1:
            raise ValueError('efficiency must lie in (0,1)')
        if not 0 < self.derate <= 1:
            raise ValueError('derate must lie in (0,1]')

def cell_temperature(model,w):
    """Cell temperature proxy, air temperature plus cell_temp_coeff times GHI (degC)."""
    return w.air_temp + model.cell_temp_coeff*w.ghi

def mpp_from_weather(model,w):
    """
    Maximum power potential of a PV plant.

    Usage:
        p_hat = mpp_from_weather(model,WeatherSample(800,20))

    Inputs:
        model -> [PvModel]
        w -> [WeatherSample]

    Outputs:
        p_hat -> [float] ghi * area * eff * (1 + coeff (T_cell - 25)) * derate in W, clamped to [0,s_max]
    """
    t_cell = cell_temperature(model,w)
    p = w.ghi*model.panel_area*model.efficiency*(1 + model.temp_coeff*(t_cell - T_REF))*model.derate
    return float(np.clip(p,0,model.s_max))

def mpp_series(model,ghi,air_temp):
    """Vectorized mpp_from_weather over arrays of GHI and air temperature (W)."""
    ghi = np.clip(np.asarray(ghi,dtype=float),0,None)
    t_cell = np.asarray(air_temp,dtype=float) + model.cell_temp_coeff*ghi
    p = ghi*model.panel_area*model.efficiency*(1 + model.temp_coeff*(t_cell - T_REF))*model.derate
    return np.clip(p,0,model.s_max)
