import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..utils.errors import ProfileGap
from ..utils.time_utils import iso2sod

log = logging.getLogger(__name__)

# widest accepted hole between two profile samples, seconds
MAX_GAP = 900.0

def read_profile_csv(profile_file):
    """
    Read a profile CSV file.

    Usage:
        df = read_profile_csv('voltfield/data/cigre_lv/profiles/weather.csv')

    Inputs:
        profile_file -> [str or Path] CSV with a 'time' column ('hh:mm:ss' or iso UTC) followed by value
        columns; lines starting with '#' are ignored. Column schemas:
            loads:   time,<bus>_p,<bus>_q       consumption in W / var (positive = load)
            slack:   time,v_pu                  slack voltage magnitude in pu
            weather: time,ghi,air_temp          W/m^2, degC

    Outputs:
        df -> [pandas DataFrame] value columns plus 'sod' (second of day), sorted by time
    """
    profile_file = Path(profile_file)
    if not profile_file.exists():
        raise FileNotFoundError('profile file not found: {:s}'.format(str(profile_file)))
    df = pd.read_csv(profile_file,comment='#',skipinitialspace=True)
    if 'time' not in df.columns:
        raise ValueError('{:s}: missing time column'.format(str(profile_file)))
    df['sod'] = iso2sod(df['time'].astype(str))
    df = df.drop(columns='time').sort_values('sod',kind='stable').reset_index(drop=True)
    if df['sod'].duplicated().any():
        raise ValueError('{:s}: duplicated timestamps'.format(str(profile_file)))
    return df

def resample_profile(df,columns,sods,max_gap=MAX_GAP,name='profile'):
    """
    Linear interpolation of profile columns onto the simulation time grid.

    Inputs:
        df -> [pandas DataFrame] output of read_profile_csv
        columns -> [list of str] columns to resample
        sods -> [float array] target seconds of day

    Parameters:
        max_gap -> [float, default=900] widest hole tolerated between consecutive samples, and between the
        target interval ends and the first/last sample (edge values are held there)

    Outputs:
        values -> [2d float array] len(sods) x len(columns)
    """
    t = df['sod'].to_numpy(dtype=float)
    lo,hi = float(np.min(sods)),float(np.max(sods))
    if t.size == 0 or t[0] - lo > max_gap or hi - t[-1] > max_gap:
        raise ProfileGap('{:s} does not cover {:.0f}-{:.0f} s'.format(name,lo,hi))
    # a gap only matters where the grid needs values
    first = t[t <= lo][-1] if np.any(t <= lo) else t[0]
    last = t[t >= hi][0] if np.any(t >= hi) else t[-1]
    gaps = np.diff(t[(t >= first) & (t <= last)])
    if gaps.size and np.max(gaps) > max_gap:
        raise ProfileGap('{:s} has a gap of {:.0f} s (limit {:.0f} s)'.format(name,np.max(gaps),max_gap))
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise ValueError('{:s} lacks columns {!r}'.format(name,missing))
    return np.column_stack([np.interp(sods,t,df[c].to_numpy(dtype=float)) for c in columns])

@dataclass
class DayProfiles:
    """
    Exogenous inputs on the simulation time grid.

    Attributes:
        sods -> [float array] seconds of day
        load_p,load_q -> [2d float array] time x bus consumption (W, var), zero where no load is connected
        slack_v -> [float array] slack voltage magnitude (pu)
        ghi,air_temp -> [float array] weather (W/m^2, degC)
    """
    sods: np.ndarray
    load_p: np.ndarray
    load_q: np.ndarray
    slack_v: np.ndarray
    ghi: np.ndarray
    air_temp: np.ndarray

    @property
    def n_steps(self):
        return self.sods.size

def load_buses(df):
    """Bus names with load columns in a loads profile (columns '<bus>_p' / '<bus>_q')."""
    return sorted({c[:-2] for c in df.columns if c.endswith('_p') or c.endswith('_q')})

def build_day_profiles(model,loads_file,slack_file,weather_file,sods,rng=None,load_variability=0.0,weather_variability=0.0):
    """
    Load, resample and perturb the exogenous profiles of a (part of a) day.

    Usage:
        prof = build_day_profiles(model,'loads.csv','slack.csv','weather.csv',np.arange(86400.))

    Inputs:
        model -> [NetworkModel]
        loads_file,slack_file,weather_file -> [str or Path] profile CSV files, see read_profile_csv
        sods -> [float array] target seconds of day

    Parameters:
        rng -> [numpy Generator, default=None] stream for the variability terms
        load_variability -> [float, default=0] relative standard deviation of the per-second load noise
        weather_variability -> [float, default=0] relative standard deviation of the per-second GHI noise

    Outputs:
        prof -> [DayProfiles]
    """
    sods = np.asarray(sods,dtype=float)
    n = sods.size
    loads = read_profile_csv(loads_file)
    load_p,load_q = np.zeros((n,model.n_bus)),np.zeros((n,model.n_bus))
    for bus in load_buses(loads):
        k = model.bus_index(bus)
        for suffix,dst in (('_p',load_p),('_q',load_q)):
            if bus+suffix in loads.columns:
                dst[:,k] = resample_profile(loads,[bus+suffix],sods,name=str(loads_file))[:,0]
    slack_v = resample_profile(read_profile_csv(slack_file),['v_pu'],sods,name=str(slack_file))[:,0]
    weather = resample_profile(read_profile_csv(weather_file),['ghi','air_temp'],sods,name=str(weather_file))
    ghi,air_temp = np.clip(weather[:,0],0,None),weather[:,1]

    if rng is not None:
        if load_variability > 0:
            load_p = load_p*(1 + load_variability*rng.standard_normal(load_p.shape))
            load_q = load_q*(1 + load_variability*rng.standard_normal(load_q.shape))
        if weather_variability > 0:
            ghi = np.clip(ghi*(1 + weather_variability*rng.standard_normal(n)),0,None)
    log.debug('profiles built for %d steps from %s',n,Path(loads_file).parent)
    return DayProfiles(sods=sods,load_p=load_p,load_q=load_q,slack_v=slack_v,ghi=ghi,air_temp=air_temp)
