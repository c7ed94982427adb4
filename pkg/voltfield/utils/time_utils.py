import numpy as np
from astropy.time import Time,TimeDelta

def iso2sod(ts):
    """
    Calculate the Second of Day from iso-formatted UTC time strings.

    Usage:
        sods = iso2sod(['2022-07-18 00:00:30','2022-07-18T12:00:00'])

    Inputs:
        ts -> [str array] iso or isot formatted UTC time strings; a bare 'hh:mm:ss' clock time is accepted too

    Outputs:
        sods -> [float array] second of day
    """
    sods = []
    for t in ts:
        t = str(t).strip()
        clock = t[11:] if len(t) > 10 and t[10] in ' T' else t
        hh,mm,ss = clock.rstrip('Z').split(':')
        sods.append(int(hh)*3600 + int(mm)*60 + float(ss))
    return np.array(sods)

def day_start(date):
    """
    Midnight UTC of a day given as 'YYYY-MM-DD' (a longer iso string is truncated to its date).

    Outputs:
        t0 -> [astropy Time]
    """
    return Time(str(date)[:10] + ' 00:00:00',scale='utc')

def sod2iso(date,sods):
    """
    Iso-formatted UTC strings for seconds of day of a given date.

    Usage:
        ts = sod2iso('2022-07-18',[0,30,60])

    Outputs:
        ts -> [str array] such as '2022-07-18T00:00:30.000'
    """
    t = day_start(date) + TimeDelta(np.asarray(sods,dtype=float),format='sec')
    return np.atleast_1d(t.isot)

def epoch_ms(date,sod):
    """
    Milliseconds since the Unix epoch of a second of day on a given date.

    Outputs:
        ms -> [int]
    """
    t0 = day_start(date)
    return int(round(t0.unix*1000)) + int(round(float(sod)*1000))
