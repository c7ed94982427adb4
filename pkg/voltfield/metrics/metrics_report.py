import logging

import pandas as pd
from tabulate import tabulate

from .metrics_interval import IntervalSeries,rmse,picp,pinaw,cwc,NU
from ..utils.errors import MetricsError

log = logging.getLogger(__name__)

KEYS = ['sod','node','coeff','column']

def parse_coefficients(text):
    """
    Parse a coefficient list such as 'B09:B03,B09:B09,B11:B11:q'.

    Outputs:
        coefficients -> [list of tuple] (node, column, 'kp' or 'kq')
    """
    out = []
    for item in str(text).split(','):
        parts = [s.strip() for s in item.strip().split(':')]
        if len(parts) == 2:
            out.append((parts[0],parts[1],'kp'))
        elif len(parts) == 3 and parts[2] in ('p','q'):
            out.append((parts[0],parts[1],'k'+parts[2]))
        else:
            raise ValueError('cannot parse coefficient {!r}; expected NODE:COLUMN or NODE:COLUMN:q'.format(item))
    return out

def coefficient_label(node,column,coeff):
    return 'K{:s}[{:s},{:s}]'.format(coeff[1:],node,column)

def metrics_table(estimates,oracle,coefficients,alpha=0.99,nu=NU,convention='coverage',start=None,end=None):
    """
    Estimation quality of selected coefficients against the model-based oracle.

    Usage:
        df = metrics_table(runlog.estimates,runlog.oracle,[('B09','B03','kp')])

    Inputs:
        estimates -> [pandas DataFrame] columns sod, node, coeff, column, hat, delta
        oracle -> [pandas DataFrame] columns sod, node, coeff, column, value
        coefficients -> [list of tuple] (node, column, 'kp'/'kq')

    Parameters:
        alpha,nu,convention -> CWC parameters, see cwc
        start,end -> [float, default=None] keep control cycles with start <= sod < end

    Outputs:
        df -> [pandas DataFrame] columns coefficient, RMSE, PICP, CWC, PINAW, samples

    Note:
        MetricsError is raised for empty logs and for coefficients whose estimate and oracle series
        have different lengths.
    """
    if estimates is None or oracle is None or len(estimates) == 0 or len(oracle) == 0:
        raise MetricsError('run log holds no estimates or no oracle coefficients')
    rows = []
    for node,column,coeff in coefficients:
        label = coefficient_label(node,column,coeff)
        est = _select(estimates,node,column,coeff,start,end)
        ref = _select(oracle,node,column,coeff,start,end)
        if len(est) == 0:
            raise MetricsError('no estimates logged for {:s}'.format(label))
        if len(est) != len(ref):
            raise MetricsError('{:s}: {:d} estimates but {:d} oracle values'.format(label,len(est),len(ref)))
        merged = est.merge(ref,on=KEYS,how='inner',validate='one_to_one')
        if len(merged) != len(est):
            raise MetricsError('{:s}: estimate and oracle timestamps do not match'.format(label))
        series = IntervalSeries(truth=merged['value'].to_numpy(),hat=merged['hat'].to_numpy(),half_width=merged['delta'].to_numpy())
        coverage = picp(series)
        width = pinaw(series)
        rows.append({'coefficient':label,'RMSE':rmse(series.truth,series.hat),'PICP':coverage,
                     'CWC':cwc(coverage,width,alpha,nu,convention),'PINAW':width,'samples':series.steps})
    return pd.DataFrame(rows,columns=['coefficient','RMSE','PICP','CWC','PINAW','samples'])

def _select(df,node,column,coeff,start,end):
    mask = (df['node'] == node) & (df['column'] == column) & (df['coeff'] == coeff)
    if start is not None: mask &= df['sod'] >= start
    if end is not None: mask &= df['sod'] < end
    return df.loc[mask].sort_values('sod').reset_index(drop=True)

def format_table(df,digits=2):
    """
    Render a metrics table as text, one row per coefficient with RMSE and 'PICP - CWC - PINAW'.
    """
    fmt = '{:.%dg}' % max(digits,1)
    body = []
    for rec in df.itertuples(index=False):
        body.append([rec.coefficient,'{:.{d}f}'.format(rec.RMSE,d=digits),
                     ' - '.join([fmt.format(rec.PICP),'{:.{d}f}'.format(rec.CWC,d=digits),'{:.{d}f}'.format(rec.PINAW,d=digits)])])
    return tabulate(body,headers=['Coefficients','RMSE','PICP-CWC-PINAW'],tablefmt='github')
