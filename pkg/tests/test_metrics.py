import numpy as np
import pandas as pd
import pytest

from voltfield.metrics.metrics_interval import IntervalSeries,cwc,picp,pinaw,rmse
from voltfield.metrics.metrics_report import format_table,metrics_table,parse_coefficients
from voltfield.utils.errors import MetricsError,ZeroMax,ZeroNormTruth

def test_rmse():
    assert rmse([3,4],[3,0]) == pytest.approx(0.8)
    assert rmse([1,2,3],[1,2,3]) == 0.0
    with pytest.raises(ZeroNormTruth):
        rmse([0,0],[1,1])
    with pytest.raises(ValueError):
        rmse([1,2],[1])

def test_picp_and_pinaw():
    series = IntervalSeries(truth=[1.0,2.0,-4.0,1.0],hat=[1.1,2.5,-4.0,0.0],half_width=[0.2,0.2,0.1,0.5])
    assert picp(series) == pytest.approx(0.5)
    # normalized by the largest |truth|
    assert pinaw(series) == pytest.approx(2*1.0/(4*4.0))
    with pytest.raises(ZeroMax):
        pinaw(IntervalSeries(truth=[0,0],hat=[0,0],half_width=[1,1]))
    with pytest.raises(ValueError):
        IntervalSeries(truth=[1.0],hat=[1.0],half_width=[-0.1])

def test_cwc_conventions():
    # under-coverage is penalized
    assert cwc(0.9,1.44,alpha=0.99,nu=50) == pytest.approx(1.44*(1 + 0.9*np.exp(4.5)),rel=1e-12)
    assert cwc(0.9,1.44,alpha=0.99,nu=50) == pytest.approx(118.1,abs=0.05)
    assert cwc(1.0,1.44) == 1.44
    assert cwc(0.9,1.44,convention='inverted') == 1.44
    assert cwc(1.0,1.44,convention='inverted') == pytest.approx(1.44*(1 + np.exp(-0.5)))
    with pytest.raises(ValueError):
        cwc(0.9,1.44,convention='other')
    with pytest.raises(ValueError):
        cwc(1.2,1.44)

def test_parse_coefficients():
    assert parse_coefficients('B09:B03, B09:B09,B11:B11:q') == [('B09','B03','kp'),('B09','B09','kp'),('B11','B11','kq')]
    with pytest.raises(ValueError):
        parse_coefficients('B09')
    with pytest.raises(ValueError):
        parse_coefficients('B09:B03:x')

def _logs(n=20):
    sod = 43200 + 30*np.arange(n)
    truth = 0.02 + 0.001*np.sin(np.arange(n))
    estimates = pd.DataFrame({'sod':sod,'node':'B09','coeff':'kp','column':'B03','hat':truth + 0.0005,
                              'delta':np.full(n,0.001)})
    oracle = pd.DataFrame({'sod':sod,'node':'B09','coeff':'kp','column':'B03','value':truth})
    return estimates,oracle

def test_metrics_table():
    estimates,oracle = _logs()
    df = metrics_table(estimates,oracle,[('B09','B03','kp')])
    assert list(df.columns) == ['coefficient','RMSE','PICP','CWC','PINAW','samples']
    row = df.iloc[0]
    assert row['coefficient'] == 'Kp[B09,B03]'
    assert row['PICP'] == 1.0
    assert row['CWC'] == pytest.approx(row['PINAW'])
    assert row['samples'] == 20

    window = metrics_table(estimates,oracle,[('B09','B03','kp')],start=43200 + 300,end=43200 + 450)
    assert window.iloc[0]['samples'] == 5

    text = format_table(df)
    assert 'Kp[B09,B03]' in text
    assert 'PICP-CWC-PINAW' in text
    assert text == format_table(metrics_table(estimates,oracle,[('B09','B03','kp')]))

def test_metrics_table_errors():
    estimates,oracle = _logs()
    with pytest.raises(MetricsError):
        metrics_table(estimates.iloc[:0],oracle,[('B09','B03','kp')])
    with pytest.raises(MetricsError):
        metrics_table(estimates,oracle.iloc[:-1],[('B09','B03','kp')])
    with pytest.raises(MetricsError):
        metrics_table(estimates,oracle,[('B09','B05','kp')])
    shifted = oracle.assign(sod=oracle['sod'] + 1)
    with pytest.raises(MetricsError):
        metrics_table(estimates,shifted,[('B09','B03','kp')])
