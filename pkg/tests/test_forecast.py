import numpy as np
import pytest

from voltfield.forecast.fc_persistence import Observation,persistence_forecast
from voltfield.forecast.fc_pv import PvModel,WeatherSample,cell_temperature,mpp_from_weather,mpp_series
from voltfield.utils.errors import StaleData

MODEL = PvModel(panel_area=90,efficiency=0.2,temp_coeff=-0.004,derate=0.95,cell_temp_coeff=0.03,s_max=15e3)

def test_persistence_returns_latest():
    assert persistence_forecast(Observation(812.0,43200),now=43201) == 812.0
    assert persistence_forecast(Observation(812.0,43200),now=43202) == 812.0

def test_persistence_stale_or_missing():
    with pytest.raises(StaleData):
        persistence_forecast(None,now=43200)
    with pytest.raises(StaleData):
        persistence_forecast(Observation(None,43200),now=43200)
    with pytest.raises(StaleData):
        persistence_forecast(Observation(812.0,43200),now=43203)
    assert persistence_forecast(Observation(812.0,43200),now=43209,sample_period=5) == 812.0

def test_mpp_at_reference_temperature():
    # cell at 25 degC: no derating from temperature
    model = PvModel(panel_area=10,efficiency=0.2,cell_temp_coeff=0.0)
    assert mpp_from_weather(model,WeatherSample(1000,25)) == pytest.approx(2000.0)

def test_mpp_temperature_derating():
    w = WeatherSample(800,20)
    assert cell_temperature(MODEL,w) == pytest.approx(44.0)
    expected = 800*90*0.2*(1 - 0.004*19)*0.95
    assert mpp_from_weather(MODEL,w) == pytest.approx(expected)
    assert mpp_from_weather(MODEL,WeatherSample(800,35)) < mpp_from_weather(MODEL,w)

def test_mpp_clamped():
    assert mpp_from_weather(MODEL,WeatherSample(0,20)) == 0.0
    assert mpp_from_weather(MODEL,WeatherSample(1200,-10)) == 15e3
    with pytest.raises(ValueError):
        WeatherSample(-1.0,20)

def test_mpp_series_matches_scalar():
    ghi = np.array([0.0,150.0,640.0,1000.0])
    temp = np.array([12.0,18.0,24.0,30.0])
    series = mpp_series(MODEL,ghi,temp)
    assert np.allclose(series,[mpp_from_weather(MODEL,WeatherSample(g,t)) for g,t in zip(ghi,temp)])

def test_model_validation():
    with pytest.raises(ValueError):
        PvModel(panel_area=0,efficiency=0.2)
    with pytest.raises(ValueError):
        PvModel(panel_area=10,efficiency=1.2)
    with pytest.raises(ValueError):
        PvModel(panel_area=10,efficiency=0.2,derate=0)
