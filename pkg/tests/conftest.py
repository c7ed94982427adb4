from pathlib import Path

import numpy as np
import pytest

from voltfield import NetworkModel,ScenarioConfig

DATA_DIR = Path(__file__).resolve().parents[1]/'voltfield'/'data'/'cigre_lv'
SCENARIO = DATA_DIR/'scenario.json'
NETWORK = DATA_DIR/'network.json'

def two_bus_dict(r_ohm=0.016,x_ohm=0.016,s_base=1e5,v_base=400.0):
    """Slack B1 feeding B2 over one branch; with the default bases z_base = 1.6 ohm."""
    return {'schema_version':1,'name':'two_bus','s_base':s_base,'v_base':v_base,
            'buses':[{'name':'B1','type':'slack'},{'name':'B2','type':'PQ'}],
            'branches':[{'from':'B1','to':'B2','r_ohm':r_ohm,'x_ohm':x_ohm,'ampacity_a':400.0}]}

@pytest.fixture
def two_bus():
    return NetworkModel.from_dict(two_bus_dict())

@pytest.fixture(scope='session')
def feeder():
    return NetworkModel.from_file(NETWORK)

@pytest.fixture(scope='session')
def scenario():
    return ScenarioConfig.from_file(SCENARIO)

@pytest.fixture
def short_scenario(scenario):
    """Half an hour around noon of the bundled scenario."""
    return scenario.with_overrides(start_s=12*3600,duration_s=1800)

@pytest.fixture
def rng():
    return np.random.default_rng(12345)
