import numpy as np
import pytest

from voltfield import NetworkModel
from voltfield.grid.grid_powerflow import solve_power_flow,branch_currents
from voltfield.grid.grid_sensitivity import SensitivityMatrix,linearized_voltage,oracle_sensitivities
from voltfield.utils.errors import ConfigError,NetworkValidationError,NonConvergence,SingularJacobian

from conftest import two_bus_dict

def _two_bus_voltage(r,x,p_load,q_load,v1=1.0):
    a = v1**2 - 2*(r*p_load + x*q_load)
    return np.sqrt((a + np.sqrt(a**2 - 4*(r**2 + x**2)*(p_load**2 + q_load**2)))/2)

def test_flat_start_without_injections(feeder):
    state = solve_power_flow(feeder,np.zeros(feeder.n_bus),np.zeros(feeder.n_bus))
    assert np.allclose(state.v_mag,1.0,atol=1e-12)
    assert np.allclose(state.v_ang,0.0,atol=1e-12)

def test_two_bus_closed_form(two_bus):
    # r = x = 0.01 pu on the default bases
    state = solve_power_flow(two_bus,[0,-0.1],[0,0])
    assert state.v_mag[1] == pytest.approx(_two_bus_voltage(0.01,0.01,0.1,0.0),abs=1e-9)
    assert state.mismatch < 1e-10

def test_per_unit_scaling(two_bus):
    other = NetworkModel.from_dict(two_bus_dict(s_base=2e5))
    p_w,q_w = -8e3,-2e3
    a = solve_power_flow(two_bus,two_bus.to_pu([0,p_w]),two_bus.to_pu([0,q_w]))
    b = solve_power_flow(other,other.to_pu([0,p_w]),other.to_pu([0,q_w]))
    assert np.allclose(a.v_mag,b.v_mag,atol=1e-10)

def test_nonslack_vector_and_warm_start(feeder,rng):
    p = -0.02*rng.random(feeder.n_b)
    q = -0.005*rng.random(feeder.n_b)
    cold = solve_power_flow(feeder,p,q,slack_v=1.02)
    warm = solve_power_flow(feeder,p,q,slack_v=1.02,v0=cold)
    assert cold.mismatch < 1e-10
    assert warm.iterations <= 1
    assert np.allclose(cold.v_mag,warm.v_mag,atol=1e-10)
    assert cold.v_mag[feeder.slack] == pytest.approx(1.02)

def test_infeasible_load_does_not_converge(two_bus):
    with pytest.raises((NonConvergence,SingularJacobian)):
        solve_power_flow(two_bus,[0,-100.0],[0,0])

def test_bad_injection_length(feeder):
    with pytest.raises(ValueError):
        solve_power_flow(feeder,np.zeros(3),np.zeros(3))

def test_branch_currents(two_bus):
    state = solve_power_flow(two_bus,[0,-0.1],[0,0])
    amps,loading = branch_currents(two_bus,state)
    # about 10 kW at 400 V
    assert amps[0] == pytest.approx(0.1*two_bus.i_base/state.v_mag[1],rel=1e-3)
    assert loading[0] == pytest.approx(amps[0]/400.0)

def test_oracle_resistive_two_bus():
    model = NetworkModel.from_dict(two_bus_dict(r_ohm=0.016,x_ohm=0.0))
    state = solve_power_flow(model,[0,0],[0,0])
    sens = oracle_sensitivities(model,state)
    assert sens.kp[0,0] == pytest.approx(0.01,rel=1e-4)
    assert abs(sens.kq[0,0]) < 1e-6

def test_oracle_step_refinement(feeder):
    state = solve_power_flow(feeder,-0.02*np.ones(feeder.n_b),-0.006*np.ones(feeder.n_b))
    full = oracle_sensitivities(feeder,state)
    half = oracle_sensitivities(feeder,state,h=0.5e-4)
    assert np.max(np.abs(full.kp - half.kp)) < 1e-6
    assert np.max(np.abs(full.kq - half.kq)) < 1e-6

def test_own_sensitivity_grows_along_the_feeder(feeder):
    state = solve_power_flow(feeder,np.zeros(feeder.n_bus),np.zeros(feeder.n_bus))
    sens = oracle_sensitivities(feeder,state)
    assert np.all(np.diag(sens.kp) > 0)
    for bus in feeder.nonslack_names:
        i = feeder.nonslack_position(bus)
        for k in feeder.path_to_slack(bus)[1:-1]:
            j = feeder.nonslack_position(k)
            assert sens.kp[i,i] >= sens.kp[j,j] - 1e-12

def test_linearized_voltage_identities(feeder):
    state = solve_power_flow(feeder,np.zeros(feeder.n_bus),np.zeros(feeder.n_bus))
    sens = oracle_sensitivities(feeder,state)
    zero = np.zeros(feeder.n_b)
    assert np.array_equal(linearized_voltage(state,sens,zero,zero),state.v_nonslack)

    n = feeder.n_b
    unit = np.zeros((n,n))
    unit[2,4] = 1.0
    dp = np.zeros(n)
    dp[4] = 1.0
    v = linearized_voltage(np.ones(n),SensitivityMatrix(unit,np.zeros((n,n))),dp,zero)
    assert v[2] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        linearized_voltage(np.ones(n),sens,np.zeros(n-1),zero)

def test_linearization_error_on_feeder(feeder,rng):
    p0 = -0.02*np.ones(feeder.n_b)
    q0 = -0.006*np.ones(feeder.n_b)
    state = solve_power_flow(feeder,p0,q0)
    sens = oracle_sensitivities(feeder,state)
    plants = [feeder.nonslack_position(b) for b in ('B09','B11')]
    worst = 0.0
    for _ in range(1000):
        dp = np.zeros(feeder.n_b)
        dq = np.zeros(feeder.n_b)
        dp[plants] = rng.uniform(-0.01,0.01,size=2)
        dq[plants[0]] = rng.uniform(-0.005,0.005)
        exact = solve_power_flow(feeder,p0 + dp,q0 + dq,v0=state).v_nonslack
        worst = max(worst,np.max(np.abs(linearized_voltage(state,sens,dp,dq) - exact)))
    assert worst < 1e-4

def test_feeder_layout(feeder):
    assert feeder.n_bus == 14
    assert feeder.n_b == 13
    assert feeder.is_radial
    assert feeder.names[feeder.slack] == 'B01'
    assert feeder.path_to_slack('B11') == [feeder.bus_index(b) for b in ('B11','B10','B03','B02','B01')]

def test_network_validation():
    raw = two_bus_dict()
    raw['buses'][1]['type'] = 'slack'
    with pytest.raises(NetworkValidationError):
        NetworkModel.from_dict(raw)

    raw = two_bus_dict()
    raw['buses'].append({'name':'B3','type':'PQ'})
    with pytest.raises(NetworkValidationError,match='not connected'):
        NetworkModel.from_dict(raw)

    raw = two_bus_dict()
    raw['branches'][0]['to'] = 'B9'
    with pytest.raises(ConfigError) as info:
        NetworkModel.from_dict(raw)
    assert info.value.field == 'branches[0].to'

    raw = two_bus_dict()
    raw['branches'][0]['ampacity_a'] = 0
    with pytest.raises(NetworkValidationError):
        NetworkModel.from_dict(raw)

    raw = two_bus_dict()
    raw['buses'][1]['base_kv'] = 0.4
    assert NetworkModel.from_dict(raw).n_b == 1
    raw['buses'][1]['base_kv'] = 20.0
    with pytest.raises(NetworkValidationError) as info:
        NetworkModel.from_dict(raw)
    assert info.value.field == 'buses[1].base_kv'
