import logging
import time
from collections import deque
from dataclasses import dataclass

import numpy as np

from .harness_noise import MeasurementSample,apply_noise
from .harness_profiles import build_day_profiles
from ..control.ctrl_qp import RobustControlProblem,build_robust_qp
from ..control.ctrl_solver import solve_qp
from ..estimation.est_interval import interval_from_covariance
from ..estimation.est_ls import build_regression_window,excitation_rank,ls_bootstrap
from ..estimation.est_rls import run_rls
from ..forecast.fc_persistence import Observation,persistence_forecast
from ..forecast.fc_pv import WeatherSample,mpp_from_weather,mpp_series
from ..grid.grid_powerflow import solve_power_flow
from ..grid.grid_sensitivity import oracle_sensitivities
from ..vfclasses.runlogclass import RunLog
from ..utils.errors import (EigenFailure,NonConvergence,NumericalBlowup,PowerFlowDiverged,SingularJacobian,
                            SingularSystem,StaleData)
from ..utils.time_utils import epoch_ms

log = logging.getLogger(__name__)

# inverter setpoint resolution, W / var
SETPOINT_DECIMALS = 3

@dataclass
class _Streams:
    profiles: np.random.Generator
    bootstrap: np.random.Generator
    noise: np.random.Generator

def _streams(seed):
    ss_profiles,ss_boot,ss_noise = np.random.SeedSequence(seed).spawn(3)
    return _Streams(np.random.default_rng(ss_profiles),np.random.default_rng(ss_boot),np.random.default_rng(ss_noise))

def _injections(model,prof,k,plant_buses,p_pv,q_pv):
    """Per-unit nodal injections at step k: plants minus loads."""
    p = -prof.load_p[k].copy()
    q = -prof.load_q[k].copy()
    p[plant_buses] += p_pv
    q[plant_buses] += q_pv
    return model.to_pu(p),model.to_pu(q),p,q

def _solve(model,p,q,slack_v,prev,sod,runlog):
    try:
        return solve_power_flow(model,p,q,slack_v,v0=prev)
    except (NonConvergence,SingularJacobian) as err:
        log.error('power flow diverged at t = %.0f s: %s',sod,err)
        if runlog is not None:
            runlog.partial = True
        raise PowerFlowDiverged('power flow diverged at t = {:.0f} s: {:s}'.format(sod,str(err)),runlog=runlog)

def _true_sample(sod,state,p_w,q_w,p_pv,q_pv,prof,k):
    weather = WeatherSample(ghi=float(prof.ghi[k]),air_temp=float(prof.air_temp[k]),timestamp=sod)
    return MeasurementSample(timestamp=sod,v=state.v_mag.copy(),p=p_w,q=q_w,p_pv=np.asarray(p_pv,dtype=float),
                             q_pv=np.asarray(q_pv,dtype=float),weather=weather)

def bootstrap_estimator(config,rng):
    """
    Least squares bootstrap from a simulated previous-day segment.

    Usage:
        state = bootstrap_estimator(config,np.random.default_rng(1))

    Inputs:
        config -> [ScenarioConfig]
        rng -> [numpy Generator] stream for the segment's variability, dither and noise

    Outputs:
        state -> [EstimatorState] stacked estimator of every non-slack node

    Note:
        The segment replays the previous-day profiles with every plant at its MPP. A dither, given as a
        fraction of the plant rating, curtails the active power and, for reactive capable plants, moves
        q randomly every second, which helps when the segment itself lacks excitation.
    """
    model = config.network
    prev = config.previous_day
    period = config.timing.sample_period_s
    sods = prev.bootstrap_start + np.arange(0,prev.bootstrap_duration,period)
    prof = build_day_profiles(model,prev.loads,prev.slack,prev.weather,sods,rng,
                              config.profiles.load_variability,config.profiles.weather_variability)
    plants = config.plant_configs
    buses = np.array([model.bus_index(p.bus) for p in plants])
    s_max = np.array([p.s_max for p in plants])
    reactive = np.array([p.reactive_capable for p in plants])
    zeta = np.array([p.zeta for p in plants])
    mpp = np.column_stack([mpp_series(spec.pv_model,prof.ghi,prof.air_temp) for spec in config.plants])

    v_rows,p_rows,q_rows = [],[],[]
    state = None
    ns = model.nonslack
    for k,sod in enumerate(sods):
        p_pv = mpp[k].copy()
        q_pv = np.zeros(len(plants))
        if prev.dither > 0:
            p_pv = np.clip(p_pv - np.abs(prev.dither*s_max*rng.standard_normal(len(plants))),0,None)
            q_pv = np.where(reactive,prev.dither*s_max*rng.standard_normal(len(plants)),0.0)
            q_pv = np.clip(q_pv,-zeta*p_pv,zeta*p_pv)
        p_pu,q_pu,p_w,q_w = _injections(model,prof,k,buses,p_pv,q_pv)
        state = _solve(model,p_pu,q_pu,prof.slack_v[k],state,sod,None)
        meas = apply_noise(_true_sample(sod,state,p_w,q_w,p_pv,q_pv,prof,k),config.noise,rng)
        v_rows.append(meas.v[ns])
        p_rows.append(model.to_pu(meas.p[ns]))
        q_rows.append(model.to_pu(meas.q[ns]))

    window = build_regression_window(np.array(v_rows),np.array(p_rows),np.array(q_rows),sods,period)
    est = config.estimator
    mu = est.sf_mu if est.method == 'rls_sf' else est.mu
    state = ls_bootstrap(window,est.lambda_reg,mu=mu,tau_min=est.tau_min,tau_max=est.tau_max)
    log.info('LS bootstrap on %d rows from %.0f s of the previous day',window.m,prev.bootstrap_start)
    return state

class _Controller(object):
    """Estimation and control state carried between cycles."""

    def __init__(self,config,state):

        self.config = config
        self.state = state
        self.plants = config.plant_configs
        self.columns = [p.column for p in self.plants]
        self.mpp_forecast = np.zeros(len(self.plants))
        self.last_weather = None
        # injection columns that should be excited: plant p, and q of reactive plants
        n_b = config.network.n_b
        self.excited = self.columns + [n_b + p.column for p in self.plants if p.reactive_capable]

    def update_estimate(self,rows):
        """Feed the newest samples through the recursive estimator."""
        cfg = self.config.estimator
        v,p,q = rows
        window = build_regression_window(v,p,q)
        try:
            if cfg.method == 'rls_sf':
                self.state = run_rls(self.state,window,'rls_sf',tau_rule=cfg.tau_rule)
            else:
                self.state = run_rls(self.state,window,'rls_f',blowup_cap=cfg.blowup_cap)
        except NumericalBlowup as err:
            log.warning('%s; re-initializing the estimator from the trailing window',err)
            return False
        except EigenFailure as err:
            log.warning('%s; keeping the previous estimate',err)
        return True

    def rebootstrap(self,rows):
        cfg = self.config.estimator
        mu = cfg.sf_mu if cfg.method == 'rls_sf' else cfg.mu
        try:
            self.state = ls_bootstrap(build_regression_window(*rows),cfg.lambda_reg,mu=mu,tau_min=cfg.tau_min,tau_max=cfg.tau_max)
        except SingularSystem as err:
            log.warning('re-initialization failed: %s',err)

    def low_excitation(self,rows):
        rank,n_cols = excitation_rank(build_regression_window(*rows),self.excited)
        return rank < n_cols

    def observe_weather(self,weather,sod):
        if weather is not None:
            self.last_weather = Observation(weather,sod)

    def forecast_mpp(self,sod):
        """Persistence forecast of the weather turned into an MPP per plant; stale data keeps the last forecast."""
        try:
            w = persistence_forecast(self.last_weather,sod,self.config.timing.sample_period_s)
        except StaleData as err:
            log.warning('%s; keeping the previous MPP forecast',err)
            return self.mpp_forecast
        self.mpp_forecast = np.array([mpp_from_weather(spec.pv_model,w) for spec in self.config.plants])
        return self.mpp_forecast

def _window_rows(buf):
    v,p,q = zip(*buf)
    return np.array(v),np.array(p),np.array(q)

def run_day(config,control=True,clock=time.perf_counter,telemetry=None):
    """
    Simulate a day in closed loop.

    Usage:
        runlog = run_day(config)
        runlog = run_day(config,control=False)

    Inputs:
        config -> [ScenarioConfig]

    Parameters:
        control -> [bool, default=True] False replays the day with every plant at its MPP and q = 0
        clock -> [callable, default=time.perf_counter] seconds counter used for the cycle deadline
        telemetry -> [TelemetryLink, default=None] started link receiving a snapshot every second

    Outputs:
        runlog -> [RunLog]

    Note:
        (1) Every second the plants produce min(setpoint, true MPP) and q = setpoint, the power flow is
        solved with the profiles' loads and slack voltage, and a noisy sample is measured.
        (2) Every control period the estimator processes the new samples, the MPP is forecast by
        persistence and the robust QP is solved. The previous setpoint is kept when the QP is not
        optimal or when the cycle took longer than control.deadline_s according to `clock`.
        The QP works against ScenarioConfig.planning_bounds, the voltage band less the noise margin.
        (3) Setpoints are zero until the first cycle.
        (4) Randomness comes from three independent streams spawned from the seed (profiles,
        bootstrap, measurement noise), so the controlled run and the baseline see the same day.
        PowerFlowDiverged carries the partial run log.
    """
    model = config.network
    timing = config.timing
    period = timing.sample_period_s
    sods = timing.start_s + np.arange(timing.n_steps)*period
    rng = _streams(config.seed)

    prof = build_day_profiles(model,config.profiles.loads,config.profiles.slack,config.profiles.weather,sods,
                              rng.profiles,config.profiles.load_variability,config.profiles.weather_variability)
    plants = config.plant_configs
    n_pv = len(plants)
    buses = np.array([model.bus_index(p.bus) for p in plants])
    mpp_true = np.column_stack([mpp_series(spec.pv_model,prof.ghi,prof.air_temp) for spec in config.plants])

    runlog = RunLog(config.date,model.names,[p.name for p in plants],model.nonslack_names)
    ctrl = None
    if control:
        ctrl = _Controller(config,bootstrap_estimator(config,rng.bootstrap))
    log_nodes = config.estimate_nodes()
    ns = model.nonslack

    sp_p,sp_q = np.zeros(n_pv),np.zeros(n_pv)
    buf = deque(maxlen=timing.window_samples + 1)
    state = None
    n_ctrl = timing.control_samples
    n_fallback = 0
    v_lo,v_hi = config.planning_bounds()

    for k,sod in enumerate(sods):
        if control:
            p_pv = np.minimum(sp_p,mpp_true[k])
            q_pv = sp_q.copy()
        else:
            p_pv,q_pv = mpp_true[k].copy(),np.zeros(n_pv)
        p_pu,q_pu,p_w,q_w = _injections(model,prof,k,buses,p_pv,q_pv)
        state = _solve(model,p_pu,q_pu,prof.slack_v[k],state,sod,runlog)
        meas = apply_noise(_true_sample(sod,state,p_w,q_w,p_pv,q_pv,prof,k),config.noise,rng.noise)

        runlog.add_second(sod,state.v_mag,meas.v,prof.slack_v[k],p_pv,q_pv,mpp_true[k],
                          sp_p if control else mpp_true[k],sp_q)
        if telemetry is not None:
            telemetry.publish(epoch_ms(config.date,sod),meas.v,meas.p,meas.q)
        buf.append((meas.v[ns],model.to_pu(meas.p[ns]),model.to_pu(meas.q[ns])))
        if control:
            ctrl.observe_weather(meas.weather,sod)

        if not control or (k + 1) % n_ctrl != 0 or len(buf) < 2:
            continue

        # control cycle
        t0 = clock()
        # only the samples since the last cycle; the trailing window reaches the estimate through mu
        rows = _window_rows(list(buf)[-(n_ctrl + 1):])
        if not ctrl.update_estimate(rows):
            ctrl.rebootstrap(_window_rows(buf))
        low_exc = ctrl.low_excitation(_window_rows(buf))
        if low_exc:
            log.debug('low excitation in the window ending at %.0f s',sod)
        est = interval_from_covariance(ctrl.state,config.estimator.alpha,computed_at=sod)
        t1 = clock()

        mpp_fc = ctrl.forecast_mpp(sod)
        problem = RobustControlProblem(v_prev=meas.v[ns],p_prev=meas.p_pv,q_prev=meas.q_pv,estimates=est,
                                       mpp=mpp_fc,v_min=v_lo,v_max=v_hi,
                                       xi=config.control.xi,power_base=model.s_base,timestamp=sod)
        qp = build_robust_qp(problem,plants,segments=config.control.polygon_segments,
                             reactive_protection=config.control.reactive_protection,
                             aux_regularization=config.control.aux_regularization)
        result = solve_qp(qp)
        t2 = clock()

        late = (t2 - t0) > config.control.deadline_s
        fallback = late or not result.ok
        if late:
            log.warning('control cycle at %.0f s took %.3f s, above the %.1f s deadline; holding the previous setpoint',
                        sod,t2 - t0,config.control.deadline_s)
        elif not result.ok:
            log.warning('QP %s at %.0f s; holding the previous setpoint',result.solve_status,sod)
        else:
            sp_p = np.round(result.p_pv,SETPOINT_DECIMALS) + 0.0
            sp_q = np.round(result.q_pv,SETPOINT_DECIMALS) + 0.0
            if telemetry is not None:
                telemetry.actuate(epoch_ms(config.date,sod),buses,sp_p,sp_q)
        status = 'deadline' if late else result.solve_status
        for j,plant in enumerate(plants):
            runlog.add_control(sod,plant.name,meas.p_pv[j],meas.q_pv[j],sp_p[j],sp_q[j],mpp_fc[j],status,
                               result.objective,fallback,low_exc,result.iterations)
        runlog.add_estimates(sod,est,log_nodes)
        runlog.add_audit(sod,problem,plants)

        if config.logging.oracle:
            runlog.add_oracle(sod,oracle_sensitivities(model,state,computed_at=sod),log_nodes)
        t3 = clock()
        runlog.add_timing(sod,1e3*(t1 - t0),1e3*(t2 - t1),1e3*(t3 - t2),1e3*(t3 - t0))
        n_fallback += int(fallback)
        if (k + 1) % (n_ctrl*120) == 0:
            log.info('t = %.0f s: %d control cycles, %d fallbacks',sod + period,runlog.n_cycles,n_fallback)

    if telemetry is not None:
        runlog.counters.update(telemetry.counters())
    log.info('%s run finished: %d seconds, %d control cycles',
             'controlled' if control else 'baseline',len(runlog),runlog.n_cycles)
    return runlog

def no_control_baseline(config,telemetry=None):
    """
    Replay the day without estimator or controller: every plant injects its MPP with q = 0.

    Outputs:
        runlog -> [RunLog] with no control records
    """
    return run_day(config,control=False,telemetry=telemetry)
