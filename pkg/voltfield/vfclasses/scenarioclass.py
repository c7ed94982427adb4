import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .networkclass import NetworkModel
from ..control.ctrl_qp import PvPlantConfig,PROTECTION_MODES
from ..estimation.est_interval import gaussian_quantile
from ..forecast.fc_pv import PvModel
from ..harness.harness_noise import NoiseParams
from ..utils.errors import ConfigError
from ..utils.time_utils import iso2sod,day_start

SCENARIO_SCHEMA_VERSIONS = (1,)

@dataclass(frozen=True)
class ProfileSet:
    loads: Path
    slack: Path
    weather: Path
    load_variability: float = 0.0
    weather_variability: float = 0.0

@dataclass(frozen=True)
class PreviousDay:
    """Profiles and segment used for the least squares bootstrap."""
    loads: Path
    slack: Path
    weather: Path
    bootstrap_start: float = 11*3600.0
    bootstrap_duration: float = 3600.0
    dither: float = 0.0

@dataclass(frozen=True)
class EstimatorParams:
    lambda_reg: float = 1e-6
    mu: float = 0.98
    sf_mu: float = 1.0
    tau_min: float = 0.01
    tau_max: float = 100.0
    alpha: float = 0.99
    method: str = 'rls_sf'
    tau_rule: str = 'printed'
    blowup_cap: Optional[float] = 1e12

@dataclass(frozen=True)
class ControlParams:
    v_min: float = 0.96
    v_max: float = 1.04
    xi: Optional[float] = None
    polygon_segments: int = 16
    reactive_protection: str = 'separate'
    deadline_s: float = 30.0
    aux_regularization: float = 1e-6
    noise_margin: bool = True

@dataclass(frozen=True)
class TimingParams:
    sample_period_s: float = 1.0
    window_samples: int = 300
    control_period_s: float = 30.0
    duration_s: float = 86400.0
    start_s: float = 0.0

    @property
    def control_samples(self):
        return int(round(self.control_period_s/self.sample_period_s))

    @property
    def n_steps(self):
        return int(round(self.duration_s/self.sample_period_s))

@dataclass(frozen=True)
class TelemetryParams:
    enabled: bool = False
    pmu_buses: tuple = ()
    host: str = '127.0.0.1'
    port: int = 0
    alignment_ms: float = 100.0
    queue_size: int = 64

@dataclass(frozen=True)
class LoggingParams:
    estimate_nodes: object = 'plants'
    oracle: bool = True

@dataclass(frozen=True)
class PlantSpec:
    """A controllable plant together with its MPP model."""
    config: PvPlantConfig
    pv_model: PvModel

_BLOCK_DEFAULTS = {'noise':NoiseParams,'estimator':EstimatorParams,'control':ControlParams,
                   'timing':TimingParams,'telemetry':TelemetryParams,'logging':LoggingParams}

def _fields(cls):
    return list(cls.__dataclass_fields__)

def _check_keys(raw,allowed,where):
    if not isinstance(raw,dict):
        raise ConfigError(where or 'scenario','must be an object')
    for key in raw:
        if key not in allowed:
            raise ConfigError('{:s}{:s}'.format(where+'.' if where else '',key),'unknown key')

def _block(raw,name,cls):
    sub = raw.get(name,{})
    _check_keys(sub,_fields(cls),name)
    values = {}
    for key,default in cls.__dataclass_fields__.items():
        if key not in sub:
            continue
        val = sub[key]
        ref = default.default
        if isinstance(ref,bool):
            if not isinstance(val,bool):
                raise ConfigError('{:s}.{:s}'.format(name,key),'must be true or false')
        elif isinstance(ref,(int,float)) and not isinstance(ref,bool) and val is not None:
            if isinstance(val,bool) or not isinstance(val,(int,float)):
                raise ConfigError('{:s}.{:s}'.format(name,key),'must be a number')
            if isinstance(ref,int) and not float(val).is_integer():
                raise ConfigError('{:s}.{:s}'.format(name,key),'must be an integer')
            val = type(ref)(val)
        elif ref is None and val is not None:
            if isinstance(val,bool) or not isinstance(val,(int,float)):
                raise ConfigError('{:s}.{:s}'.format(name,key),'must be a number or null')
            val = float(val)
        values[key] = tuple(val) if isinstance(val,list) and key == 'pmu_buses' else val
    try:
        return cls(**values)
    except ValueError as err:
        raise ConfigError(name,str(err))

class ScenarioConfig(object):
    """
    class ScenarioConfig

    Everything needed for a simulated day: network, plants, profiles, noise, estimator, controller,
    timing, telemetry and logging parameters. Relative paths are resolved against the scenario
    file's directory.

    Attributes:
        name -> [str] scenario name
        date -> [str] simulated day, 'YYYY-MM-DD'
        seed -> [int] master seed
        network -> [NetworkModel] the simulated grid
        plants -> [list of PlantSpec] controllable plants, configs resolved against the network
        profiles -> [ProfileSet]
        previous_day -> [PreviousDay]
        noise -> [NoiseParams]
        estimator, control, timing, telemetry, logging -> parameter blocks
        source -> [Path] scenario file, None when built from a dictionary
        raw_bytes -> [bytes] content the configuration was decoded from
    """

    def __init__(self,raw,base_dir='.',source=None,raw_bytes=None):

        base_dir = Path(base_dir)
        self._base_dir = base_dir
        _check_keys(raw,['schema_version','name','date','seed','network','plants','profiles','previous_day']+list(_BLOCK_DEFAULTS),'')
        if raw.get('schema_version') not in SCENARIO_SCHEMA_VERSIONS:
            raise ConfigError('schema_version','unsupported scenario schema version {!r}'.format(raw.get('schema_version')))

        self.source = source
        self.raw = raw
        self.raw_bytes = raw_bytes if raw_bytes is not None else json.dumps(raw,sort_keys=True).encode()
        self.name = str(raw.get('name','scenario'))
        self.date = str(raw.get('date','2022-07-18'))
        try:
            day_start(self.date)
        except ValueError:
            raise ConfigError('date','not an ISO date: {!r}'.format(self.date))
        seed = raw.get('seed',0)
        if isinstance(seed,bool) or not isinstance(seed,int) or seed < 0:
            raise ConfigError('seed','must be a non-negative integer')
        self.seed = seed

        if 'network' not in raw:
            raise ConfigError('network','missing')
        self.network = NetworkModel.from_file(self._path(base_dir,raw['network'],'network'))

        for name,cls in _BLOCK_DEFAULTS.items():
            setattr(self,name,_block(raw,name,cls))
        self.profiles = self._profiles(raw,base_dir)
        self.previous_day = self._previous_day(raw,base_dir)
        self.plants = self._plants(raw)
        self.validate()

    def __repr__(self):

        return 'instance of class ScenarioConfig ({:s}, {:s}, seed {:d})'.format(self.name,self.date,self.seed)

    @staticmethod
    def from_file(scenario_file):
        """
        Parse a scenario file.

        Usage:
            config = ScenarioConfig.from_file('voltfield/data/cigre_lv/scenario.json')

        Inputs:
            scenario_file -> [str or Path] JSON scenario description (schema_version 1)

        Outputs:
            config -> [object] instance of class ScenarioConfig
        """
        scenario_file = Path(scenario_file)
        try:
            raw_bytes = scenario_file.read_bytes()
        except FileNotFoundError:
            raise ConfigError('scenario','file not found: {:s}'.format(str(scenario_file)))
        try:
            raw = json.loads(raw_bytes)
        except json.JSONDecodeError as err:
            raise ConfigError('scenario','invalid JSON in {:s}: {:s}'.format(str(scenario_file),str(err)))
        return ScenarioConfig(raw,scenario_file.parent,source=scenario_file,raw_bytes=raw_bytes)

    @staticmethod
    def from_dict(raw,base_dir='.'):
        """Build the configuration from an already decoded scenario."""
        return ScenarioConfig(raw,base_dir)

    @property
    def sha256(self):
        """Hash of the bytes the configuration was read from."""
        return hashlib.sha256(self.raw_bytes).hexdigest()

    @property
    def plant_configs(self):
        return [plant.config for plant in self.plants]

    def with_overrides(self,seed=None,duration_s=None,telemetry=None,start_s=None):
        """
        Copy of the configuration with some run options replaced (used by the command line).
        The hash still refers to the original file bytes.
        """
        raw = json.loads(json.dumps(self.raw))
        if seed is not None: raw['seed'] = int(seed)
        if duration_s is not None: raw.setdefault('timing',{})['duration_s'] = float(duration_s)
        if start_s is not None: raw.setdefault('timing',{})['start_s'] = float(start_s)
        if telemetry is not None: raw.setdefault('telemetry',{})['enabled'] = bool(telemetry)
        return ScenarioConfig(raw,self._base_dir,source=self.source,raw_bytes=self.raw_bytes)

    def validate(self):
        """Cross-field checks. Raises ConfigError with the offending field path."""
        t = self.timing
        if not t.sample_period_s > 0:
            raise ConfigError('timing.sample_period_s','must be positive')
        ratio = t.control_period_s/t.sample_period_s
        if t.control_period_s <= 0 or abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError('timing.control_period_s','must be a positive multiple of the sample period')
        if t.window_samples < t.control_samples:
            raise ConfigError('timing.window_samples','must cover at least one control period')
        if not t.duration_s > 0 or abs(t.duration_s/t.sample_period_s - t.n_steps) > 1e-9:
            raise ConfigError('timing.duration_s','must be a positive multiple of the sample period')
        if t.start_s < 0 or t.start_s + t.duration_s > 86400:
            raise ConfigError('timing.duration_s','a run must end by the end of the day (start_s + duration_s <= 86400)')

        e = self.estimator
        if e.lambda_reg < 0:
            raise ConfigError('estimator.lambda_reg','must be non-negative')
        for key in ('mu','sf_mu'):
            if not 0 < getattr(e,key) <= 1:
                raise ConfigError('estimator.'+key,'must lie in (0,1]')
        if not e.tau_min > 0:
            raise ConfigError('estimator.tau_min','must be positive')
        if not e.tau_max > e.tau_min:
            raise ConfigError('estimator.tau_max','must exceed tau_min')
        if not 0 < e.alpha < 1:
            raise ConfigError('estimator.alpha','must lie in (0,1)')
        if e.method not in ('rls_sf','rls_f'):
            raise ConfigError('estimator.method',"must be 'rls_sf' or 'rls_f'")
        if e.tau_rule not in ('printed','eigen'):
            raise ConfigError('estimator.tau_rule',"must be 'printed' or 'eigen'")

        c = self.control
        if not c.v_min < c.v_max:
            raise ConfigError('control.v_max','must exceed v_min')
        if c.xi is not None and not 0 <= c.xi <= len(self.plants):
            raise ConfigError('control.xi','must lie in [0,{:d}]'.format(len(self.plants)))
        if c.polygon_segments < 3:
            raise ConfigError('control.polygon_segments','at least 3 segments')
        if c.reactive_protection not in PROTECTION_MODES:
            raise ConfigError('control.reactive_protection','must be one of {!r}'.format(PROTECTION_MODES))
        if not c.deadline_s > 0:
            raise ConfigError('control.deadline_s','must be positive')
        if c.aux_regularization < 0:
            raise ConfigError('control.aux_regularization','must be non-negative')
        v_lo,v_hi = self.planning_bounds()
        if not v_lo < v_hi:
            raise ConfigError('control.noise_margin','voltage noise leaves no room between v_min and v_max')

        tm = self.telemetry
        for k,bus in enumerate(tm.pmu_buses):
            self._bus(bus,'telemetry.pmu_buses[{:d}]'.format(k))
        if not tm.alignment_ms > 0:
            raise ConfigError('telemetry.alignment_ms','must be positive')
        if tm.queue_size < 1:
            raise ConfigError('telemetry.queue_size','must be at least 1')
        if not 0 <= tm.port <= 65535:
            raise ConfigError('telemetry.port','not a valid UDP port')

        nodes = self.logging.estimate_nodes
        if isinstance(nodes,list):
            for k,bus in enumerate(nodes):
                self._bus(bus,'logging.estimate_nodes[{:d}]'.format(k))
        elif nodes not in ('plants','all'):
            raise ConfigError('logging.estimate_nodes',"must be 'plants', 'all' or a list of bus names")

        if self.previous_day.bootstrap_duration < 2:
            raise ConfigError('previous_day.bootstrap_duration','at least two samples are needed')
        if self.previous_day.dither < 0:
            raise ConfigError('previous_day.dither','must be non-negative')
        for key in ('load_variability','weather_variability'):
            if getattr(self.profiles,key) < 0:
                raise ConfigError('profiles.'+key,'must be non-negative')

    def planning_bounds(self):
        """
        Voltage bounds handed to the robust QP.

        With control.noise_margin the band is narrowed on both sides by z(alpha) sigma_v times the bound,
        since the QP plans from a single noisy voltage sample and the true voltage may sit that far away.
        """
        c = self.control
        if not c.noise_margin or not self.noise.enabled:
            return c.v_min,c.v_max
        m = gaussian_quantile(self.estimator.alpha)*self.noise.sigma_v
        return c.v_min*(1 + m),c.v_max*(1 - m)

    def pmu_buses(self):
        """Bus indices streamed over telemetry (every non-slack bus when none are listed)."""
        if self.telemetry.pmu_buses:
            return [self.network.bus_index(b) for b in self.telemetry.pmu_buses]
        return [int(k) for k in self.network.nonslack]

    def estimate_nodes(self):
        """Non-slack positions of the nodes whose estimates and oracle values are logged."""
        nodes = self.logging.estimate_nodes
        model = self.network
        if nodes == 'all':
            return list(range(model.n_b))
        if nodes == 'plants':
            return sorted({plant.config.column for plant in self.plants})
        return [model.nonslack_position(bus) for bus in nodes]

    # helpers

    def _path(self,base_dir,value,where):
        if not isinstance(value,str):
            raise ConfigError(where,'must be a file path')
        path = Path(value)
        path = path if path.is_absolute() else base_dir/path
        if not path.exists():
            raise ConfigError(where,'file not found: {:s}'.format(str(path)))
        return path

    def _bus(self,bus,where):
        try:
            k = self.network.bus_index(bus)
        except KeyError:
            raise ConfigError(where,'unknown bus {!r}'.format(bus))
        if not 0 <= k < self.network.n_bus:
            raise ConfigError(where,'bus index out of range')
        return k

    def _profiles(self,raw,base_dir):
        sub = raw.get('profiles')
        if sub is None:
            raise ConfigError('profiles','missing')
        _check_keys(sub,_fields(ProfileSet),'profiles')
        files = {}
        for key in ('loads','slack','weather'):
            if key not in sub:
                raise ConfigError('profiles.'+key,'missing')
            files[key] = self._path(base_dir,sub[key],'profiles.'+key)
        return ProfileSet(load_variability=float(sub.get('load_variability',0.0)),
                          weather_variability=float(sub.get('weather_variability',0.0)),**files)

    def _previous_day(self,raw,base_dir):
        sub = raw.get('previous_day',{})
        _check_keys(sub,_fields(PreviousDay),'previous_day')
        files = {}
        for key in ('loads','slack','weather'):
            files[key] = self._path(base_dir,sub[key],'previous_day.'+key) if key in sub else getattr(self.profiles,key)
        try:
            start = float(iso2sod([sub['bootstrap_start']])[0]) if 'bootstrap_start' in sub else 11*3600.0
        except (ValueError,AttributeError):
            raise ConfigError('previous_day.bootstrap_start',"expected 'hh:mm:ss'")
        return PreviousDay(bootstrap_start=start,bootstrap_duration=float(sub.get('bootstrap_duration',3600.0)),
                           dither=float(sub.get('dither',0.0)),**files)

    def _plants(self,raw):
        plants_raw = raw.get('plants')
        if not isinstance(plants_raw,list) or not plants_raw:
            raise ConfigError('plants','at least one plant is required')
        plants,names = [],set()
        allowed = ['name','bus','s_max','pf_min','reactive_capable','pv_model']
        for k,p in enumerate(plants_raw):
            where = 'plants[{:d}]'.format(k)
            _check_keys(p,allowed,where)
            for key in ('name','bus','s_max','pv_model'):
                if key not in p:
                    raise ConfigError(where+'.'+key,'missing')
            if p['name'] in names:
                raise ConfigError(where+'.name','duplicated plant name {!r}'.format(p['name']))
            names.add(p['name'])
            bus = self._bus(p['bus'],where+'.bus')
            if bus == self.network.slack:
                raise ConfigError(where+'.bus','a plant cannot sit on the slack bus')
            try:
                cfg = PvPlantConfig(name=str(p['name']),bus=p['bus'],s_max=float(p['s_max']),
                                    pf_min=float(p.get('pf_min',1.0)),
                                    reactive_capable=bool(p.get('reactive_capable',True))).resolve(self.network)
            except ValueError as err:
                raise ConfigError(where,str(err))
            pv_raw = p['pv_model']
            _check_keys(pv_raw,['panel_area','efficiency','temp_coeff','derate','cell_temp_coeff'],where+'.pv_model')
            try:
                pv = PvModel(s_max=cfg.s_max,**{key:float(val) for key,val in pv_raw.items()})
            except (TypeError,ValueError) as err:
                raise ConfigError(where+'.pv_model',str(err))
            plants.append(PlantSpec(config=cfg,pv_model=pv))
        columns = [plant.config.column for plant in plants]
        if len(set(columns)) != len(columns):
            raise ConfigError('plants','at most one plant per bus')
        return plants
