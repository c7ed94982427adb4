import logging
from pathlib import Path

import numpy as np
import pandas as pd

from ..utils.time_utils import sod2iso

log = logging.getLogger(__name__)

RUNLOG_SCHEMA_VERSION = 1
FILES = ('seconds','control','estimates','oracle','audit','timing')
# wall-clock measurements change from run to run
NONDETERMINISTIC = ('timing',)
CONTROL_COLUMNS = ['sod','plant','p_prev','q_prev','p_sp','q_sp','mpp_forecast','status','objective',
                   'fallback','low_excitation','iterations']
COEFF_COLUMNS = ['sod','node','coeff','column']

class RunLog(object):
    """
    class RunLog

    Append-only record of a simulated day: one row per second, one row per plant and control cycle,
    the estimates and oracle coefficients of the logged nodes, the audit data of every robust QP and
    the per-cycle compute times.

    Attributes:
        date -> [str] simulated day
        bus_names -> [list of str] all buses, network order
        plant_names -> [list of str]
        counters -> [dict] telemetry counters and other run statistics
        partial -> [bool] True when the run stopped early
    """

    def __init__(self,date,bus_names,plant_names,nonslack_names=None):

        self.date = str(date)
        self.bus_names = list(bus_names)
        self.plant_names = list(plant_names)
        self.nonslack_names = list(nonslack_names) if nonslack_names is not None else self.bus_names[1:]
        self.counters = {}
        self.partial = False
        self._rows = {name:[] for name in FILES}
        self._frames = {}

    def __repr__(self):

        return 'instance of class RunLog ({:s}, {:d} seconds, {:d} control cycles)'.format(self.date,len(self),self.n_cycles)

    def __len__(self):

        if 'seconds' in self._frames: return len(self._frames['seconds'])
        return len(self._rows['seconds'])

    @property
    def n_cycles(self):
        if 'control' in self._frames:
            return int(self._frames['control']['sod'].nunique()) if len(self._frames['control']) else 0
        return len({row[0] for row in self._rows['control']})

    # recording

    def add_second(self,sod,v_true,v_meas,slack_v,p_pv,q_pv,mpp,sp_p,sp_q):
        """Record one second: true and measured voltages of every bus and the plant quantities."""
        self._rows['seconds'].append(np.r_[sod,slack_v,v_true,v_meas,np.column_stack([p_pv,q_pv,mpp,sp_p,sp_q]).ravel()])

    def add_control(self,sod,plant,p_prev,q_prev,p_sp,q_sp,mpp_forecast,status,objective,fallback,low_excitation,iterations):
        self._rows['control'].append((sod,plant,p_prev,q_prev,p_sp,q_sp,mpp_forecast,status,objective,int(fallback),int(low_excitation),iterations))

    def add_estimates(self,sod,est,nodes):
        """Record the interval estimates of the given non-slack positions (all columns, K^p and K^q)."""
        for node in nodes:
            r = est.row(node)
            name = self.nonslack_names[node]
            for coeff,hat,half in (('kp',est.kp_hat[r],est.dkp[r]),('kq',est.kq_hat[r],est.dkq[r])):
                for col,column in enumerate(self.nonslack_names):
                    self._rows['estimates'].append((sod,name,coeff,column,hat[col],half[col]))

    def add_oracle(self,sod,sens,nodes):
        """Record the model-based coefficients of the given non-slack positions."""
        for node in nodes:
            name = self.nonslack_names[node]
            for coeff,row in (('kp',sens.kp[node]),('kq',sens.kq[node])):
                for col,column in enumerate(self.nonslack_names):
                    self._rows['oracle'].append((sod,name,coeff,column,row[col]))

    def add_audit(self,sod,problem,plants):
        """Record what verify_robustness needs to re-check the setpoint of this cycle."""
        est = problem.estimates
        xi = problem.budget(len(plants))
        cols = [plant.column for plant in plants]
        for i,name in enumerate(self.nonslack_names):
            r = est.row(i)
            row = [sod,name,problem.v_prev[i],problem.v_min,problem.v_max,xi[i],problem.power_base]
            for c in cols:
                row += [est.kp_hat[r,c],est.kq_hat[r,c],est.dkp[r,c],est.dkq[r,c]]
            self._rows['audit'].append(tuple(row))

    def add_timing(self,sod,estimation_ms,control_ms,oracle_ms,total_ms):
        self._rows['timing'].append((sod,estimation_ms,control_ms,oracle_ms,total_ms))

    # tables

    def _columns(self,name):
        if name == 'seconds':
            cols = ['sod','slack_v'] + ['v_'+b for b in self.bus_names] + ['vm_'+b for b in self.bus_names]
            for p in self.plant_names:
                cols += [p+'_p',p+'_q',p+'_mpp',p+'_sp_p',p+'_sp_q']
            return cols
        if name == 'control':
            return CONTROL_COLUMNS
        if name == 'estimates':
            return COEFF_COLUMNS + ['hat','delta']
        if name == 'oracle':
            return COEFF_COLUMNS + ['value']
        if name == 'audit':
            cols = ['sod','node','v_prev','v_min','v_max','xi','power_base']
            for p in self.plant_names:
                cols += ['kp_'+p,'kq_'+p,'dkp_'+p,'dkq_'+p]
            return cols
        return ['sod','estimation_ms','control_ms','oracle_ms','total_ms']

    def table(self,name):
        """One of the run log tables as a pandas DataFrame."""
        if name not in FILES:
            raise KeyError('unknown table {!r}'.format(name))
        if name in self._frames:
            return self._frames[name]
        rows = self._rows[name]
        if name == 'seconds':
            data = np.array(rows) if rows else np.zeros((0,len(self._columns(name))))
            return pd.DataFrame(data,columns=self._columns(name))
        return pd.DataFrame(rows,columns=self._columns(name))

    @property
    def seconds(self):
        return self.table('seconds')

    @property
    def control(self):
        return self.table('control')

    @property
    def estimates(self):
        return self.table('estimates')

    @property
    def oracle(self):
        return self.table('oracle')

    @property
    def audit(self):
        return self.table('audit')

    @property
    def timing(self):
        return self.table('timing')

    def summary(self,v_max=1.04):
        """
        Run statistics.

        Outputs:
            info -> [dict] seconds, control_cycles, fallbacks, overvoltage_seconds (any bus above v_max),
            max_voltage, curtailed_energy_kwh (sum of MPP minus production), mean_cycle_ms
        """
        sec = self.seconds
        v = sec[['v_'+b for b in self.bus_names]].to_numpy() if len(sec) else np.zeros((0,len(self.bus_names)))
        curtailed = 0.0
        for p in self.plant_names:
            if len(sec):
                curtailed += float(np.sum(sec[p+'_mpp'].to_numpy() - sec[p+'_p'].to_numpy()))
        ctrl = self.control
        timing = self.timing
        return {'seconds':int(len(sec)),'control_cycles':self.n_cycles,
                'fallbacks':int(ctrl.drop_duplicates('sod')['fallback'].sum()) if len(ctrl) else 0,
                'overvoltage_seconds':int(np.sum(np.any(v > v_max,axis=1))),
                'max_voltage':float(np.max(v)) if v.size else float('nan'),
                'curtailed_energy_kwh':curtailed/3.6e6,
                'mean_cycle_ms':float(timing['total_ms'].mean()) if len(timing) else 0.0}

    # files

    def write(self,out_dir):
        """
        Write every table as CSV into out_dir. Each file starts with a '# schema_version=1' line and
        carries an iso 'time' column next to the second of day.

        Outputs:
            paths -> [dict] table name -> Path
        """
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True,exist_ok=True)
        paths = {}
        for name in FILES:
            df = self.table(name).copy()
            times = sod2iso(self.date,df['sod'].to_numpy(dtype=float)) if len(df) else []
            df.insert(0,'time',times)
            path = out_dir/'{:s}.csv'.format(name)
            with open(path,'w',newline='') as f:
                f.write('# schema_version={:d}\n'.format(RUNLOG_SCHEMA_VERSION))
                df.to_csv(f,index=False,float_format='%.12g')
            paths[name] = path
        log.info('run log written to %s',out_dir)
        return paths

    @staticmethod
    def read(out_dir):
        """
        Read a run log directory written by RunLog.write.

        Outputs:
            runlog -> [object] instance of class RunLog backed by the file contents
        """
        out_dir = Path(out_dir)
        frames = {}
        for name in FILES:
            path = out_dir/'{:s}.csv'.format(name)
            if not path.exists():
                raise FileNotFoundError('run log file not found: {:s}'.format(str(path)))
            with open(path) as f:
                head = f.readline().strip()
            if head != '# schema_version={:d}'.format(RUNLOG_SCHEMA_VERSION):
                raise ValueError('{:s}: unsupported run log schema {!r}'.format(str(path),head))
            frames[name] = pd.read_csv(path,skiprows=1)
        sec = frames['seconds']
        buses = [c[2:] for c in sec.columns if c.startswith('v_')]
        plants = [c[:-5] for c in sec.columns if c.endswith('_sp_p')]
        date = str(sec['time'].iloc[0])[:10] if len(sec) else '1970-01-01'
        names = list(dict.fromkeys(frames['audit']['node'])) if len(frames['audit']) else None
        runlog = RunLog(date,buses,plants,nonslack_names=names)
        runlog._frames = {name:df.drop(columns='time') for name,df in frames.items()}
        return runlog
