"""
Command line entry point.

    voltfield run SCENARIO [--seed N] [--out DIR] [--no-control] [--telemetry] [--start hh:mm:ss] [--duration S]
    voltfield metrics RUN_DIR [--coefficients B09:B03,B09:B09] [--start hh:mm:ss] [--end hh:mm:ss]
    voltfield verify RUN_DIR

Exit codes: 0 success, 2 usage, missing input, invalid configuration or unusable run log,
1 runtime failure or failed robustness check.
"""

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .control.ctrl_verify import audit_runlog
from .harness.harness_run import run_day
from .metrics.metrics_report import format_table,metrics_table,parse_coefficients
from .metrics.metrics_interval import NU
from .telemetry.tm_publish import TelemetryLink
from .utils.errors import ConfigError,MetricsError,PowerFlowDiverged,ProfileGap,VoltfieldError
from .utils.log_config import setup_logging
from .utils.time_utils import iso2sod
from .vfclasses.runlogclass import NONDETERMINISTIC,RunLog
from .vfclasses.scenarioclass import ScenarioConfig

log = logging.getLogger(__name__)

OUT_ENV = 'VOLTFIELD_OUT'
DEFAULT_OUT = 'voltfield_out'
MANIFEST = 'manifest.json'
EXIT_OK,EXIT_FAILURE,EXIT_USAGE = 0,1,2

def _out_root(args):
    return Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)

def _time_arg(text):
    if text is None: return None
    try:
        return float(text)
    except ValueError:
        return float(iso2sod([text])[0])

def write_manifest(run_dir,manifest):
    """Write manifest.json atomically: a temporary file renamed over the target."""
    path = Path(run_dir)/MANIFEST
    tmp = path.with_suffix('.json.tmp')
    with open(tmp,'w') as f:
        json.dump(manifest,f,indent=2,sort_keys=True)
        f.write('\n')
    os.replace(tmp,path)
    return path

def cmd_run(args):
    config = ScenarioConfig.from_file(args.scenario).with_overrides(seed=args.seed,duration_s=args.duration,
                                                                    telemetry=True if args.telemetry else None,
                                                                    start_s=_time_arg(args.start))
    control = not args.no_control
    run_dir = _out_root(args)/'{:s}_{:s}_seed{:d}_{:s}'.format(config.name,config.date,config.seed,
                                                              'control' if control else 'baseline')
    link = TelemetryLink.from_config(config).start() if config.telemetry.enabled else None

    t0 = time.perf_counter()
    status,runlog = 'ok',None
    try:
        runlog = run_day(config,control=control,telemetry=link)
    except PowerFlowDiverged as err:
        if err.runlog is None: raise
        status,runlog = 'diverged',err.runlog
        log.error('%s',err)
    finally:
        if link is not None:
            link.stop()
            if runlog is not None:
                runlog.counters.update(link.counters())
    elapsed = time.perf_counter() - t0

    paths = runlog.write(run_dir)
    manifest = {'scenario':str(config.source),'scenario_sha256':config.sha256,'seed':config.seed,
                'code_version':__version__,'date':config.date,'control':control,'status':status,
                'partial':runlog.partial,'outputs':{name:path.name for name,path in paths.items()},
                'nondeterministic':list(NONDETERMINISTIC),'summary':runlog.summary(config.control.v_max),
                'telemetry':runlog.counters,'elapsed_s':round(elapsed,3)}
    write_manifest(run_dir,manifest)
    print('run log written to {:s}'.format(str(run_dir)))
    return EXIT_OK if status == 'ok' else EXIT_FAILURE

def _default_coefficients(runlog):
    est = runlog.estimates
    if len(est) == 0: return []
    pairs = est[['node','column','coeff']].drop_duplicates()
    return [tuple(r) for r in pairs[pairs['node'] == pairs['column']].itertuples(index=False)]

def _read_runlog(run_dir):
    try:
        return RunLog.read(run_dir)
    except (FileNotFoundError,ValueError) as err:
        raise MetricsError(str(err))

def cmd_metrics(args):
    runlog = _read_runlog(args.run_dir)
    coefficients = parse_coefficients(args.coefficients) if args.coefficients else _default_coefficients(runlog)
    if not coefficients:
        raise MetricsError('{:s}: no estimates logged'.format(str(args.run_dir)))
    df = metrics_table(runlog.estimates,runlog.oracle,coefficients,alpha=args.alpha,nu=args.nu,
                       convention=args.convention,start=_time_arg(args.start),end=_time_arg(args.end))
    text = format_table(df,digits=args.digits)
    out = Path(args.output) if args.output else Path(args.run_dir)/'metrics.md'
    out.write_text(text + '\n')
    print(text)
    return EXIT_OK

def cmd_verify(args):
    runlog = _read_runlog(args.run_dir)
    df = audit_runlog(runlog,tol=args.tol)
    failed = df[~df['holds']]
    print('{:d} control cycles audited, {:d} violations'.format(len(df),len(failed)))
    if len(failed):
        print(failed.to_string(index=False))
        return EXIT_FAILURE
    return EXIT_OK

def build_parser():
    parser = argparse.ArgumentParser(prog='voltfield',description='Model-less robust voltage control simulator.')
    parser.add_argument('--version',action='version',version='%(prog)s ' + __version__)
    parser.add_argument('--log-level',default='INFO',help='logging level (default INFO)')
    sub = parser.add_subparsers(dest='command',required=True)

    run = sub.add_parser('run',help='simulate a day')
    run.add_argument('scenario',help='scenario JSON file')
    run.add_argument('--seed',type=int,default=None,help='override the scenario seed')
    run.add_argument('--out',default=None,help='output root (default ${:s} or ./{:s})'.format(OUT_ENV,DEFAULT_OUT))
    run.add_argument('--no-control',action='store_true',help='baseline run with every plant at its MPP')
    run.add_argument('--telemetry',action='store_true',help='stream measurements over the UDP loopback')
    run.add_argument('--duration',type=float,default=None,help='simulated seconds')
    run.add_argument('--start',default=None,help='first simulated instant, hh:mm:ss or second of day')
    run.set_defaults(func=cmd_run)

    met = sub.add_parser('metrics',help='estimation quality against the oracle')
    met.add_argument('run_dir',help='run log directory')
    met.add_argument('--coefficients',default=None,help='such as B09:B03,B09:B09 or B11:B11:q')
    met.add_argument('--alpha',type=float,default=0.99)
    met.add_argument('--nu',type=float,default=NU)
    met.add_argument('--convention',choices=['coverage','inverted'],default='coverage')
    met.add_argument('--start',default=None,help='hh:mm:ss or second of day')
    met.add_argument('--end',default=None,help='hh:mm:ss or second of day')
    met.add_argument('--digits',type=int,default=2)
    met.add_argument('--output',default=None,help='table file (default RUN_DIR/metrics.md)')
    met.set_defaults(func=cmd_metrics)

    ver = sub.add_parser('verify',help='re-check the robustness of every applied setpoint')
    ver.add_argument('run_dir',help='run log directory')
    ver.add_argument('--tol',type=float,default=1e-6)
    ver.set_defaults(func=cmd_verify)
    return parser

def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        setup_logging(args.log_level)
        return args.func(args)
    except (ConfigError,MetricsError,ProfileGap,ValueError) as err:
        print('error: {}'.format(err),file=sys.stderr)
        return EXIT_USAGE
    except (VoltfieldError,OSError) as err:
        print('error: {}'.format(err),file=sys.stderr)
        return EXIT_FAILURE

if __name__ == '__main__':
    sys.exit(main())
