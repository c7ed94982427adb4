import json
from pathlib import Path

from ..utils.errors import NetworkValidationError

NETWORK_SCHEMA_VERSIONS = (1,)

def read_network(network_file):
    """
    Parse a network description file and read the data.

    Usage:
        data = read_network('data/cigre_lv/network.json')

    Inputs:
        network_file -> [str or Path] JSON network description. Layout (schema_version 1):
            {
              "schema_version": 1, "name": "...", "s_base": 100000.0, "v_base": 400.0,
              "buses": [{"name": "B01", "type": "slack", "base_kv": 0.4}, ...],
              "branches": [{"from": "B01", "to": "B02", "r_ohm": 0.03, "x_ohm": 0.008, "ampacity_a": 150.0}, ...]
            }
            Bus types are 'slack' or 'PQ'. Impedances are series values in ohms. The optional base_kv of
            a bus must equal v_base since the feeder has a single voltage level.

    Outputs:
        data -> [dictionary] with keys 'name', 's_base', 'v_base', 'buses' (list of dicts with 'index',
        'name', 'type') and 'branches' (list of dicts with integer 'from'/'to' bus indices,
        'r_ohm', 'x_ohm', 'ampacity_a')
    """
    network_file = Path(network_file)
    try:
        raw = json.loads(network_file.read_text())
    except FileNotFoundError:
        raise NetworkValidationError('network','file not found: {:s}'.format(str(network_file)))
    except json.JSONDecodeError as err:
        raise NetworkValidationError('network','invalid JSON in {:s}: {:s}'.format(str(network_file),str(err)))
    return parse_network(raw)

def parse_network(raw):
    """
    Turn an already decoded network description into the normalized dictionary of read_network.

    Inputs:
        raw -> [dictionary] decoded JSON content

    Outputs:
        data -> [dictionary] see read_network
    """
    version = raw.get('schema_version')
    if version not in NETWORK_SCHEMA_VERSIONS:
        raise NetworkValidationError('schema_version','unsupported network schema version {!r}'.format(version))

    data = {'name':raw.get('name','network'),'buses':[],'branches':[]}
    for key in ('s_base','v_base'):
        if key not in raw:
            raise NetworkValidationError(key,'missing')
        data[key] = float(raw[key])
        if not data[key] > 0:
            raise NetworkValidationError(key,'must be positive')

    names = {}
    for k,bus in enumerate(raw.get('buses',[])):
        field = 'buses[{:d}]'.format(k)
        if 'name' not in bus:
            raise NetworkValidationError(field+'.name','missing')
        name = str(bus['name'])
        if name in names:
            raise NetworkValidationError(field+'.name','duplicate bus name {:s}'.format(name))
        bus_type = str(bus.get('type','PQ'))
        if bus_type.lower() == 'slack':
            bus_type = 'slack'
        elif bus_type.upper() == 'PQ':
            bus_type = 'PQ'
        else:
            raise NetworkValidationError(field+'.type',"must be 'slack' or 'PQ', got {!r}".format(bus_type))
        names[name] = k
        # one voltage level, no transformers
        if 'base_kv' in bus and abs(1e3*float(bus['base_kv']) - data['v_base']) > 1e-9*data['v_base']:
            raise NetworkValidationError(field+'.base_kv','{!r} kV does not match v_base = {:g} V'.format(bus['base_kv'],data['v_base']))
        data['buses'].append({'index':k,'name':name,'type':bus_type})

    for k,branch in enumerate(raw.get('branches',[])):
        field = 'branches[{:d}]'.format(k)
        ends = []
        for end in ('from','to'):
            if branch.get(end) not in names:
                raise NetworkValidationError(field+'.'+end,'unknown bus {!r}'.format(branch.get(end)))
            ends.append(names[branch[end]])
        for key in ('r_ohm','x_ohm','ampacity_a'):
            if key not in branch:
                raise NetworkValidationError(field+'.'+key,'missing')
        data['branches'].append({'from':ends[0],'to':ends[1],'r_ohm':float(branch['r_ohm']),
                                 'x_ohm':float(branch['x_ohm']),'ampacity_a':float(branch['ampacity_a'])})
    return data
