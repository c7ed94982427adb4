from dataclasses import dataclass

import numpy as np
import networkx as nx

from ..grid.grid_read import read_network,parse_network
from ..utils.errors import NetworkValidationError

@dataclass(frozen=True)
class BusSpec:
    index: int
    name: str
    type: str

@dataclass(frozen=True)
class BranchSpec:
    from_bus: int
    to_bus: int
    r_ohm: float
    x_ohm: float
    ampacity_a: float

class NetworkModel(object):
    """
    class NetworkModel

    Single-phase equivalent of a distribution feeder: buses, series branches, one slack bus and the
    per-unit bases. Powers handed to the grid functions are per-unit of s_base with generation positive.

    Attributes:
        name -> [str] network name
        buses -> [list of BusSpec] buses in file order
        branches -> [list of BranchSpec] series branches
        s_base -> [float] power base in VA
        v_base -> [float] voltage base in V
        slack -> [int] index of the slack bus
        nonslack -> [int array] indices of the N_b non-slack buses; sensitivity matrices use this order
    """

    def __init__(self,data):

        self.name = data['name']
        self.s_base = data['s_base']
        self.v_base = data['v_base']
        self.buses = [BusSpec(b['index'],b['name'],b['type']) for b in data['buses']]
        self.branches = [BranchSpec(br['from'],br['to'],br['r_ohm'],br['x_ohm'],br['ampacity_a']) for br in data['branches']]
        self.validate()

        self.slack = [bus.index for bus in self.buses if bus.type == 'slack'][0]
        self.nonslack = np.array([bus.index for bus in self.buses if bus.type != 'slack'],dtype=int)
        self._names = {bus.name:bus.index for bus in self.buses}
        self._ybus = self._build_ybus()

    def __repr__(self):

        return 'instance of class NetworkModel ({:s}: {:d} buses, {:d} branches)'.format(self.name,self.n_bus,len(self.branches))

    @staticmethod
    def from_file(network_file):
        """
        Parse a network description file and build the model.

        Usage:
            model = NetworkModel.from_file('voltfield/data/cigre_lv/network.json')

        Inputs:
            network_file -> [str or Path] JSON network description, see grid_read.read_network

        Outputs:
            model -> [object] instance of class NetworkModel
        """
        return NetworkModel(read_network(network_file))

    @staticmethod
    def from_dict(raw):
        """
        Build the model from an already decoded network description (same layout as the file).

        Outputs:
            model -> [object] instance of class NetworkModel
        """
        return NetworkModel(parse_network(raw))

    def validate(self):
        """
        Check the structural invariants: exactly one slack bus, a connected graph, impedances of
        strictly positive magnitude and positive ampacities. Raises NetworkValidationError.
        """
        slacks = [bus for bus in self.buses if bus.type == 'slack']
        if len(slacks) != 1:
            raise NetworkValidationError('buses','exactly one slack bus required, found {:d}'.format(len(slacks)))
        if len(self.buses) < 2:
            raise NetworkValidationError('buses','at least one non-slack bus required')
        for k,br in enumerate(self.branches):
            field = 'branches[{:d}]'.format(k)
            if br.from_bus == br.to_bus:
                raise NetworkValidationError(field,'branch connects a bus to itself')
            if br.r_ohm < 0 or br.x_ohm < 0 or np.hypot(br.r_ohm,br.x_ohm) <= 0:
                raise NetworkValidationError(field,'impedance must have non-negative parts and a positive magnitude')
            if not br.ampacity_a > 0:
                raise NetworkValidationError(field+'.ampacity_a','must be positive')
        if not nx.is_connected(self.graph):
            raise NetworkValidationError('branches','network graph is not connected')

    @property
    def graph(self):
        g = nx.Graph()
        g.add_nodes_from(bus.index for bus in self.buses)
        g.add_edges_from((br.from_bus,br.to_bus) for br in self.branches)
        return g

    @property
    def n_bus(self):
        return len(self.buses)

    @property
    def n_b(self):
        """Number of non-slack buses."""
        return len(self.nonslack)

    @property
    def names(self):
        return [bus.name for bus in self.buses]

    @property
    def nonslack_names(self):
        return [self.buses[k].name for k in self.nonslack]

    @property
    def z_base(self):
        return self.v_base**2/self.s_base

    @property
    def i_base(self):
        return self.s_base/self.v_base

    @property
    def is_radial(self):
        return nx.is_tree(self.graph)

    def bus_index(self,name):
        """Index of a bus given its name (an integer index is returned unchanged)."""
        if isinstance(name,(int,np.integer)): return int(name)
        try:
            return self._names[name]
        except KeyError:
            raise KeyError('unknown bus {!r}'.format(name))

    def nonslack_position(self,name):
        """Position of a bus inside the non-slack ordering (row/column of the sensitivity matrices)."""
        k = self.bus_index(name)
        pos = np.flatnonzero(self.nonslack == k)
        if pos.size == 0:
            raise ValueError('bus {!r} is the slack bus'.format(name))
        return int(pos[0])

    def path_to_slack(self,name):
        """Bus indices on the path from a bus to the slack bus (both ends included)."""
        return nx.shortest_path(self.graph,self.bus_index(name),self.slack)

    def to_pu(self,power):
        """Convert W/var into per-unit of s_base."""
        return np.asarray(power,dtype=float)/self.s_base

    def from_pu(self,power_pu):
        """Convert per-unit powers back into W/var."""
        return np.asarray(power_pu,dtype=float)*self.s_base

    def ybus(self):
        """Bus admittance matrix in per-unit (dense, complex). A copy is returned."""
        return self._ybus.copy()

    def _build_ybus(self):
        n = self.n_bus
        ybus = np.zeros((n,n),dtype=complex)
        for br in self.branches:
            y = 1/(complex(br.r_ohm,br.x_ohm)/self.z_base)
            f,t = br.from_bus,br.to_bus
            ybus[f,f] += y
            ybus[t,t] += y
            ybus[f,t] -= y
            ybus[t,f] -= y
        return ybus
