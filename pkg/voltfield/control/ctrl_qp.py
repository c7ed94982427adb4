import logging
from dataclasses import dataclass,field,replace
from typing import Optional

import numpy as np

from ..utils.errors import MissingEstimate,InconsistentDimensions

log = logging.getLogger(__name__)

POLYGON_SEGMENTS = 16
AUX_REGULARIZATION = 1e-6
PROTECTION_MODES = ('separate','printed','joint')

@dataclass(frozen=True)
class PvPlantConfig:
    """
    Controllable PV plant.

    Attributes:
        name -> [str] plant name
        bus -> [str or int] bus the plant is connected to
        s_max -> [float] converter rating in VA
        pf_min -> [float] minimum power factor in (0,1]
        reactive_capable -> [bool] False pins q to zero
        column -> [int] non-slack position of the bus, filled in by resolve()
    """
    name: str
    bus: object
    s_max: float
    pf_min: float = 1.0
    reactive_capable: bool = True
    column: Optional[int] = None

    def __post_init__(self):
        if not self.s_max > 0:
            raise ValueError('plant {:s}: s_max must be positive'.format(self.name))
        if not 0 < self.pf_min <= 1:
            raise ValueError('plant {:s}: pf_min must lie in (0,1]'.format(self.name))

    @property
    def zeta(self):
        """Slope of the power factor cone, |q| <= zeta p."""
        return np.sqrt((1 - self.pf_min**2)/self.pf_min**2)

    def resolve(self,model):
        """Copy of the plant with its non-slack column looked up in a NetworkModel."""
        return replace(self,column=model.nonslack_position(self.bus))

@dataclass(frozen=True)
class RobustControlProblem:
    """
    Inputs of one robust control cycle. Powers are in W/var; voltages and coefficients are per-unit,
    the coefficients being pu-volt per pu-power of power_base (the network s_base).

    Attributes:
        v_prev -> [float array] N_b measured non-slack voltage magnitudes at the previous step
        p_prev,q_prev -> [float array] last measured injection of every plant (W, var)
        estimates -> [SensitivityEstimate] N_b x N_b interval estimates, rows = all non-slack nodes
        mpp -> [float array] forecast maximum power potential of every plant (W)
        v_min,v_max -> [float] voltage bounds (pu)
        xi -> [float or float array] budget of uncertainty, scalar or one per node, within [0,n_pv]
        power_base -> [float] VA base the coefficients refer to
    """
    v_prev: np.ndarray
    p_prev: np.ndarray
    q_prev: np.ndarray
    estimates: object
    mpp: np.ndarray
    v_min: float = 0.96
    v_max: float = 1.04
    xi: object = None
    power_base: float = 1e5
    timestamp: Optional[float] = None

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise ValueError('v_min must be below v_max')
        if not self.power_base > 0:
            raise ValueError('power_base must be positive')

    @property
    def n_b(self):
        return np.asarray(self.v_prev).size

    def budget(self,n_pv):
        """Per-node budget vector (full budget n_pv when xi is None)."""
        xi = np.full(self.n_b,float(n_pv)) if self.xi is None else np.broadcast_to(np.asarray(self.xi,dtype=float),(self.n_b,)).copy()
        if np.any(xi < 0) or np.any(xi > n_pv + 1e-12):
            raise ValueError('budget of uncertainty must lie in [0,{:d}]'.format(n_pv))
        return xi

@dataclass
class QuadraticProgram:
    """
    Convex QP in the form

        minimize    1/2 x^T Q x + c^T x + const
        subject to  G x <= h,  A x = b

    layout maps variable group names to slices of x; scale maps them to the factor turning the
    solver units into physical units.
    """
    Q: np.ndarray
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    const: float = 0.0
    layout: dict = field(default_factory=dict)
    scale: dict = field(default_factory=dict)
    plant_names: list = field(default_factory=list)
    row_labels: list = field(default_factory=list)

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q,dtype=float))
        n = self.Q.shape[0]
        self.c = np.asarray(self.c,dtype=float).ravel()
        self.G = np.asarray(self.G,dtype=float).reshape(-1,n)
        self.h = np.asarray(self.h,dtype=float).ravel()
        self.A = np.zeros((0,n)) if self.A is None else np.asarray(self.A,dtype=float).reshape(-1,n)
        self.b = np.zeros(0) if self.b is None else np.asarray(self.b,dtype=float).ravel()
        if self.Q.shape != (n,n) or self.c.size != n or self.G.shape[0] != self.h.size or self.A.shape[0] != self.b.size:
            raise InconsistentDimensions('QP matrices do not agree on the number of variables or constraints')

    @property
    def n(self):
        return self.c.size

    def objective(self,x):
        return 0.5*x @ self.Q @ x + self.c @ x + self.const

def capability_polygon(s_max,segments=POLYGON_SEGMENTS):
    """
    Linear cuts of the regular polygon inscribed in the capability circle p^2 + q^2 <= s_max^2.

    Usage:
        normals,rhs = capability_polygon(15e3)

    Outputs:
        normals -> [2d float array] segments x 2 outward unit normals (p,q components)
        rhs -> [float array] (p,q) is inside the polygon when normals @ (p,q) <= rhs

    Note:
        Vertices sit on the circle at angles 2 pi k/segments, so (s_max,0) is a vertex and the
        polygon never leaves the circle.
    """
    if segments < 3:
        raise ValueError('at least 3 polygon segments are needed')
    theta = (2*np.arange(segments) + 1)*np.pi/segments
    normals = np.column_stack([np.cos(theta),np.sin(theta)])
    rhs = np.full(segments,s_max*np.cos(np.pi/segments))
    return normals,rhs

def _check_problem(problem,plants):
    est = problem.estimates
    if est is None:
        raise MissingEstimate('no sensitivity estimates available')
    n_b = problem.n_b
    for name in ('kp_hat','kq_hat','dkp','dkq'):
        mat = getattr(est,name,None)
        if mat is None:
            raise MissingEstimate('estimate has no {:s}'.format(name))
        if mat.shape != (n_b,n_b):
            raise MissingEstimate('{:s} has shape {!r}, estimates for all {:d} non-slack buses are needed'.format(name,mat.shape,n_b))
    n_pv = len(plants)
    if n_pv == 0:
        raise InconsistentDimensions('at least one controllable plant is needed')
    for name in ('p_prev','q_prev','mpp'):
        if np.asarray(getattr(problem,name)).size != n_pv:
            raise InconsistentDimensions('{:s} has {:d} entries for {:d} plants'.format(name,np.asarray(getattr(problem,name)).size,n_pv))
    for plant in plants:
        if plant.column is None or not 0 <= plant.column < n_b:
            raise InconsistentDimensions('plant {:s} has no valid non-slack column; call resolve(model)'.format(plant.name))

def build_robust_qp(problem,plants,segments=POLYGON_SEGMENTS,reactive_protection='separate',aux_regularization=AUX_REGULARIZATION):
    """
    Build the robust curtailment QP of one control cycle.

    Usage:
        qp = build_robust_qp(problem,plants)
        qp = build_robust_qp(problem,plants,reactive_protection='joint')

    Inputs:
        problem -> [RobustControlProblem] measurements, estimates, forecasts and bounds
        plants -> [list of PvPlantConfig] resolved plants, same order as problem.mpp

    Parameters:
        segments -> [int, default=16] sides of the polygon approximating the capability circle
        reactive_protection -> [str, default='separate'] how the reactive uncertainty is protected:
            'separate': z_i + g_ij >= dK^p_ij y^p_j and z_i + g_ij >= dK^q_ij y^q_j
            'printed':  as 'separate' but the reactive row uses y^p_j
            'joint':    z_i + g_ij >= dK^p_ij y^p_j + dK^q_ij y^q_j
        aux_regularization -> [float, default=1e-6] small quadratic weight on y, z and g so the
        problem is strictly convex

    Outputs:
        qp -> [QuadraticProgram] variables p, q, yp, yq (per plant), z (per node), g (node x plant),
        all in per-unit of problem.power_base

    Note:
        (1) Objective: sum_j (p_j - mpp_j)^2 + q_j^2.
        (2) Voltage rows, for every non-slack node i:
                v_i + K^p_i dp + K^q_i dq + xi_i z_i + sum_j g_ij <= v_max
                v_i + K^p_i dp + K^q_i dq - xi_i z_i - sum_j g_ij >= v_min
            with dp_j = p_j - p_prev_j and dq_j = q_j - q_prev_j over the plant columns; the other
            injections follow persistence, so their deltas are zero.
        (3) 0 <= p_j <= mpp_j, the inscribed capability polygon, |q_j| <= zeta_j p_j, and q_j = 0
        for plants that are not reactive capable.
    """
    if reactive_protection not in PROTECTION_MODES:
        raise ValueError('reactive_protection must be one of {!r}'.format(PROTECTION_MODES))
    _check_problem(problem,plants)
    est = problem.estimates
    base = problem.power_base
    n_b,n_pv = problem.n_b,len(plants)
    cols = np.array([plant.column for plant in plants])
    xi = problem.budget(n_pv)

    mpp = np.clip(np.asarray(problem.mpp,dtype=float),0,None)/base
    p_prev = np.asarray(problem.p_prev,dtype=float)/base
    q_prev = np.asarray(problem.q_prev,dtype=float)/base
    v_prev = np.asarray(problem.v_prev,dtype=float)
    kp,kq = est.kp_hat[:,cols],est.kq_hat[:,cols]
    dkp,dkq = est.dkp[:,cols],est.dkq[:,cols]

    sizes = [('p',n_pv),('q',n_pv),('yp',n_pv),('yq',n_pv),('z',n_b),('g',n_b*n_pv)]
    layout,start = {},0
    for name,size in sizes:
        layout[name] = slice(start,start+size)
        start += size
    n = start
    P,Qv,YP,YQ,Z = (np.arange(n)[layout[k]] for k in ('p','q','yp','yq','z'))
    Gi = np.arange(n)[layout['g']].reshape(n_b,n_pv)

    Q = np.zeros((n,n))
    c = np.zeros(n)
    Q[P,P] = Q[Qv,Qv] = 2.0
    c[P] = -2*mpp
    aux = np.r_[YP,YQ,Z,Gi.ravel()]
    Q[aux,aux] = 2*aux_regularization
    const = float(mpp @ mpp)

    rows,rhs,labels = [],[],[]
    def add(coeffs,bound,label):
        row = np.zeros(n)
        for idx,val in coeffs:
            row[idx] += val
        rows.append(row)
        rhs.append(bound)
        labels.append(label)

    eq_rows,eq_rhs = [],[]
    for j,plant in enumerate(plants):
        s = plant.s_max/base
        add([(P[j],-1.0)],0.0,'{:s}.p_min'.format(plant.name))
        add([(P[j],1.0)],mpp[j],'{:s}.mpp'.format(plant.name))
        normals,cut = capability_polygon(s,segments)
        for k in range(segments):
            add([(P[j],normals[k,0]),(Qv[j],normals[k,1])],cut[k],'{:s}.capability[{:d}]'.format(plant.name,k))
        if plant.reactive_capable:
            add([(Qv[j],1.0),(P[j],-plant.zeta)],0.0,'{:s}.pf_upper'.format(plant.name))
            add([(Qv[j],-1.0),(P[j],-plant.zeta)],0.0,'{:s}.pf_lower'.format(plant.name))
        else:
            row = np.zeros(n)
            row[Qv[j]] = 1.0
            eq_rows.append(row)
            eq_rhs.append(0.0)
        add([(P[j],1.0),(YP[j],-1.0)],p_prev[j],'{:s}.dp_upper'.format(plant.name))
        add([(P[j],-1.0),(YP[j],-1.0)],-p_prev[j],'{:s}.dp_lower'.format(plant.name))
        add([(Qv[j],1.0),(YQ[j],-1.0)],q_prev[j],'{:s}.dq_upper'.format(plant.name))
        add([(Qv[j],-1.0),(YQ[j],-1.0)],-q_prev[j],'{:s}.dq_lower'.format(plant.name))

    # nominal voltage change is K dp + K dq; the constant part moves to the bound
    offset = kp @ p_prev + kq @ q_prev
    for i in range(n_b):
        protect = [(Z[i],xi[i])] + [(Gi[i,j],1.0) for j in range(n_pv)]
        nominal = [(P[j],kp[i,j]) for j in range(n_pv)] + [(Qv[j],kq[i,j]) for j in range(n_pv)]
        add(nominal + protect,problem.v_max - v_prev[i] + offset[i],'v_max[{:d}]'.format(i))
        add([(k,-v) for k,v in nominal] + protect,v_prev[i] - problem.v_min - offset[i],'v_min[{:d}]'.format(i))
        for j in range(n_pv):
            if reactive_protection == 'joint':
                add([(YP[j],dkp[i,j]),(YQ[j],dkq[i,j]),(Z[i],-1.0),(Gi[i,j],-1.0)],0.0,'protect[{:d},{:d}]'.format(i,j))
                continue
            add([(YP[j],dkp[i,j]),(Z[i],-1.0),(Gi[i,j],-1.0)],0.0,'protect_p[{:d},{:d}]'.format(i,j))
            y_react = YP[j] if reactive_protection == 'printed' else YQ[j]
            add([(y_react,dkq[i,j]),(Z[i],-1.0),(Gi[i,j],-1.0)],0.0,'protect_q[{:d},{:d}]'.format(i,j))

    for idx in aux:
        add([(idx,-1.0)],0.0,'aux_nonneg')

    scale = {'p':base,'q':base,'yp':base,'yq':base,'z':1.0,'g':1.0}
    A = np.array(eq_rows) if eq_rows else None
    b = np.array(eq_rhs) if eq_rhs else None
    return QuadraticProgram(Q=Q,c=c,G=np.array(rows),h=np.array(rhs),A=A,b=b,const=const,layout=layout,
                            scale=scale,plant_names=[plant.name for plant in plants],row_labels=labels)

def nominal_problem(problem):
    """Copy of the problem with every half-width set to zero (the non-robust problem)."""
    est = problem.estimates
    zero = replace(est,dkp=np.zeros_like(est.dkp),dkq=np.zeros_like(est.dkq))
    return replace(problem,estimates=zero)
