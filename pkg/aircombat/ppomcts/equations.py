'''
Symbolic equations of motion and guidance

The right hand sides are written once in sympy and turned into plain scalar
functions with lambdify(), so that the printed symbolic form used for
diagnostics is exactly what the integrators evaluate.
'''

import logging
from collections import namedtuple
import sympy as sp
from .utils import dynlogger as logger

EquationInfo = namedtuple('EquationInfo', ('Name','Lhs','Expr'))

# gravity, kept symbolic so that g*(nx - sin(gamma)) is not distributed
g = sp.Symbol('g', positive=True)

# aircraft state and controls
x, y, z = sp.symbols('x y z', real=True)
v = sp.Symbol('v', positive=True)
gamma, phi = sp.symbols('gamma phi', real=True)
nx, nz, mu = sp.symbols('n_x n_z mu', real=True)

AircraftEquations = (
    EquationInfo('x', sp.Symbol('xdot'), v*sp.cos(gamma)*sp.cos(phi)),
    EquationInfo('y', sp.Symbol('ydot'), v*sp.cos(gamma)*sp.sin(phi)),
    EquationInfo('z', sp.Symbol('zdot'), v*sp.sin(gamma)),
    EquationInfo('v', sp.Symbol('vdot'), g*(nx-sp.sin(gamma))),
    EquationInfo('gamma', sp.Symbol('gammadot'),
        g/v*(nz*sp.cos(mu)-sp.cos(gamma))),
    # the heading rate is read as the yaw angle phi used by the positions
    EquationInfo('phi', sp.Symbol('phidot'),
        g/(v*sp.cos(gamma))*nz*sp.sin(mu)),
)

# missile state, propulsion and guidance commands
xm, ym, zm = sp.symbols('x_m y_m z_m', real=True)
vm = sp.Symbol('v_m', positive=True)
gm, phim = sp.symbols('gamma_m phi_m', real=True)
P, G = sp.symbols('P_m G_m', positive=True)
rho, sm, cdm = sp.symbols('rho S_m C_Dm', positive=True)
nmc, nmh = sp.symbols('n_mc n_mh', real=True)

Drag = sp.Rational(1,2)*rho*vm**2*sm*cdm

MissileEquations = (
    EquationInfo('x_m', sp.Symbol('xmdot'), vm*sp.cos(gm)*sp.cos(phim)),
    EquationInfo('y_m', sp.Symbol('ymdot'), vm*sp.cos(gm)*sp.sin(phim)),
    EquationInfo('z_m', sp.Symbol('zmdot'), vm*sp.sin(gm)),
    # weight and thrust/drag handled consistently with the mass in kilograms
    EquationInfo('v_m', sp.Symbol('vmdot'), (P-Drag)*g/G - g*sp.sin(gm)),
    # rates in state order (x, y, z, v, gamma, phi). The heading is driven
    # by n_mc and the pitch by n_mh.
    EquationInfo('gamma_m', sp.Symbol('gammamdot'), (nmh-sp.cos(gm))*g/vm),
    EquationInfo('phi_m', sp.Symbol('phimdot'), nmc*g/(vm*sp.cos(gm))),
)

# relative geometry, target minus missile
rx, ry, rz = sp.symbols('r_x r_y r_z', real=True)
rdx, rdy, rdz = sp.symbols('rdot_x rdot_y rdot_z', real=True)
K = sp.Symbol('K', positive=True)
gt = sp.Symbol('gamma_t', real=True)
beta, eps = sp.symbols('beta epsilon', real=True)
betad, epsd = sp.symbols('betadot epsilondot', real=True)

_rxy2 = rx**2+ry**2
_range = sp.sqrt(_rxy2+rz**2)

GeometryEquations = (
    EquationInfo('R', sp.Symbol('R'), _range),
    EquationInfo('beta', beta, sp.atan2(ry,rx)),
    EquationInfo('epsilon', eps, sp.atan(rz/sp.sqrt(_rxy2))),
    EquationInfo('betadot', betad, (rdy*rx-rdx*ry)/_rxy2),
    EquationInfo('epsilondot', epsd,
        (_rxy2*rdz-rz*(rdx*rx+rdy*ry))/(_range**2*sp.sqrt(_rxy2))),
)

GuidanceEquations = (
    EquationInfo('n_mc', nmc,
        K*vm*sp.cos(gt)/g*(betad+sp.tan(eps)*sp.tan(eps+beta)*epsd)),
    EquationInfo('n_mh', nmh, vm*K*epsd/(g*sp.cos(eps+beta))),
)

def _lambdify(args,eqs):
    return sp.lambdify(args,[e.Expr for e in eqs],modules='math')

# Lambdified right hand sides, each returning a list in equation order
aircraftRates = _lambdify((x,y,z,v,gamma,phi,nx,nz,mu,g),AircraftEquations)
missileRates = _lambdify(
        (xm,ym,zm,vm,gm,phim,P,G,rho,sm,cdm,nmc,nmh,g),MissileEquations)
geometry = _lambdify((rx,ry,rz,rdx,rdy,rdz),GeometryEquations)
guidance = _lambdify((beta,eps,betad,epsd,vm,gt,K,g),GuidanceEquations)
dragForce = sp.lambdify((vm,rho,sm,cdm),Drag,modules='math')

def dumpEquations():
    'Printable form of every equation, one "lhs = rhs" string each'
    ret = []
    for eqs in (AircraftEquations,MissileEquations,
                GeometryEquations,GuidanceEquations):
        for e in eqs:
            ret.append('{} = {}'.format(e.Lhs,e.Expr))
    return ret

def logEquations():
    if logger.isEnabledFor(logging.DEBUG):
        for s in dumpEquations():
            logger.debug('{}',s)
