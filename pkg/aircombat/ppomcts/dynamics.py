'''
Point mass three degree of freedom aircraft model

The state is integrated with a fixed step classic Runge-Kutta scheme while the
control input is held constant over the step.
'''

import math
from collections import namedtuple
from . import equations
from .utils import dynlogger as logger, wrapAngle, clamp, isFinite

G = 9.8
PHYSICS_DT = 0.02
SPEED_FLOOR = 100.0
GAMMA_LIMIT = math.pi/2 - 1e-6

NX_LIMITS = (-2.0, 2.0)
NZ_LIMITS = (0.0, 8.0)
MU_LIMITS = (-math.pi, math.pi)

# x, y, z: position in meters, z is altitude (up positive)
# v: speed in meters/second
# gamma: flight path (pitch) angle in radians
# phi: heading (yaw) angle in radians, wrapped to (-pi, pi]
AircraftState = namedtuple('AircraftState', ('x','y','z','v','gamma','phi'))

# nx: tangential overload, nz: normal overload, mu: roll angle in radians
ControlInput = namedtuple('ControlInput', ('nx','nz','mu'))

class DegenerateStateError(RuntimeError):
    pass

def aircraftDerivatives(s,c):
    'Rates of (x, y, z, v, gamma, phi) in per second units'
    if abs(math.cos(s.gamma)) < 1e-9 or s.v < 1e-6:
        raise DegenerateStateError(
            'degenerate aircraft state v={}, gamma={}'.format(s.v,s.gamma))
    return AircraftState(*equations.aircraftRates(
        s.x,s.y,s.z,s.v,s.gamma,s.phi,c.nx,c.nz,c.mu,G))

def clampControls(raw):
    nx,nz,mu = raw
    if not isFinite(nx,nz,mu):
        raise ValueError('non finite control input {}'.format(tuple(raw)))
    return ControlInput(clamp(float(nx),*NX_LIMITS),
                        clamp(float(nz),*NZ_LIMITS),
                        clamp(float(mu),*MU_LIMITS))

def enforceInvariants(s):
    return AircraftState(s.x, s.y, s.z,
                         max(s.v, SPEED_FLOOR),
                         clamp(s.gamma, -GAMMA_LIMIT, GAMMA_LIMIT),
                         wrapAngle(s.phi))

def _offset(s,k,h):
    return AircraftState(*[a+h*b for a,b in zip(s,k)])

def rk4Step(s,c,dt=PHYSICS_DT):
    if not dt > 0:
        raise ValueError('integration step must be positive, got {}'.format(dt))
    k1 = aircraftDerivatives(s,c)
    k2 = aircraftDerivatives(_offset(s,k1,dt/2),c)
    k3 = aircraftDerivatives(_offset(s,k2,dt/2),c)
    k4 = aircraftDerivatives(_offset(s,k3,dt),c)
    return enforceInvariants(AircraftState(*[
        a + dt/6*(b1 + 2*b2 + 2*b3 + b4)
        for a,b1,b2,b3,b4 in zip(s,k1,k2,k3,k4)]))

def horizontalSpeed(s):
    return s.v*math.cos(s.gamma)

def velocity(s):
    'Cartesian velocity vector'
    vh = s.v*math.cos(s.gamma)
    return (vh*math.cos(s.phi), vh*math.sin(s.phi), s.v*math.sin(s.gamma))

def position(s):
    return (s.x, s.y, s.z)

def trimControls(s):
    'Controls that hold the current flight path angle and speed'
    return ControlInput(math.sin(s.gamma), math.cos(s.gamma), 0.0)

def integrate(s,c,duration,dt=PHYSICS_DT):
    'Integrate for a whole number of steps with constant controls'
    steps = int(round(duration/dt))
    for _ in range(steps):
        s = rk4Step(s,c,dt)
    logger.trace('integrated {} steps to {}',steps,s)
    return s

def halvingRatio(s,c,dt):
    '''
    Error of one step of dt over the error of two steps of dt/2, both measured
    against 16 steps of dt/16. Close to 16 for a fourth order scheme when dt
    is large enough for truncation error to dominate roundoff.
    '''
    ref = integrate(s,c,dt,dt/16)
    one = rk4Step(s,c,dt)
    two = rk4Step(rk4Step(s,c,dt/2),c,dt/2)
    e1 = max(abs(a-b) for a,b in zip(one,ref))
    e2 = max(abs(a-b) for a,b in zip(two,ref))
    return e1/max(e2,1e-300)
