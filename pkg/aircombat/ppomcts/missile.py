'''
Powered missile with burn time thrust, quadratic drag and mass depletion,
steered by proportional navigation against a perfectly known target
'''

import math
from collections import namedtuple
from enum import Enum
from . import equations
from .dynamics import G, PHYSICS_DT, GAMMA_LIMIT
from .utils import msllogger as logger, wrapAngle, clamp, vecNorm

# p0: average thrust, g0: initial mass (kg), gt: fuel flow (kg/s),
# tw: burn time (s), rho: air density, sm: reference area,
# cdm: drag coefficient, k_pn: guidance gain, max_flight_time (s),
# hit_radius (m), min_speed (m/s), cmd_limit: overload command clamp
MissileParams = namedtuple('MissileParams', ('p0','g0','gt','tw','rho','sm',
    'cdm','k_pn','max_flight_time','hit_radius','min_speed','cmd_limit'))
MissileParams.__new__.__defaults__ = (2000.0, 170.0, 7.0, 12.0, 0.607, 0.0324,
    0.9, 4.0, 60.0, 30.0, 200.0, 40.0)

class MissileStatus(Enum):
    InFlight = 'InFlight'
    Hit = 'Hit'
    Expired = 'Expired'

# shooter and target are side identifiers. n_mc, n_mh hold the last guidance
# command, reused when the geometry turns singular. miss_distance is the
# running minimum missile to target separation.
MissileState = namedtuple('MissileState', ('xm','ym','zm','vm','gamma_m',
    'phi_m','t_since_launch','shooter','target','status',
    'n_mc','n_mh','miss_distance'))

# r and r_dot are target minus missile
RelativeGeometry = namedtuple('RelativeGeometry', ('r','r_dot','range',
    'beta','epsilon','beta_dot','epsilon_dot'))

class MissileConfigError(ValueError):
    pass

class GuidanceSingularityError(RuntimeError):
    pass

class ZeroRangeError(GuidanceSingularityError):
    pass

def checkParams(p):
    for name,value in zip(p._fields,p):
        if not value > 0:
            raise MissileConfigError(
                'missile parameter {} must be positive, got {}'.format(
                    name,value))
    if p.g0 - p.gt*p.tw <= 0:
        raise MissileConfigError('missile burns out all of its mass: '
            'g0={}, gt={}, tw={}'.format(p.g0,p.gt,p.tw))

def _checkTime(t):
    if t < 0:
        raise ValueError('negative time since launch {}'.format(t))

def massAt(p,t):
    _checkTime(t)
    m = p.g0 - p.gt*min(t,p.tw)
    if m <= 0:
        raise MissileConfigError(
            'non positive missile mass {} at t={}'.format(m,t))
    return m

def thrustAt(p,t):
    _checkTime(t)
    return p.p0 if t <= p.tw else 0.0

def dragOf(p,vm):
    return equations.dragForce(vm,p.rho,p.sm,p.cdm)

def relativeGeometry(missile_pos,missile_vel,target_pos,target_vel):
    r = tuple(a-b for a,b in zip(target_pos,missile_pos))
    r_dot = tuple(a-b for a,b in zip(target_vel,missile_vel))
    rng = vecNorm(r)
    if rng <= 0:
        raise ZeroRangeError('missile and target coincide')
    if r[0]*r[0]+r[1]*r[1] <= 0:
        raise GuidanceSingularityError(
            'target straight above or below the missile, r={}'.format(r))
    rng,beta,eps,beta_dot,eps_dot = equations.geometry(*(r+r_dot))
    return RelativeGeometry(r,r_dot,rng,beta,eps,beta_dot,eps_dot)

def pnCommand(geom,vm,gamma_t,k_pn=4.0,limit=40.0):
    'Proportional navigation overload commands (n_mc, n_mh)'
    if not geom.range > 0:
        raise ZeroRangeError('zero missile to target range')
    if abs(math.cos(geom.epsilon+geom.beta)) <= 1e-9:
        raise GuidanceSingularityError(
            'cos(epsilon+beta) vanishes, epsilon={}, beta={}'.format(
                geom.epsilon,geom.beta))
    n_mc,n_mh = equations.guidance(geom.beta,geom.epsilon,
            geom.beta_dot,geom.epsilon_dot,vm,gamma_t,k_pn,G)
    return clamp(n_mc,-limit,limit), clamp(n_mh,-limit,limit)

def launchMissile(shooter_state,shooter,target):
    'Rail launch: the missile inherits the shooter position and velocity'
    s = shooter_state
    return MissileState(s.x, s.y, s.z, s.v, s.gamma, s.phi, 0.0,
            shooter, target, MissileStatus.InFlight, 0.0, 0.0, math.inf)

def missilePosition(m):
    return (m.xm, m.ym, m.zm)

def missileVelocity(m):
    vh = m.vm*math.cos(m.gamma_m)
    return (vh*math.cos(m.phi_m), vh*math.sin(m.phi_m), m.vm*math.sin(m.gamma_m))

def closestApproach(r0,r1):
    'Minimum distance from the origin to the segment r0 -> r1'
    d = tuple(b-a for a,b in zip(r0,r1))
    dd = d[0]*d[0]+d[1]*d[1]+d[2]*d[2]
    if dd <= 0:
        return vecNorm(r0)
    s = -(r0[0]*d[0]+r0[1]*d[1]+r0[2]*d[2])/dd
    s = clamp(s,0.0,1.0)
    return vecNorm(tuple(a+s*b for a,b in zip(r0,d)))

def _rates(state,t,p,n_mc,n_mh):
    xm,ym,zm,vm,gm,phim = state
    return equations.missileRates(xm,ym,zm,vm,gm,phim,
            thrustAt(p,t),massAt(p,t),p.rho,p.sm,p.cdm,n_mc,n_mh,G)

def _flightPathAngle(vel):
    return math.atan2(vel[2], math.hypot(vel[0],vel[1]))

def missileStep(m,p,target_pos,target_vel,dt=PHYSICS_DT):
    if m.status != MissileStatus.InFlight:
        raise ValueError('stepping a missile in state {}'.format(m.status.name))
    pos = missilePosition(m)
    try:
        geom = relativeGeometry(pos,missileVelocity(m),target_pos,target_vel)
        n_mc,n_mh = pnCommand(geom,m.vm,_flightPathAngle(target_vel),
                p.k_pn,p.cmd_limit)
    except GuidanceSingularityError as e:
        logger.debug('hold previous command ({}, {}): {}',m.n_mc,m.n_mh,e)
        n_mc,n_mh = m.n_mc,m.n_mh

    t = m.t_since_launch
    s0 = (m.xm,m.ym,m.zm,m.vm,m.gamma_m,m.phi_m)
    k1 = _rates(s0,t,p,n_mc,n_mh)
    k2 = _rates([a+dt/2*b for a,b in zip(s0,k1)],t+dt/2,p,n_mc,n_mh)
    k3 = _rates([a+dt/2*b for a,b in zip(s0,k2)],t+dt/2,p,n_mc,n_mh)
    k4 = _rates([a+dt*b for a,b in zip(s0,k3)],t+dt,p,n_mc,n_mh)
    xm,ym,zm,vm,gm,phim = [a + dt/6*(b1 + 2*b2 + 2*b3 + b4)
            for a,b1,b2,b3,b4 in zip(s0,k1,k2,k3,k4)]
    gm = clamp(gm,-GAMMA_LIMIT,GAMMA_LIMIT)
    phim = wrapAngle(phim)
    t += dt

    # closest approach over the step with the target moving straight
    r0 = tuple(a-b for a,b in zip(target_pos,pos))
    r1 = tuple(a+dt*va-b for a,va,b in zip(target_pos,target_vel,(xm,ym,zm)))
    miss = min(m.miss_distance,closestApproach(r0,r1))

    status = MissileStatus.InFlight
    if miss < p.hit_radius:
        status = MissileStatus.Hit
        logger.debug('{} missile hit {} at t={:.2f}, miss distance {:.2f}',
                m.shooter,m.target,t,miss)
    elif t > p.max_flight_time or vm < p.min_speed:
        status = MissileStatus.Expired
        logger.debug('{} missile expired at t={:.2f}, speed {:.1f}',
                m.shooter,t,vm)
    return MissileState(xm,ym,zm,vm,gm,phim,t,m.shooter,m.target,status,
            n_mc,n_mh,miss)
