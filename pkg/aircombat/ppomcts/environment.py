'''
Two aircraft engagement world

An engagement is advanced one decision step at a time. Each decision step
runs a whole number of physics sub steps, evaluating termination after every
one of them. Rewards are sparse: +1/-1 to the winner/loser and 0 on a draw,
paid only on the step that ends the engagement.
'''

import math
from collections import namedtuple
from enum import Enum
import numpy as np
from . import dynamics
from .dynamics import AircraftState, PHYSICS_DT
from .missile import MissileParams, MissileStatus, launchMissile, \
        missileStep, missilePosition, checkParams
from .utils import envlogger as logger, wrapAngle, isFinite

class Side(Enum):
    Blue = 'blue'
    Red = 'red'

    @property
    def other(self):
        return Side.Red if self is Side.Blue else Side.Blue

class Outcome(Enum):
    Ongoing = 'Ongoing'
    BlueWin = 'BlueWin'
    RedWin = 'RedWin'
    Draw = 'Draw'

EngagementState = namedtuple('EngagementState', ('blue','red',
    'blue_missile','red_missile','blue_fired','red_fired','t','outcome','tick'))

# observations and rewards are (blue, red) pairs
StepResult = namedtuple('StepResult', ('state','observations','rewards',
    'done','outcome'))

# Bounds are (lo, hi) pairs of uniform draws
ScenarioConfig = namedtuple('ScenarioConfig', ('speed','altitude','separation'))
ScenarioConfig.__new__.__defaults__ = ((250.0,400.0),(3000.0,8000.0),
        (5000.0,15000.0))

EnvConfig = namedtuple('EnvConfig', ('physics_dt','decision_dt','max_time',
    'floor','launch_range','launch_angle','missile'))
EnvConfig.__new__.__defaults__ = (PHYSICS_DT, 0.5, 200.0, 100.0, 12000.0,
        math.pi/3, MissileParams())

OBS_DIM = 13
ACTION_DIM = 4

MAX_DISTANCE = 20000.0

# feature name -> (lo, hi) of the min-max normalization
ObservationBounds = (
    ('phi', (-math.pi, math.pi)),
    ('gamma', (-math.pi/2, math.pi/2)),
    ('v', (250.0, 400.0)),
    ('z', (0.0, 10000.0)),
    ('d', (0.0, MAX_DISTANCE)),
    ('f1', (0.0, 1.0)),
    ('aspect_azimuth', (-math.pi, math.pi)),
    ('aspect_elevation', (-math.pi/2, math.pi/2)),
    ('phi1', (-math.pi, math.pi)),
    ('gamma1', (-math.pi/2, math.pi/2)),
    ('d1', (0.0, MAX_DISTANCE)),
    ('beta', (-math.pi, math.pi)),
    ('f2', (0.0, 1.0)),
)
ObservationNames = tuple(name for name,_ in ObservationBounds)
_obsLo = np.array([b[0] for _,b in ObservationBounds])
_obsSpan = np.array([b[1]-b[0] for _,b in ObservationBounds])

TrajectoryColumns = ('t','side','x','y','z','v','gamma','phi',
        'missile_x','missile_y','missile_z','outcome')

class ScenarioError(ValueError):
    pass

def checkScenario(scenario):
    for name,bounds in zip(scenario._fields,scenario):
        lo,hi = bounds
        if not isFinite(lo,hi) or lo > hi or lo < 0:
            raise ScenarioError('invalid {} bounds [{}, {}]'.format(name,lo,hi))
    if scenario.speed[0] <= 0:
        raise ScenarioError('speed bounds must be positive')

def checkEnvConfig(config):
    steps = config.decision_dt/config.physics_dt
    if not config.physics_dt > 0 or not config.decision_dt > 0 \
            or abs(steps-round(steps)) > 1e-9:
        raise ValueError('decision step {} is not a positive multiple of the '
            'physics step {}'.format(config.decision_dt,config.physics_dt))
    checkParams(config.missile)

def aircraftOf(s,side):
    return s.blue if side is Side.Blue else s.red

def missileOf(s,side):
    return s.blue_missile if side is Side.Blue else s.red_missile

def firedOf(s,side):
    return s.blue_fired if side is Side.Blue else s.red_fired

def reset(seed,scenario=None):
    if scenario is None:
        scenario = ScenarioConfig()
    checkScenario(scenario)
    rng = np.random.default_rng(seed)
    sep = rng.uniform(*scenario.separation)
    bearing = rng.uniform(-math.pi,math.pi)
    ux,uy = math.cos(bearing),math.sin(bearing)
    planes = []
    for sign in (-1,1):
        v = rng.uniform(*scenario.speed)
        z = rng.uniform(*scenario.altitude)
        phi = wrapAngle(rng.uniform(-math.pi,math.pi))
        planes.append(AircraftState(sign*sep/2*ux, sign*sep/2*uy, z, v, 0.0, phi))
    s = EngagementState(planes[0], planes[1], None, None, False, False,
            0.0, Outcome.Ongoing, 0)
    logger.debug('reset seed {}: {}',seed,s)
    return s

def swapSides(s):
    'The same engagement with the roles of blue and red exchanged'
    def _swap(m):
        if m is None:
            return None
        return m._replace(shooter=m.shooter.other,target=m.target.other)
    outcome = {Outcome.BlueWin:Outcome.RedWin,
               Outcome.RedWin:Outcome.BlueWin}.get(s.outcome,s.outcome)
    return EngagementState(s.red, s.blue, _swap(s.red_missile),
            _swap(s.blue_missile), s.red_fired, s.blue_fired, s.t, outcome,
            s.tick)

def _relative(own,other):
    return other.x-own.x, other.y-own.y, other.z-own.z

def observe(s,side):
    own = aircraftOf(s,side)
    tgt = aircraftOf(s,side.other)
    dx,dy,dz = _relative(own,tgt)
    horiz = math.hypot(dx,dy)
    los = math.atan2(dy,dx)
    own_missile = missileOf(s,side)
    incoming = missileOf(s,side.other)
    f1 = 1.0 if own_missile is not None \
            and own_missile.status == MissileStatus.InFlight else 0.0
    if incoming is not None and incoming.status == MissileStatus.InFlight:
        f2 = 1.0
        mx,my,mz = missilePosition(incoming)
        d1 = math.sqrt((own.x-mx)**2+(own.y-my)**2+(own.z-mz)**2)
    else:
        f2 = 0.0
        d1 = MAX_DISTANCE
    raw = np.array([own.phi, own.gamma, own.v, own.z,
        math.sqrt(horiz*horiz+dz*dz), f1,
        wrapAngle(los-own.phi), math.atan2(dz,horiz)-own.gamma,
        tgt.phi, tgt.gamma, d1, los, f2])
    return np.clip((raw-_obsLo)/_obsSpan, 0.0, 1.0)

def decodeAction(raw):
    'Split a raw (nz, nx, roll, fire logit) action into controls and trigger'
    nz,nx,mu,fire = raw
    return dynamics.clampControls((nx,nz,mu)), float(fire) > 0

def bearingOffNose(s,side):
    own = aircraftOf(s,side)
    dx,dy,_ = _relative(own,aircraftOf(s,side.other))
    return wrapAngle(math.atan2(dy,dx)-own.phi)

def targetRange(s):
    dx,dy,dz = _relative(s.blue,s.red)
    return math.sqrt(dx*dx+dy*dy+dz*dz)

def canLaunch(s,side,config):
    return not firedOf(s,side) \
            and targetRange(s) < config.launch_range \
            and abs(bearingOffNose(s,side)) < config.launch_angle

def outcomeReward(outcome,side):
    if outcome == Outcome.BlueWin:
        return 1.0 if side is Side.Blue else -1.0
    if outcome == Outcome.RedWin:
        return -1.0 if side is Side.Blue else 1.0
    return 0.0

def _stepMissile(m,target,config):
    if m is None or m.status != MissileStatus.InFlight:
        return m
    return missileStep(m,config.missile,dynamics.position(target),
            dynamics.velocity(target),config.physics_dt)

def _judge(s,config):
    blue_dead = s.blue.z < config.floor or (s.red_missile is not None
            and s.red_missile.status == MissileStatus.Hit)
    red_dead = s.red.z < config.floor or (s.blue_missile is not None
            and s.blue_missile.status == MissileStatus.Hit)
    if blue_dead and red_dead:
        return Outcome.Draw
    if blue_dead:
        return Outcome.RedWin
    if red_dead:
        return Outcome.BlueWin
    if s.t >= config.max_time - 1e-9:
        return Outcome.Draw
    if s.blue_fired and s.red_fired:
        live = [m for m in (s.blue_missile,s.red_missile)
                if m is not None and m.status == MissileStatus.InFlight]
        if not live:
            return Outcome.Draw
    return Outcome.Ongoing

def _result(s,done):
    rewards = (0.0,0.0)
    if done:
        rewards = (outcomeReward(s.outcome,Side.Blue),
                   outcomeReward(s.outcome,Side.Red))
    return StepResult(s,(observe(s,Side.Blue),observe(s,Side.Red)),
            rewards,done,s.outcome)

def envStep(s,a_blue,a_red,decision_dt=None,config=None,recorder=None):
    '''
    Advance one decision step

    recorder, when given, is called with the engagement state after every
    physics sub step.
    '''
    if config is None:
        config = EnvConfig()
    if decision_dt is None:
        decision_dt = config.decision_dt
    steps = decision_dt/config.physics_dt
    if not decision_dt > 0 or abs(steps-round(steps)) > 1e-9:
        raise ValueError('decision step {} is not a positive multiple of the '
            'physics step {}'.format(decision_dt,config.physics_dt))
    if s.outcome != Outcome.Ongoing:
        return StepResult(s,(observe(s,Side.Blue),observe(s,Side.Red)),
                (0.0,0.0),True,s.outcome)

    c_blue,fire_blue = decodeAction(a_blue)
    c_red,fire_red = decodeAction(a_red)

    blue_missile,red_missile = s.blue_missile,s.red_missile
    blue_fired,red_fired = s.blue_fired,s.red_fired
    if fire_blue and canLaunch(s,Side.Blue,config):
        blue_missile = launchMissile(s.blue,Side.Blue,Side.Red)
        blue_fired = True
        logger.debug('blue launches at t={:.2f}, range {:.0f}',
                s.t,targetRange(s))
    if fire_red and canLaunch(s,Side.Red,config):
        red_missile = launchMissile(s.red,Side.Red,Side.Blue)
        red_fired = True
        logger.debug('red launches at t={:.2f}, range {:.0f}',
                s.t,targetRange(s))
    s = s._replace(blue_missile=blue_missile,red_missile=red_missile,
            blue_fired=blue_fired,red_fired=red_fired)

    for _ in range(int(round(steps))):
        blue = dynamics.rk4Step(s.blue,c_blue,config.physics_dt)
        red = dynamics.rk4Step(s.red,c_red,config.physics_dt)
        # missiles chase the target state at the start of the sub step
        blue_missile = _stepMissile(s.blue_missile,s.red,config)
        red_missile = _stepMissile(s.red_missile,s.blue,config)
        tick = s.tick+1
        s = EngagementState(blue,red,blue_missile,red_missile,
                s.blue_fired,s.red_fired,tick*config.physics_dt,
                Outcome.Ongoing,tick)
        outcome = _judge(s,config)
        if outcome != Outcome.Ongoing:
            s = s._replace(outcome=outcome)
        if recorder is not None:
            recorder(s)
        if outcome != Outcome.Ongoing:
            logger.debug('engagement ends at t={:.2f}: {}',s.t,outcome.name)
            return _result(s,True)
    return _result(s,False)

def trajectoryRows(s):
    'One row per aircraft in TrajectoryColumns order'
    rows = []
    for side in (Side.Blue,Side.Red):
        a = aircraftOf(s,side)
        m = missileOf(s,side)
        if m is None:
            mpos = (None,None,None)
        else:
            mpos = missilePosition(m)
        rows.append((s.t,side.value,a.x,a.y,a.z,a.v,a.gamma,a.phi)
                + tuple(mpos) + (s.outcome.value,))
    return rows

class EngagementModel(object):
    '''
    Environment model consumed by the tree search

    The searching side plays the given action while the opponent action is
    supplied by the caller, both advanced by one decision step.
    '''

    def __init__(self,config=None):
        self.config = config if config is not None else EnvConfig()

    def observe(self,state,side):
        return observe(state,side)

    def isTerminal(self,state):
        return state.outcome != Outcome.Ongoing

    def terminalValue(self,state,side):
        return outcomeReward(state.outcome,side)

    def step(self,state,side,action,opp_action):
        if side is Side.Blue:
            res = envStep(state,action,opp_action,config=self.config)
        else:
            res = envStep(state,opp_action,action,config=self.config)
        return res.state
