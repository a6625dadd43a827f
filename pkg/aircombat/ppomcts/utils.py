'''
Collection of helper functions shared by the simulation, learning and harness
modules, together with the logger tree
'''

import math
import logging
import numpy as np
from .CombatLogger import CombatLogger, TRACE, MSG
rootlogger = CombatLogger('ppomcts')
logger = CombatLogger('ppomcts.utils',parent=rootlogger)
dynlogger = CombatLogger('ppomcts.dyn',parent=rootlogger)
msllogger = CombatLogger('ppomcts.msl',parent=rootlogger)
envlogger = CombatLogger('ppomcts.env',parent=rootlogger)
nnlogger = CombatLogger('ppomcts.nn',parent=rootlogger)
ppologger = CombatLogger('ppomcts.ppo',parent=rootlogger)
mctslogger = CombatLogger('ppomcts.mcts',parent=rootlogger)
playlogger = CombatLogger('ppomcts.play',parent=rootlogger)
harnesslogger = CombatLogger('ppomcts.harness',parent=rootlogger)
proxylogger = CombatLogger('ppomcts.proxy',parent=rootlogger)

# CLI verbosity count -> level of the root logger
_Verbosity = (MSG, logging.INFO, logging.DEBUG, TRACE)

def setupLogging(verbosity=0,stream=None):
    level = _Verbosity[max(0,min(verbosity,len(_Verbosity)-1))]
    root = logging.getLogger(rootlogger.name)
    root.setLevel(level)
    if not root.handlers:
        handler = logging.StreamHandler(stream)
        handler.setFormatter(logging.Formatter(
            '%(levelname)s %(name)s: %(message)s'))
        root.addHandler(handler)
    return level

def wrapAngle(a):
    'wrap to (-pi, pi]'
    a = math.fmod(a+math.pi, 2*math.pi)
    if a <= 0:
        a += 2*math.pi
    return a-math.pi

def clamp(v,lo,hi):
    return lo if v<lo else (hi if v>hi else v)

def isFinite(*values):
    for v in values:
        if not math.isfinite(v):
            return False
    return True

def vecNorm(v):
    return math.sqrt(v[0]*v[0]+v[1]*v[1]+v[2]*v[2])

def makeRng(*keys):
    '''
    Deterministic generator for a tuple of non negative integer keys, e.g.
    (master seed, iteration, purpose). Equal keys give equal streams.
    '''
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))

def drawSeed(rng):
    return int(rng.integers(0, 2**31-1))
