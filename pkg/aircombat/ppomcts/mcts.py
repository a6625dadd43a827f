'''
Monte Carlo tree search over a small set of actions sampled from the policy

Every expanded node draws ``num_actions`` raw actions from the actor at its
own observation. Their priors are the softmax of the Gaussian log densities.
Selection uses PUCT, leaves are valued by the critic (clamped to the outcome
scale) or by the engagement result, and the root child with the most visits
is played.
'''

import math
from collections import namedtuple
import numpy as np
from scipy.special import softmax
from . import nn
from .nn import MlpParams
from .utils import mctslogger as logger, clamp

SearchConfig = namedtuple('SearchConfig', ('num_actions','num_simulations',
    'c_puct','max_depth','verbose'))
SearchConfig.__new__.__defaults__ = (9, 20, 1.25, 5, False)

# action: chosen raw action, value: root value estimate (mean backed up
# value), logp: log density of the chosen action under the searching policy
SearchResult = namedtuple('SearchResult', ('action','value','index','logp',
    'priors','visits'))

class SearchError(RuntimeError):
    pass

def checkSearchConfig(config):
    if config.num_actions < 1 or config.num_simulations < 1:
        raise ValueError('search needs at least one action and one simulation,'
            ' got {} and {}'.format(config.num_actions,config.num_simulations))
    if config.max_depth < 1:
        raise ValueError('max_depth must be at least 1, got {}'.format(
            config.max_depth))
    if config.c_puct < 0:
        raise ValueError('negative c_puct {}'.format(config.c_puct))

class SearchNode(object):
    '''
    Engagement snapshot with the statistics of its outgoing edges

    N, W, Q and P are arrays indexed by child. A node created at the depth
    limit is never expanded and only carries its leaf value.
    '''

    def __init__(self,state,depth=0):
        self.state = state
        self.depth = depth
        self.actions = None
        self.logps = None
        self.P = None
        self.N = None
        self.W = None
        self.Q = None
        self.children = None
        self.terminal = False
        self.value = None

    @property
    def expanded(self):
        return self.children is not None

    def setPriors(self,actions,logps):
        k = len(actions)
        self.actions = np.asarray(actions,dtype=np.float64)
        self.logps = np.asarray(logps,dtype=np.float64)
        self.P = softmax(self.logps)
        self.N = np.zeros(k,dtype=np.int64)
        self.W = np.zeros(k)
        self.Q = np.zeros(k)
        self.children = [None]*k

    def __repr__(self):
        return '<SearchNode depth={} t={:.2f} visits={}>'.format(
            self.depth,self.state.t,
            None if self.N is None else int(self.N.sum()))

def criticValue(critic,model,state,side):
    '''
    Value of a state for one side, clamped to [-1, 1]

    critic is either the critic network or a callable (state, side) -> value
    '''
    if isinstance(critic,MlpParams):
        v = float(nn.forward(critic,model.observe(state,side))[0])
    else:
        v = float(critic(state,side))
    return clamp(v,-1.0,1.0)

def meanAction(policy,model,state,side):
    'Deterministic action of a policy network, or of a callable policy'
    if isinstance(policy,MlpParams):
        return nn.forward(policy,model.observe(state,side))
    return np.asarray(policy(state,side),dtype=np.float64)

def expandNode(node,actor,critic,side,model,rng,num_actions=9):
    '''
    Expand a node and return its value

    A terminal node is not expanded, its value is the engagement result.
    '''
    if node.expanded:
        raise SearchError('node {} already expanded'.format(node))
    if model.isTerminal(node.state):
        node.terminal = True
        node.value = model.terminalValue(node.state,side)
        return node.value
    actions,logps = nn.sampleActions(actor,model.observe(node.state,side),
            rng,num_actions)
    node.setPriors(actions,logps)
    node.value = criticValue(critic,model,node.state,side)
    return node.value

def puctScores(node,c_puct):
    total = node.N.sum()
    return node.Q + c_puct*node.P*math.sqrt(total)/(1.0+node.N)

def puctSelect(node,c_puct):
    if not node.expanded:
        raise SearchError('selecting from unexpanded node {}'.format(node))
    # argmax returns the lowest index among ties
    return int(np.argmax(puctScores(node,c_puct)))

def backup(path,value):
    'Add one visit with the same value to every (node, index) edge of path'
    if not path:
        raise SearchError('empty backup path')
    for node,idx in path:
        node.N[idx] += 1
        node.W[idx] += value
        node.Q[idx] = node.W[idx]/node.N[idx]

def _simulate(root,side,actor,critic,opponent,model,config,rng):
    node = root
    path = []
    while True:
        idx = puctSelect(node,config.c_puct)
        path.append((node,idx))
        child = node.children[idx]
        if child is None:
            opp_action = meanAction(opponent,model,node.state,side.other)
            state = model.step(node.state,side,node.actions[idx],opp_action)
            child = SearchNode(state,node.depth+1)
            node.children[idx] = child
            if model.isTerminal(state):
                child.terminal = True
                child.value = model.terminalValue(state,side)
            elif child.depth >= config.max_depth:
                child.value = criticValue(critic,model,state,side)
            else:
                expandNode(child,actor,critic,side,model,rng,
                        config.num_actions)
            return path,child.value
        if not child.expanded:
            # terminal or depth limited leaf
            return path,child.value
        node = child

def runSearch(root_state,side,actor,critic,opponent,model,config,rng):
    '''
    Choose a raw action for ``side`` at ``root_state``

    The opponent plays the mean of its policy inside the tree. Returns a
    SearchResult with the most visited root child.
    '''
    checkSearchConfig(config)
    if model.isTerminal(root_state):
        raise SearchError('search from a terminal state at t={}'.format(
            root_state.t))
    root = SearchNode(root_state)
    expandNode(root,actor,critic,side,model,rng,config.num_actions)
    for _ in range(config.num_simulations):
        path,value = _simulate(root,side,actor,critic,opponent,model,config,rng)
        backup(path,value)
    index = int(np.argmax(root.N))
    total = int(root.N.sum())
    value = float(root.W.sum()/total)
    if config.verbose:
        logger.trace('search {} t={:.2f}: priors {}, visits {}, chosen {}',
                side.name,root_state.t,np.round(root.P,4).tolist(),
                root.N.tolist(),index)
    return SearchResult(root.actions[index].copy(),value,index,
            float(root.logps[index]),root.P.copy(),root.N.copy())
