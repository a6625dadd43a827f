from collections import namedtuple
from six import with_metaclass
from . import nn
from .mcts import SearchConfig, runSearch
from .environment import OBS_DIM, ACTION_DIM, observe
from .proxy import ProxyType
from .utils import playlogger as logger

# iteration is the checkpoint index, 0 for the random initial agent
Agent = namedtuple('Agent', ('actor','critic','name','iteration'))

# What a selector hands back for one decision: the raw action, its log
# density under the acting policy and the critic's value estimate
Decision = namedtuple('Decision', ('action','logp','value'))

def makeAgent(seed,hidden=256,name=None,iteration=0,log_std=0.0):
    'Random weight agent with hidden x hidden tanh layers'
    sizes = (OBS_DIM,hidden,hidden)
    actor = nn.initParams([seed,0],sizes+(ACTION_DIM,),actor=True,
            log_std=log_std)
    critic = nn.initParams([seed,1],sizes+(1,))
    return Agent(actor,critic,name or 'random-{}'.format(seed),iteration)

def criticOf(agent,state,side):
    return float(nn.forward(agent.critic,observe(state,side))[0])

class Selector(ProxyType):
    'action selection meta class'

class SelectorBase(with_metaclass(Selector, object)):
    _id = -1

    def __init__(self,search_config=None,model=None):
        self.search_config = search_config or SearchConfig()
        self.model = model
        super(SelectorBase,self).__init__()

    @classmethod
    def getName(cls):
        return cls.__name__

    def select(self,agent,opponent,state,side,rng):
        raise NotImplementedError('{} cannot select actions'.format(
            self.getName()))

class SelectorSample(SelectorBase):
    'Raw draw from the policy normal distribution'
    _id = 1

    @classmethod
    def getName(cls):
        return 'PPO'

    def select(self,agent,opponent,state,side,rng):
        obs = observe(state,side)
        action,logp = nn.sampleAndLogprob(agent.actor,obs,rng)
        return Decision(action,logp,criticOf(agent,state,side))

class SelectorMcts(SelectorBase):
    'Tree search over actions sampled from the policy'
    _id = 2

    @classmethod
    def getName(cls):
        return 'PPO-MCTS'

    def select(self,agent,opponent,state,side,rng):
        if self.model is None:
            raise RuntimeError('tree search needs an environment model')
        res = runSearch(state,side,agent.actor,agent.critic,opponent.actor,
                self.model,self.search_config,rng)
        logger.trace('{} picks child {} of {}, visits {}',agent.name,res.index,
                len(res.visits),res.visits.tolist())
        return Decision(res.action,res.logp,criticOf(agent,state,side))

class SelectorMean(SelectorBase):
    'Deterministic policy mean'
    _id = 3

    @classmethod
    def getName(cls):
        return 'Mean'

    def select(self,agent,opponent,state,side,rng):
        action = nn.forward(agent.actor,observe(state,side))
        logp = float(nn.gaussianLogProb(action,agent.actor.log_std,
            action[None,:])[0])
        return Decision(action,logp,criticOf(agent,state,side))

def makeSelector(use_mcts,search_config=None,model=None):
    return Selector.create('PPO-MCTS' if use_mcts else 'PPO',
            search_config,model)
