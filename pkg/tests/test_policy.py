import pytest
import numpy as np
from aircombat.ppomcts import nn, policy
from aircombat.ppomcts.environment import EngagementModel, Side, reset, observe
from aircombat.ppomcts.mcts import SearchConfig
from aircombat.ppomcts.policy import Selector

@pytest.fixture(scope='module')
def agents():
    return policy.makeAgent(3,hidden=16), policy.makeAgent(4,hidden=16)

def test_make_agent(agents):
    a,b = agents
    assert a.actor.sizes == (13,16,16,4)
    assert a.critic.sizes == (13,16,16,1)
    assert a.actor.isActor and not a.critic.isActor
    assert a.actor != b.actor
    assert policy.makeAgent(3,hidden=16).actor == a.actor
    assert a.name == 'random-3'

def test_registry():
    assert Selector.getTypeNames() == ['PPO','PPO-MCTS','Mean']
    assert Selector.getType(2) is policy.SelectorMcts
    with pytest.raises(KeyError):
        Selector.getType('Greedy')
    assert isinstance(policy.makeSelector(False),policy.SelectorSample)
    assert isinstance(policy.makeSelector(True),policy.SelectorMcts)

def test_sample_selector(agents):
    a,b = agents
    s = reset(0)
    d = policy.makeSelector(False).select(a,b,s,Side.Red,
            np.random.default_rng(1))
    action,logp = nn.sampleAndLogprob(a.actor,observe(s,Side.Red),
            np.random.default_rng(1))
    np.testing.assert_array_equal(d.action,action)
    assert d.logp == logp
    assert d.value == policy.criticOf(a,s,Side.Red)

def test_mcts_selector(agents):
    a,b = agents
    sel = policy.makeSelector(True,SearchConfig(num_actions=3,
        num_simulations=4,max_depth=2),EngagementModel())
    d1 = sel.select(a,b,reset(0),Side.Blue,np.random.default_rng(2))
    d2 = sel.select(a,b,reset(0),Side.Blue,np.random.default_rng(2))
    np.testing.assert_array_equal(d1.action,d2.action)
    assert np.isfinite(d1.logp)
    with pytest.raises(RuntimeError):
        policy.makeSelector(True).select(a,b,reset(0),Side.Blue,
                np.random.default_rng(2))

def test_mean_selector(agents):
    a,b = agents
    s = reset(5)
    d = Selector.create('Mean').select(a,b,s,Side.Blue,None)
    np.testing.assert_array_equal(d.action,nn.forward(a.actor,
        observe(s,Side.Blue)))
    assert d.logp == pytest.approx(-0.5*4*np.log(2*np.pi))
