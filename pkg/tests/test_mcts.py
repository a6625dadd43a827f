import math
import pytest
import numpy as np
from aircombat.ppomcts import mcts, nn
from aircombat.ppomcts.dynamics import AircraftState
from aircombat.ppomcts.environment import EngagementModel, EngagementState, \
        Outcome, Side, observe
from aircombat.ppomcts.mcts import SearchConfig, SearchNode
from aircombat.ppomcts.policy import makeAgent

def headOn(distance=8000.0):
    return EngagementState(AircraftState(0,0,5000,300,0,0),
            AircraftState(distance,0,5000,300,0,math.pi),
            None,None,False,False,0.0,Outcome.Ongoing,0)

@pytest.fixture(scope='module')
def agent():
    return makeAgent(7,hidden=16)

@pytest.fixture(scope='module')
def model():
    return EngagementModel()

def search(agent,model,config,seed=0,critic=None,side=Side.Blue,state=None):
    return mcts.runSearch(state or headOn(),side,agent.actor,
            critic if critic is not None else agent.critic,agent.actor,model,
            config,np.random.default_rng(seed))

def test_root_statistics(agent,model):
    res = search(agent,model,SearchConfig(num_simulations=20,max_depth=3))
    assert res.visits.sum() == 20
    assert res.priors.sum() == pytest.approx(1.0)
    assert len(res.priors) == 9
    assert res.index == int(np.argmax(res.visits))
    assert -1 <= res.value <= 1
    assert res.action.shape == (4,)

def test_priors_match_sampled_actions(agent,model):
    res = search(agent,model,SearchConfig(num_simulations=1,max_depth=1),
            seed=3)
    obs = observe(headOn(),Side.Blue)
    actions,logps = nn.sampleActions(agent.actor,obs,
            np.random.default_rng(3),9)
    np.testing.assert_allclose(res.priors,np.exp(logps)/np.exp(logps).sum())
    np.testing.assert_array_equal(res.action,actions[res.index])
    assert res.logp == logps[res.index]

def test_equal_densities_give_uniform_priors():
    node = SearchNode(headOn())
    node.setPriors(np.zeros((5,4)),[-2.5]*5)
    np.testing.assert_allclose(node.P,0.2)

def test_puct_prefers_prior_when_unvisited():
    node = SearchNode(headOn())
    node.setPriors(np.zeros((5,4)),[0.0]*5)
    node.P = np.array([0.1,0.1,0.1,0.6,0.1])
    node.N = np.array([5,5,5,0,4])
    node.Q = np.array([0.1,0.1,0.1,0.0,0.1])
    assert mcts.puctSelect(node,1.25) == 3

def test_puct_first_visit_takes_lowest_index():
    node = SearchNode(headOn())
    node.setPriors(np.zeros((4,4)),[0.0,1.0,2.0,3.0])
    assert mcts.puctSelect(node,1.25) == 0

def test_puct_scores():
    node = SearchNode(headOn())
    node.setPriors(np.zeros((2,4)),[0.0,0.0])
    node.N = np.array([3,1])
    node.W = np.array([1.5,-1.0])
    node.Q = node.W/node.N
    scores = mcts.puctScores(node,2.0)
    assert scores == pytest.approx([0.5+2*0.5*2/4,-1.0+2*0.5*2/2])

def test_backup():
    a = SearchNode(headOn())
    a.setPriors(np.zeros((3,4)),[0.0]*3)
    b = SearchNode(headOn(),1)
    b.setPriors(np.zeros((3,4)),[0.0]*3)
    mcts.backup([(a,2),(b,0)],0.5)
    mcts.backup([(a,2)],-1.0)
    assert a.N.tolist() == [0,0,2]
    assert a.W[2] == pytest.approx(-0.5)
    assert a.Q[2] == pytest.approx(-0.25)
    assert b.N.tolist() == [1,0,0] and b.Q[0] == 0.5
    with pytest.raises(mcts.SearchError):
        mcts.backup([],1.0)

@pytest.mark.parametrize('k', range(6))
def test_dominant_child_collects_visits(k):
    node = SearchNode(headOn())
    node.setPriors(np.zeros((6,4)),[0.0]*6)
    for _ in range(18):
        idx = mcts.puctSelect(node,1.25)
        mcts.backup([(node,idx)],1.0 if idx==k else 0.0)
    assert int(np.argmax(node.N)) == k
    assert node.N.sum() == 18

@pytest.mark.parametrize('k', range(9))
def test_rigged_critic_steers_choice(agent,model,monkeypatch,k):
    # equal priors, so only the critic can single out child k
    monkeypatch.setattr(mcts,'softmax',lambda x: np.full(len(x),1.0/len(x)))
    seed = 20+k
    config = SearchConfig(num_simulations=50,max_depth=1)
    root = headOn()
    obs = observe(root,Side.Blue)
    actions,_ = nn.sampleActions(agent.actor,obs,
            np.random.default_rng(seed),9)
    opp = nn.forward(agent.actor,observe(root,Side.Red))
    wanted = model.step(root,Side.Blue,actions[k],opp)

    def critic(state,side):
        if state.t > 0 and state.blue == wanted.blue and state.red == wanted.red:
            return 1.0
        return 0.0

    res = search(agent,model,config,seed=seed,critic=critic)
    assert res.index == k
    np.testing.assert_array_equal(res.action,actions[k])
    np.testing.assert_array_equal(res.priors,np.full(9,1.0/9))
    assert res.visits[k] >= 50-8

def test_critic_values_are_clamped(agent,model):
    res = search(agent,model,SearchConfig(num_simulations=10,max_depth=2),
            critic=lambda state,side: 7.0)
    assert res.value == 1.0
    res = search(agent,model,SearchConfig(num_simulations=10,max_depth=2),
            critic=lambda state,side: -7.0)
    assert res.value == -1.0

def test_single_action_matches_raw_sample(agent,model):
    res = search(agent,model,SearchConfig(num_actions=1,num_simulations=5),
            seed=4)
    obs = observe(headOn(),Side.Blue)
    action,logp = nn.sampleAndLogprob(agent.actor,obs,np.random.default_rng(4))
    np.testing.assert_array_equal(res.action,action)
    assert res.logp == logp
    assert res.visits.tolist() == [5]

def test_search_is_deterministic(agent,model):
    config = SearchConfig(num_simulations=15,max_depth=3)
    a = search(agent,model,config,seed=9)
    b = search(agent,model,config,seed=9)
    np.testing.assert_array_equal(a.action,b.action)
    np.testing.assert_array_equal(a.visits,b.visits)
    assert a.value == b.value

def test_red_side_search(agent,model):
    res = search(agent,model,SearchConfig(num_simulations=8,max_depth=2),
            side=Side.Red)
    assert res.visits.sum() == 8

def test_terminal_root_rejected(agent,model):
    done = headOn()._replace(outcome=Outcome.Draw)
    with pytest.raises(mcts.SearchError):
        search(agent,model,SearchConfig(),state=done)

def test_terminal_children_use_outcome(agent,model):
    # blue starts just above the floor diving, every child is a loss
    low = headOn()._replace(blue=AircraftState(0,0,101,300,-1.2,0))
    res = search(agent,model,SearchConfig(num_simulations=12,max_depth=3),
            state=low)
    assert res.value == -1.0

def test_interior_visit_counts(agent,model,monkeypatch):
    roots = []
    original = SearchNode.__init__

    def spy(self,state,depth=0):
        original(self,state,depth)
        if depth == 0:
            roots.append(self)
    monkeypatch.setattr(SearchNode,'__init__',spy)
    search(agent,model,SearchConfig(num_simulations=30,max_depth=4))
    root, = roots
    stack = [root]
    while stack:
        node = stack.pop()
        for idx,child in enumerate(node.children):
            if child is not None and child.expanded:
                assert child.N.sum() == node.N[idx]-1
                assert np.all(np.abs(child.Q) <= 1)
                stack.append(child)

@pytest.mark.parametrize('config', [
    SearchConfig(num_actions=0),
    SearchConfig(num_simulations=0),
    SearchConfig(max_depth=0),
    SearchConfig(c_puct=-1.0),
])
def test_invalid_config(config):
    with pytest.raises(ValueError):
        mcts.checkSearchConfig(config)
