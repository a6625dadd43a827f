'''
Self play league: collect, train, checkpoint and evaluate against past agents
'''

import time
from collections import namedtuple
from enum import Enum
import multiprocessing as mp
import numpy as np
from . import environment as env
from .environment import Side, Outcome, EngagementModel
from .mcts import SearchConfig
from .policy import Agent, makeAgent, makeSelector
from .ppo import RolloutBuffer, computeAdvantages, trainIteration
from .utils import playlogger as logger, makeRng, drawSeed

class MatchResult(Enum):
    Win = 'Win'
    Loss = 'Loss'
    Draw = 'Draw'

AgentCheckpoint = namedtuple('AgentCheckpoint', ('iteration','actor','critic',
    'seed','config_hash'))

# outcome is seen from agent a. length counts decision steps, seconds is the
# simulated engagement time.
MatchRecord = namedtuple('MatchRecord', ('iteration','opponent_iteration',
    'game','outcome','length','seconds','seed','side'))

EvalResult = namedtuple('EvalResult', ('wins','losses','draws','seconds',
    'records'))

IterationMetrics = namedtuple('IterationMetrics', ('iter','wins','losses',
    'draws','surrogate','value_loss','entropy','clip_fraction','approx_kl',
    'seconds','wall'))

# Everything a match needs besides the agents
MatchSettings = namedtuple('MatchSettings', ('env','scenario','search'))
MatchSettings.__new__.__defaults__ = (env.EnvConfig(), env.ScenarioConfig(),
        SearchConfig())

class EmptyPoolError(RuntimeError):
    pass

def toAgent(ckpt):
    return Agent(ckpt.actor,ckpt.critic,'iter-{}'.format(ckpt.iteration),
            ckpt.iteration)

def randomAgent(seed,hidden=256):
    'The untrained iteration 0 agent of a run'
    return makeAgent(seed,hidden,name='iter-0',iteration=0)

def resultFor(outcome,side):
    if outcome == Outcome.Draw:
        return MatchResult.Draw
    won = (outcome == Outcome.BlueWin) == (side is Side.Blue)
    return MatchResult.Win if won else MatchResult.Loss

def _selector(use_mcts,settings):
    return makeSelector(use_mcts,settings.search,EngagementModel(settings.env))

def runEngagement(agent_a,agent_b,use_mcts_a,use_mcts_b,seed,settings=None,
        a_side=Side.Blue,initial_state=None,buffer=None,trajectory=None):
    '''
    Play one engagement to its end

    Returns the final StepResult and the number of decision steps. When
    buffer is given the transitions of agent a are recorded as one closed
    episode. When trajectory is a list it receives trajectoryRows() of the
    initial state and of every physics sub step.
    '''
    if settings is None:
        settings = MatchSettings()
    state = initial_state if initial_state is not None \
            else env.reset(seed,settings.scenario)
    sel_a = _selector(use_mcts_a,settings)
    sel_b = _selector(use_mcts_b,settings)
    # streams are bound to the agent, not to the colour it flies
    rng_a = makeRng(seed,1)
    rng_b = makeRng(seed,2)
    b_side = a_side.other
    recorder = None
    if trajectory is not None:
        trajectory.extend(env.trajectoryRows(state))
        recorder = lambda s: trajectory.extend(env.trajectoryRows(s))
    if buffer is not None:
        buffer.startEpisode()
    a_index = 0 if a_side is Side.Blue else 1
    steps = 0
    while True:
        obs_a = env.observe(state,a_side)
        da = sel_a.select(agent_a,agent_b,state,a_side,rng_a)
        db = sel_b.select(agent_b,agent_a,state,b_side,rng_b)
        if a_side is Side.Blue:
            res = env.envStep(state,da.action,db.action,config=settings.env,
                    recorder=recorder)
        else:
            res = env.envStep(state,db.action,da.action,config=settings.env,
                    recorder=recorder)
        if buffer is not None:
            buffer.append(obs_a,da.action,da.logp,res.rewards[a_index],
                    da.value)
        steps += 1
        state = res.state
        if res.done:
            break
    if buffer is not None:
        buffer.closeEpisode(int(env.outcomeReward(res.outcome,a_side)))
    return res,steps

def playMatch(agent_a,agent_b,use_mcts_a,use_mcts_b,seed,settings=None,
        a_side=Side.Blue,initial_state=None,record_trajectory=False,
        iteration=0,game=0):
    '''
    One evaluation engagement of agent a against agent b

    Returns (MatchRecord, trajectory rows or None)
    '''
    rows = [] if record_trajectory else None
    res,steps = runEngagement(agent_a,agent_b,use_mcts_a,use_mcts_b,seed,
            settings,a_side,initial_state,trajectory=rows)
    outcome = resultFor(res.outcome,a_side)
    record = MatchRecord(iteration,agent_b.iteration,game,outcome,steps,
            res.state.t,seed,a_side.value)
    logger.debug('{} vs {} seed {} as {}: {} after {:.1f}s',agent_a.name,
            agent_b.name,seed,a_side.name,outcome.name,res.state.t)
    return record,rows

def _playJob(job):
    return playMatch(*job)[0]

def playMatches(jobs,workers=1):
    'playMatch() argument tuples to records, in job order'
    if workers <= 1 or len(jobs) <= 1:
        return [_playJob(job) for job in jobs]
    with mp.Pool(workers) as pool:
        return pool.map(_playJob,jobs)

def sampleOpponents(pool,count,rng):
    'Every entry when the pool is small enough, else count distinct ones'
    if not pool:
        raise EmptyPoolError('no past agents to evaluate against')
    if len(pool) <= count:
        return list(pool)
    idx = rng.choice(len(pool),size=count,replace=False)
    return [pool[i] for i in idx]

def evaluateVsPast(current,pool,rng,opponents=36,games=3,use_mcts=True,
        settings=None,workers=1,iteration=0):
    '''
    Matches of the current agent against sampled past agents

    pool holds Agent or AgentCheckpoint entries. The current agent alternates
    between blue and red over the games against one opponent.
    '''
    past = [p if isinstance(p,Agent) else toAgent(p)
            for p in sampleOpponents(pool,opponents,rng)]
    jobs = []
    for opp in past:
        for game in range(games):
            side = Side.Blue if game%2==0 else Side.Red
            jobs.append((current,opp,use_mcts,use_mcts,drawSeed(rng),settings,
                side,None,False,iteration,game))
    records = playMatches(jobs,workers)
    counts = dict((r,0) for r in MatchResult)
    for r in records:
        counts[r.outcome] += 1
    result = EvalResult(counts[MatchResult.Win],counts[MatchResult.Loss],
            counts[MatchResult.Draw],float(sum(r.seconds for r in records)),
            records)
    logger.info('iteration {} against {} agents: {} wins, {} losses, '
            '{} draws',iteration,len(past),result.wins,result.losses,
            result.draws)
    return result

def collectRollouts(learner,opponent,batch_size,rng,use_mcts=True,
        settings=None):
    '''
    Episodes of the learner against a raw sampling opponent until the buffer
    holds at least batch_size transitions
    '''
    buf = RolloutBuffer()
    episode = 0
    while len(buf) < batch_size:
        side = Side.Blue if episode%2==0 else Side.Red
        runEngagement(learner,opponent,use_mcts,False,drawSeed(rng),settings,
                side,buffer=buf)
        episode += 1
    logger.debug('collected {} transitions in {} episodes',len(buf),episode)
    return buf

def trainLoop(config,on_checkpoint=None,on_metrics=None):
    '''
    Run the whole self play protocol of a RunConfig

    on_checkpoint(AgentCheckpoint) is called once an iteration's agent is
    trained, on_metrics(IterationMetrics) once it is evaluated. Returns the
    pool (iteration 0 first) and the metrics history.
    '''
    seed = config.seed
    settings = MatchSettings(config.envConfig(),config.scenarioConfig(),
            config.searchConfig())
    train_config = config.trainConfig()
    config_hash = config.configHash()
    initial = randomAgent(seed,config.hidden)
    pool = [AgentCheckpoint(0,initial.actor,initial.critic,seed,config_hash)]
    history = []
    actor,critic = initial.actor,initial.critic
    opt_state = None
    for it in range(1,config.iterations+1):
        try:
            started = time.time()
            learner = Agent(actor,critic,'iter-{}'.format(it),it)
            buf = collectRollouts(learner,toAgent(pool[-1]),
                    train_config.batch_size,makeRng(seed,it,0),
                    config.use_mcts,settings)
            computeAdvantages(buf,train_config)
            actor,critic,train_metrics,opt_state = trainIteration(actor,critic,
                    buf,train_config,makeRng(seed,it,1),opt_state)
            ckpt = AgentCheckpoint(it,actor,critic,seed,config_hash)
            if on_checkpoint:
                on_checkpoint(ckpt)
            result = evaluateVsPast(toAgent(ckpt),pool,makeRng(seed,it,2),
                    config.opponents,config.games_per_opponent,config.use_mcts,
                    settings,config.workers,it)
            pool.append(ckpt)
            metrics = IterationMetrics(it,result.wins,result.losses,
                    result.draws,train_metrics.surrogate,
                    train_metrics.value_loss,train_metrics.entropy,
                    train_metrics.clip_fraction,train_metrics.approx_kl,
                    result.seconds,time.time()-started)
            if not np.all(np.isfinite(metrics[4:])):
                raise ValueError('non finite metrics {}'.format(metrics))
            history.append(metrics)
            if on_metrics:
                on_metrics(metrics)
            logger.msg('iteration {}/{}: {} wins, {} losses, {} draws',
                    it,config.iterations,metrics.wins,metrics.losses,
                    metrics.draws)
        except Exception as e:
            logger.error('iteration {} failed: {}',it,e)
            raise
    return pool,history
