'''
Clipped surrogate PPO over rollout buffers

Value targets are the discounted final result of each engagement rather than
bootstrapped returns, while the advantages use GAE over the stored per step
rewards and collection time value estimates.
'''

from collections import namedtuple
import numpy as np
from . import nn
from .nn import NonFiniteError
from .utils import ppologger as logger

TrainConfig = namedtuple('TrainConfig', ('gamma','gae_lambda','clip_epsilon',
    'epochs','batch_size','actor_lr','critic_lr','entropy_coeff'))
TrainConfig.__new__.__defaults__ = (0.99, 0.95, 0.2, 6, 1024, 0.002, 0.001,
        0.01)

# advantage and target are None until computeAdvantages() fills them
Transition = namedtuple('Transition', ('obs','action','logp','reward','value',
    'done','z','advantage','target'))
Transition.__new__.__defaults__ = (False, None, None, None)

Minibatch = namedtuple('Minibatch', ('obs','actions','old_logp','advantages',
    'targets'))

TrainMetrics = namedtuple('TrainMetrics', ('surrogate','value_loss','entropy',
    'clip_fraction','approx_kl'))

class OpenEpisodeError(RuntimeError):
    pass

class BufferTooSmallError(RuntimeError):
    pass

def checkTrainConfig(config):
    for name in ('gamma','gae_lambda','clip_epsilon','epochs','batch_size',
            'actor_lr','critic_lr'):
        if not getattr(config,name) > 0:
            raise ValueError('train setting {} must be positive, got {}'.format(
                name,getattr(config,name)))
    if config.clip_epsilon >= 1:
        raise ValueError('clip_epsilon must be below 1, got {}'.format(
            config.clip_epsilon))
    if config.gamma > 1 or config.gae_lambda > 1:
        raise ValueError('gamma and gae_lambda must not exceed 1')
    if config.entropy_coeff < 0:
        raise ValueError('negative entropy_coeff {}'.format(
            config.entropy_coeff))

class RolloutBuffer(object):
    '''
    Transitions grouped by episode

    Episodes are appended whole: startEpisode(), append() per decision step,
    then closeEpisode(z) with the engagement result z seen by the learner.
    '''

    def __init__(self):
        self.episodes = []
        self._open = None

    @classmethod
    def fromTransitions(cls,transitions):
        'Build a buffer from already closed transitions, split at done flags'
        buf = cls()
        episode = []
        for t in transitions:
            episode.append(t)
            if t.done:
                buf.episodes.append(episode)
                episode = []
        if episode:
            raise OpenEpisodeError('trailing transitions without done flag')
        return buf

    @property
    def isClosed(self):
        return self._open is None

    def startEpisode(self):
        if self._open:
            raise OpenEpisodeError('previous episode of {} steps still '
                'open'.format(len(self._open)))
        self._open = []

    def append(self,obs,action,logp,reward,value):
        if self._open is None:
            raise OpenEpisodeError('append outside of an episode')
        if not np.isfinite(logp):
            raise NonFiniteError('non finite log probability at step {}'.format(
                len(self._open)))
        self._open.append(Transition(np.asarray(obs,dtype=np.float64),
            np.asarray(action,dtype=np.float64),float(logp),float(reward),
            float(value)))

    def closeEpisode(self,z):
        if not self._open:
            raise OpenEpisodeError('closing an empty or unstarted episode')
        if z not in (-1,0,1):
            raise ValueError('engagement result must be -1, 0 or 1, got '
                    '{}'.format(z))
        episode = [t._replace(z=float(z)) for t in self._open]
        episode[-1] = episode[-1]._replace(done=True)
        self.episodes.append(episode)
        self._open = None

    def extend(self,other):
        if not other.isClosed:
            raise OpenEpisodeError('merging a buffer with an open episode')
        self.episodes.extend(other.episodes)

    def transitions(self):
        return [t for ep in self.episodes for t in ep]

    def __len__(self):
        return sum(len(ep) for ep in self.episodes)

def computeAdvantages(buffer,config,normalize=True):
    if not buffer.isClosed:
        raise OpenEpisodeError('cannot compute advantages with an open episode')
    gamma,lam = config.gamma,config.gae_lambda
    for n,episode in enumerate(buffer.episodes):
        size = len(episode)
        adv = [0.0]*size
        target = [0.0]*size
        gae = 0.0
        for t in range(size-1,-1,-1):
            tr = episode[t]
            next_value = episode[t+1].value if t+1<size else 0.0
            delta = tr.reward + gamma*next_value - tr.value
            gae = delta + gamma*lam*gae
            adv[t] = gae
            target[t] = tr.z if t==size-1 else gamma*target[t+1]
        buffer.episodes[n] = [tr._replace(advantage=a,target=v)
                for tr,a,v in zip(episode,adv,target)]
    if normalize and len(buffer):
        adv = np.array([t.advantage for t in buffer.transitions()])
        mean = adv.mean()
        std = max(adv.std(),1e-8)
        for ep in buffer.episodes:
            ep[:] = [t._replace(advantage=(t.advantage-mean)/std) for t in ep]
    return buffer

def surrogateTerms(ratio,advantages,clip_epsilon):
    'Per sample clipped objective min(r*A, clip(r, 1-e, 1+e)*A)'
    ratio = np.asarray(ratio,dtype=np.float64)
    advantages = np.asarray(advantages,dtype=np.float64)
    clipped = np.clip(ratio,1.0-clip_epsilon,1.0+clip_epsilon)*advantages
    return np.minimum(ratio*advantages,clipped)

class SurrogateLoss(object):
    'Negated mean clipped surrogate of an actor network'

    name = 'surrogate'

    def __init__(self,clip_epsilon):
        self.clip_epsilon = clip_epsilon

    def ratio(self,out,params,batch):
        logp = nn.gaussianLogProb(out,params.log_std,batch.actions)
        ratio = np.exp(logp-batch.old_logp)
        bad = np.flatnonzero(~np.isfinite(ratio))
        if len(bad):
            raise NonFiniteError('non finite probability ratio of sample {}, '
                'log probability {} against {}'.format(
                    bad[0],logp[bad[0]],batch.old_logp[bad[0]]))
        return logp,ratio

    def evaluate(self,out,params,batch):
        _,ratio = self.ratio(out,params,batch)
        adv = batch.advantages
        n = len(adv)
        unclipped = ratio*adv
        clipped = np.clip(ratio,1.0-self.clip_epsilon,
                1.0+self.clip_epsilon)*adv
        loss = -np.mean(np.minimum(unclipped,clipped))
        # gradient flows through the ratio only where it is not clipped
        active = unclipped <= clipped
        d_logp = np.where(active,-adv*ratio/n,0.0)
        var = np.exp(2*params.log_std)
        diff = batch.actions-out
        d_out = d_logp[:,None]*diff/var
        d_log_std = np.sum(d_logp[:,None]*(diff*diff/var-1.0),axis=0)
        return loss,d_out,d_log_std

    def stats(self,out,params,batch):
        'Mean surrogate, clip fraction and approximate KL divergence'
        logp,ratio = self.ratio(out,params,batch)
        surrogate = float(np.mean(surrogateTerms(ratio,batch.advantages,
            self.clip_epsilon)))
        clip_fraction = float(np.mean(np.abs(ratio-1.0) > self.clip_epsilon))
        approx_kl = float(np.mean(batch.old_logp-logp))
        return surrogate,clip_fraction,approx_kl

class EntropyLoss(object):
    'Entropy bonus, -coeff * entropy of the state independent Gaussian'

    name = 'entropy'

    def __init__(self,coeff):
        self.coeff = coeff

    def evaluate(self,out,params,batch):
        loss = -self.coeff*nn.gaussianEntropy(params.log_std)
        return loss,np.zeros_like(out),np.full_like(params.log_std,-self.coeff)

class ValueLoss(object):
    name = 'value'

    def evaluate(self,out,params,batch):
        err = out[:,0]-batch.targets
        d_out = np.zeros_like(out)
        d_out[:,0] = 2.0*err/len(err)
        return float(np.mean(err*err)),d_out,None

class SumLoss(object):
    def __init__(self,*terms):
        self.terms = terms
        self.name = '+'.join(t.name for t in terms)

    def evaluate(self,out,params,batch):
        loss,d_out,d_log_std = 0.0,np.zeros_like(out),None
        for term in self.terms:
            l,d,s = term.evaluate(out,params,batch)
            loss += l
            d_out += d
            if s is not None:
                d_log_std = s if d_log_std is None else d_log_std+s
        return loss,d_out,d_log_std

def actorLoss(config):
    return SumLoss(SurrogateLoss(config.clip_epsilon),
                   EntropyLoss(config.entropy_coeff))

def clippedLoss(params,minibatch,config):
    'Actor loss: negated clipped surrogate minus the entropy bonus'
    out = nn.forward(params,minibatch.obs)
    loss,_,_ = actorLoss(config).evaluate(out,params,minibatch)
    return float(loss)

def makeMinibatch(transitions):
    for i,t in enumerate(transitions):
        if t.advantage is None or t.target is None:
            raise OpenEpisodeError('transition {} has no advantage or value '
                'target, run computeAdvantages() first'.format(i))
    return Minibatch(np.array([t.obs for t in transitions]),
                     np.array([t.action for t in transitions]),
                     np.array([t.logp for t in transitions]),
                     np.array([t.advantage for t in transitions]),
                     np.array([t.target for t in transitions]))

def trainIteration(actor,critic,buffer,config,rng,opt_state=None):
    '''
    Several epochs of minibatch updates of both networks

    Returns (actor, critic, TrainMetrics, optimizer state). The optimizer
    state is an (actor, critic) pair of nn.AdamState and may be passed back in
    to continue the moment estimates across iterations.
    '''
    checkTrainConfig(config)
    transitions = buffer.transitions()
    if len(transitions) < config.batch_size:
        raise BufferTooSmallError('{} transitions, need at least {}'.format(
            len(transitions),config.batch_size))
    data = makeMinibatch(transitions)
    if opt_state is None:
        opt_state = (nn.AdamState.create(actor),nn.AdamState.create(critic))
    actor_opt,critic_opt = opt_state

    surrogate_loss = SurrogateLoss(config.clip_epsilon)
    actor_loss = actorLoss(config)
    value_loss = ValueLoss()
    stats = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(transitions))
        for start in range(0,len(order),config.batch_size):
            idx = order[start:start+config.batch_size]
            mb = Minibatch(*[a[idx] for a in data])
            surrogate,clip_fraction,approx_kl = surrogate_loss.stats(
                    nn.forward(actor,mb.obs),actor,mb)
            _,grads = nn.backprop(actor,mb,actor_loss)
            actor,actor_opt = nn.adamStep(actor,actor_opt,grads,
                    config.actor_lr)
            vloss,grads = nn.backprop(critic,mb,value_loss)
            critic,critic_opt = nn.adamStep(critic,critic_opt,grads,
                    config.critic_lr)
            stats.append((surrogate,vloss,nn.gaussianEntropy(actor.log_std),
                clip_fraction,approx_kl))
        logger.trace('epoch {}: {} minibatches',epoch,len(stats))
    metrics = TrainMetrics(*[float(v) for v in np.mean(stats,axis=0)])
    logger.info('trained on {} transitions: {}',len(transitions),metrics)
    return actor,critic,metrics,(actor_opt,critic_opt)
