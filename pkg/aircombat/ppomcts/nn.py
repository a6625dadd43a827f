'''
Fully connected tanh network with hand written reverse mode gradients and the
Adam optimizer

A network maps a batch of observations, shape (n, in), to a batch of outputs,
shape (n, out). Weights are stored as (fan_in, fan_out) matrices so that a
layer reads ``h @ W + b``. Actor networks additionally own a state independent
log standard deviation vector, one entry per output.
'''

import math
import hashlib
import numpy as np
from .utils import nnlogger as logger

LOG_STD_LIMITS = (-5.0, 2.0)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

_LOG_2PI = math.log(2*math.pi)

class NonFiniteError(RuntimeError):
    pass

class MlpParams(object):
    '''
    Weights, biases and (for an actor) the log standard deviation

    The same class carries gradients, which are congruent to the parameters
    '''

    def __init__(self,weights,biases,log_std=None):
        if len(weights) != len(biases):
            raise ValueError('{} weight matrices but {} bias vectors'.format(
                len(weights),len(biases)))
        for i,(w,b) in enumerate(zip(weights,biases)):
            if w.ndim!=2 or b.shape!=(w.shape[1],):
                raise ValueError('layer {} shape mismatch: {} and {}'.format(
                    i,w.shape,b.shape))
            if i and weights[i-1].shape[1]!=w.shape[0]:
                raise ValueError('layer {} expects {} inputs, previous layer '
                    'has {} outputs'.format(i,w.shape[0],weights[i-1].shape[1]))
        self.weights = [np.asarray(w,dtype=np.float64) for w in weights]
        self.biases = [np.asarray(b,dtype=np.float64) for b in biases]
        self.log_std = None if log_std is None else \
                np.asarray(log_std,dtype=np.float64)

    @property
    def sizes(self):
        return (self.weights[0].shape[0],) + \
                tuple(w.shape[1] for w in self.weights)

    @property
    def isActor(self):
        return self.log_std is not None

    def tensors(self):
        'All arrays in a fixed order: W0, b0, W1, b1, ..., [log_std]'
        ret = []
        for w,b in zip(self.weights,self.biases):
            ret += [w,b]
        if self.log_std is not None:
            ret.append(self.log_std)
        return ret

    @classmethod
    def fromTensors(cls,tensors,actor):
        tensors = list(tensors)
        log_std = tensors.pop() if actor else None
        if len(tensors)%2:
            raise ValueError('odd number of layer tensors {}'.format(
                len(tensors)))
        return cls(tensors[0::2],tensors[1::2],log_std)

    def copy(self):
        return MlpParams.fromTensors([t.copy() for t in self.tensors()],
                self.isActor)

    def zerosLike(self):
        return MlpParams.fromTensors([np.zeros_like(t) for t in self.tensors()],
                self.isActor)

    def isFinite(self):
        return all(np.all(np.isfinite(t)) for t in self.tensors())

    def digest(self):
        'SHA-256 over shapes and little endian float64 contents'
        h = hashlib.sha256()
        for t in self.tensors():
            h.update(repr(t.shape).encode('ascii'))
            h.update(np.ascontiguousarray(t,dtype='<f8').tobytes())
        return h.hexdigest()

    def __eq__(self,other):
        if not isinstance(other,MlpParams) or self.isActor!=other.isActor:
            return False
        mine,theirs = self.tensors(),other.tensors()
        return len(mine)==len(theirs) and all(
                a.shape==b.shape and np.array_equal(a,b)
                for a,b in zip(mine,theirs))

    def __ne__(self,other):
        return not self.__eq__(other)

    def __repr__(self):
        return '<MlpParams {}{}>'.format('x'.join(str(s) for s in self.sizes),
                ' actor' if self.isActor else '')

Gradients = MlpParams

class AdamState(object):
    def __init__(self,m,v,step=0):
        self.m = m
        self.v = v
        self.step = step

    @classmethod
    def create(cls,params):
        return cls([np.zeros_like(t) for t in params.tensors()],
                   [np.zeros_like(t) for t in params.tensors()])

    def copy(self):
        return AdamState([t.copy() for t in self.m],[t.copy() for t in self.v],
                self.step)

def initParams(seed,sizes,actor=False,log_std=0.0):
    '''
    Glorot uniform weights, zero biases and, for an actor, a constant log
    standard deviation
    '''
    if len(sizes) < 2:
        raise ValueError('need at least input and output size, got {}'.format(
            sizes))
    rng = np.random.default_rng(seed)
    weights,biases = [],[]
    for fan_in,fan_out in zip(sizes[:-1],sizes[1:]):
        limit = math.sqrt(6.0/(fan_in+fan_out))
        weights.append(rng.uniform(-limit,limit,size=(fan_in,fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights,biases,
            np.full(sizes[-1],float(log_std)) if actor else None)

def _asBatch(params,x):
    x = np.asarray(x,dtype=np.float64)
    single = x.ndim==1
    if single:
        x = x[None,:]
    if x.ndim!=2 or x.shape[1]!=params.sizes[0]:
        raise ValueError('expect input dimension {}, got shape {}'.format(
            params.sizes[0],x.shape))
    return x,single

_AFFINE_CHUNK = 64

def _affine(h,w,b):
    # sums over the input axis in a fixed order for every row, a row gives
    # the same bits alone or inside any batch
    out = np.empty((len(h),w.shape[1]))
    for start in range(0,len(h),_AFFINE_CHUNK):
        rows = h[start:start+_AFFINE_CHUNK]
        out[start:start+len(rows)] = (rows[:,:,None]*w[None,:,:]).sum(axis=1)
    return out+b

def forwardCache(params,x):
    '''
    Batch forward pass keeping the layer inputs for backward()

    Returns (outputs, cache) where cache lists the input of every layer.
    '''
    h,_ = _asBatch(params,x)
    cache = []
    last = len(params.weights)-1
    for i,(w,b) in enumerate(zip(params.weights,params.biases)):
        cache.append(h)
        h = _affine(h,w,b)
        if i < last:
            h = np.tanh(h)
    return h,cache

def forward(params,x):
    'Network outputs for one observation or a batch of them'
    x,single = _asBatch(params,x)
    out,_ = forwardCache(params,x)
    return out[0] if single else out

def backward(params,cache,d_out):
    'Gradients of the weights and biases given d(loss)/d(outputs)'
    dz = np.asarray(d_out,dtype=np.float64)
    gw,gb = [None]*len(params.weights),[None]*len(params.weights)
    for i in range(len(params.weights)-1,-1,-1):
        h = cache[i]
        gw[i] = h.T.dot(dz)
        gb[i] = dz.sum(axis=0)
        if i:
            # h is tanh of the previous pre-activation
            dz = dz.dot(params.weights[i].T)*(1.0-h*h)
    return gw,gb

def gaussianLogProb(mean,log_std,actions):
    'Diagonal Gaussian log density summed over the last axis'
    std = np.exp(log_std)
    zs = (np.asarray(actions)-mean)/std
    return -0.5*np.sum(zs*zs,axis=-1) - np.sum(log_std) \
            - 0.5*len(log_std)*_LOG_2PI

def gaussianEntropy(log_std):
    return float(np.sum(log_std) + 0.5*len(log_std)*(1.0+_LOG_2PI))

def sampleActions(params,obs,rng,n):
    '''
    Draw n raw actions from the policy at a single observation

    Returns (actions of shape (n, out), log densities of shape (n,))
    '''
    if not params.isActor:
        raise ValueError('sampling needs an actor network')
    mean = forward(params,obs)
    noise = rng.standard_normal((n,len(mean)))
    actions = mean + np.exp(params.log_std)*noise
    return actions,gaussianLogProb(mean,params.log_std,actions)

def sampleAndLogprob(params,obs,rng):
    actions,logps = sampleActions(params,obs,rng,1)
    return actions[0],float(logps[0])

def backprop(params,batch,loss_def):
    '''
    Loss value and exact gradients of a loss definition on a batch

    ``batch.obs`` holds the network inputs. ``loss_def.evaluate(outputs,
    params, batch)`` returns the scalar loss, d(loss)/d(outputs) and
    d(loss)/d(log_std) (None for networks without one).
    '''
    out,cache = forwardCache(params,batch.obs)
    loss,d_out,d_log_std = loss_def.evaluate(out,params,batch)
    if not math.isfinite(loss):
        raise NonFiniteError('non finite {} loss {}'.format(
            getattr(loss_def,'name',loss_def.__class__.__name__),loss))
    gw,gb = backward(params,cache,d_out)
    if params.isActor:
        d_log_std = np.zeros_like(params.log_std) if d_log_std is None \
                else np.asarray(d_log_std,dtype=np.float64)
    else:
        d_log_std = None
    grads = Gradients(gw,gb,d_log_std)
    if not grads.isFinite():
        raise NonFiniteError('non finite gradient of {} loss'.format(
            getattr(loss_def,'name',loss_def.__class__.__name__)))
    return float(loss),grads

def _checkCongruent(params,other,what):
    a,b = params.tensors(),other.tensors()
    if len(a)!=len(b) or any(x.shape!=y.shape for x,y in zip(a,b)):
        raise ValueError('{} shapes {} do not match parameter shapes {}'.format(
            what,[y.shape for y in b],[x.shape for x in a]))

def adamStep(params,state,grads,lr):
    'One bias corrected Adam update, returning new parameters and state'
    _checkCongruent(params,grads,'gradient')
    if len(state.m)!=len(params.tensors()) or any(m.shape!=t.shape
            for m,t in zip(state.m,params.tensors())):
        raise ValueError('optimizer state does not match parameter shapes')
    step = state.step+1
    c1 = 1.0-ADAM_BETA1**step
    c2 = 1.0-ADAM_BETA2**step
    new_t,new_m,new_v = [],[],[]
    for t,g,m,v in zip(params.tensors(),grads.tensors(),state.m,state.v):
        m = ADAM_BETA1*m + (1.0-ADAM_BETA1)*g
        v = ADAM_BETA2*v + (1.0-ADAM_BETA2)*g*g
        new_t.append(t - lr*(m/c1)/(np.sqrt(v/c2)+ADAM_EPS))
        new_m.append(m)
        new_v.append(v)
    updated = MlpParams.fromTensors(new_t,params.isActor)
    if updated.isActor:
        np.clip(updated.log_std,*LOG_STD_LIMITS,out=updated.log_std)
    if not updated.isFinite():
        raise NonFiniteError('Adam step {} produced non finite parameters'.format(
            step))
    return updated,AdamState(new_m,new_v,step)

def gradientCheck(params,batch,loss_def,h=1e-5):
    '''
    Worst relative error between backprop() and central finite differences
    over every parameter entry, |analytic-numeric|/max(1,|numeric|)
    '''
    _,grads = backprop(params,batch,loss_def)
    shifted = params.copy()
    worst = 0.0
    for t,g in zip(shifted.tensors(),grads.tensors()):
        flat,gflat = t.reshape(-1),g.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved+h
            up,_,_ = loss_def.evaluate(forward(shifted,batch.obs),shifted,batch)
            flat[i] = saved-h
            down,_,_ = loss_def.evaluate(forward(shifted,batch.obs),shifted,batch)
            flat[i] = saved
            numeric = (up-down)/(2*h)
            worst = max(worst,abs(gflat[i]-numeric)/max(1.0,abs(numeric)))
    logger.debug('gradient check of {} on {}: worst relative error {:.3e}',
            getattr(loss_def,'name',loss_def.__class__.__name__),params,worst)
    return worst
