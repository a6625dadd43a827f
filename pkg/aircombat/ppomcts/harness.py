'''
Command line entry points, checkpoint files and the JSONL/CSV output sinks
'''

import os
import sys
import csv
import json
import math
import time
import zlib
import struct
import hashlib
import argparse
import tempfile
from collections import OrderedDict
import numpy as np
from six import with_metaclass
from . import __version__
from . import nn, dynamics, missile, equations
from .config import RunConfig, ConfigError, Profile
from .dynamics import AircraftState
from .environment import Side, TrajectoryColumns, swapSides, reset
from .ppo import Minibatch, SurrogateLoss, ValueLoss, EntropyLoss, SumLoss
from .proxy import ProxyType
from .selfplay import AgentCheckpoint, MatchSettings, playMatch, trainLoop, \
        toAgent
from .utils import harnesslogger as logger, setupLogging, makeRng, drawSeed

MAGIC = b'DGFT'
VERSION = 1
_HEADER = struct.Struct('<4sIQ')
_TRAILER = struct.Struct('<I')

class CheckpointError(RuntimeError):
    pass

class BadMagicError(CheckpointError):
    pass

class VersionMismatchError(CheckpointError):
    pass

class ChecksumError(CheckpointError):
    pass

class TruncatedCheckpointError(CheckpointError):
    pass

class IntegrityError(CheckpointError):
    pass

def checkpointDigest(actor,critic):
    h = hashlib.sha256()
    h.update(actor.digest().encode('ascii'))
    h.update(critic.digest().encode('ascii'))
    return h.hexdigest()

def _packString(s):
    data = s.encode('utf-8')
    return struct.pack('<I',len(data)) + data

def _packTensors(params):
    out = [struct.pack('<I',len(params.tensors()))]
    for t in params.tensors():
        out.append(struct.pack('<I',t.ndim))
        out.append(struct.pack('<{}I'.format(t.ndim),*t.shape))
        out.append(np.ascontiguousarray(t,dtype='<f8').tobytes())
    return b''.join(out)

def encodeCheckpoint(ckpt):
    payload = b''.join((struct.pack('<qq',ckpt.iteration,ckpt.seed),
        _packString(ckpt.config_hash),
        _packString(checkpointDigest(ckpt.actor,ckpt.critic)),
        _packTensors(ckpt.actor),
        _packTensors(ckpt.critic)))
    return _HEADER.pack(MAGIC,VERSION,len(payload)) + payload + \
            _TRAILER.pack(zlib.crc32(payload) & 0xffffffff)

class _Reader(object):
    def __init__(self,data):
        self.data = data
        self.pos = 0

    def unpack(self,fmt):
        size = struct.calcsize(fmt)
        if self.pos+size > len(self.data):
            raise TruncatedCheckpointError('payload ends at byte {}, need {} '
                'more'.format(len(self.data),self.pos+size-len(self.data)))
        ret = struct.unpack_from(fmt,self.data,self.pos)
        self.pos += size
        return ret

    def string(self):
        n, = self.unpack('<I')
        return self.unpack('<{}s'.format(n))[0].decode('utf-8')

    def tensors(self,actor):
        count, = self.unpack('<I')
        ret = []
        for _ in range(count):
            rank, = self.unpack('<I')
            shape = self.unpack('<{}I'.format(rank))
            n = int(np.prod(shape)) if rank else 1
            raw = self.unpack('<{}s'.format(8*n))[0]
            ret.append(np.frombuffer(raw,dtype='<f8').astype(
                np.float64).reshape(shape))
        return nn.MlpParams.fromTensors(ret,actor)

def decodeCheckpoint(data,path='<memory>'):
    if len(data) < _HEADER.size:
        raise TruncatedCheckpointError('{}: {} bytes is shorter than the '
            'header'.format(path,len(data)))
    magic,version,size = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError('{}: bad magic {!r}, expected {!r}'.format(
            path,magic,MAGIC))
    if version != VERSION:
        raise VersionMismatchError('{}: checkpoint version {}, this build '
            'reads version {}'.format(path,version,VERSION))
    end = _HEADER.size+size
    if len(data) < end+_TRAILER.size:
        raise TruncatedCheckpointError('{}: {} bytes, header announces '
            '{}'.format(path,len(data),end+_TRAILER.size))
    payload = data[_HEADER.size:end]
    crc, = _TRAILER.unpack_from(data,end)
    if crc != zlib.crc32(payload) & 0xffffffff:
        raise ChecksumError('{}: payload CRC32 mismatch'.format(path))
    r = _Reader(payload)
    iteration,seed = r.unpack('<qq')
    config_hash = r.string()
    digest = r.string()
    actor = r.tensors(True)
    critic = r.tensors(False)
    if digest != checkpointDigest(actor,critic):
        raise IntegrityError('{}: parameter digest mismatch'.format(path))
    return AgentCheckpoint(iteration,actor,critic,seed,config_hash)

def saveCheckpoint(path,ckpt):
    data = encodeCheckpoint(ckpt)
    try:
        with open(path,'wb') as f:
            f.write(data)
    except (IOError,OSError) as e:
        raise CheckpointError('cannot write checkpoint {}: {}'.format(path,e))
    logger.debug('saved iteration {} to {}',ckpt.iteration,path)

def loadCheckpoint(path):
    try:
        with open(path,'rb') as f:
            data = f.read()
    except (IOError,OSError) as e:
        raise CheckpointError('cannot read checkpoint {}: {}'.format(path,e))
    return decodeCheckpoint(data,path)

def checkpointName(iteration):
    return 'ckpt_{}.dgft'.format(iteration)

MetricsKeys = ('iter','wins','losses','draws','surrogate','value_loss',
        'entropy','clip_fraction','seconds')

def writeMetrics(sink,metrics):
    row = OrderedDict((k,getattr(metrics,k)) for k in MetricsKeys)
    sink.write(json.dumps(row)+'\n')
    sink.flush()

def _formatCell(v):
    if v is None:
        return ''
    if isinstance(v,(float,np.floating)):
        return '%.17g' % v
    return str(v)

def writeTrajectory(sink,rows,header=True):
    writer = csv.writer(sink,lineterminator='\n')
    if header:
        writer.writerow(TrajectoryColumns)
    for row in rows:
        writer.writerow([_formatCell(v) for v in row])
    sink.flush()

def readMetrics(path):
    with open(path,'r') as f:
        return [json.loads(line) for line in f if line.strip()]

class CliError(ConfigError):
    pass

class _ArgumentParser(argparse.ArgumentParser):
    def error(self,message):
        self.print_usage(sys.stderr)
        raise CliError(message)

class CmdManager(ProxyType):
    'sub command meta class'

    @classmethod
    def register(mcs,cls):
        if cls._id < 0:
            return
        super(CmdManager,mcs).register(cls)

class CmdBase(with_metaclass(CmdManager, object)):
    _id = -1
    _name = None
    _help = ''

    @classmethod
    def getName(cls):
        return cls._name

    @classmethod
    def addArguments(cls,parser):
        pass

    @classmethod
    def Activated(cls,args):
        raise NotImplementedError

def _loadConfig(args):
    profile = getattr(args,'profile',None) or 'full'
    if getattr(args,'smoke',False):
        profile = 'smoke'
    if getattr(args,'config',None):
        cfg = RunConfig.load(args.config,profile)
    else:
        cfg = RunConfig(profile)
    return cfg

def _settings(cfg):
    return MatchSettings(cfg.envConfig(),cfg.scenarioConfig(),
            cfg.searchConfig())

class CmdTrain(CmdBase):
    _id = 1
    _name = 'train'
    _help = 'run the self play training protocol'

    @classmethod
    def addArguments(cls,parser):
        parser.add_argument('--config',help='INI configuration file')
        parser.add_argument('--seed',type=int,help='master seed')
        parser.add_argument('--out',help='output directory')
        parser.add_argument('--no-mcts',action='store_true',
                help='plain PPO ablation, no tree search')
        parser.add_argument('--smoke',action='store_true',
                help='use the smoke profile')
        parser.add_argument('--profile',choices=Profile.getTypeNames())
        parser.add_argument('--iterations',type=int)
        parser.add_argument('--workers',type=int)

    @classmethod
    def Activated(cls,args):
        cfg = _loadConfig(args)
        for key in ('seed','out','iterations','workers'):
            value = getattr(args,key)
            if value is not None:
                setattr(cfg,key,value)
        if args.no_mcts:
            cfg.use_mcts = False
        cfg.validate()
        out = cfg.out
        try:
            os.makedirs(out,exist_ok=True)
            with open(os.path.join(out,'config.ini'),'w') as f:
                f.write(cfg.serialize())
            metrics_file = open(os.path.join(out,'metrics.jsonl'),'w')
            timing_file = open(os.path.join(out,'timing.jsonl'),'w')
        except (IOError,OSError) as e:
            raise RuntimeError('cannot prepare output directory {}: {}'.format(
                out,e))
        logger.msg('training {} iterations, profile {}, seed {}, {} -> {}',
                cfg.iterations,cfg.profile,cfg.seed,
                'PPO-MCTS' if cfg.use_mcts else 'PPO',out)

        def onCheckpoint(ckpt):
            saveCheckpoint(os.path.join(out,checkpointName(ckpt.iteration)),
                    ckpt)

        def onMetrics(m):
            writeMetrics(metrics_file,m)
            timing_file.write(json.dumps(OrderedDict(
                (('iter',m.iter),('wall',m.wall))))+'\n')
            timing_file.flush()

        with metrics_file,timing_file:
            trainLoop(cfg,onCheckpoint,onMetrics)
        return 0

def _matchSides(games):
    return [Side.Blue if g%2==0 else Side.Red for g in range(games)]

class CmdEval(CmdBase):
    _id = 2
    _name = 'eval'
    _help = 'play games between two checkpoints'

    @classmethod
    def addArguments(cls,parser):
        parser.add_argument('--a',required=True,help='checkpoint of agent a')
        parser.add_argument('--b',required=True,help='checkpoint of agent b')
        parser.add_argument('--games',type=int,default=3)
        parser.add_argument('--seed',type=int,default=0)
        parser.add_argument('--mcts-a',action='store_true')
        parser.add_argument('--mcts-b',action='store_true')
        parser.add_argument('--config',help='INI configuration file')

    @classmethod
    def Activated(cls,args):
        if args.games < 1:
            raise CliError('--games must be at least 1')
        settings = _settings(_loadConfig(args))
        a = toAgent(loadCheckpoint(args.a))
        b = toAgent(loadCheckpoint(args.b))
        rng = makeRng(args.seed)
        for game,side in enumerate(_matchSides(args.games)):
            record,_ = playMatch(a,b,args.mcts_a,args.mcts_b,drawSeed(rng),
                    settings,side,game=game)
            sys.stdout.write(json.dumps(OrderedDict((('game',game),
                ('seed',record.seed),('side',record.side),
                ('outcome',record.outcome.value),('length',record.length),
                ('seconds',record.seconds))))+'\n')
        sys.stdout.flush()
        return 0

class CmdReplay(CmdBase):
    _id = 3
    _name = 'replay'
    _help = 'play one game and write its trajectory as CSV'

    @classmethod
    def addArguments(cls,parser):
        parser.add_argument('--ckpt-a',required=True)
        parser.add_argument('--ckpt-b',required=True)
        parser.add_argument('--seed',type=int,default=0)
        parser.add_argument('--traj',required=True,help='CSV output path')
        parser.add_argument('--mcts-a',action='store_true')
        parser.add_argument('--mcts-b',action='store_true')
        parser.add_argument('--config',help='INI configuration file')

    @classmethod
    def Activated(cls,args):
        settings = _settings(_loadConfig(args))
        a = toAgent(loadCheckpoint(args.ckpt_a))
        b = toAgent(loadCheckpoint(args.ckpt_b))
        record,rows = playMatch(a,b,args.mcts_a,args.mcts_b,args.seed,settings,
                record_trajectory=True)
        try:
            with open(args.traj,'w') as f:
                writeTrajectory(f,rows)
        except (IOError,OSError) as e:
            raise RuntimeError('cannot write trajectory {}: {}'.format(
                args.traj,e))
        logger.msg('{} after {:.2f}s, {} rows written to {}',
                record.outcome.value,record.seconds,len(rows),args.traj)
        return 0

class CmdSummary(CmdBase):
    _id = 4
    _name = 'summary'
    _help = 'mean and standard deviation of wins, losses and draws over runs'

    @classmethod
    def addArguments(cls,parser):
        parser.add_argument('metrics',nargs='+',help='metrics.jsonl files')

    @classmethod
    def Activated(cls,args):
        runs = []
        for path in args.metrics:
            try:
                runs.append(dict((row['iter'],row) for row in readMetrics(path)))
            except (IOError,OSError,ValueError,KeyError) as e:
                raise RuntimeError('cannot read metrics {}: {}'.format(path,e))
        iterations = sorted(set.intersection(*[set(r) for r in runs]))
        writer = csv.writer(sys.stdout,lineterminator='\n')
        keys = ('wins','losses','draws')
        writer.writerow(['iter']+['{}_{}'.format(k,s)
            for k in keys for s in ('mean','std')])
        for it in iterations:
            row = [it]
            for k in keys:
                values = np.array([r[it][k] for r in runs],dtype=np.float64)
                row += ['%.17g' % values.mean(),'%.17g' % values.std()]
            writer.writerow(row)
        sys.stdout.flush()
        return 0

def _checkTrim():
    s0 = AircraftState(0.0,0.0,5000.0,300.0,0.0,0.0)
    s = dynamics.integrate(s0,dynamics.trimControls(s0),100.0)
    drift = max(abs(s.z-s0.z),abs(s.v-s0.v))
    return drift < 1e-6,'altitude/speed drift {:.3e}'.format(drift)

def _checkStepHalving():
    s0 = AircraftState(0.0,0.0,5000.0,300.0,0.0,0.0)
    ratio = dynamics.halvingRatio(s0,dynamics.ControlInput(0.5,8.0,1.0),2.0)
    return ratio >= 8,'convergence factor {:.2f}'.format(ratio)

def pnEngagement(target,shooter=None,params=None,dt=dynamics.PHYSICS_DT):
    'Fly a missile against a non maneuvering target until it resolves'
    if shooter is None:
        shooter = AircraftState(0.0,0.0,5000.0,300.0,0.0,0.0)
    if params is None:
        params = missile.MissileParams()
    m = missile.launchMissile(shooter,Side.Blue,Side.Red)
    hold = dynamics.trimControls(target)
    while m.status == missile.MissileStatus.InFlight:
        m = missile.missileStep(m,params,dynamics.position(target),
                dynamics.velocity(target),dt)
        target = dynamics.rk4Step(target,hold,dt)
    return m

def _checkHeadOn():
    m = pnEngagement(AircraftState(5000.0,0.0,5000.0,300.0,0.0,math.pi))
    return m.status == missile.MissileStatus.Hit and m.miss_distance < 30, \
            '{} with miss distance {:.2f}'.format(m.status.name,m.miss_distance)

def _checkCrossing():
    m = pnEngagement(AircraftState(4000.0,0.0,5000.0,250.0,0.0,math.pi/2))
    return m.status == missile.MissileStatus.Hit, \
            '{} with miss distance {:.2f}'.format(m.status.name,m.miss_distance)

def _checkDrag():
    p = missile.MissileParams()
    expect = 0.5*0.607*900.0**2*0.0324*0.9
    got = missile.dragOf(p,900.0)
    return abs(got-expect) <= 1e-9*expect,'drag at 900 m/s {}'.format(got)

def selfcheckBatch(seed=0,n=6):
    rng = np.random.default_rng(seed)
    return Minibatch(rng.uniform(0,1,(n,13)),rng.normal(0,1,(n,4)),
            rng.normal(-5,1,n),rng.normal(0,1,n),rng.uniform(-1,1,n))

def _checkGradients():
    actor = nn.initParams(1,(13,8,8,4),actor=True,log_std=-0.5)
    critic = nn.initParams(2,(13,8,8,1))
    batch = selfcheckBatch()
    # old log densities close to the current ones keep the ratio unclipped
    out = nn.forward(actor,batch.obs)
    batch = batch._replace(old_logp=nn.gaussianLogProb(out,actor.log_std,
        batch.actions)+0.05)
    worst = max(nn.gradientCheck(actor,batch,SurrogateLoss(0.2)),
                nn.gradientCheck(actor,batch,EntropyLoss(0.01)),
                nn.gradientCheck(critic,batch,ValueLoss()),
                nn.gradientCheck(actor,batch,
                    SumLoss(SurrogateLoss(0.2),EntropyLoss(0.01))))
    return worst < 1e-4,'worst relative error {:.3e}'.format(worst)

def _checkCheckpoint():
    actor = nn.initParams(3,(13,8,8,4),actor=True)
    critic = nn.initParams(4,(13,8,8,1))
    ckpt = AgentCheckpoint(1,actor,critic,7,'selfcheck')
    path = os.path.join(tempfile.mkdtemp(prefix='ppomcts'),checkpointName(1))
    saveCheckpoint(path,ckpt)
    back = loadCheckpoint(path)
    ok = back.actor == actor and back.critic == critic \
            and back.iteration == 1 and back.seed == 7
    os.remove(path)
    os.rmdir(os.path.dirname(path))
    return ok,'round trip {}'.format('exact' if ok else 'differs')

def _checkMirror():
    s = reset(11)
    return swapSides(swapSides(s)) == s,'side swap involution'

SelfChecks = OrderedDict((
    ('trim flight',_checkTrim),
    ('step halving',_checkStepHalving),
    ('drag',_checkDrag),
    ('pn head-on',_checkHeadOn),
    ('pn crossing',_checkCrossing),
    ('gradients',_checkGradients),
    ('checkpoint',_checkCheckpoint),
    ('mirror',_checkMirror),
))

class CmdSelfcheck(CmdBase):
    _id = 5
    _name = 'selfcheck'
    _help = 'run the built in invariant checks'

    @classmethod
    def Activated(cls,args):
        equations.logEquations()
        failed = 0
        for name,check in SelfChecks.items():
            started = time.time()
            res = logger.catch('check {} raised'.format(name),check)
            if res is None:
                ok,detail = False,'exception'
            else:
                ok,detail = res
            logger.msg('{:<14} {} ({}, {:.2f}s)',name,'ok' if ok else 'FAIL',
                    detail,time.time()-started)
            failed += 0 if ok else 1
        if failed:
            logger.error('{} of {} checks failed',failed,len(SelfChecks))
            return 2
        return 0

def makeParser():
    parser = _ArgumentParser(prog='ppomcts',
            description='self play air combat with PPO and tree search')
    parser.add_argument('-v','--verbose',action='count',default=0,
            help='more log output, repeat for more')
    parser.add_argument('--version',action='version',version=__version__)
    sub = parser.add_subparsers(dest='command')
    for name in CmdManager.getTypeNames():
        cmd = CmdManager.getType(name)
        cmd.addArguments(sub.add_parser(name,help=cmd._help))
    return parser

def runCli(argv=None):
    parser = makeParser()
    try:
        args = parser.parse_args(argv)
    except CliError as e:
        sys.stderr.write('ppomcts: error: {}\n'.format(e))
        return 1
    except SystemExit as e:
        return e.code or 0
    setupLogging(args.verbose)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    cmd = CmdManager.getType(args.command)
    try:
        return cmd.Activated(args) or 0
    except ConfigError as e:
        logger.error('{}: configuration error: {}',cmd.getName(),e)
        return 1
    except Exception as e:
        logger.error('{} failed: {}: {}',cmd.getName(),type(e).__name__,e)
        logger.debug('traceback',exc_info=True)
        return 2

def main():
    sys.exit(runCli())
