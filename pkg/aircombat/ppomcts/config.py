'''
Run configuration: a typed, documented and defaulted table of settings,
named profiles overriding the defaults, and the INI file form
'''

import math
import hashlib
import configparser
from six import with_metaclass
from .proxy import ProxyType, PropertyInfo
from .environment import EnvConfig, ScenarioConfig, checkScenario, \
        checkEnvConfig, ScenarioError
from .missile import MissileParams, MissileConfigError
from .mcts import SearchConfig, checkSearchConfig
from .ppo import TrainConfig, checkTrainConfig
from .utils import harnesslogger as logger

class ConfigError(ValueError):
    pass

class Profile(ProxyType):
    'configuration profile meta class'

Sections = ('run','ppo','search','scenario','environment','missile')

def _makePropInfo(name,tp,doc,group,default,enum=None):
    PropertyInfo(Profile,name,tp,doc,enum,group=group,default=default)

_makePropInfo('seed',int,'master seed of every random stream','run',0)
_makePropInfo('iterations',int,'self play iterations','run',50)
_makePropInfo('opponents',int,'past agents sampled per evaluation','run',36)
_makePropInfo('games_per_opponent',int,'evaluation games per past agent',
        'run',3)
_makePropInfo('use_mcts',bool,'select actions by tree search, false for the '
        'plain PPO ablation','run',True)
_makePropInfo('workers',int,'evaluation processes','run',1)
_makePropInfo('hidden',int,'width of both hidden layers','run',256)
_makePropInfo('out',str,'output directory','run','out')

_makePropInfo('gamma',float,'discount factor','ppo',0.99)
_makePropInfo('gae_lambda',float,'GAE lambda','ppo',0.95)
_makePropInfo('clip_epsilon',float,'surrogate clip range','ppo',0.2)
_makePropInfo('epochs',int,'passes over each rollout buffer','ppo',6)
_makePropInfo('batch_size',int,'minibatch size and minimum buffer size',
        'ppo',1024)
_makePropInfo('actor_lr',float,'actor learning rate','ppo',0.002)
_makePropInfo('critic_lr',float,'critic learning rate','ppo',0.001)
_makePropInfo('entropy_coeff',float,'entropy bonus weight','ppo',0.01)

_makePropInfo('num_actions',int,'actions sampled per node','search',9)
_makePropInfo('num_simulations',int,'simulations per decision','search',20)
_makePropInfo('c_puct',float,'PUCT exploration constant','search',1.25)
_makePropInfo('max_depth',int,'decision steps below the root','search',5)
_makePropInfo('verbose',bool,'log every search at trace level','search',
        False)

_makePropInfo('speed_min',float,'initial speed lower bound','scenario',250.0)
_makePropInfo('speed_max',float,'initial speed upper bound','scenario',400.0)
_makePropInfo('altitude_min',float,'initial altitude lower bound','scenario',
        3000.0)
_makePropInfo('altitude_max',float,'initial altitude upper bound','scenario',
        8000.0)
_makePropInfo('separation_min',float,'initial separation lower bound',
        'scenario',5000.0)
_makePropInfo('separation_max',float,'initial separation upper bound',
        'scenario',15000.0)

_makePropInfo('physics_dt',float,'integration step','environment',0.02)
_makePropInfo('decision_dt',float,'decision step','environment',0.5)
_makePropInfo('max_time',float,'engagement time limit','environment',200.0)
_makePropInfo('floor',float,'altitude below which an aircraft is lost',
        'environment',100.0)
_makePropInfo('launch_range',float,'maximum launch range','environment',
        12000.0)
_makePropInfo('launch_angle',float,'maximum off nose launch angle',
        'environment',math.pi/3)

for _name,_default in zip(MissileParams._fields,MissileParams()):
    _makePropInfo(_name,float,'missile parameter','missile',_default)

class ProfileBase(with_metaclass(Profile, object)):
    _id = -1
    _overrides = {}

    @classmethod
    def getName(cls):
        return cls._name

    @classmethod
    def values(cls):
        ret = dict((p.Name,p.Default) for p in Profile.getPropertyInfos())
        ret.update(cls._overrides)
        return ret

class ProfileFull(ProfileBase):
    'Full protocol: 36 opponents, batch 1024'
    _id = 1
    _name = 'full'

class ProfileReduced(ProfileBase):
    'Desk scale protocol, 12 opponents'
    _id = 2
    _name = 'reduced'
    _overrides = {'iterations':50,'opponents':12}

class ProfileSmoke(ProfileBase):
    'Pipeline liveness check'
    _id = 3
    _name = 'smoke'
    _overrides = {'iterations':10,'batch_size':256,'opponents':4}

class RunConfig(object):
    'Fully defaulted settings of one run, one attribute per setting'

    def __init__(self,profile='full',**kargs):
        try:
            values = Profile.getType(profile).values()
        except KeyError as e:
            raise ConfigError(str(e))
        for key,value in kargs.items():
            if key not in values:
                raise ConfigError('unknown setting "{}"'.format(key))
            values[key] = value
        self.__dict__['_values'] = values
        self.profile = profile

    def __getattr__(self,name):
        try:
            return self.__dict__['_values'][name]
        except KeyError:
            raise AttributeError(name)

    def __setattr__(self,name,value):
        if name == 'profile':
            self.__dict__[name] = value
            return
        if name not in self._values:
            raise ConfigError('unknown setting "{}"'.format(name))
        self._values[name] = value

    def __eq__(self,other):
        return isinstance(other,RunConfig) and self._values==other._values

    def __ne__(self,other):
        return not self.__eq__(other)

    def replace(self,**kargs):
        values = dict(self._values)
        values.update(kargs)
        return RunConfig(self.profile,**values)

    @classmethod
    def parse(cls,text,profile='full'):
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as e:
            raise ConfigError('malformed configuration: {}'.format(e))
        cfg = cls(profile)
        for section in parser.sections():
            if section not in Sections:
                raise ConfigError('unknown section [{}]'.format(section))
            for key,text in parser.items(section):
                try:
                    prop = Profile.getPropertyInfo(key)
                except KeyError:
                    raise ConfigError('unknown key "{}" in [{}]'.format(
                        key,section))
                if prop.Group != section:
                    raise ConfigError('key "{}" belongs to [{}], not '
                        '[{}]'.format(key,prop.Group,section))
                try:
                    cfg._values[key] = prop.parse(text)
                except ValueError as e:
                    raise ConfigError('bad value for {}.{}: {}'.format(
                        section,key,e))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls,path,profile='full'):
        try:
            with open(path,'r') as f:
                text = f.read()
        except (IOError,OSError) as e:
            raise ConfigError('cannot read configuration {}: {}'.format(
                path,e))
        logger.info('load configuration {}',path)
        return cls.parse(text,profile)

    def serialize(self):
        lines = []
        for section in Sections:
            if lines:
                lines.append('')
            lines.append('[{}]'.format(section))
            for prop in Profile.getPropertyInfos():
                if prop.Group == section:
                    lines.append('{} = {}'.format(prop.Name,
                        prop.format(self._values[prop.Name])))
        return '\n'.join(lines)+'\n'

    def configHash(self):
        return hashlib.sha256(self.serialize().encode('utf-8')).hexdigest()

    def trainConfig(self):
        return TrainConfig(*[self._values[k] for k in TrainConfig._fields])

    def searchConfig(self):
        return SearchConfig(*[self._values[k] for k in SearchConfig._fields])

    def scenarioConfig(self):
        v = self._values
        return ScenarioConfig((v['speed_min'],v['speed_max']),
                (v['altitude_min'],v['altitude_max']),
                (v['separation_min'],v['separation_max']))

    def missileParams(self):
        return MissileParams(*[self._values[k] for k in MissileParams._fields])

    def envConfig(self):
        v = self._values
        return EnvConfig(v['physics_dt'],v['decision_dt'],v['max_time'],
                v['floor'],v['launch_range'],v['launch_angle'],
                self.missileParams())

    def validate(self):
        for name in ('iterations','opponents','games_per_opponent','workers',
                'hidden'):
            if self._values[name] < 1:
                raise ConfigError('{} must be at least 1, got {}'.format(
                    name,self._values[name]))
        if self._values['seed'] < 0:
            raise ConfigError('negative seed {}'.format(self._values['seed']))
        try:
            checkTrainConfig(self.trainConfig())
            checkSearchConfig(self.searchConfig())
            checkScenario(self.scenarioConfig())
            checkEnvConfig(self.envConfig())
        except (ValueError,ScenarioError,MissileConfigError) as e:
            raise ConfigError(str(e))
        return self
