import math
import pytest
from aircombat.ppomcts.config import RunConfig, ConfigError, Profile, Sections
from aircombat.ppomcts.environment import EnvConfig, ScenarioConfig
from aircombat.ppomcts.missile import MissileParams
from aircombat.ppomcts.mcts import SearchConfig
from aircombat.ppomcts.ppo import TrainConfig
from aircombat.ppomcts.proxy import PropertyInfo

def test_defaults():
    cfg = RunConfig()
    assert cfg.iterations == 50
    assert cfg.opponents == 36
    assert cfg.games_per_opponent == 3
    assert cfg.use_mcts is True
    assert cfg.hidden == 256
    assert cfg.trainConfig() == TrainConfig()
    assert cfg.searchConfig() == SearchConfig()
    assert cfg.scenarioConfig() == ScenarioConfig()
    assert cfg.missileParams() == MissileParams()
    assert cfg.envConfig() == EnvConfig()

def test_profiles():
    assert Profile.getTypeNames() == ['full','reduced','smoke']
    assert RunConfig('reduced').opponents == 12
    smoke = RunConfig('smoke')
    assert (smoke.iterations,smoke.batch_size,smoke.opponents) == (10,256,4)
    with pytest.raises(ConfigError):
        RunConfig('huge')

def test_serialize_round_trip():
    cfg = RunConfig(seed=9,use_mcts=False,clip_epsilon=0.1,
            launch_angle=math.pi/4,out='runs/a')
    text = cfg.serialize()
    again = RunConfig.parse(text)
    assert again == cfg
    assert again.serialize() == text
    assert again.launch_angle == math.pi/4
    for section in Sections:
        assert '[{}]'.format(section) in text

def test_parse_overrides_profile():
    cfg = RunConfig.parse('[run]\niterations = 3\n\n[search]\nverbose = yes\n',
            'smoke')
    assert cfg.iterations == 3
    assert cfg.verbose is True
    assert cfg.batch_size == 256

@pytest.mark.parametrize('text', [
    '[run]\nspeed = 3\n',
    '[weapons]\nseed = 1\n',
    '[ppo]\nseed = 1\n',
    '[run]\nseed = many\n',
    '[run]\nuse_mcts = maybe\n',
    'seed = 1\n',
    '[ppo]\nclip_epsilon = 1.5\n',
    '[scenario]\nspeed_min = 500\n',
    '[environment]\ndecision_dt = 0.03\n',
    '[run]\nopponents = 0\n',
    '[missile]\ng0 = -1\n',
])
def test_parse_rejects(text):
    with pytest.raises(ConfigError):
        RunConfig.parse(text)

def test_unknown_keyword():
    with pytest.raises(ConfigError):
        RunConfig(batchsize=12)
    cfg = RunConfig()
    with pytest.raises(ConfigError):
        cfg.batchsize = 12
    with pytest.raises(AttributeError):
        cfg.batchsize

def test_duplicate_setting_rejected():
    seed = Profile.getPropertyInfo('seed')
    with pytest.raises(RuntimeError):
        PropertyInfo(Profile,'seed',int,default=1)
    assert Profile.getPropertyInfo('seed') is seed
    assert seed.Key == 'seed'

def test_config_hash():
    a = RunConfig(seed=1)
    assert a.configHash() == RunConfig(seed=1).configHash()
    assert a.configHash() != RunConfig(seed=2).configHash()
    assert len(a.configHash()) == 64

def test_replace_keeps_original():
    a = RunConfig(seed=1)
    b = a.replace(seed=2,hidden=32)
    assert (a.seed,a.hidden) == (1,256)
    assert (b.seed,b.hidden) == (2,32)

def test_load(tmp_path):
    path = tmp_path/'run.ini'
    path.write_text(RunConfig(seed=4).serialize())
    assert RunConfig.load(str(path)).seed == 4
    with pytest.raises(ConfigError):
        RunConfig.load(str(tmp_path/'missing.ini'))
