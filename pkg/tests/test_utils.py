import math
import logging
import pytest
import numpy as np
from aircombat.ppomcts import utils
from aircombat.ppomcts.CombatLogger import CombatLogger, TRACE, MSG

def test_wrap_angle_range():
    assert utils.wrapAngle(math.pi) == pytest.approx(math.pi)
    assert utils.wrapAngle(-math.pi) == pytest.approx(math.pi)
    assert utils.wrapAngle(3*math.pi) == pytest.approx(math.pi)
    assert utils.wrapAngle(0.5) == pytest.approx(0.5)
    assert utils.wrapAngle(-0.5-4*math.pi) == pytest.approx(-0.5)
    for a in np.linspace(-20,20,101):
        w = utils.wrapAngle(a)
        assert -math.pi < w <= math.pi

def test_clamp_and_finite():
    assert utils.clamp(5,0,1) == 1
    assert utils.clamp(-5,0,1) == 0
    assert utils.clamp(0.25,0,1) == 0.25
    assert utils.isFinite(1.0,2.0)
    assert not utils.isFinite(1.0,float('nan'))
    assert not utils.isFinite(float('inf'))

def test_same_rng_keys_give_same_stream():
    a = utils.makeRng(7,1,2).standard_normal(5)
    b = utils.makeRng(7,1,2).standard_normal(5)
    c = utils.makeRng(7,1,3).standard_normal(5)
    np.testing.assert_array_equal(a,b)
    assert not np.array_equal(a,c)

def test_draw_seed_is_reproducible():
    assert utils.drawSeed(utils.makeRng(3)) == utils.drawSeed(utils.makeRng(3))

def test_setup_logging_levels():
    assert utils.setupLogging(0) == MSG
    assert utils.setupLogging(1) == logging.INFO
    assert utils.setupLogging(2) == logging.DEBUG
    assert utils.setupLogging(9) == TRACE
    utils.setupLogging(0)

def test_logger_tree_names():
    assert utils.dynlogger.name == 'ppomcts.dyn'
    child = CombatLogger('extra',parent=utils.mctslogger)
    assert child.name == 'ppomcts.mcts.extra'

def test_brace_messages(caplog):
    caplog.set_level(logging.DEBUG,logger='ppomcts')
    utils.envlogger.debug('moving {} to {:.1f}','blue',2.25)
    assert 'moving blue to 2.2' in caplog.text

def test_catch_logs_and_swallows(caplog):
    caplog.set_level(logging.WARNING,logger='ppomcts')

    def boom():
        raise ValueError('bad thing')

    assert utils.logger.catchWarn('while testing',boom) is None
    assert 'while testing: bad thing' in caplog.text
    assert utils.logger.catch('x',lambda a,b: a+b,1,2) == 3
