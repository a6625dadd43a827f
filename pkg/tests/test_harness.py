import io
import os
import csv
import json
import struct
import zlib
import pytest
import numpy as np
from aircombat.ppomcts import harness, nn
from aircombat.ppomcts.config import RunConfig
from aircombat.ppomcts.selfplay import AgentCheckpoint, IterationMetrics

def makeCheckpoint(iteration=3):
    return AgentCheckpoint(iteration,
            nn.initParams(1,(13,8,8,4),actor=True,log_std=-0.3),
            nn.initParams(2,(13,8,8,1)),12345,'abc')

def test_checkpoint_round_trip(tmp_path):
    ckpt = makeCheckpoint()
    path = str(tmp_path/harness.checkpointName(3))
    harness.saveCheckpoint(path,ckpt)
    back = harness.loadCheckpoint(path)
    assert back.actor == ckpt.actor
    assert back.critic == ckpt.critic
    assert (back.iteration,back.seed,back.config_hash) == (3,12345,'abc')
    assert back.actor.isActor and not back.critic.isActor
    assert os.path.basename(path) == 'ckpt_3.dgft'

def test_flipped_byte_fails_checksum():
    data = bytearray(harness.encodeCheckpoint(makeCheckpoint()))
    data[100] ^= 0x01
    with pytest.raises(harness.ChecksumError):
        harness.decodeCheckpoint(bytes(data))

def test_version_mismatch():
    data = bytearray(harness.encodeCheckpoint(makeCheckpoint()))
    struct.pack_into('<I',data,4,99)
    with pytest.raises(harness.VersionMismatchError):
        harness.decodeCheckpoint(bytes(data))

def test_bad_magic():
    data = b'XXXX'+harness.encodeCheckpoint(makeCheckpoint())[4:]
    with pytest.raises(harness.BadMagicError):
        harness.decodeCheckpoint(data)

def test_truncated():
    data = harness.encodeCheckpoint(makeCheckpoint())
    for size in (5,len(data)-1):
        with pytest.raises(harness.TruncatedCheckpointError):
            harness.decodeCheckpoint(data[:size])

def test_digest_mismatch():
    ckpt = makeCheckpoint()
    data = harness.encodeCheckpoint(ckpt)
    digest = harness.checkpointDigest(ckpt.actor,ckpt.critic).encode('ascii')
    size = harness._HEADER.size
    payload = data[size:-4]
    forged = digest[:-1]+(b'0' if digest[-1:] != b'0' else b'1')
    payload = payload.replace(digest,forged)
    data = harness._HEADER.pack(harness.MAGIC,harness.VERSION,len(payload)) + \
            payload + struct.pack('<I',zlib.crc32(payload) & 0xffffffff)
    with pytest.raises(harness.IntegrityError):
        harness.decodeCheckpoint(data)

def test_missing_checkpoint(tmp_path):
    with pytest.raises(harness.CheckpointError):
        harness.loadCheckpoint(str(tmp_path/'none.dgft'))

def test_write_metrics():
    sink = io.StringIO()
    harness.writeMetrics(sink,IterationMetrics(1,2,3,4,0.5,0.25,5.6,0.1,0.01,
        12.5,3.0))
    line = sink.getvalue()
    assert line.endswith('\n')
    row = json.loads(line)
    assert list(row) == list(harness.MetricsKeys)
    assert row['iter'] == 1 and row['draws'] == 4 and row['seconds'] == 12.5

def test_write_trajectory():
    sink = io.StringIO()
    harness.writeTrajectory(sink,[(0.1,'blue',1,2,3,4,5,6,None,None,None,
        'Ongoing')])
    rows = list(csv.reader(io.StringIO(sink.getvalue())))
    assert tuple(rows[0]) == harness.TrajectoryColumns
    assert rows[1][0] == '0.10000000000000001'
    assert rows[1][8:11] == ['','','']
    assert float(rows[1][0]) == 0.1

def test_selfcheck_gradients_batch():
    batch = harness.selfcheckBatch()
    assert batch.obs.shape == (6,13)

def test_pn_engagements_hit():
    from aircombat.ppomcts.dynamics import AircraftState
    from aircombat.ppomcts.missile import MissileStatus
    m = harness.pnEngagement(AircraftState(5000.0,0.0,5000.0,300.0,0.0,np.pi))
    assert m.status == MissileStatus.Hit

def test_cli_usage_errors(capsys):
    assert harness.runCli(['train','--bogus']) == 1
    assert harness.runCli(['fly']) == 1
    assert harness.runCli([]) == 1
    assert harness.runCli(['eval','--a','x']) == 1

def test_cli_bad_config(tmp_path):
    path = tmp_path/'bad.ini'
    path.write_text('[run]\nseeds = 1\n')
    assert harness.runCli(['train','--config',str(path)]) == 1

def test_cli_missing_checkpoint(tmp_path):
    assert harness.runCli(['eval','--a',str(tmp_path/'a'),'--b',
        str(tmp_path/'b')]) == 2

def test_cli_selfcheck():
    assert harness.runCli(['selfcheck']) == 0

def tinyConfig(tmp_path):
    cfg = RunConfig('smoke',iterations=2,hidden=16,batch_size=64,epochs=2,
            opponents=2,games_per_opponent=1,max_time=10.0,num_actions=3,
            num_simulations=2,max_depth=2)
    path = tmp_path/'tiny.ini'
    path.write_text(cfg.serialize())
    return str(path)

@pytest.fixture(scope='module')
def trained(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp('run')
    config = tinyConfig(tmp_path)
    out = str(tmp_path/'out')
    assert harness.runCli(['train','--config',config,'--out',out,
        '--seed','3']) == 0
    return config,out

def test_cli_train_outputs(trained):
    config,out = trained
    metrics = harness.readMetrics(os.path.join(out,'metrics.jsonl'))
    assert [m['iter'] for m in metrics] == [1,2]
    assert [m['wins']+m['losses']+m['draws'] for m in metrics] == [1,2]
    assert os.path.exists(os.path.join(out,'ckpt_1.dgft'))
    assert os.path.exists(os.path.join(out,'ckpt_2.dgft'))
    timing = harness.readMetrics(os.path.join(out,'timing.jsonl'))
    assert len(timing) == 2
    saved = RunConfig.load(os.path.join(out,'config.ini'),'smoke')
    assert saved.seed == 3 and saved.iterations == 2
    ckpt = harness.loadCheckpoint(os.path.join(out,'ckpt_2.dgft'))
    assert ckpt.config_hash == saved.configHash()

def test_cli_train_metrics_repeat_bytewise(trained,tmp_path):
    config,out = trained
    again = str(tmp_path/'again')
    assert harness.runCli(['train','--config',config,'--out',again,
        '--seed','3']) == 0
    for name in ('metrics.jsonl','ckpt_2.dgft'):
        with open(os.path.join(out,name),'rb') as f:
            first = f.read()
        with open(os.path.join(again,name),'rb') as f:
            assert f.read() == first

@pytest.mark.slow
def test_cli_smoke_metrics_repeat_bytewise(tmp_path):
    data = []
    for run in ('a','b'):
        out = str(tmp_path/run)
        assert harness.runCli(['train','--smoke','--seed','7','--out',
            out]) == 0
        with open(os.path.join(out,'metrics.jsonl'),'rb') as f:
            data.append(f.read())
    assert data[0] and data[0] == data[1]

def test_cli_eval(trained,capsys):
    config,out = trained
    capsys.readouterr()
    assert harness.runCli(['eval','--a',os.path.join(out,'ckpt_2.dgft'),
        '--b',os.path.join(out,'ckpt_1.dgft'),'--games','3','--config',
        config]) == 0
    lines = capsys.readouterr().out.strip().split('\n')
    games = [json.loads(line) for line in lines]
    assert [g['game'] for g in games] == [0,1,2]
    assert [g['side'] for g in games] == ['blue','red','blue']
    assert all(g['outcome'] in ('Win','Loss','Draw') for g in games)

def test_cli_replay(trained):
    config,out = trained
    traj = os.path.join(out,'replay.csv')
    args = ['replay','--ckpt-a',os.path.join(out,'ckpt_2.dgft'),
        '--ckpt-b',os.path.join(out,'ckpt_1.dgft'),'--seed','5','--traj',
        traj,'--config',config]
    assert harness.runCli(args) == 0
    with open(traj) as f:
        first = f.read()
    assert harness.runCli(args) == 0
    with open(traj) as f:
        assert f.read() == first
    rows = list(csv.reader(io.StringIO(first)))
    assert tuple(rows[0]) == harness.TrajectoryColumns
    assert len(rows) >= 3
    assert rows[1][1] == 'blue' and rows[2][1] == 'red'

def test_cli_summary(tmp_path,capsys):
    paths = []
    for n,wins in enumerate((2,4)):
        path = tmp_path/'m{}.jsonl'.format(n)
        with open(str(path),'w') as f:
            harness.writeMetrics(f,IterationMetrics(1,wins,1,0,0,0,0,0,0,0,0))
        paths.append(str(path))
    capsys.readouterr()
    assert harness.runCli(['summary']+paths) == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][:3] == ['iter','wins_mean','wins_std']
    assert rows[1][:3] == ['1','3','1']
