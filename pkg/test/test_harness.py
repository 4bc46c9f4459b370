''' Batches, replay, and reports '''
import json

import numpy as np
import pytest

from ziaflock.metrics import OutcomeLabel, mae
from ziaflock.chat import ScriptedChatClient
from ziaflock.harness import run_matrix, replay, report, report_data, summarize, trial_paths
from ziaflock.transcript import (FAILED, read_transcript, write_transcript, transcript_text,
                                 trajectory_csv, read_trajectory_csv)
from ziaflock.presets import PRESETS, preset
from ziaflock.errors import TranscriptError, ConfigError

from conftest import experiment


def test_run_matrix_files(tmp_path, quiet_logs):
    cfg = experiment('scripted:consensus-seeker', trials=3, name='gather')
    transcripts = run_matrix(cfg, tmp_path)
    assert [t.trial for t in transcripts] == [0, 1, 2]
    assert [t.seed for t in transcripts] == [0, 1, 2]
    outdir = tmp_path / 'gather'
    for k in range(3):
        for path in trial_paths(outdir, k):
            assert path.exists()
    summary = json.loads((outdir / 'summary.json').read_text(encoding='utf-8'))
    assert summary['trials'] == 3
    assert summary['outcomes']['collapsed'] == 3
    assert summary['calls'] == 0
    assert len(summary['per_round_mae']) == 26


def test_consensus_matrix_all_collapsed(quiet_logs):
    cfg = experiment('scripted:consensus-seeker', trials=10)
    transcripts = run_matrix(cfg, jobs=3)
    assert len(transcripts) == 10
    assert all(t.outcome.label == 'collapsed' for t in transcripts)


def test_oracle_flocks(quiet_logs):
    cfg = experiment('oracle', trials=10)
    cfg.world.init_bounds = 10.
    transcripts = run_matrix(cfg)
    flocked = [t for t in transcripts if t.outcome.label == 'flocked']
    assert len(flocked) >= 9


def test_one_stationary(quiet_logs):
    cfg = experiment('scripted:consensus-seeker', agents=2, shape='pair-distance', distance=10,
                     trials=1, stationary=[0])
    t, = run_matrix(cfg)
    assert all(p[0] == t.initial[0] for p in t.trajectory())


def test_failed_trials_continue(quiet_logs):
    cfg = experiment('chat', agents=2, shape='pair-distance', distance=10, trials=3, rounds=2)
    client = ScriptedChatClient(['Position: [0.00, 0.00]'] * 6)
    transcripts = run_matrix(cfg, client=client)
    assert [t.status for t in transcripts] == ['completed', 'failed', 'failed']
    summary = summarize(transcripts)
    assert summary['outcomes']['failed'] == 2
    assert summary['episode_failure_rate'] == pytest.approx(2/3)


def test_replay_scripted(tmp_path, quiet_logs):
    cfg = experiment('scripted:diverger', agents=3, shape='triangle', trials=1, rounds=6, name='flee')
    run_matrix(cfg, tmp_path)
    path, csvpath, _ = trial_paths(tmp_path / 'flee', 0)
    for rerun in (False, True):
        t = replay(path, rerun=rerun)
        assert transcript_text(t) == path.read_text(encoding='utf-8')
        assert trajectory_csv(t) == csvpath.read_text(encoding='utf-8')


def test_replay_live(tmp_path, quiet_logs):
    cfg = experiment('chat', agents=2, shape='pair-distance', distance=10, trials=1, rounds=4, name='talk')
    replies = {0: ['no position here', 'Reasoning: closer. Position: [1.25, 0.50]'],
               1: ['Reasoning: wait. Position: [8.00, -1.00]']}
    run_matrix(cfg, tmp_path, client=ScriptedChatClient(replies, cycle=True))
    path, csvpath, _ = trial_paths(tmp_path / 'talk', 0)
    t = replay(path, rerun=True)
    assert trajectory_csv(t) == csvpath.read_text(encoding='utf-8')
    assert t.parse_failures == read_transcript(path).parse_failures == 4


def test_replay_truncated(tmp_path, quiet_logs):
    cfg = experiment(trials=1, rounds=3, name='cut')
    run_matrix(cfg, tmp_path)
    path = trial_paths(tmp_path / 'cut', 0)[0]
    lines = path.read_text(encoding='utf-8').splitlines(keepends=True)
    path.write_text(''.join(lines[:-2]), encoding='utf-8')
    with pytest.raises(TranscriptError):
        replay(path)


def test_report_all_collapsed(tmp_path, quiet_logs):
    cfg = experiment('scripted:consensus-seeker', trials=10, name='gather')
    run_matrix(cfg, tmp_path)
    text = report(tmp_path).read_text(encoding='utf-8')
    assert 'gather: collapsed: 100%' in text
    assert 'Classifier conventions' in text
    data = json.loads((tmp_path / 'report.json').read_text(encoding='utf-8'))
    assert data['scenarios'][0]['outcomes']['collapsed'] == 10


def test_report_mixed(tmp_path, quiet_logs):
    cfg = experiment('scripted:consensus-seeker', trials=10, name='mixed')
    transcripts = run_matrix(cfg)
    for t in transcripts[6:]:
        t.outcome = OutcomeLabel('diverged', 'relabeled')
    for t in transcripts:
        write_transcript(t, tmp_path / f'trial-{t.trial}.jsonl')
    text = report(tmp_path).read_text(encoding='utf-8')
    assert 'mixed: collapsed: 60%, diverged: 40%' in text


def test_report_live_parse_rate(tmp_path, quiet_logs):
    cfg = experiment('chat', agents=2, shape='pair-distance', distance=10, trials=2, rounds=5, name='talk')
    replies = {0: ['garbage', 'Position: [1.00, 1.00]'], 1: ['Position: [9.00, 9.00]']}
    run_matrix(cfg, tmp_path, client=ScriptedChatClient(replies, cycle=True))
    scenario, = report_data(tmp_path)['scenarios']
    assert scenario['calls'] == 2 * 5 * 3
    assert scenario['parse_failures'] == 2 * 5
    assert scenario['parse_failures_per_100_calls'] == pytest.approx(100 / 3)


def test_report_mae_matches_csv(tmp_path, quiet_logs):
    cfg = experiment('scripted:consensus-seeker', trials=4, rounds=3, name='check')
    cfg.agents.backends = {0: 'scripted:diverger'}
    run_matrix(cfg.validate(), tmp_path)
    scenario, = report_data(tmp_path)['scenarios']
    finals = [mae(read_trajectory_csv(trial_paths(tmp_path / 'check', k)[1])[-1], 5) for k in range(4)]
    assert scenario['mean_final_mae'] == pytest.approx(float(np.mean(finals)), abs=1E-9)


def test_report_empty(tmp_path):
    with pytest.raises(TranscriptError):
        report(tmp_path)


def test_presets():
    assert len(PRESETS) >= 6
    for name in PRESETS:
        cfg = preset(name).validate()
        assert cfg.name == name
        assert cfg.trials == 10
        assert cfg.world.rounds == 25
    assert preset('pair10-one-stationary').world.stationary_ids == [0]
    with pytest.raises(ConfigError):
        preset('nonsense')


def test_summary_digest_matches_report(tmp_path, quiet_logs):
    cfg = experiment('scripted:consensus-seeker', agents=2, shape='pair-distance', distance=10,
                     trials=2, rounds=3, name='pair')
    cfg.world.max_velocity = 3
    run_matrix(cfg, tmp_path)
    summary = json.loads((tmp_path / 'pair' / 'summary.json').read_text(encoding='utf-8'))
    report(tmp_path)
    data = json.loads((tmp_path / 'report.json').read_text(encoding='utf-8'))
    assert [s['digest'] for s in data['scenarios']] == [summary['digest']] == [cfg.digest()]


def test_replay_strict_failure(tmp_path, quiet_logs):
    cfg = experiment('chat', agents=2, shape='pair-distance', distance=10, trials=1, rounds=4,
                     name='strict', max_attempts=2)
    cfg.strict = True
    replies = {0: ['Position: [1.00, 1.00]', 'garbage', 'garbage'], 1: ['Position: [9.00, 9.00]']}
    run_matrix(cfg, tmp_path, client=ScriptedChatClient(replies, cycle=True))
    path = trial_paths(tmp_path / 'strict', 0)[0]
    recorded = read_transcript(path)
    assert recorded.status == FAILED
    assert recorded.failure['round'] == 1
    assert [a['agent'] for a in recorded.failure['attempts']] == [0, 0, 1]
    t = replay(path, rerun=True)
    assert t.status == FAILED
    assert t.failure['cause'] == 'format-failure'
    assert t.failure == recorded.failure
    assert t.calls == recorded.calls == 5


def test_replay_fail_episode(tmp_path, quiet_logs):
    cfg = experiment('chat', agents=2, shape='pair-distance', distance=10, trials=1, rounds=3,
                     name='giveup', max_attempts=2, on_exhaustion='fail-episode')
    run_matrix(cfg, tmp_path, client=ScriptedChatClient(['garbage'], cycle=True))
    path = trial_paths(tmp_path / 'giveup', 0)[0]
    t = replay(path, rerun=True)
    assert t.failure == read_transcript(path).failure
    assert t.failure['cause'] == 'format-failure'
