''' Command line interface '''
import json

import pytest

from ziaflock.__main__ import main
from ziaflock.presets import PRESETS


def run(tmp_path, *extra):
    return main(['run', '--preset', 'circle5x5', '--backend', 'scripted:consensus-seeker',
                 '--trials', '2', '--rounds', '25', '--out', str(tmp_path), *extra])


def test_presets(capsys):
    assert main(['presets']) == 0
    out = capsys.readouterr().out
    for name in PRESETS:
        assert name in out


def test_no_command(capsys):
    assert main([]) == 0
    assert 'usage' in capsys.readouterr().out


def test_run(tmp_path, capsys):
    assert run(tmp_path) == 0
    out = capsys.readouterr().out
    assert 'circle5x5: 2 trials (collapsed: 2)' in out
    outdir = tmp_path / 'circle5x5'
    for name in ('trial-0.jsonl', 'trial-1.csv', 'trial-1.metrics.csv', 'summary.json'):
        assert (outdir / name).exists()
    summary = json.loads((outdir / 'summary.json').read_text(encoding='utf-8'))
    assert len(summary['per_round_mae']) == 26


def test_run_needs_scenario(capsys):
    assert main(['run']) == 1
    assert '--preset' in capsys.readouterr().err


def test_bad_config_file(tmp_path, capsys):
    path = tmp_path / 'bad.toml'
    path.write_text('[world]\nagent_count = 1\n', encoding='utf-8')
    assert main(['run', '--config', str(path)]) == 1
    assert 'agent_count' in capsys.readouterr().err


def test_config_file(tmp_path, capsys):
    path = tmp_path / 'pair.toml'
    path.write_text('name = "pairs"\ntrials = 1\n[world]\nagent_count = 2\nrounds = 4\n'
                    '[formation]\nshape = "pair-distance"\ndesired_distance = 10\n'
                    '[agents]\nbackend = "scripted:stubborn"\n', encoding='utf-8')
    assert main(['run', '--config', str(path), '--out', str(tmp_path)]) == 0
    assert (tmp_path / 'pairs' / 'trial-0.jsonl').exists()


def test_replay_plot_report(tmp_path, capsys):
    assert run(tmp_path) == 0
    transcript = tmp_path / 'circle5x5' / 'trial-0.jsonl'
    capsys.readouterr()

    assert main(['replay', str(transcript)]) == 0
    assert 'Identical to' in capsys.readouterr().out
    assert (tmp_path / 'circle5x5' / 'trial-0.replay.csv').exists()
    assert main(['replay', '--rerun', str(transcript)]) == 0

    assert main(['plot', str(transcript), '--out', str(tmp_path / 'plots' / 'trial-0')]) == 0
    assert (tmp_path / 'plots' / 'trial-0-trajectory.svg').exists()
    assert (tmp_path / 'plots' / 'trial-0-mae.svg').exists()

    capsys.readouterr()
    assert main(['report', str(tmp_path / 'circle5x5')]) == 0
    assert 'circle5x5: collapsed: 100%' in capsys.readouterr().out


def test_replay_missing(tmp_path):
    assert main(['replay', str(tmp_path / 'absent.jsonl')]) == 1


def test_version(capsys):
    with pytest.raises(SystemExit):
        main(['--version'])
    assert capsys.readouterr().out.strip() == '0.1'
