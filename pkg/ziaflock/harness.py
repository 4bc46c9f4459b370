''' Batches of trials, replay, and aggregate reports '''
from __future__ import annotations
from typing import Any, Optional, Sequence, Union
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
import json
import logging

import numpy as np

from .world import WorldState, step_world
from .metrics import LABELS, ClassifierThresholds, metric_point
from .config import ExperimentConfig
from .brains import Brain
from .chat import ChatClient, ReplayChatClient
from .episode import run_episode, build_backends
from .transcript import (Transcript, read_transcript, write_trajectory_csv, write_metrics_csv,
                         FAILED)
from .errors import TranscriptError


logger = logging.getLogger(__name__)

FAILED_LABEL = 'failed'


def trial_paths(outdir: Path, k: int) -> tuple[Path, Path, Path]:
    ''' Transcript, trajectory CSV, and metrics CSV paths of trial k '''
    return (outdir / f'trial-{k}.jsonl', outdir / f'trial-{k}.csv', outdir / f'trial-{k}.metrics.csv')


def run_matrix(cfg: ExperimentConfig, out: Union[str, Path, None] = None,
               client: Optional[ChatClient] = None, jobs: int = 1) -> list[Transcript]:
    ''' Run cfg.trials episodes with seeds cfg.seed, cfg.seed+1, ...

        Args:
            cfg: Experiment configuration
            out: Directory for outputs. Files go to <out>/<cfg.name>/. None keeps
                everything in memory.
            client: Chat client for chat agents. None connects to the configured endpoint.
            jobs: Trials run concurrently

        Returns:
            Transcripts ordered by trial index. Failed trials are included
            with status 'failed'.
    '''
    cfg.validate()
    outdir = Path(out) / cfg.name if out is not None else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)

    def trial(k: int) -> Transcript:
        backends = build_backends(cfg, client)
        path = trial_paths(outdir, k)[0] if outdir else None
        t = run_episode(cfg, backends, seed=cfg.seed + k, trial=k, path=path)
        if outdir:
            _, csvpath, metricspath = trial_paths(outdir, k)
            write_trajectory_csv(t, csvpath)
            write_metrics_csv(t.series(), metricspath)
        return t

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            transcripts = list(pool.map(trial, range(cfg.trials)))
    else:
        transcripts = [trial(k) for k in range(cfg.trials)]

    summary = summarize(transcripts)
    if outdir:
        (outdir / 'summary.json').write_text(json.dumps(summary, indent=2) + '\n', encoding='utf-8')
    logger.info('%s: %s', cfg.name, ', '.join(f'{k} {v}' for k, v in summary['outcomes'].items() if v))
    return transcripts


def outcome_of(t: Transcript) -> str:
    ''' Outcome label, or 'failed' for failed episodes '''
    if t.status == FAILED or t.outcome is None:
        return FAILED_LABEL
    return t.outcome.label


def summarize(transcripts: Sequence[Transcript]) -> dict[str, Any]:
    ''' Aggregate statistics of a batch of transcripts of one scenario '''
    if not transcripts:
        raise TranscriptError('No transcripts to summarize')
    first = transcripts[0]
    series = [t.series().mae for t in transcripts]
    per_round = []
    for rnd in range(max(len(s) for s in series)):
        values = [s[rnd] for s in series if len(s) > rnd]
        per_round.append({'round': rnd, 'mean': float(np.mean(values)),
                          'min': float(np.min(values)), 'max': float(np.max(values)),
                          'trials': len(values)})

    outcomes = {label: 0 for label in LABELS + (FAILED_LABEL,)}
    for t in transcripts:
        outcomes[outcome_of(t)] += 1

    calls = sum(t.calls for t in transcripts)
    failures = sum(t.parse_failures for t in transcripts)
    finals = [s[-1] for s in series if s]
    return {
        'name': first.config.name,
        'digest': first.config.digest(),
        'trials': len(transcripts),
        'seeds': [t.seed for t in transcripts],
        'outcomes': outcomes,
        'mean_final_mae': float(np.mean(finals)) if finals else None,
        'calls': calls,
        'parse_failures': failures,
        'parse_failures_per_100_calls': 100 * failures / calls if calls else 0.,
        'episode_failure_rate': outcomes[FAILED_LABEL] / len(transcripts),
        'per_round_mae': per_round,
    }


def replay(path: Union[str, Path], rerun: bool = False) -> Transcript:
    ''' Regenerate an episode from its transcript.

        Args:
            path: Transcript file
            rerun: Run the decision-makers again instead of re-applying the
                stored decisions. Chat agents are re-served their recorded replies.
    '''
    t = read_transcript(path)
    if rerun:
        client = ReplayChatClient.from_transcript(t)
        backends = {i: Brain.fromspec(spec, i, t.config, client=client) for i, spec in t.backends.items()}
        new = run_episode(t.config, backends, seed=t.seed, trial=t.trial)
        if new.initial != t.initial:
            raise TranscriptError(f'{path}: seed {t.seed} does not reproduce the recorded start')
        return new

    d = t.config.formation.desired_distance
    limits = t.config.limits
    state = WorldState.initial(t.initial, t.stationary)
    new = Transcript(config=t.config, seed=t.seed, trial=t.trial, initial=list(t.initial),
                     stationary=list(t.stationary), backends=dict(t.backends),
                     sampling=dict(t.sampling),
                     initial_metrics=metric_point(0, t.initial, d))
    for stored in t.rounds:
        state, record = step_world(state, stored.decisions, limits)
        record.metrics = metric_point(state.round, state.positions, d)
        new.rounds.append(record)
    new.status = t.status
    new.failure = t.failure
    new.outcome = t.outcome
    new.usage = t.usage
    new.wall_clock = t.wall_clock
    return new


def _pct(count: int, total: int) -> str:
    return f'{100*count/total:.0f}%'


def report_data(directory: Union[str, Path]) -> dict[str, Any]:
    ''' Summaries of every scenario found under directory '''
    directory = Path(directory)
    paths = sorted(directory.rglob('*.jsonl'))
    if not paths:
        raise TranscriptError(f'No transcripts found in {directory}')
    groups: dict[tuple[str, str], list[Transcript]] = {}
    for path in paths:
        t = read_transcript(path)
        groups.setdefault((t.config.name, t.config.digest()), []).append(t)

    scenarios = []
    for (name, digest), transcripts in sorted(groups.items()):
        summary = summarize(sorted(transcripts, key=lambda t: t.trial))
        summary.pop('per_round_mae')
        scenarios.append(summary)
    return {'scenarios': scenarios,
            'classifier': asdict(ClassifierThresholds()),
            'note': ('Outcome thresholds are conventions: flocked means final MAE within the '
                     'margin; collapsed, diverged, and oscillating use the thresholds listed.')}


def format_report(data: dict[str, Any]) -> str:
    ''' Fixed-width table of report_data() '''
    columns = LABELS + (FAILED_LABEL,)
    head = f'{"scenario":<24}{"digest":<14}{"trials":>7}' + ''.join(f'{c:>13}' for c in columns)
    head += f'{"final MAE":>11}{"parse/100":>11}{"ep. fail":>10}'
    lines = [head, '-' * len(head)]
    for s in data['scenarios']:
        n = s['trials']
        row = f'{s["name"]:<24}{s["digest"]:<14}{n:>7}'
        row += ''.join(f'{_pct(s["outcomes"][c], n):>13}' for c in columns)
        mae = s['mean_final_mae']
        row += f'{"-" if mae is None else f"{mae:.3f}":>11}'
        row += f'{s["parse_failures_per_100_calls"]:>11.2f}{s["episode_failure_rate"]:>10.0%}'
        lines.append(row)
    lines.append('')
    for s in data['scenarios']:
        n = s['trials']
        counts = ', '.join(f'{c}: {_pct(k, n)}' for c, k in s['outcomes'].items() if k)
        lines.append(f'{s["name"]}: {counts}')
    lines.append('')
    th = data['classifier']
    lines.append(f'Classifier conventions: margin {th["margin"]:g} over {th["flocked_rounds"]} rounds; '
                 f'collapse below {th["collapse_ratio"]:g}·d with {th["collapse_shrink"]:.0%} shrink; '
                 f'divergence above {th["diverge_ratio"]:g}·d with {th["diverge_growth"]:.0%} growth; '
                 f'oscillation {th["oscillation_flips"]} sign changes in {th["oscillation_window"]} rounds.')
    return '\n'.join(lines) + '\n'


def report(directory: Union[str, Path]) -> Path:
    ''' Write report.txt and report.json into directory. Returns the report.txt path. '''
    directory = Path(directory)
    data = report_data(directory)
    (directory / 'report.json').write_text(json.dumps(data, indent=2) + '\n', encoding='utf-8')
    path = directory / 'report.txt'
    path.write_text(format_report(data), encoding='utf-8')
    return path
