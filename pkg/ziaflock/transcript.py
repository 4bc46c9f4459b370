''' Episode transcripts: JSON-lines persistence and CSV export '''
from __future__ import annotations
from typing import Any, IO, Iterator, Optional, Sequence, Union
from dataclasses import dataclass, field
from pathlib import Path
import csv
import io
import json

import numpy as np

from .geometry import Vec2, asarray, nearest_neighbors
from .world import Attempt, Decision, RoundRecord
from .metrics import MetricPoint, MetricSeries, OutcomeLabel
from .config import ExperimentConfig, todict, fromdict, config as globalconfig
from .errors import TranscriptError, SchemaVersionError, ConfigError

SCHEMA = 1

COMPLETED = 'completed'
FAILED = 'failed'
RUNNING = 'running'

USAGE_KEYS = ('prompt_tokens', 'completion_tokens', 'total_tokens')


@dataclass
class Transcript:
    ''' Replayable record of one episode

        Args:
            config: Experiment configuration snapshot
            seed: Seed the initial positions were drawn from
            trial: Trial index within the batch
            initial: Round-0 positions in id order
            stationary: Ids of stationary agents
            backends: Backend spec per agent id
            sampling: Sampling parameters sent to chat endpoints
            rounds: One record per completed round
            initial_metrics: Metrics of the round-0 positions
            status: 'completed', 'failed', or 'running'
            failure: Round, cause, message, and the endpoint calls (with agent
                ids) of the round that ended a failed episode
            outcome: Classification of the completed episode
            usage: Token totals over all endpoint calls
            wall_clock: Seconds taken, for live runs
    '''
    config: ExperimentConfig
    seed: int
    trial: int
    initial: list[Vec2]
    stationary: list[int] = field(default_factory=list)
    backends: dict[int, str] = field(default_factory=dict)
    sampling: dict = field(default_factory=dict)
    rounds: list[RoundRecord] = field(default_factory=list)
    initial_metrics: Optional[MetricPoint] = None
    status: str = RUNNING
    failure: Optional[dict] = None
    outcome: Optional[OutcomeLabel] = None
    usage: dict = field(default_factory=dict)
    wall_clock: Optional[float] = None

    @property
    def live(self) -> bool:
        ''' Any agent talked to a chat endpoint '''
        return any(b == 'chat' for b in self.backends.values())

    def trajectory(self) -> list[list[Vec2]]:
        ''' Positions at every round, round 0 first '''
        return [list(self.initial)] + [list(r.after) for r in self.rounds]

    def series(self) -> MetricSeries:
        ''' Stored metrics as a series, round 0 included '''
        series = MetricSeries()
        if self.initial_metrics is not None:
            series.append(self.initial_metrics, self.initial)
        for r in self.rounds:
            if r.metrics is not None:
                series.append(r.metrics, r.after)
        return series

    def attempts(self) -> Iterator[Attempt]:
        for r in self.rounds:
            for d in r.decisions.values():
                yield from d.attempts
        for _, a in self.failed_attempts():
            yield a

    def failed_attempts(self) -> list[tuple[int, Attempt]]:
        ''' (agent id, attempt) for every endpoint call of the round that ended a failed episode '''
        if not self.failure:
            return []
        return [(int(a['agent']), Attempt(a['raw'], a['status'], dict(a.get('usage', {}))))
                for a in self.failure.get('attempts', [])]

    @property
    def calls(self) -> int:
        ''' Endpoint calls made '''
        return sum(1 for _ in self.attempts())

    @property
    def parse_failures(self) -> int:
        ''' Endpoint calls whose answer could not be read '''
        return sum(1 for a in self.attempts() if a.status != 'ok')

    def total_usage(self) -> dict[str, int]:
        totals = {k: 0 for k in USAGE_KEYS}
        for a in self.attempts():
            for k in USAGE_KEYS:
                value = a.usage.get(k)
                if isinstance(value, (int, float)):
                    totals[k] += int(value)
        return totals


def _vec(v: Optional[Vec2]) -> Optional[list[float]]:
    return None if v is None else [v.x, v.y]


def _points(points: Sequence[Vec2]) -> list[list[float]]:
    return [[p.x, p.y] for p in points]


def _metrics(m: Optional[MetricPoint]) -> Optional[dict]:
    if m is None:
        return None
    return {'round': m.round, 'mae': m.mae, 'min_dist': m.min_dist, 'max_dist': m.max_dist,
            'centroid': _vec(m.centroid), 'spread': m.spread, 'nearest': list(m.nearest)}


def _decision(d: Decision) -> dict:
    return {'target': _vec(d.target),
            'reasoning': d.reasoning,
            'acceleration': _vec(d.acceleration),
            'held': d.held,
            'attempts': [{'raw': a.raw, 'status': a.status, 'usage': a.usage} for a in d.attempts]}


def header_record(t: Transcript) -> dict:
    return {'type': 'header',
            'schema': SCHEMA,
            'config': todict(t.config),
            'seed': t.seed,
            'trial': t.trial,
            'initial': _points(t.initial),
            'stationary': sorted(t.stationary),
            'backends': {str(k): v for k, v in sorted(t.backends.items())},
            'sampling': t.sampling,
            'metrics': _metrics(t.initial_metrics)}


def round_record(r: RoundRecord) -> dict:
    return {'type': 'round',
            'round': r.round,
            'before': _points(r.before),
            'after': _points(r.after),
            'decisions': {str(k): _decision(d) for k, d in sorted(r.decisions.items())},
            'clamped': list(r.clamped),
            'safe_violations': [[i, j, d] for i, j, d in r.safe_violations],
            'metrics': _metrics(r.metrics)}


def footer_record(t: Transcript) -> dict:
    rec: dict[str, Any] = {
        'type': 'footer',
        'status': t.status,
        'failure': t.failure,
        'outcome': None if t.outcome is None else {'label': t.outcome.label,
                                                   'evidence': t.outcome.evidence},
        'usage': t.usage}
    if t.wall_clock is not None:
        rec['wall_clock'] = t.wall_clock
    return rec


def dumps(record: dict) -> str:
    ''' One JSON line, UTF-8 text, no trailing newline '''
    return json.dumps(record, ensure_ascii=False, allow_nan=False)


class TranscriptWriter:
    ''' Write a transcript incrementally, flushing after every record

        Args:
            path: Output .jsonl file
    '''
    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._file: Optional[IO[str]] = None

    def __enter__(self) -> 'TranscriptWriter':
        self._file = open(self.path, 'w', encoding='utf-8', newline='\n')
        return self

    def __exit__(self, *exc) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None

    def _write(self, record: dict) -> None:
        if self._file is None:
            raise TranscriptError(f'Transcript {self.path} is not open for writing')
        self._file.write(dumps(record) + '\n')
        self._file.flush()

    def header(self, t: Transcript) -> None:
        self._write(header_record(t))

    def round(self, r: RoundRecord) -> None:
        self._write(round_record(r))

    def footer(self, t: Transcript) -> None:
        self._write(footer_record(t))


def write_transcript(t: Transcript, path: Union[str, Path]) -> Path:
    ''' Write a complete transcript to path '''
    with TranscriptWriter(path) as w:
        w.header(t)
        for r in t.rounds:
            w.round(r)
        w.footer(t)
    return Path(path)


def transcript_text(t: Transcript) -> str:
    ''' The exact file contents write_transcript produces '''
    lines = [dumps(header_record(t))] + [dumps(round_record(r)) for r in t.rounds] + [dumps(footer_record(t))]
    return '\n'.join(lines) + '\n'


def _tovec(value: Any, where: str) -> Vec2:
    try:
        return Vec2.of(value)
    except (ValueError, TypeError) as exc:
        raise TranscriptError(f'{where}: bad coordinate pair {value!r}') from exc


def _tometrics(data: Optional[dict], where: str) -> Optional[MetricPoint]:
    if data is None:
        return None
    try:
        return MetricPoint(round=data['round'], mae=data['mae'], min_dist=data['min_dist'],
                           max_dist=data['max_dist'], centroid=_tovec(data['centroid'], where),
                           spread=data['spread'], nearest=list(data['nearest']))
    except (KeyError, TypeError) as exc:
        raise TranscriptError(f'{where}: bad metrics record') from exc


def _todecision(data: dict, where: str) -> Decision:
    try:
        acc = data['acceleration']
        return Decision(target=_tovec(data['target'], where),
                        reasoning=data['reasoning'],
                        acceleration=None if acc is None else _tovec(acc, where),
                        held=bool(data['held']),
                        attempts=[Attempt(a['raw'], a['status'], a['usage']) for a in data['attempts']])
    except (KeyError, TypeError) as exc:
        raise TranscriptError(f'{where}: bad decision record') from exc


def _toround(data: dict, where: str) -> RoundRecord:
    try:
        return RoundRecord(
            round=data['round'],
            before=[_tovec(p, where) for p in data['before']],
            after=[_tovec(p, where) for p in data['after']],
            decisions={int(k): _todecision(v, where) for k, v in data['decisions'].items()},
            clamped=[int(i) for i in data['clamped']],
            safe_violations=[(int(i), int(j), float(d)) for i, j, d in data['safe_violations']],
            metrics=_tometrics(data['metrics'], where))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, TranscriptError):
            raise
        raise TranscriptError(f'{where}: bad round record') from exc


def loads(text: str, source: str = '<string>') -> Transcript:
    ''' Parse transcript text. Raises TranscriptError for truncated or malformed input. '''
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            records.append((lineno, json.loads(line)))
        except json.JSONDecodeError as exc:
            raise TranscriptError(f'{source}:{lineno}: not valid JSON ({exc.msg})') from exc

    if not records:
        raise TranscriptError(f'{source}: empty transcript')
    lineno, head = records[0]
    if not isinstance(head, dict) or head.get('type') != 'header':
        raise TranscriptError(f'{source}:{lineno}: first record is not a header')
    if head.get('schema') != SCHEMA:
        raise SchemaVersionError(head.get('schema'), SCHEMA)
    lineno, foot = records[-1]
    if len(records) < 2 or not isinstance(foot, dict) or foot.get('type') != 'footer':
        raise TranscriptError(f'{source}: truncated transcript (no footer record)')

    try:
        cfg = fromdict(head['config'])
        t = Transcript(
            config=cfg,
            seed=head['seed'],
            trial=head['trial'],
            initial=[_tovec(p, f'{source}:1') for p in head['initial']],
            stationary=[int(i) for i in head['stationary']],
            backends={int(k): v for k, v in head['backends'].items()},
            sampling=dict(head['sampling']),
            initial_metrics=_tometrics(head['metrics'], f'{source}:1'))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, (TranscriptError, ConfigError)):
            raise TranscriptError(f'{source}:1: {exc}') from exc
        raise TranscriptError(f'{source}:1: bad header record') from exc

    for lineno, rec in records[1:-1]:
        where = f'{source}:{lineno}'
        if not isinstance(rec, dict) or rec.get('type') != 'round':
            raise TranscriptError(f'{where}: expected a round record')
        record = _toround(rec, where)
        if record.round != len(t.rounds) + 1:
            raise TranscriptError(f'{where}: round {record.round} out of sequence')
        t.rounds.append(record)

    try:
        t.status = foot['status']
        t.failure = foot['failure']
        outcome = foot['outcome']
        t.outcome = None if outcome is None else OutcomeLabel(outcome['label'], outcome['evidence'])
        t.usage = dict(foot['usage'])
        t.wall_clock = foot.get('wall_clock')
    except (KeyError, TypeError) as exc:
        raise TranscriptError(f'{source}: bad footer record') from exc
    return t


def read_transcript(path: Union[str, Path]) -> Transcript:
    ''' Read a transcript file '''
    try:
        text = Path(path).read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as exc:
        raise TranscriptError(f'Cannot read transcript {path}: {exc}') from exc
    return loads(text, str(path))


def format_float(x: float) -> str:
    ''' Shortest decimal that reads back as x, with at least two fractional digits '''
    return np.format_float_positional(float(x), unique=True, trim='k',
                                      min_digits=globalconfig.csv_min_digits)


def trajectory_rows(t: Transcript) -> list[tuple[int, int, float, float, bool, float]]:
    ''' (round, agent_id, x, y, clamped, min_dist) for every agent at every round '''
    ids = t.config.agent_ids
    rows = []
    steps = [(0, t.initial, [])] + [(r.round, r.after, r.clamped) for r in t.rounds]
    for rnd, positions, clamped in steps:
        _, nearest = nearest_neighbors(asarray(positions))
        for i, p, dist in zip(ids, positions, nearest):
            rows.append((rnd, i, p.x, p.y, i in clamped, float(dist)))
    return rows


def trajectory_csv(t: Transcript) -> str:
    ''' Trajectory CSV text '''
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(('round', 'agent_id', 'x', 'y', 'clamped', 'min_dist'))
    for rnd, i, x, y, clamped, dist in trajectory_rows(t):
        writer.writerow((rnd, i, format_float(x), format_float(y), int(clamped), format_float(dist)))
    return out.getvalue()


def metrics_csv(series: MetricSeries) -> str:
    ''' Metrics CSV text '''
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(('round', 'mae', 'min_dist', 'max_dist', 'spread'))
    for p in series.points:
        writer.writerow((p.round, format_float(p.mae), format_float(p.min_dist),
                         format_float(p.max_dist), format_float(p.spread)))
    return out.getvalue()


def _write_text(text: str, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    return path


def write_trajectory_csv(t: Transcript, path: Union[str, Path]) -> Path:
    ''' Write the trajectory CSV: round,agent_id,x,y,clamped,min_dist '''
    return _write_text(trajectory_csv(t), path)


def write_metrics_csv(series: MetricSeries, path: Union[str, Path]) -> Path:
    ''' Write the metrics CSV: round,mae,min_dist,max_dist,spread '''
    return _write_text(metrics_csv(series), path)


def read_trajectory_csv(path: Union[str, Path]) -> list[list[Vec2]]:
    ''' Positions per round from a trajectory CSV, agents in id order '''
    rounds: dict[int, dict[int, Vec2]] = {}
    try:
        with open(path, newline='', encoding='utf-8') as f:
            for row in csv.DictReader(f):
                rounds.setdefault(int(row['round']), {})[int(row['agent_id'])] = Vec2(
                    float(row['x']), float(row['y']))
    except (OSError, KeyError, ValueError) as exc:
        raise TranscriptError(f'Cannot read trajectory {path}: {exc}') from exc
    return [[pts[i] for i in sorted(pts)] for _, pts in sorted(rounds.items())]
