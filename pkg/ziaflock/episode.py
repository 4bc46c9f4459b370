''' Run one episode: decide, step, measure, record '''
from __future__ import annotations
from typing import Dict, Mapping, Optional, Union, cast
from concurrent.futures import ThreadPoolExecutor
from contextlib import ExitStack
from pathlib import Path
import logging
import time

import numpy as np

from .world import WorldState, Decision, step_world, init_positions
from .metrics import MetricSeries, OutcomeLabel, metric_point, classify_outcome, ClassifierThresholds
from .config import ExperimentConfig
from .brains import Brain
from .transcript import Transcript, TranscriptWriter, COMPLETED, FAILED
from .errors import ZiaflockError, EpisodeError, EndpointError


logger = logging.getLogger(__name__)


def initial_world(cfg: ExperimentConfig, seed: int) -> WorldState:
    ''' Round-0 world: uniform random positions drawn from seed '''
    rng = np.random.default_rng(seed)
    positions = init_positions(cfg.world.agent_count, cfg.world.init_bounds, rng)
    return WorldState.initial(positions, cfg.world.stationary_ids)


def build_backends(cfg: ExperimentConfig, client=None) -> dict[int, Brain]:
    ''' One brain per agent from the configured backend specs.

        Args:
            cfg: Experiment configuration
            client: Chat client shared by every chat agent. None connects
                to the configured endpoint.
    '''
    if client is None and any(cfg.backend_for(i) == 'chat' for i in cfg.active_ids):
        from .brains.llm import endpoint_client
        client = endpoint_client(cfg)
    return {i: Brain.fromspec(cfg.backend_for(i), i, cfg, client=client) for i in cfg.agent_ids}


def _decide(pool: Optional[ThreadPoolExecutor], backends: Mapping[int, Brain],
            state: WorldState, cfg: ExperimentConfig) -> dict[int, Union[Decision, ZiaflockError]]:
    ''' Decision, or the error that prevented one, of every active agent '''
    ids = [a.id for a in state.agents if not a.stationary]
    limits = cfg.limits

    def decide(i: int) -> Union[Decision, ZiaflockError]:
        try:
            return backends[i].decide(state, limits)
        except (EpisodeError, EndpointError) as exc:
            return exc

    if pool is None:
        return {i: decide(i) for i in ids}
    # Every brain reads the same snapshot; results are gathered before the step
    return dict(zip(ids, pool.map(decide, ids)))


def _failure(state: WorldState, exc: ZiaflockError,
             decisions: Mapping[int, Union[Decision, ZiaflockError]]) -> dict:
    ''' Failure record, with every endpoint call made in the failing round '''
    return {
        'round': state.round,
        'cause': exc.cause if isinstance(exc, EpisodeError) else 'endpoint',
        'message': str(exc),
        'attempts': [{'agent': i, 'raw': a.raw, 'status': a.status, 'usage': a.usage}
                     for i, d in sorted(decisions.items())
                     for a in getattr(d, 'attempts', [])]}


def run_episode(cfg: ExperimentConfig, backends: Mapping[int, Brain],
                seed: Optional[int] = None, trial: int = 0,
                workers: Optional[int] = None,
                path: Union[str, Path, None] = None,
                thresholds: Optional[ClassifierThresholds] = None) -> Transcript:
    ''' Run cfg.world.rounds rounds and return the transcript.

        Args:
            cfg: Validated experiment configuration
            backends: Brain per agent id. Stationary agents may be omitted.
            seed: Seed for the initial positions. Defaults to cfg.seed + trial.
            trial: Trial index, recorded in the transcript
            workers: Threads computing decisions. Defaults to cfg.agents.workers.
            path: Also write the transcript here, flushed every round
            thresholds: Outcome classification thresholds

        A decision-maker that cannot produce a decision (endpoint failure,
        or unreadable answers under the fail-episode policy or strict mode)
        ends the episode with status 'failed'.
    '''
    seed = cfg.seed + trial if seed is None else seed
    workers = cfg.agents.workers if workers is None else workers
    state = initial_world(cfg, seed)
    missing = [i for i in cfg.active_ids if i not in backends]
    if missing:
        raise EpisodeError(f'No backend for agent(s) {missing}', 0, 'missing-backend')

    d = cfg.formation.desired_distance
    series = MetricSeries()
    series.append(metric_point(0, state.positions, d), state.positions)
    transcript = Transcript(
        config=cfg, seed=seed, trial=trial,
        initial=state.positions,
        stationary=sorted(cfg.world.stationary_ids),
        backends={i: b.spec for i, b in sorted(backends.items())},
        sampling=cfg.endpoint.sampling(),
        initial_metrics=series.points[0])

    logger.info('%s trial %d (seed %d): %d agents, %d rounds',
                cfg.name, trial, seed, cfg.world.agent_count, cfg.world.rounds)
    start = time.perf_counter()
    with ExitStack() as stack:
        writer = stack.enter_context(TranscriptWriter(path)) if path is not None else None
        pool = stack.enter_context(ThreadPoolExecutor(max_workers=workers)) if workers > 1 else None
        if writer:
            writer.header(transcript)

        for _ in range(cfg.world.rounds):
            outcomes = _decide(pool, backends, state, cfg)
            errors = sorted(i for i, o in outcomes.items() if isinstance(o, ZiaflockError))
            held = [i for i, o in outcomes.items() if isinstance(o, Decision) and o.held]
            exc: Optional[ZiaflockError] = None
            if errors:
                exc = outcomes[errors[0]]  # type: ignore[assignment]
            elif cfg.strict and held:
                exc = EpisodeError(f'Agent(s) {held} gave no usable decision',
                                   state.round, 'format-failure')
            if exc is not None:
                transcript.status = FAILED
                transcript.failure = _failure(state, exc, outcomes)
                logger.error('%s trial %d failed at round %d (%s): %s',
                             cfg.name, trial, state.round, transcript.failure['cause'], exc)
                break

            decisions = cast(Dict[int, Decision], outcomes)
            state, record = step_world(state, decisions, cfg.limits)
            record.metrics = metric_point(state.round, state.positions, d)
            series.append(record.metrics, state.positions)
            transcript.rounds.append(record)
            if writer:
                writer.round(record)
            for brain in backends.values():
                brain.observe(state)
            logger.debug('Round %d: MAE %.3f', state.round, record.metrics.mae)
        else:
            transcript.status = COMPLETED
            th = thresholds if thresholds else ClassifierThresholds()
            if len(series) - 1 >= th.min_rounds:
                transcript.outcome = classify_outcome(series, cfg.formation_spec, th)
            else:
                transcript.outcome = OutcomeLabel(
                    'inconclusive', f'only {len(series)-1} rounds, {th.min_rounds} needed to classify')
            logger.info('%s trial %d: %s (%s)', cfg.name, trial,
                        transcript.outcome.label, transcript.outcome.evidence)

        transcript.usage = transcript.total_usage()
        if transcript.live:
            transcript.wall_clock = time.perf_counter() - start
        if writer:
            writer.footer(transcript)
    return transcript
