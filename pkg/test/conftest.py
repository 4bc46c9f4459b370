''' Shared fixtures for the ziaflock tests '''
from __future__ import annotations
from pathlib import Path
from typing import Sequence
import logging

import pytest

from ziaflock.geometry import Vec2
from ziaflock.world import WorldState, Decision, step_world
from ziaflock.metrics import metric_point
from ziaflock.config import (ExperimentConfig, WorldConfig, FormationConfig, AgentsConfig,
                             EndpointConfig)
from ziaflock.transcript import Transcript, COMPLETED


DATA = Path(__file__).parent / 'data'


def experiment(backend: str = 'scripted:consensus-seeker', agents: int = 5, shape: str = 'circle',
               distance: float = 5., rounds: int = 25, trials: int = 10,
               stationary: Sequence[int] = (), name: str = 'test', **endpoint) -> ExperimentConfig:
    ''' Small validated configuration for offline runs '''
    return ExperimentConfig(
        name=name,
        trials=trials,
        world=WorldConfig(agent_count=agents, stationary_ids=list(stationary), rounds=rounds),
        formation=FormationConfig(shape=shape, desired_distance=distance),
        agents=AgentsConfig(backend=backend),
        endpoint=EndpointConfig(**endpoint)).validate()


def scripted_transcript(cfg: ExperimentConfig, trajectory: Sequence[Sequence[tuple[float, float]]]) -> Transcript:
    ''' Transcript whose agents move exactly along trajectory (round 0 first) '''
    d = cfg.formation.desired_distance
    initial = [Vec2.of(p) for p in trajectory[0]]
    state = WorldState.initial(initial, cfg.world.stationary_ids)
    t = Transcript(config=cfg, seed=0, trial=0, initial=initial,
                   stationary=list(cfg.world.stationary_ids),
                   backends={i: 'scripted:stationary' for i in cfg.agent_ids},
                   initial_metrics=metric_point(0, initial, d))
    for targets in trajectory[1:]:
        decisions = {a.id: Decision(Vec2.of(p)) for a, p in zip(state.agents, targets) if not a.stationary}
        state, record = step_world(state, decisions, cfg.limits)
        record.metrics = metric_point(state.round, state.positions, d)
        t.rounds.append(record)
    t.status = COMPLETED
    return t


@pytest.fixture
def consensus_cfg() -> ExperimentConfig:
    return experiment('scripted:consensus-seeker', name='consensus')


@pytest.fixture
def quiet_logs(caplog):
    ''' Keep clamp and near-collision warnings out of the test output '''
    caplog.set_level(logging.ERROR, logger='ziaflock')
    return caplog
