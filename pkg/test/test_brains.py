''' Scripted, oracle, and chat decision-makers '''
import math

import numpy as np
import pytest

from ziaflock.geometry import Vec2
from ziaflock.world import WorldState, MotionLimits, step_world
from ziaflock.metrics import mae
from ziaflock.brains import (Brain, parse_backend, brain_kinds, SCRIPTED_KINDS, OracleBrain,
                             LlmBrain, ConsensusSeekerBrain, consensus_seeker_decide,
                             diverger_decide, stubborn_decide, suggestible_decide)
from ziaflock.chat import ScriptedChatClient
from ziaflock.errors import ConfigError

from conftest import experiment


LIMITS = MotionLimits(5)


def test_consensus_seeker():
    state = WorldState.initial([(0, 0), (10, 0), (0, 10)])
    target = consensus_seeker_decide(0, state, LIMITS).target
    assert tuple(target) == pytest.approx((10/3, 10/3))

    state = WorldState.initial([(2, 3)] * 3)
    assert consensus_seeker_decide(1, state, LIMITS).target == Vec2(2, 3)

    state = WorldState.initial([(-4, 1), (4, -1)])
    for i in (0, 1):
        assert tuple(consensus_seeker_decide(i, state, LIMITS).target) == pytest.approx((0, 0))


def test_consensus_seeker_fraction():
    state = WorldState.initial([(0, 0), (4, 0)])
    assert consensus_seeker_decide(0, state, LIMITS, .5).target == Vec2(1, 0)
    with pytest.raises(ConfigError):
        ConsensusSeekerBrain(0, step_fraction=0)


def test_diverger():
    state = WorldState.initial([(17.04, 15.4), (-16.96, 15.4)])
    target = diverger_decide(1, state, MotionLimits(17)).target
    assert tuple(target) == pytest.approx((-33.96, 15.4))

    state = WorldState.initial([(1, 1), (1, 1)])
    assert diverger_decide(0, state, LIMITS).target == Vec2(6, 1)


def test_diverger_flees_nearest():
    state = WorldState.initial([(0, 0), (0, 3), (10, 0)])
    target = diverger_decide(0, state, LIMITS).target
    assert tuple(target) == pytest.approx((0, -5))


def test_stubborn():
    state = WorldState.initial([(0, 0), (3, 4), (-2, 7)])
    decisions = {i: stubborn_decide(i, state, LIMITS) for i in state.ids}
    assert all(d.target == state.agent(i).position for i, d in decisions.items())
    new, _ = step_world(state, decisions, LIMITS)
    assert all(a.velocity == Vec2(0, 0) for a in new.agents)
    assert mae(new.positions, 5) == mae(state.positions, 5)


def test_suggestible():
    state = WorldState.initial([(0, 0), (3, 4)])
    assert suggestible_decide(0, state, LIMITS).target == Vec2(3, 4)
    # Ids 2 and 5 are equidistant
    state = WorldState.initial([(0, 0), (50, 50), (0, 3), (40, 40), (40, 41), (3, 0)])
    assert suggestible_decide(0, state, LIMITS).target == Vec2(0, 3)


def test_suggestible_reaches_stubborn():
    cfg = experiment('scripted:suggestible', agents=2, shape='pair-distance', distance=10)
    state = WorldState.initial([(0, 0), (23, 9)])
    brains = {0: Brain.fromspec('scripted:suggestible', 0, cfg),
              1: Brain.fromspec('scripted:stubborn', 1, cfg)}
    rounds = math.ceil(state.agent(0).position.dist(state.agent(1).position) / LIMITS.max_velocity)
    for _ in range(rounds):
        decisions = {i: b.decide(state, LIMITS) for i, b in brains.items()}
        state, _ = step_world(state, decisions, LIMITS)
    assert state.agent(0).position.dist(Vec2(23, 9)) < 1E-9


def test_parse_backend():
    assert parse_backend('chat') == ('chat', 'chat')
    assert parse_backend('oracle') == ('oracle', 'oracle')
    assert parse_backend('scripted:diverger') == ('scripted', 'diverger')
    for bad in ('scripted', 'scripted:wanderer', 'gpt', 'chat:x'):
        with pytest.raises(ConfigError):
            parse_backend(bad)


def test_registry():
    assert set(SCRIPTED_KINDS) | {'chat', 'oracle'} == set(brain_kinds())
    cfg = experiment()
    for kind in SCRIPTED_KINDS:
        brain = Brain.fromspec(f'scripted:{kind}', 2, cfg)
        assert brain.agent_id == 2
        assert brain.spec == f'scripted:{kind}'
    oracle = Brain.fromspec('oracle', 0, cfg)
    assert isinstance(oracle, OracleBrain)
    assert oracle.spec == 'oracle'
    assert oracle.params.lattice_distance == 5


def test_oracle_warm_start():
    cfg = experiment('oracle', agents=3)
    brains = {i: Brain.fromspec('oracle', i, cfg) for i in range(3)}
    state = WorldState.initial([(0, 0), (5.2, 0), (2.6, 4.4)])
    assert brains[0].warm_velocities(state) is None
    decisions = {i: b.decide(state, cfg.limits) for i, b in brains.items()}
    state, record = step_world(state, decisions, cfg.limits)
    assert not record.clamped
    assert brains[0].warm_velocities(state) is not None
    # Every oracle integrates the same law, so the predictions agree
    np.testing.assert_allclose(brains[0]._predicted[1], brains[2]._predicted[1])
    assert all(d.acceleration is not None for d in decisions.values())


def test_llm_brain():
    cfg = experiment('chat', agents=2, shape='pair-distance', distance=10)
    client = ScriptedChatClient({0: ['Reasoning: closer. Position: [1.00, 0.00]'] * 2,
                                 1: ['Reasoning: stay. Position: [9.00, 0.00]'] * 2})
    brains = {i: Brain.fromspec('chat', i, cfg, client=client) for i in (0, 1)}
    assert isinstance(brains[0], LlmBrain)
    state = WorldState.initial([(0, 0), (9, 0)])
    for _ in range(2):
        decisions = {i: b.decide(state, cfg.limits) for i, b in brains.items()}
        state, _ = step_world(state, decisions, cfg.limits)
        for b in brains.values():
            b.observe(state)
    assert state.agent(0).position == Vec2(1, 0)
    conv = brains[0].conversation
    assert [m.role for m in conv.messages] == ['user', 'assistant'] * 2 + ['user']
    assert 'desired distance of 10 units' in conv.messages[0].content
    assert 'You have now moved to: [1.00, 0.00]' in conv.messages[-1].content
