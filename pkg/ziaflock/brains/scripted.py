''' Deterministic policies reproducing observed language-model behaviors '''
from __future__ import annotations
from typing import Optional

from ..geometry import Vec2
from ..world import WorldState, MotionLimits, Decision
from ..errors import ValidationError, ConfigError
from .brain import Brain


def _nearest(i: int, state: WorldState) -> tuple[Vec2, int]:
    ''' Nearest other agent to i as (position, id). Ties go to the lowest id. '''
    me = state.agent(i).position
    best: Optional[tuple[float, int, Vec2]] = None
    for a in state.others(i):
        d = me.dist(a.position)
        if best is None or d < best[0]:
            best = (d, a.id, a.position)
    if best is None:
        raise ValidationError(f'Agent {i} has no other agents')
    return best[2], best[1]


def consensus_seeker_decide(i: int, state: WorldState, limits: MotionLimits,
                            step_fraction: float = 1.) -> Decision:
    ''' Move toward the mean of all positions, self included '''
    if len(state.agents) < 2:
        raise ValidationError('consensus-seeker needs at least 2 agents')
    me = state.agent(i).position
    mean = Vec2.of(state.snapshot()[0].mean(axis=0))
    target = me + (mean - me) * step_fraction
    return Decision(target, f'Moving toward the group mean [{mean.x:.2f}, {mean.y:.2f}]')


def diverger_decide(i: int, state: WorldState, limits: MotionLimits) -> Decision:
    ''' Flee the nearest agent at full speed (+x when coincident) '''
    me = state.agent(i).position
    nearest, j = _nearest(i, state)
    away = me - nearest
    length = away.norm()
    unit = Vec2(1., 0.) if length == 0 else away * (1/length)
    target = me + unit * limits.max_velocity
    return Decision(target, f'Moving away from agent {j}')


def stubborn_decide(i: int, state: WorldState, limits: MotionLimits) -> Decision:
    ''' Stay put '''
    return Decision(state.agent(i).position, 'Remaining stationary')


def suggestible_decide(i: int, state: WorldState, limits: MotionLimits) -> Decision:
    ''' Go to the nearest agent's position '''
    nearest, j = _nearest(i, state)
    return Decision(nearest, f"Moving to agent {j}'s position")


def stationary_decide(i: int, state: WorldState, limits: MotionLimits) -> Decision:
    return Decision(state.agent(i).position, '')


class StationaryBrain(Brain, kind='stationary'):
    def decide(self, state: WorldState, limits: MotionLimits) -> Decision:
        return stationary_decide(self.agent_id, state, limits)


class ConsensusSeekerBrain(Brain, kind='consensus-seeker'):
    ''' Gathers at the mean of all agents

        Args:
            agent_id: The agent this brain controls
            step_fraction: Fraction of the way to the mean moved per round, in (0, 1]
    '''
    def __init__(self, agent_id: int, step_fraction: float = 1., **kwargs):
        super().__init__(agent_id)
        if not 0 < step_fraction <= 1:
            raise ConfigError(f'step_fraction must be in (0, 1], got {step_fraction}')
        self.step_fraction = step_fraction

    def decide(self, state: WorldState, limits: MotionLimits) -> Decision:
        return consensus_seeker_decide(self.agent_id, state, limits, self.step_fraction)


class DivergerBrain(Brain, kind='diverger'):
    def decide(self, state: WorldState, limits: MotionLimits) -> Decision:
        return diverger_decide(self.agent_id, state, limits)


class StubbornBrain(Brain, kind='stubborn'):
    def decide(self, state: WorldState, limits: MotionLimits) -> Decision:
        return stubborn_decide(self.agent_id, state, limits)


class SuggestibleBrain(Brain, kind='suggestible'):
    def decide(self, state: WorldState, limits: MotionLimits) -> Decision:
        return suggestible_decide(self.agent_id, state, limits)
