''' World state and the synchronous round update '''
from __future__ import annotations
from typing import Mapping, Optional, Sequence, TYPE_CHECKING
from dataclasses import dataclass, field, replace
import logging
import math

import numpy as np

from .geometry import Vec2, ZERO, asarray, aspoints, pairwise_distances
from .errors import EpisodeError, ValidationError

if TYPE_CHECKING:
    from .metrics import MetricPoint


logger = logging.getLogger(__name__)

# Slack on the displacement bound for floating point error in clamp_move
CLAMP_TOLERANCE = 1E-9


@dataclass(frozen=True)
class MotionLimits:
    ''' Per-round motion constraints

        Args:
            max_velocity: Largest displacement allowed in one round
            safe_distance: Pairs closer than this are logged as near-collisions
    '''
    max_velocity: float = 5.
    safe_distance: float = 2.

    def __post_init__(self):
        if not (math.isfinite(self.max_velocity) and self.max_velocity > 0):
            raise ValidationError(f'max_velocity must be positive, got {self.max_velocity}')
        if not (math.isfinite(self.safe_distance) and self.safe_distance >= 0):
            raise ValidationError(f'safe_distance must be nonnegative, got {self.safe_distance}')


@dataclass(frozen=True)
class AgentState:
    ''' One agent at one round. Velocity is the displacement of the last round. '''
    id: int
    position: Vec2
    velocity: Vec2 = ZERO
    stationary: bool = False


@dataclass(frozen=True)
class WorldState:
    ''' All agents at one round, ordered by id '''
    round: int
    agents: tuple[AgentState, ...]

    def __post_init__(self):
        ids = [a.id for a in self.agents]
        if len(set(ids)) != len(ids):
            raise ValidationError(f'Duplicate agent ids {ids}')
        if ids != sorted(ids):
            object.__setattr__(self, 'agents', tuple(sorted(self.agents, key=lambda a: a.id)))

    @classmethod
    def initial(cls, positions: Sequence[Vec2], stationary_ids: Sequence[int] = ()) -> 'WorldState':
        ''' Round-0 world with agents numbered 0..n-1 at rest '''
        stationary = set(stationary_ids)
        return cls(0, tuple(AgentState(i, Vec2.of(p), ZERO, i in stationary)
                            for i, p in enumerate(positions)))

    @property
    def ids(self) -> list[int]:
        return [a.id for a in self.agents]

    @property
    def positions(self) -> list[Vec2]:
        return [a.position for a in self.agents]

    def agent(self, i: int) -> AgentState:
        ''' Look up an agent by id '''
        for a in self.agents:
            if a.id == i:
                return a
        raise EpisodeError(f'Unknown agent id {i}', self.round, 'unknown-agent')

    def others(self, i: int) -> list[AgentState]:
        ''' Every agent except i, in ascending id order '''
        self.agent(i)
        return [a for a in self.agents if a.id != i]

    def snapshot(self) -> tuple[np.ndarray, np.ndarray]:
        ''' Positions and velocities as (n, 2) arrays in id order '''
        return (asarray([a.position for a in self.agents]),
                asarray([a.velocity for a in self.agents]))

    def stationary_mask(self) -> np.ndarray:
        return np.array([a.stationary for a in self.agents], dtype=bool)


@dataclass
class Attempt:
    ''' One call to a decision endpoint and what came of it '''
    raw: str
    status: str = 'ok'
    usage: dict = field(default_factory=dict)


@dataclass
class Decision:
    ''' Output of a decision-maker for one round

        Args:
            target: Position the agent wants to move to
            reasoning: Free text explanation
            acceleration: Control input, for controllers that compute one
            held: The agent held position because no usable answer was produced
            attempts: Endpoint calls made to reach this decision
    '''
    target: Vec2
    reasoning: str = ''
    acceleration: Optional[Vec2] = None
    held: bool = False
    attempts: list[Attempt] = field(default_factory=list)


@dataclass
class RoundRecord:
    ''' Everything that happened in one round '''
    round: int
    before: list[Vec2]
    after: list[Vec2]
    decisions: dict[int, Decision]
    clamped: list[int] = field(default_factory=list)
    safe_violations: list[tuple[int, int, float]] = field(default_factory=list)
    metrics: Optional['MetricPoint'] = None


def clamp_move(current: Vec2, target: Vec2, limits: MotionLimits) -> Vec2:
    ''' Limit the move from current toward target to max_velocity '''
    current, target = Vec2.of(current), Vec2.of(target)
    step = target - current
    length = step.norm()
    if length <= limits.max_velocity:
        return target
    scale = limits.max_velocity / length
    return Vec2(current.x + step.x * scale, current.y + step.y * scale)


def safe_violations(positions: Sequence[Vec2], ids: Sequence[int],
                    safe_distance: float) -> list[tuple[int, int, float]]:
    ''' Pairs (i, j, distance) closer than safe_distance '''
    if safe_distance <= 0 or len(positions) < 2:
        return []
    dist = pairwise_distances(asarray(positions))
    out = []
    for a in range(len(ids)):
        for b in range(a+1, len(ids)):
            if dist[a, b] < safe_distance:
                out.append((ids[a], ids[b], float(dist[a, b])))
    return out


def step_world(state: WorldState, decisions: Mapping[int, Decision],
               limits: MotionLimits) -> tuple[WorldState, RoundRecord]:
    ''' Apply every agent's decision simultaneously and advance one round.

        All targets are clamped against the positions in `state`, so the
        order of `decisions` has no effect on the result.
    '''
    known = set(state.ids)
    for i in decisions:
        if i not in known:
            raise EpisodeError(f'Decision for unknown agent {i}', state.round, 'unknown-agent')

    agents = []
    clamped = []
    for agent in state.agents:
        if agent.stationary:
            agents.append(replace(agent, velocity=ZERO))
            continue
        if agent.id not in decisions:
            raise EpisodeError(f'No decision for agent {agent.id}', state.round, 'missing-decision')
        target = Vec2.of(decisions[agent.id].target)
        newpos = clamp_move(agent.position, target, limits)
        if newpos != target:
            clamped.append(agent.id)
            logger.warning('Round %d: agent %d asked to move %.2f units, clamped to %.2f',
                           state.round+1, agent.id, agent.position.dist(target), limits.max_velocity)
        agents.append(replace(agent, position=newpos, velocity=newpos - agent.position))

    newstate = WorldState(state.round + 1, tuple(agents))
    violations = safe_violations(newstate.positions, newstate.ids, limits.safe_distance)
    for i, j, d in violations:
        logger.warning('Round %d: agents %d and %d are %.2f units apart (safe distance %.2f)',
                       newstate.round, i, j, d, limits.safe_distance)

    record = RoundRecord(
        round=newstate.round,
        before=state.positions,
        after=newstate.positions,
        decisions=dict(sorted(decisions.items())),
        clamped=clamped,
        safe_violations=violations)
    return newstate, record


def semi_implicit_euler(positions: np.ndarray, velocities: np.ndarray,
                        accelerations: np.ndarray, dt: float,
                        frozen: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    ''' One step of q' = v, v' = u: velocity first, then position with the new velocity.

        Args:
            positions: (n, 2) positions
            velocities: (n, 2) velocities
            accelerations: (n, 2) control inputs
            dt: Time step
            frozen: Optional boolean mask of agents that never move
    '''
    vel = velocities + accelerations * dt
    if frozen is not None and frozen.any():
        vel[frozen] = 0.
    pos = positions + vel * dt
    return pos, vel


def integrate_double(state: WorldState, accelerations: Mapping[int, Vec2], dt: float) -> WorldState:
    ''' Advance the double-integrator dynamics by dt (semi-implicit Euler).

        Agents without an entry in accelerations coast. Stationary agents
        stay where they are.
    '''
    if not (math.isfinite(dt) and dt > 0):
        raise ValidationError(f'dt must be positive, got {dt}')
    pos, vel = state.snapshot()
    acc = np.zeros_like(pos)
    for k, agent in enumerate(state.agents):
        if agent.id in accelerations:
            acc[k] = np.asarray(Vec2.of(accelerations[agent.id]))
    pos, vel = semi_implicit_euler(pos, vel, acc, dt, state.stationary_mask())
    agents = tuple(
        agent if agent.stationary else replace(agent, position=p, velocity=v)
        for agent, p, v in zip(state.agents, aspoints(pos), aspoints(vel)))
    return WorldState(state.round, agents)


def init_positions(count: int, bounds: float, rng: np.random.Generator) -> list[Vec2]:
    ''' Uniform random starting positions in the square [-bounds, bounds]² '''
    if count < 1:
        raise ValidationError('Need at least one agent')
    if not (math.isfinite(bounds) and bounds > 0):
        raise ValidationError(f'init bounds must be positive, got {bounds}')
    return aspoints(rng.uniform(-bounds, bounds, size=(count, 2)))
