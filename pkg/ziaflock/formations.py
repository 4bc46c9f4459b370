''' Target formation geometry '''
from __future__ import annotations
from dataclasses import dataclass
import math

import numpy as np

from .geometry import Vec2, ZERO, aspoints
from .errors import ConfigError, ValidationError


SHAPES = ('circle', 'alpha-lattice', 'v-shape', 'line', 'triangle', 'pair-distance')

# Names used when describing the shape to a language model
SHAPE_NAMES = {
    'circle': 'circle',
    'alpha-lattice': 'α-lattice',
    'v-shape': 'V-shape',
    'line': 'line',
    'triangle': 'triangle',
    'pair-distance': 'pair',
}

MIN_AGENTS = {'triangle': 3, 'v-shape': 3, 'circle': 3}
EXACT_AGENTS = {'triangle': 3, 'pair-distance': 2}

# Below this, agents on opposite rays of a V sit closer than the desired distance
MIN_V_HALF_ANGLE = 30.


@dataclass(frozen=True)
class FormationSpec:
    ''' Formation the flock is asked to form

        Args:
            shape: One of SHAPES
            desired_distance: Target spacing to the closest agent
            agent_count: Number of agents in the formation
            v_half_angle: Half-angle between the two rays of a V-shape, degrees,
                at least 30
    '''
    shape: str = 'circle'
    desired_distance: float = 5.
    agent_count: int = 5
    v_half_angle: float = 30.

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ConfigError(f'Unknown formation {self.shape!r}. Choose from {", ".join(SHAPES)}')
        if not (math.isfinite(self.desired_distance) and self.desired_distance > 0):
            raise ConfigError(f'desired_distance must be positive, got {self.desired_distance}')
        if self.agent_count < 2:
            raise ConfigError('A formation needs at least 2 agents')
        if self.agent_count < MIN_AGENTS.get(self.shape, 2):
            raise ConfigError(f'{self.shape} needs at least {MIN_AGENTS[self.shape]} agents')
        if not MIN_V_HALF_ANGLE <= self.v_half_angle < 90:
            raise ConfigError(f'v_half_angle must be in [{MIN_V_HALF_ANGLE:g}, 90), got {self.v_half_angle}')

    @property
    def name(self) -> str:
        ''' Shape name as written in prompts '''
        return SHAPE_NAMES[self.shape]


def shape_name(shape: str) -> str:
    ''' Prompt name of a formation shape '''
    try:
        return SHAPE_NAMES[shape]
    except KeyError:
        raise ConfigError(f'Unknown formation {shape!r}') from None


def circle_radius(agent_count: int, desired_distance: float) -> float:
    ''' Radius of the circle whose inscribed regular n-gon has side desired_distance '''
    if agent_count < 3:
        raise ValidationError(f'A circle formation needs at least 3 agents, got {agent_count}')
    if agent_count == 6:
        return float(desired_distance)  # hexagon side equals circumradius
    return desired_distance / (2 * math.sin(math.pi / agent_count))


def _circle(n: int, d: float) -> np.ndarray:
    radius = circle_radius(n, d)
    theta = math.pi/2 + 2*math.pi*np.arange(n)/n
    return radius * np.column_stack((np.cos(theta), np.sin(theta)))


def _line(n: int, d: float) -> np.ndarray:
    x = d * np.arange(n) - d*(n-1)/2
    return np.column_stack((x, np.zeros(n)))


def _vshape(n: int, d: float, half_angle: float) -> np.ndarray:
    ''' Apex at the origin, alternating down the right and left rays '''
    th = math.radians(half_angle)
    pts = [(0., 0.)]
    for k in range(1, n):
        m = (k + 1) // 2
        side = 1 if k % 2 else -1
        pts.append((side * m * d * math.sin(th), -m * d * math.cos(th)))
    return np.array(pts)


def _lattice(n: int, d: float) -> np.ndarray:
    ''' The n triangular-lattice points nearest the origin '''
    m = int(math.ceil(math.sqrt(n))) + 1
    a1 = np.array([d, 0.])
    a2 = np.array([d/2, d*math.sqrt(3)/2])
    pts = np.array([i*a1 + j*a2 for i in range(-m, m+1) for j in range(-m, m+1)])
    dist = np.round(np.hypot(pts[:, 0], pts[:, 1]) / d, 9)
    angle = np.round(np.mod(np.arctan2(pts[:, 1], pts[:, 0]), 2*math.pi), 9)
    order = np.lexsort((angle, dist))
    return pts[order[:n]]


def target_positions(spec: FormationSpec, anchor: Vec2 = ZERO) -> list[Vec2]:
    ''' Ideal agent positions for the formation, placed about anchor '''
    n, d = spec.agent_count, spec.desired_distance
    if spec.shape in EXACT_AGENTS and n != EXACT_AGENTS[spec.shape]:
        raise ValidationError(f'{spec.shape} needs exactly {EXACT_AGENTS[spec.shape]} agents, got {n}')

    if spec.shape in ('circle', 'triangle'):
        pts = _circle(n, d)
    elif spec.shape == 'line':
        pts = _line(n, d)
    elif spec.shape == 'pair-distance':
        pts = _line(2, d)
    elif spec.shape == 'v-shape':
        pts = _vshape(n, d, spec.v_half_angle)
    else:
        pts = _lattice(n, d)
    return aspoints(pts + np.asarray(Vec2.of(anchor)))
