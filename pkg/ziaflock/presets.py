''' Built-in scenarios '''
from __future__ import annotations
from dataclasses import dataclass

from .config import ExperimentConfig, WorldConfig, FormationConfig
from .errors import ConfigError


@dataclass(frozen=True)
class Preset:
    description: str
    agent_count: int
    shape: str
    desired_distance: float
    stationary: tuple[int, ...] = ()


PRESETS = {
    'circle5x5': Preset('Five active agents form a circle with desired distance 5', 5, 'circle', 5.),
    'triangle3x5': Preset('Three active agents form a triangle with desired distance 5', 3, 'triangle', 5.),
    'pair10': Preset('Two active agents keep a distance of 10', 2, 'pair-distance', 10.),
    'pair10-one-stationary': Preset('One active and one stationary agent keep a distance of 10',
                                    2, 'pair-distance', 10., (0,)),
    'lattice5x5': Preset('Five active agents form an α-lattice with desired distance 5',
                         5, 'alpha-lattice', 5.),
    'vshape5x5': Preset('Five active agents form a V-shape with desired distance 5', 5, 'v-shape', 5.),
}


def preset(name: str) -> ExperimentConfig:
    ''' A fresh configuration for the named scenario (chat backend, 10 trials of 25 rounds) '''
    try:
        p = PRESETS[name]
    except KeyError:
        raise ConfigError(f'Unknown preset {name!r}. Choose from {", ".join(PRESETS)}') from None
    return ExperimentConfig(
        name=name,
        world=WorldConfig(agent_count=p.agent_count, stationary_ids=list(p.stationary)),
        formation=FormationConfig(shape=p.shape, desired_distance=p.desired_distance))
