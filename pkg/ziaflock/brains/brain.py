''' Brain - parent class of all decision-makers '''
from __future__ import annotations
from typing import Optional, Type, TYPE_CHECKING

from ..world import WorldState, MotionLimits, Decision
from ..errors import ConfigError

if TYPE_CHECKING:
    from ..config import ExperimentConfig
    from ..chat import ChatClient


_brain_classes: dict[str, Type['Brain']] = {}

SCRIPTED_KINDS = ('stationary', 'consensus-seeker', 'diverger', 'stubborn',
                  'suggestible', 'oracle-flocker-wrapper')


def parse_backend(spec: str) -> tuple[str, str]:
    ''' Split a backend spec into (family, kind).

        'chat' -> ('chat', 'chat'), 'oracle' -> ('oracle', 'oracle'),
        'scripted:diverger' -> ('scripted', 'diverger')
    '''
    family, _, kind = spec.partition(':')
    if family in ('chat', 'oracle') and not kind:
        return family, family
    if family == 'scripted' and kind in SCRIPTED_KINDS:
        return family, kind
    raise ConfigError(f'Unknown backend {spec!r}. Use chat, oracle, or scripted:<kind> '
                      f'with kind one of {", ".join(SCRIPTED_KINDS)}')


def brain_kinds() -> list[str]:
    ''' Registered brain kinds '''
    return sorted(_brain_classes)


class Brain:
    ''' Decision-maker for one agent

        Args:
            agent_id: The agent this brain controls
    '''
    kind = 'brain'

    def __init__(self, agent_id: int, **kwargs):
        self.agent_id = agent_id

    def __init_subclass__(cls, kind: str) -> None:
        ''' Register this subclass so fromspec() can find it '''
        _brain_classes[kind] = cls
        cls.kind = kind

    def __repr__(self) -> str:
        return f'<{type(self).__name__} agent={self.agent_id}>'

    @property
    def spec(self) -> str:
        ''' Backend spec that selects this brain '''
        return self.kind if self.kind in ('chat', 'oracle') else f'scripted:{self.kind}'

    @classmethod
    def fromconfig(cls, agent_id: int, cfg: 'ExperimentConfig',
                   client: Optional['ChatClient'] = None) -> 'Brain':
        ''' Construct the brain from the experiment configuration '''
        return cls(agent_id)

    @classmethod
    def fromspec(cls, spec: str, agent_id: int, cfg: 'ExperimentConfig',
                 client: Optional['ChatClient'] = None) -> 'Brain':
        ''' Construct a brain from a backend spec such as 'scripted:diverger' '''
        _, kind = parse_backend(spec)
        return _brain_classes[kind].fromconfig(agent_id, cfg, client=client)

    def decide(self, state: WorldState, limits: MotionLimits) -> Decision:
        ''' Choose a target position from the round's world snapshot '''
        raise NotImplementedError

    def observe(self, state: WorldState) -> None:
        ''' Called after every round with the new world '''
