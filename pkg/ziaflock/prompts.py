''' Prompt templates and rendering for language-model agents '''
from __future__ import annotations
from typing import Optional, Sequence
from dataclasses import dataclass
from decimal import Decimal, ROUND_DOWN, InvalidOperation

from .geometry import Vec2
from .world import AgentState, MotionLimits
from .formations import shape_name
from .errors import ValidationError, ConfigError


AGENT_ROLE = 'You are a agent navigating a two-dimensional space.'

GAME_DESCRIPTION = (
    'There are other agents in the space, and you must coordinate with each other '
    'to form a flock of a specified shape. Keep in mind Boids flocking rules. '
    'Your position is: [{}]. The positions of the other agents (in the format '
    '[[x, y], [x, y]...]) are: [{}]. The maximum velocity is [{}] units per round. '
    'The flock shape is a [{}]. You must avoid getting closer than [{}] units to any '
    'peers, otherwise, you may collide. Remember to consider the positions and velocity '
    'of other agents and consider how they might behave. You need to choose a position '
    'to move to in order to form a flock, and briefly explain the reasoning behind your decision.')

ROUND_DESCRIPTION = (
    'You have now moved to: [{}]. The new positions of the other agents are: [{}]. '
    'Consider how well your strategy worked last round, keeping in mind your maximum '
    'velocity, Please select a new position to move to.')

OUTPUT_FORMAT = (
    "Strictly follow the `Reasoning:..., Position: [x, y]' format to provide your answer. "
    'x and y must both be floating point numbers truncated to two decimal places. '
    'Briefly provide your thought process in the reasoning section while keeping the '
    'position section ONLY for the position you wish to move to this iteration, without '
    'any further explanation. Do not write ANYTHING ELSE in the position section.')

VELOCITIES = 'The velocities of the other agents are: [{}].'

CORRECTION = 'Your previous answer could not be read.'

STUBBORN = 'You are an extremely stubborn person, prefer to remain stationary.'
SUGGESTIBLE = "You are an extremely suggestible person, prefer to move to someone else's position."

PERSONALITIES = {'stubborn': STUBBORN, 'suggestible': SUGGESTIBLE}

SLOT = '{}'


@dataclass(frozen=True)
class PromptTemplateSet:
    ''' Prompt strings. `{}` marks a slot; each slot sits inside [...] brackets. '''
    agent_role: str = AGENT_ROLE
    game_description: str = GAME_DESCRIPTION
    round_description: str = ROUND_DESCRIPTION
    output_format: str = OUTPUT_FORMAT
    velocities: str = VELOCITIES
    correction: str = CORRECTION

    def __post_init__(self):
        for name, count in (('game_description', 5), ('round_description', 2), ('velocities', 1)):
            found = getattr(self, name).count(SLOT)
            if found != count:
                raise ConfigError(f'{name} template needs {count} slots, found {found}')


@dataclass(frozen=True)
class ChatMessage:
    ''' One role-tagged chat message '''
    role: str
    content: str

    def __post_init__(self):
        if self.role not in ('system', 'user', 'assistant'):
            raise ValidationError(f'Unknown chat role {self.role!r}')
        if not self.content:
            raise ValidationError('Chat message content is empty')

    def asdict(self) -> dict[str, str]:
        return {'role': self.role, 'content': self.content}


def render_number(value: float) -> str:
    ''' Format with exactly two decimals, truncating toward zero (1.999 -> 1.99) '''
    try:
        dec = Decimal(repr(float(value))).quantize(Decimal('0.01'), rounding=ROUND_DOWN)
    except InvalidOperation as exc:
        raise ValidationError(f'Cannot render {value!r}') from exc
    if dec.is_zero():
        dec = abs(dec)
    return f'{dec:.2f}'


def render_vec(v: Vec2) -> str:
    ''' Render a point as "x, y" (the caller supplies the brackets) '''
    v = Vec2.of(v)
    return f'{render_number(v.x)}, {render_number(v.y)}'


def render_list(points: Sequence[Vec2]) -> str:
    ''' Render points as "[x, y], [x, y]" '''
    return ', '.join(f'[{render_vec(p)}]' for p in points)


def render_scalar(value: float) -> str:
    ''' Limits are written as plain numbers, e.g. 5 or 2.5 '''
    return f'{value:g}'


def _others(me: AgentState, others: Sequence[AgentState]) -> list[AgentState]:
    others = sorted((a for a in others if a.id != me.id), key=lambda a: a.id)
    if not others:
        raise ValidationError(f'Agent {me.id} has nobody to flock with')
    return others


def describe_shape(shape: str, desired_distance: Optional[float] = None) -> str:
    ''' Shape text for the prompt, optionally stating the desired spacing '''
    name = shape_name(shape)
    if desired_distance is None:
        return name
    return f'{name} with a desired distance of {render_scalar(desired_distance)} units to the closest agent'


def build_initial_prompt(templates: PromptTemplateSet, me: AgentState, others: Sequence[AgentState],
                         limits: MotionLimits, shape: str, personality: Optional[str] = None,
                         desired_distance: Optional[float] = None,
                         include_velocities: bool = False) -> list[ChatMessage]:
    ''' First-round prompt: agent role, game description, and output format

        Args:
            templates: Prompt strings
            me: The agent being prompted
            others: The other agents (agent `me` is dropped if present)
            limits: Motion limits stated in the prompt
            shape: Formation name, such as 'circle' or 'alpha-lattice'
            personality: Optional 'stubborn' or 'suggestible' prefix
            desired_distance: State the desired spacing in the shape text
            include_velocities: Also list the other agents' velocities
    '''
    others = _others(me, others)
    game = templates.game_description.format(
        render_vec(me.position),
        render_list([a.position for a in others]),
        render_scalar(limits.max_velocity),
        describe_shape(shape, desired_distance),
        render_scalar(limits.safe_distance))
    parts = [templates.agent_role, game]
    if include_velocities:
        parts.append(templates.velocities.format(render_list([a.velocity for a in others])))
    parts.append(templates.output_format)
    if personality:
        try:
            parts.insert(0, PERSONALITIES[personality])
        except KeyError:
            raise ConfigError(f'Unknown personality {personality!r}') from None
    return [ChatMessage('user', ' '.join(parts))]


def build_round_prompt(templates: PromptTemplateSet, me: AgentState, others: Sequence[AgentState],
                       include_velocities: bool = False) -> ChatMessage:
    ''' Round update: where the agent ended up and where the others are now '''
    others = _others(me, others)
    text = templates.round_description.format(
        render_vec(me.position),
        render_list([a.position for a in others]))
    if include_velocities:
        text = ' '.join((text, templates.velocities.format(render_list([a.velocity for a in others]))))
    return ChatMessage('user', text)


def build_correction(templates: PromptTemplateSet) -> ChatMessage:
    ''' Reminder sent after an unreadable answer '''
    return ChatMessage('user', ' '.join((templates.correction, templates.output_format)))
