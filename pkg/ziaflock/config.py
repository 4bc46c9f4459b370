''' Global options and experiment configuration '''
from __future__ import annotations
from typing import Any, Mapping, Optional, Union, get_args, get_origin, get_type_hints
from dataclasses import dataclass, field, fields, asdict, replace, is_dataclass
from functools import lru_cache
from pathlib import Path
import hashlib
import json
import math
import sys

from ziafont import config as zfconfig

from .world import MotionLimits
from .formations import FormationSpec, target_positions
from .olfati import AlphaParams
from .errors import ConfigError, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


SCHEMA = 1


@dataclass
class PlotStyle:
    width: float = 480
    height: float = 480
    margin: float = 48
    fontsize: float = 12
    textcolor: str = 'black'
    background: str = 'white'
    gridcolor: str = '#dddddd'
    colors: tuple[str, ...] = ('#1f77b4', '#ff7f0e', '#2ca02c', '#d62728', '#9467bd',
                               '#8c564b', '#e377c2', '#7f7f7f', '#bcbd22', '#17becf')
    strokewidth: float = 1.5
    marker: float = 3
    target_color: str = '#999999'
    margin_color: str = '#d62728'


@dataclass
class Config:
    ''' Global configuration options for Ziaflock

        Attributes
        ----------
        plot: Styling of trajectory and MAE plots
        debug: Log every prompt and raw model reply at DEBUG level
        csv_min_digits: Fewest fractional digits written for CSV floats
        precision: SVG decimal precision for coordinates
    '''
    plot: PlotStyle = field(default_factory=PlotStyle)
    debug: bool = False
    csv_min_digits: int = 2

    @property
    def precision(self) -> float:
        return zfconfig.precision

    @precision.setter
    def precision(self, value: float) -> None:
        zfconfig.precision = value


config = Config()


@dataclass
class WorldConfig:
    ''' World and episode settings

        Args:
            agent_count: Number of agents
            stationary_ids: Agents that never move
            max_velocity: Largest displacement per round
            safe_distance: Near-collision distance
            init_bounds: Agents start uniformly in [-init_bounds, init_bounds]²
            rounds: Rounds per episode
    '''
    agent_count: int = 5
    stationary_ids: list[int] = field(default_factory=list)
    max_velocity: float = 5.
    safe_distance: float = 2.
    init_bounds: float = 20.
    rounds: int = 25


@dataclass
class FormationConfig:
    shape: str = 'circle'
    desired_distance: float = 5.
    v_half_angle: float = 30.


@dataclass
class AgentsConfig:
    ''' Decision-maker per agent

        Args:
            backend: Default backend: 'chat', 'oracle', or 'scripted:<kind>'
            backends: Per-agent backend overrides, keyed by agent id
            personalities: Per-agent personality ('stubborn' or 'suggestible')
                for chat agents, keyed by agent id
            workers: Threads computing decisions within a round
    '''
    backend: str = 'chat'
    backends: dict[int, str] = field(default_factory=dict)
    personalities: dict[int, str] = field(default_factory=dict)
    workers: int = 1


@dataclass
class EndpointConfig:
    ''' Chat endpoint and conversation settings

        Args:
            base_url: Endpoint base URL. Empty uses the openai default.
            model: Model identifier
            api_key_env: Environment variable holding the API key
            temperature: Sampling temperature. None leaves the endpoint default.
            max_tokens: Reply length limit. None leaves the endpoint default.
            timeout: Request timeout, seconds
            transport_attempts: Tries per request on transient transport errors
            max_attempts: Calls per decision when answers are unreadable
            on_exhaustion: 'hold-position' or 'fail-episode'
            window: Rounds of history sent to the model, 0 for all
            include_velocities: Tell agents the other agents' velocities
            state_distance: Name the desired distance in the shape text
    '''
    base_url: str = ''
    model: str = 'gpt-3.5-turbo-0613'
    api_key_env: str = 'OPENAI_API_KEY'
    temperature: Optional[float] = None
    max_tokens: Optional[int] = None
    timeout: float = 60.
    transport_attempts: int = 4
    max_attempts: int = 3
    on_exhaustion: str = 'hold-position'
    window: int = 0
    include_velocities: bool = False
    state_distance: bool = True

    def sampling(self) -> dict[str, Any]:
        ''' Sampling parameters actually sent to the endpoint '''
        out: dict[str, Any] = {}
        if self.temperature is not None:
            out['temperature'] = float(self.temperature)
        if self.max_tokens is not None:
            out['max_tokens'] = self.max_tokens
        return out


@dataclass
class OracleConfig:
    ''' Alpha-agent controller used by the oracle backend '''
    sigma_eps: float = .1
    range_ratio: float = 1.2
    bump_h: float = .2
    phi_a: float = 5.
    phi_b: float = 5.
    cohesion_gain: float = 2.
    cohesion_damping: float = 1.
    substeps: int = 20
    dt: float = .05


@dataclass
class LoggingConfig:
    level: str = 'WARNING'
    file: str = ''


@dataclass
class ExperimentConfig:
    ''' Everything needed to run a batch of episodes

        Args:
            name: Scenario name, used for output directories
            seed: Root seed. Trial k uses seed + k.
            trials: Episodes per batch
            strict: Stop an episode on the first unusable decision
    '''
    name: str = 'experiment'
    seed: int = 0
    trials: int = 10
    strict: bool = False
    world: WorldConfig = field(default_factory=WorldConfig)
    formation: FormationConfig = field(default_factory=FormationConfig)
    agents: AgentsConfig = field(default_factory=AgentsConfig)
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    @property
    def limits(self) -> MotionLimits:
        return MotionLimits(self.world.max_velocity, self.world.safe_distance)

    @property
    def formation_spec(self) -> FormationSpec:
        return FormationSpec(self.formation.shape, self.formation.desired_distance,
                             self.world.agent_count, self.formation.v_half_angle)

    @property
    def alpha_params(self) -> AlphaParams:
        o = self.oracle
        return AlphaParams.from_distance(
            self.formation.desired_distance, o.range_ratio,
            sigma_eps=o.sigma_eps, bump_h=o.bump_h, phi_a=o.phi_a, phi_b=o.phi_b,
            cohesion_gain=o.cohesion_gain, cohesion_damping=o.cohesion_damping)

    @property
    def agent_ids(self) -> list[int]:
        return list(range(self.world.agent_count))

    @property
    def active_ids(self) -> list[int]:
        return [i for i in self.agent_ids if i not in self.world.stationary_ids]

    def backend_for(self, i: int) -> str:
        ''' Backend spec of agent i '''
        return self.agents.backends.get(i, self.agents.backend)

    def personality_for(self, i: int) -> Optional[str]:
        return self.agents.personalities.get(i)

    def validate(self) -> 'ExperimentConfig':
        ''' Check the whole configuration. Raises ConfigError naming the offending key. '''
        from .chat import RetryPolicy
        from .brains import parse_backend

        w = self.world
        if self.trials < 1:
            raise ConfigError(f'trials must be at least 1, got {self.trials}')
        if w.rounds < 1:
            raise ConfigError(f'world.rounds must be at least 1, got {w.rounds}')
        if w.agent_count < 2:
            raise ConfigError(f'world.agent_count must be at least 2, got {w.agent_count}')
        if not (math.isfinite(w.init_bounds) and w.init_bounds > 0):
            raise ConfigError(f'world.init_bounds must be positive, got {w.init_bounds}')
        for i in w.stationary_ids:
            if i not in self.agent_ids:
                raise ConfigError(f'world.stationary_ids: {i} is not an agent id')
        if self.agents.workers < 1:
            raise ConfigError(f'agents.workers must be at least 1, got {self.agents.workers}')
        for section, keys in (('agents.backends', self.agents.backends),
                              ('agents.personalities', self.agents.personalities)):
            for i in keys:
                if i not in self.agent_ids:
                    raise ConfigError(f'{section}: {i} is not an agent id')
        for i, p in self.agents.personalities.items():
            if p not in ('stubborn', 'suggestible'):
                raise ConfigError(f'agents.personalities: unknown personality {p!r} for agent {i}')
        if self.endpoint.window < 0:
            raise ConfigError(f'endpoint.window must be nonnegative, got {self.endpoint.window}')
        if self.oracle.substeps < 1 or not self.oracle.dt > 0:
            raise ConfigError('oracle.substeps must be at least 1 and oracle.dt positive')

        try:
            self.limits
            target_positions(self.formation_spec)
            self.alpha_params
            RetryPolicy(self.endpoint.max_attempts, self.endpoint.on_exhaustion)
            for i in self.agent_ids:
                parse_backend(self.backend_for(i))
        except ValidationError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def overrides(self, **kwargs) -> 'ExperimentConfig':
        ''' Copy with command-line overrides applied. None values are ignored.

            Keys: seed, trials, rounds, backend, name
        '''
        cfg = fromdict(todict(self))
        if kwargs.get('seed') is not None:
            cfg.seed = kwargs['seed']
        if kwargs.get('trials') is not None:
            cfg.trials = kwargs['trials']
        if kwargs.get('name') is not None:
            cfg.name = kwargs['name']
        if kwargs.get('rounds') is not None:
            cfg.world.rounds = kwargs['rounds']
        if kwargs.get('backend') is not None:
            cfg.agents = replace(cfg.agents, backend=kwargs['backend'], backends={})
        return cfg

    def digest(self) -> str:
        ''' Short hash identifying this configuration, seed and trials excluded '''
        data = todict(self)
        data.pop('seed')
        data.pop('trials')
        text = json.dumps(data, sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(text.encode()).hexdigest()[:12]


@lru_cache(maxsize=None)
def _scalars(cls) -> dict[str, type]:
    ''' Scalar type (int, float, bool, str) of each field of cls, Optional unwrapped '''
    out = {}
    for name, hint in get_type_hints(cls).items():
        args = [a for a in get_args(hint) if a is not type(None)]
        if get_origin(hint) is Union and len(args) == 1:
            hint = args[0]
        if hint in (int, float, bool, str):
            out[name] = hint
    return out


def _floats(obj: Any, data: dict[str, Any]) -> None:
    ''' Write integers held by float fields of obj as floats, in place '''
    kinds = _scalars(type(obj))
    for f in fields(obj):
        value = getattr(obj, f.name)
        if is_dataclass(value):
            _floats(value, data[f.name])
        elif kinds.get(f.name) is float and isinstance(value, int) and not isinstance(value, bool):
            data[f.name] = float(value)


def todict(cfg: ExperimentConfig) -> dict[str, Any]:
    ''' Configuration as plain data, with the schema version.

        Float settings are always written as floats, so `desired_distance=10`
        and `desired_distance=10.` give the same document and digest.
    '''
    data = asdict(cfg)
    _floats(cfg, data)
    for key in ('backends', 'personalities'):
        data['agents'][key] = {str(k): v for k, v in sorted(data['agents'][key].items())}
    data['oracle'] = dict(data['oracle'])
    data['world']['stationary_ids'] = sorted(data['world']['stationary_ids'])
    return {'schema': SCHEMA, **data}


def _section(cls, data: Any, where: str):
    if not isinstance(data, Mapping):
        raise ConfigError(f'[{where}] must be a table')
    names = {f.name: f for f in fields(cls)}
    unknown = sorted(set(data) - set(names))
    if unknown:
        raise ConfigError(f'Unknown key(s) in [{where}]: {", ".join(unknown)}')
    kinds = _scalars(cls)
    kwargs = {}
    for key, value in data.items():
        name = key if where == 'root' else f'{where}.{key}'
        default = getattr(cls(), key)
        kind = kinds.get(key)
        if is_dataclass(default):
            value = _section(type(default), value, name)
        elif isinstance(default, tuple):
            value = tuple(value)
        elif kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)

        if kind is None:
            if not isinstance(value, type(default)):
                raise ConfigError(f'{name} must be {type(default).__name__}, got {value!r}')
        elif value is None:
            if default is not None:
                raise ConfigError(f'{name} must be {kind.__name__}, got None')
        elif not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
            raise ConfigError(f'{name} must be {kind.__name__}, got {value!r}')
        kwargs[key] = value
    return cls(**kwargs)


def _idmap(data: Mapping, where: str) -> dict[int, str]:
    out = {}
    for key, value in data.items():
        try:
            out[int(key)] = value
        except (TypeError, ValueError):
            raise ConfigError(f'{where}: agent id {key!r} is not an integer') from None
    return dict(sorted(out.items()))


def fromdict(data: Mapping[str, Any]) -> ExperimentConfig:
    ''' Build a configuration from plain data (a parsed TOML or JSON document) '''
    data = dict(data)
    schema = data.pop('schema', SCHEMA)
    if schema != SCHEMA:
        raise ConfigError(f'Config schema version {schema} is not supported (expected {SCHEMA})')
    cfg = _section(ExperimentConfig, data, 'root')
    cfg.agents.backends = _idmap(cfg.agents.backends, 'agents.backends')
    cfg.agents.personalities = _idmap(cfg.agents.personalities, 'agents.personalities')
    cfg.world.stationary_ids = [int(i) for i in cfg.world.stationary_ids]
    return cfg


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    ''' Read and validate a TOML experiment configuration '''
    try:
        with open(path, 'rb') as f:
            data = tomllib.load(f)
    except OSError as exc:
        raise ConfigError(f'Cannot read config {path}: {exc}') from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f'Invalid TOML in {path}: {exc}') from exc
    return fromdict(data).validate()
