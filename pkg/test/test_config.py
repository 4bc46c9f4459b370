''' Experiment configuration '''
import pytest

from ziaflock.config import ExperimentConfig, load_config, todict, fromdict, config
from ziaflock.errors import ConfigError


TOML = '''
name = "circle-chat"
seed = 7
trials = 3

[world]
agent_count = 5
stationary_ids = [0]
max_velocity = 4
rounds = 10

[formation]
shape = "v-shape"
desired_distance = 6
v_half_angle = 40

[agents]
backend = "chat"
workers = 2

[agents.backends]
1 = "scripted:diverger"

[agents.personalities]
2 = "stubborn"

[endpoint]
model = "local-model"
base_url = "http://localhost:8000/v1"
temperature = 0.2
max_tokens = 200
on_exhaustion = "fail-episode"
window = 3

[oracle]
substeps = 10
'''


def write(tmp_path, text):
    path = tmp_path / 'experiment.toml'
    path.write_text(text, encoding='utf-8')
    return path


def test_load(tmp_path):
    cfg = load_config(write(tmp_path, TOML))
    assert cfg.name == 'circle-chat'
    assert cfg.seed == 7
    assert cfg.world.max_velocity == 4.
    assert isinstance(cfg.world.max_velocity, float)
    assert cfg.formation_spec.shape == 'v-shape'
    assert cfg.formation_spec.v_half_angle == 40
    assert cfg.backend_for(1) == 'scripted:diverger'
    assert cfg.backend_for(3) == 'chat'
    assert cfg.personality_for(2) == 'stubborn'
    assert cfg.active_ids == [1, 2, 3, 4]
    assert cfg.endpoint.sampling() == {'temperature': .2, 'max_tokens': 200}
    assert cfg.limits.max_velocity == 4
    assert cfg.alpha_params.lattice_distance == 6
    assert cfg.alpha_params.interaction_range == pytest.approx(7.2)


def test_defaults():
    cfg = ExperimentConfig().validate()
    assert cfg.world.rounds == 25
    assert cfg.trials == 10
    assert cfg.world.max_velocity == 5
    assert cfg.world.safe_distance == 2
    assert cfg.endpoint.max_attempts == 3
    assert cfg.endpoint.on_exhaustion == 'hold-position'
    assert cfg.endpoint.sampling() == {}


@pytest.mark.parametrize('text, match', [
    ('colour = "red"', 'colour'),
    ('[world]\nagents = 5', 'agents'),
    ('[world]\nrounds = "many"', 'world.rounds'),
    ('[formation]\nshape = "blob"', 'blob'),
    ('[agents]\nbackend = "scripted:wanderer"', 'wanderer'),
    ('[world]\nstationary_ids = [9]', 'stationary_ids'),
    ('[endpoint]\non_exhaustion = "shrug"', 'on_exhaustion'),
    ('[agents.personalities]\n1 = "grumpy"', 'grumpy'),
    ('[formation]\nshape = "triangle"', 'triangle'),
    ('[endpoint]\ntemperature = "hot"', 'endpoint.temperature'),
    ('[endpoint]\nmax_tokens = 1.5', 'endpoint.max_tokens'),
    ('[world]\nrounds = true', 'world.rounds'),
    ('[formation]\nshape = "v-shape"\nv_half_angle = 20', 'v_half_angle'),
    ('name = ', 'TOML'),
])
def test_bad_config(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / 'absent.toml')


def test_schema(tmp_path):
    with pytest.raises(ConfigError, match='schema'):
        load_config(write(tmp_path, 'schema = 99'))


def test_roundtrip_and_digest(tmp_path):
    cfg = load_config(write(tmp_path, TOML))
    data = todict(cfg)
    assert data['agents']['backends'] == {'1': 'scripted:diverger'}
    again = fromdict(data)
    assert again == cfg
    assert again.digest() == cfg.digest()
    assert cfg.overrides(seed=99, trials=1).digest() == cfg.digest()
    assert cfg.overrides(rounds=11).digest() != cfg.digest()


def test_overrides():
    cfg = ExperimentConfig()
    cfg.agents.backends = {0: 'oracle'}
    new = cfg.overrides(seed=5, backend='scripted:stubborn', rounds=3, name='x')
    assert (new.seed, new.world.rounds, new.name) == (5, 3, 'x')
    assert new.backend_for(0) == 'scripted:stubborn'
    assert cfg.seed == 0
    assert cfg.backend_for(0) == 'oracle'


def test_global_precision():
    old = config.precision
    try:
        config.precision = 3
        assert config.precision == 3
    finally:
        config.precision = old


def test_integer_floats_normalized():
    cfg = ExperimentConfig()
    cfg.formation.desired_distance = 10
    cfg.world.max_velocity = 5
    cfg.endpoint.temperature = 1
    data = todict(cfg)
    assert isinstance(data['formation']['desired_distance'], float)
    assert isinstance(data['world']['max_velocity'], float)
    assert isinstance(data['endpoint']['temperature'], float)
    assert isinstance(data['world']['rounds'], int)
    assert cfg.endpoint.sampling() == {'temperature': 1.}
    assert fromdict(data).digest() == cfg.digest()
    other = ExperimentConfig()
    other.formation.desired_distance = 10.
    other.endpoint.temperature = 1.
    assert other.digest() == cfg.digest()


def test_optional_fields_typed():
    cfg = fromdict({'endpoint': {'temperature': 0, 'max_tokens': None}})
    assert cfg.endpoint.temperature == 0. and isinstance(cfg.endpoint.temperature, float)
    assert cfg.endpoint.max_tokens is None
    with pytest.raises(ConfigError, match='endpoint.temperature'):
        fromdict({'endpoint': {'temperature': 'hot'}})
    with pytest.raises(ConfigError, match='endpoint.timeout'):
        fromdict({'endpoint': {'timeout': None}})
