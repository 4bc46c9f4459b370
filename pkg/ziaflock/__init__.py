from .geometry import Vec2
from .world import (AgentState, WorldState, MotionLimits, Decision, RoundRecord,
                    clamp_move, step_world, integrate_double, init_positions)
from .olfati import AlphaParams, control_input, oracle_flocker_decide
from .formations import FormationSpec, target_positions, circle_radius
from .metrics import mae, classify_outcome, MetricSeries, OutcomeLabel
from .prompts import PromptTemplateSet, build_initial_prompt, build_round_prompt
from .parsing import parse_response, DecisionResponse
from .chat import (ConversationState, RetryPolicy, OpenAIChatClient, ScriptedChatClient,
                   ReplayChatClient, llm_decide)
from .brains import Brain
from .config import config, ExperimentConfig, load_config
from .presets import preset
from .episode import run_episode, build_backends
from .transcript import Transcript, read_transcript, write_transcript
from .harness import run_matrix, replay, report
from .plot import plot

__version__ = '0.1'
