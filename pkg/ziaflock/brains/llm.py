''' Language-model agent backed by a chat endpoint '''
from __future__ import annotations
from typing import Mapping, Optional, TYPE_CHECKING

from ..world import WorldState, MotionLimits, Decision
from ..prompts import PromptTemplateSet, build_initial_prompt
from ..chat import ChatClient, ConversationState, OpenAIChatClient, RetryPolicy, llm_decide
from .brain import Brain

if TYPE_CHECKING:
    from ..config import ExperimentConfig


def endpoint_client(cfg: 'ExperimentConfig') -> OpenAIChatClient:
    ''' Chat client for the configured endpoint '''
    ep = cfg.endpoint
    return OpenAIChatClient(ep.model, ep.base_url or None, ep.api_key_env,
                            ep.timeout, ep.transport_attempts)


class LlmBrain(Brain, kind='chat'):
    ''' Agent whose moves come from a chat model, one private conversation per agent

        Args:
            agent_id: The agent this brain controls
            client: Chat endpoint
            shape: Formation named in the prompt
            desired_distance: Spacing stated in the shape text, or None
            personality: Optional 'stubborn' or 'suggestible'
            templates: Prompt strings
            policy: Handling of unreadable answers
            window: Rounds of history sent, 0 for all
            include_velocities: Tell the agent the others' velocities
            sampling: Sampling parameters sent with every request
    '''
    def __init__(self, agent_id: int, client: ChatClient, shape: str = 'circle',
                 desired_distance: Optional[float] = None, personality: Optional[str] = None,
                 templates: Optional[PromptTemplateSet] = None,
                 policy: Optional[RetryPolicy] = None, window: int = 0,
                 include_velocities: bool = False, sampling: Optional[Mapping] = None,
                 **kwargs):
        super().__init__(agent_id)
        self.client = client
        self.shape = shape
        self.desired_distance = desired_distance
        self.personality = personality
        self.templates = templates if templates else PromptTemplateSet()
        self.policy = policy if policy else RetryPolicy()
        self.include_velocities = include_velocities
        self.sampling = dict(sampling) if sampling else {}
        self.conversation = ConversationState(agent_id, window_rounds=window)

    @classmethod
    def fromconfig(cls, agent_id: int, cfg: 'ExperimentConfig',
                   client: Optional[ChatClient] = None) -> 'LlmBrain':
        ep = cfg.endpoint
        return cls(agent_id,
                   client if client is not None else endpoint_client(cfg),
                   shape=cfg.formation.shape,
                   desired_distance=cfg.formation.desired_distance if ep.state_distance else None,
                   personality=cfg.personality_for(agent_id),
                   policy=RetryPolicy(ep.max_attempts, ep.on_exhaustion),
                   window=ep.window,
                   include_velocities=ep.include_velocities,
                   sampling=ep.sampling())

    def decide(self, state: WorldState, limits: MotionLimits) -> Decision:
        me = state.agent(self.agent_id)
        others = state.others(self.agent_id)
        if not self.conversation.started:
            self.conversation.start(build_initial_prompt(
                self.templates, me, others, limits, self.shape, self.personality,
                self.desired_distance, self.include_velocities))
        decision, self.conversation = llm_decide(
            self.conversation, self.client, me, others, self.templates, self.policy,
            self.include_velocities, self.sampling)
        return decision

    def observe(self, state: WorldState) -> None:
        if self.conversation.started:
            self.conversation.observe(state.agent(self.agent_id), state.others(self.agent_id),
                                      self.templates, self.include_velocities)
