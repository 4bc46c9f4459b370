''' Chat endpoints, per-agent conversations, and the LLM decision loop '''
from __future__ import annotations
from typing import Callable, Mapping, Optional, Protocol, Sequence, Union, TYPE_CHECKING
from collections import defaultdict, deque
from dataclasses import dataclass, field
import logging
import os
import threading

import openai
from tenacity import Retrying, stop_after_attempt, wait_exponential, retry_if_exception_type

from .world import AgentState, Attempt, Decision
from .prompts import (PromptTemplateSet, ChatMessage, build_round_prompt, build_correction)
from .parsing import parse_response
from .errors import ParseError, EndpointError, EpisodeError, ConfigError, ValidationError
from .config import config

if TYPE_CHECKING:
    from .transcript import Transcript


logger = logging.getLogger(__name__)

HOLD = 'hold-position'
FAIL = 'fail-episode'

# Transport errors worth retrying. Everything else is reported at once.
TRANSIENT = (openai.APIConnectionError, openai.APITimeoutError,
             openai.RateLimitError, openai.InternalServerError)


@dataclass(frozen=True)
class RetryPolicy:
    ''' What to do when a model answer cannot be parsed

        Args:
            max_attempts: Endpoint calls allowed per decision
            on_exhaustion: 'hold-position' keeps the agent in place,
                'fail-episode' stops the episode
    '''
    max_attempts: int = 3
    on_exhaustion: str = HOLD

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ConfigError(f'max_attempts must be at least 1, got {self.max_attempts}')
        if self.on_exhaustion not in (HOLD, FAIL):
            raise ConfigError(f'on_exhaustion must be {HOLD!r} or {FAIL!r}, got {self.on_exhaustion!r}')


@dataclass
class ConversationState:
    ''' One agent's private message history

        Args:
            agent_id: Owner of the conversation
            messages: History, starting with the initial prompt
            window_rounds: Rounds of history sent to the model. 0 sends everything.
    '''
    agent_id: int
    messages: list[ChatMessage] = field(default_factory=list)
    window_rounds: int = 0

    @property
    def started(self) -> bool:
        return bool(self.messages)

    def start(self, initial: Sequence[ChatMessage]) -> None:
        ''' Begin the conversation with the initial prompt '''
        if self.messages:
            raise ValidationError(f'Conversation of agent {self.agent_id} already started')
        self.messages.extend(initial)

    def observe(self, me: AgentState, others: Sequence[AgentState],
                templates: PromptTemplateSet, include_velocities: bool = False) -> None:
        ''' Tell the agent where everyone moved, once per round '''
        if self.messages and self.messages[-1].role == 'assistant':
            self.messages.append(build_round_prompt(templates, me, others, include_velocities))

    def window(self) -> list[ChatMessage]:
        ''' Messages to send: the initial prompt plus the last window_rounds exchanges '''
        if not self.window_rounds:
            return list(self.messages)
        head, tail = self.messages[:1], self.messages[1:]
        return head + tail[-2*self.window_rounds:]


@dataclass
class ChatReply:
    ''' Text returned by an endpoint, with token usage when known '''
    text: str
    usage: dict = field(default_factory=dict)


class ChatClient(Protocol):
    ''' Anything that can answer a list of chat messages '''
    def complete(self, messages: Sequence[ChatMessage], agent_id: int = 0, **sampling) -> ChatReply:
        ...


class OpenAIChatClient:
    ''' Chat-completions endpoint through the openai package

        Args:
            model: Model identifier
            base_url: Endpoint base URL. None uses the package default.
            api_key_env: Environment variable holding the API key
            timeout: Request timeout, seconds
            transport_attempts: Tries per request on connection, timeout,
                rate-limit, and server errors
            sampling: Default sampling parameters (temperature, max_tokens, ...)
    '''
    def __init__(self, model: str, base_url: Optional[str] = None,
                 api_key_env: str = 'OPENAI_API_KEY', timeout: float = 60.,
                 transport_attempts: int = 4, **sampling):
        key = os.environ.get(api_key_env)
        if not key:
            raise ConfigError(f'Environment variable {api_key_env} is not set')
        self.model = model
        self.sampling = {k: v for k, v in sampling.items() if v is not None}
        self.transport_attempts = transport_attempts
        self.client = openai.OpenAI(api_key=key, base_url=base_url, timeout=timeout, max_retries=0)

    def complete(self, messages: Sequence[ChatMessage], agent_id: int = 0, **sampling) -> ChatReply:
        kwargs = dict(self.sampling, **{k: v for k, v in sampling.items() if v is not None})
        retrying = Retrying(
            stop=stop_after_attempt(self.transport_attempts),
            wait=wait_exponential(multiplier=1, max=30),
            retry=retry_if_exception_type(TRANSIENT),
            reraise=True)
        try:
            response = retrying(
                self.client.chat.completions.create,
                model=self.model,
                messages=[m.asdict() for m in messages],
                **kwargs)
        except openai.OpenAIError as exc:
            raise EndpointError(f'Chat endpoint failed for agent {agent_id}: {exc}') from exc

        choices = getattr(response, 'choices', None)
        if not choices:
            raise EndpointError(f'Chat endpoint returned no choices for agent {agent_id}')
        text = choices[0].message.content or ''
        usage = response.usage.model_dump() if getattr(response, 'usage', None) else {}
        return ChatReply(text, usage)


Responder = Callable[[Sequence[ChatMessage], int], str]


class ScriptedChatClient:
    ''' Canned replies, for offline runs and tests

        Args:
            replies: Texts returned in order (shared by all agents), a
                mapping of agent id to texts, or a function of
                (messages, agent_id) returning the text
            cycle: Start over when the replies run out
    '''
    def __init__(self, replies: Union[Sequence[str], Mapping[int, Sequence[str]], Responder],
                 cycle: bool = False):
        self.responder: Optional[Responder] = replies if callable(replies) else None
        self.cycle = cycle
        self.queues: dict[Optional[int], list[str]] = {}
        if isinstance(replies, Mapping):
            self.queues = {k: list(v) for k, v in replies.items()}
        elif self.responder is None:
            self.queues = {None: list(replies)}  # type: ignore
        self.position: dict[Optional[int], int] = defaultdict(int)
        self.calls: list[tuple[int, list[ChatMessage]]] = []
        self._lock = threading.Lock()

    def complete(self, messages: Sequence[ChatMessage], agent_id: int = 0, **sampling) -> ChatReply:
        with self._lock:
            self.calls.append((agent_id, list(messages)))
            if self.responder is not None:
                return ChatReply(self.responder(messages, agent_id))
            key = agent_id if agent_id in self.queues else None
            texts = self.queues.get(key, [])
            k = self.position[key]
            if k >= len(texts):
                if not self.cycle or not texts:
                    raise EndpointError(f'No scripted reply left for agent {agent_id}')
                k = 0
            self.position[key] = k + 1
            return ChatReply(texts[k])


class ReplayChatClient:
    ''' Re-serve the assistant texts of a recorded session, byte for byte

        Args:
            texts: Mapping of agent id to that agent's replies in call order
    '''
    def __init__(self, texts: Mapping[int, Sequence[str]]):
        self.texts = {k: deque(v) for k, v in texts.items()}
        self._lock = threading.Lock()

    @classmethod
    def from_transcript(cls, transcript: 'Transcript') -> 'ReplayChatClient':
        texts: dict[int, list[str]] = defaultdict(list)
        for record in transcript.rounds:
            for i, decision in record.decisions.items():
                texts[i].extend(a.raw for a in decision.attempts)
        for i, a in transcript.failed_attempts():
            texts[i].append(a.raw)
        return cls(texts)

    def complete(self, messages: Sequence[ChatMessage], agent_id: int = 0, **sampling) -> ChatReply:
        with self._lock:
            queue = self.texts.get(agent_id)
            if not queue:
                raise EndpointError(f'Recorded session has no more replies for agent {agent_id}')
            return ChatReply(queue.popleft())


def llm_decide(conv: ConversationState, client: ChatClient, me: AgentState,
               others: Sequence[AgentState], templates: PromptTemplateSet,
               policy: RetryPolicy, include_velocities: bool = False,
               sampling: Optional[Mapping] = None) -> tuple[Decision, ConversationState]:
    ''' Ask the agent's model where to move this round

        Appends the round prompt (unless already observed), calls the
        endpoint, and parses the answer. Unreadable answers are followed
        by a reminder of the output format until policy.max_attempts
        calls have been made.

        Raises:
            EndpointError: Transport failure
            EpisodeError: Every attempt failed and the policy is fail-episode
    '''
    if not conv.started:
        raise ValidationError(f'Conversation of agent {conv.agent_id} has no initial prompt')
    if conv.messages[-1].role == 'assistant':
        conv.messages.append(build_round_prompt(templates, me, others, include_velocities))

    sampling = dict(sampling) if sampling else {}
    attempts: list[Attempt] = []
    retries: list[ChatMessage] = []
    for k in range(policy.max_attempts):
        sent = conv.window() + retries
        if config.debug:
            logger.debug('Agent %d prompt:\n%s', conv.agent_id, sent[-1].content)
        reply = client.complete(sent, agent_id=conv.agent_id, **sampling)
        if config.debug:
            logger.debug('Agent %d reply:\n%s', conv.agent_id, reply.text)
        try:
            parsed = parse_response(reply.text)
        except ParseError as err:
            attempts.append(Attempt(reply.text, err.kind, reply.usage))
            logger.warning('Agent %d: unreadable answer (%s), attempt %d of %d',
                           conv.agent_id, err.kind, k+1, policy.max_attempts)
            retries += [ChatMessage('assistant', reply.text or '(empty reply)'),
                        build_correction(templates)]
            continue

        attempts.append(Attempt(reply.text, 'ok', reply.usage))
        if not parsed.precise:
            logger.info('Agent %d: position given with more than two decimals', conv.agent_id)
        conv.messages.append(ChatMessage('assistant', reply.text))
        return Decision(parsed.target, parsed.reasoning, attempts=attempts), conv

    last = attempts[-1].raw if attempts else ''
    if policy.on_exhaustion == FAIL:
        err = EpisodeError(f'Agent {conv.agent_id} gave no readable answer in '
                           f'{policy.max_attempts} attempts', cause='format-failure')
        err.attempts = attempts  # type: ignore[attr-defined]
        raise err

    logger.warning('Agent %d holds position after %d unreadable answers', conv.agent_id, len(attempts))
    conv.messages.append(ChatMessage('assistant', last or '(empty reply)'))
    return Decision(me.position, '', held=True, attempts=attempts), conv
