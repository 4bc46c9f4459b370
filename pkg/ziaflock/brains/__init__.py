''' Decision-maker backends, registered by kind '''

from .brain import Brain, parse_backend, brain_kinds, SCRIPTED_KINDS
from .scripted import (StationaryBrain, ConsensusSeekerBrain, DivergerBrain, StubbornBrain,
                       SuggestibleBrain, consensus_seeker_decide, diverger_decide,
                       stubborn_decide, suggestible_decide, stationary_decide)
from .oracle import OracleBrain, OracleWrapperBrain
from .llm import LlmBrain, endpoint_client
