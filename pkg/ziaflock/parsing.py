''' Read `Reasoning:..., Position: [x, y]` answers from model text '''
from __future__ import annotations
from typing import Union
from dataclasses import dataclass
import math
import re

from .geometry import Vec2
from .errors import MissingPositionMarker, MalformedCoordinates, MultipleAmbiguousPositions


_NUMBER = r'[-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?'
_PAIR = re.compile(rf'\[\s*({_NUMBER})\s*,\s*({_NUMBER})\s*\]')
_POSITION = re.compile(r'\b(?:Position|POSITION)\s*[*_`]*\s*:')
_REASONING = re.compile(r'\b(?:Reasoning|REASONING)\s*[*_`]*\s*:')
_FENCE = re.compile(r'^[ \t]*```[^\n]*$', re.MULTILINE)

MAX_DECIMALS = 2


@dataclass
class DecisionResponse:
    ''' A successfully parsed answer

        Args:
            reasoning: Text before the position marker
            target: Requested position
            raw: Full model text
            precise: False if a coordinate had more than two decimals
    '''
    reasoning: str
    target: Vec2
    raw: str
    precise: bool = True

    @property
    def has_reasoning(self) -> bool:
        return bool(self.reasoning)


def _decimals(number: str) -> int:
    if 'e' in number.lower():
        return MAX_DECIMALS + 1
    if '.' not in number:
        return 0
    return len(number.split('.', 1)[1])


def _clean(text: str) -> str:
    text = _FENCE.sub('', text)
    return text.strip().strip('*_`').strip().rstrip(',').strip()


def parse_response(raw: Union[str, bytes]) -> DecisionResponse:
    ''' Extract the reasoning and target position from a model answer.

        The last `Position:` marker wins. Prose, line breaks, and markdown
        fences around the answer are ignored.

        Raises:
            MissingPositionMarker: No `Position:` in the text
            MalformedCoordinates: No bracketed [x, y] pair of finite numbers after the marker
            MultipleAmbiguousPositions: More than one pair after the marker
    '''
    if isinstance(raw, bytes):
        raw = raw.decode('utf-8', errors='replace')
    if not isinstance(raw, str):
        raw = str(raw)

    markers = list(_POSITION.finditer(raw))
    if not markers:
        raise MissingPositionMarker('No "Position:" marker in response', raw)
    marker = markers[-1]

    pairs = _PAIR.findall(raw, marker.end())
    if not pairs:
        raise MalformedCoordinates('"Position:" is not followed by an [x, y] pair', raw)
    if len(pairs) > 1:
        raise MultipleAmbiguousPositions(
            f'{len(pairs)} coordinate pairs after the last "Position:" marker', raw)

    xs, ys = pairs[0]
    x, y = float(xs), float(ys)
    if not (math.isfinite(x) and math.isfinite(y)):
        raise MalformedCoordinates(f'Non-finite coordinates [{xs}, {ys}]', raw)

    reasons = [r for r in _REASONING.finditer(raw, 0, marker.start())]
    start = reasons[0].end() if reasons else 0
    reasoning = _clean(raw[start:marker.start()])

    precise = max(_decimals(xs), _decimals(ys)) <= MAX_DECIMALS
    return DecisionResponse(reasoning=reasoning, target=Vec2(x, y), raw=raw, precise=precise)
