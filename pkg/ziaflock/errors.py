''' Exceptions raised by ziaflock '''
from __future__ import annotations
from typing import Optional


class ZiaflockError(Exception):
    ''' Base class for all ziaflock errors '''


class ConfigError(ZiaflockError, ValueError):
    ''' Invalid experiment configuration '''


class ValidationError(ZiaflockError, ValueError):
    ''' Invalid numeric input, such as non-finite coordinates or dt <= 0 '''


class EpisodeError(ZiaflockError, RuntimeError):
    ''' An episode could not continue

        Args:
            message: Description of the failure
            round: Round number where the failure occurred
            cause: Short machine-readable cause
    '''
    def __init__(self, message: str, round: Optional[int] = None, cause: str = 'episode'):
        super().__init__(message)
        self.round = round
        self.cause = cause


class EndpointError(ZiaflockError, RuntimeError):
    ''' Chat endpoint could not be reached after retrying '''


class TranscriptError(ZiaflockError, ValueError):
    ''' Transcript file is truncated or malformed '''


class SchemaVersionError(TranscriptError):
    ''' File was written with a different schema version '''
    def __init__(self, found: object, expected: object, what: str = 'transcript'):
        super().__init__(f'Unsupported {what} schema version {found} (expected {expected})')
        self.found = found
        self.expected = expected


class ParseError(ZiaflockError, ValueError):
    ''' Model response does not follow the `Reasoning:..., Position: [x, y]` format

        Args:
            message: Description
            raw: The text that failed to parse
    '''
    def __init__(self, message: str, raw: str = ''):
        super().__init__(message)
        self.raw = raw

    @property
    def kind(self) -> str:
        ''' Name of the failure, as recorded in transcripts '''
        return type(self).__name__


class MissingPositionMarker(ParseError):
    ''' No `Position:` marker in the response '''


class MalformedCoordinates(ParseError):
    ''' `Position:` marker not followed by a usable [x, y] pair '''


class MultipleAmbiguousPositions(ParseError):
    ''' More than one [x, y] pair after the last `Position:` marker '''
