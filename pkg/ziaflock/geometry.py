''' Planar vectors and distance helpers '''
from __future__ import annotations
from typing import Iterator, Sequence, Union
from dataclasses import dataclass
import math

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class Vec2:
    ''' Point or displacement in the plane, in world units

        Args:
            x: Horizontal coordinate
            y: Vertical coordinate
    '''
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, 'x', float(self.x))
        object.__setattr__(self, 'y', float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValidationError(f'Non-finite vector ({self.x}, {self.y})')

    @classmethod
    def of(cls, value: Union['Vec2', Sequence[float], np.ndarray]) -> 'Vec2':
        ''' Convert a pair-like value to Vec2, rejecting NaN/Inf '''
        if isinstance(value, Vec2):
            return value
        try:
            x, y = value
            return cls(float(x), float(y))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f'Not a 2D vector: {value!r}') from exc

    def __iter__(self) -> Iterator[float]:
        yield self.x
        yield self.y

    def __array__(self, dtype=None, copy=None) -> np.ndarray:
        return np.array((self.x, self.y), dtype=dtype if dtype else float)

    def __add__(self, other: 'Vec2') -> 'Vec2':
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: 'Vec2') -> 'Vec2':
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, k: float) -> 'Vec2':
        return Vec2(self.x * k, self.y * k)

    __rmul__ = __mul__

    def __neg__(self) -> 'Vec2':
        return Vec2(-self.x, -self.y)

    def norm(self) -> float:
        ''' Euclidean length '''
        return math.hypot(self.x, self.y)

    def dist(self, other: 'Vec2') -> float:
        ''' Euclidean distance to another point '''
        return math.hypot(other.x - self.x, other.y - self.y)

    def aslist(self) -> list[float]:
        return [self.x, self.y]


ZERO = Vec2(0., 0.)


def asarray(points: Sequence[Union[Vec2, Sequence[float]]]) -> np.ndarray:
    ''' Stack points into an (n, 2) float array '''
    if len(points) == 0:
        return np.zeros((0, 2))
    return np.array([tuple(p) for p in points], dtype=float).reshape(-1, 2)


def aspoints(array: np.ndarray) -> list[Vec2]:
    ''' Convert an (n, 2) array back into a list of Vec2 '''
    return [Vec2(float(x), float(y)) for x, y in np.asarray(array, dtype=float)]


def pairwise_distances(positions: np.ndarray) -> np.ndarray:
    ''' Matrix of Euclidean distances between all pairs of rows '''
    pos = np.asarray(positions, dtype=float)
    diff = pos[None, :, :] - pos[:, None, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def nearest_neighbors(positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ''' Index and distance of the closest other point for each row.

        Ties resolve to the lowest index.
    '''
    dist = pairwise_distances(positions)
    np.fill_diagonal(dist, np.inf)
    idx = np.argmin(dist, axis=1)  # argmin returns the first (lowest) index on ties
    return idx, dist[np.arange(len(dist)), idx]


def rotate(points: np.ndarray, angle: float) -> np.ndarray:
    ''' Rotate (n, 2) points counterclockwise about the origin by angle (radians) '''
    c, s = math.cos(angle), math.sin(angle)
    rot = np.array([[c, -s], [s, c]])
    return np.asarray(points, dtype=float) @ rot.T
