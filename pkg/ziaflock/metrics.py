''' Flock metrics and outcome classification '''
from __future__ import annotations
from typing import Optional, Sequence
from dataclasses import dataclass, field

import numpy as np

from .geometry import Vec2, asarray, nearest_neighbors, pairwise_distances
from .formations import FormationSpec
from .errors import ValidationError


LABELS = ('flocked', 'collapsed', 'diverged', 'oscillating', 'inconclusive')


def mae(positions: Sequence[Vec2], desired_distance: float) -> float:
    ''' Mean absolute error between each agent's closest-neighbor
        distance and the desired distance
    '''
    if len(positions) < 2:
        raise ValidationError('MAE needs at least 2 agents')
    if desired_distance <= 0:
        raise ValidationError(f'desired_distance must be positive, got {desired_distance}')
    _, nearest = nearest_neighbors(asarray(positions))
    return float(np.mean(np.abs(nearest - desired_distance)))


@dataclass
class MetricPoint:
    ''' Metrics of one round '''
    round: int
    mae: float
    min_dist: float
    max_dist: float
    centroid: Vec2
    spread: float
    nearest: list[float] = field(default_factory=list)


def metric_point(round: int, positions: Sequence[Vec2], desired_distance: float) -> MetricPoint:
    ''' Compute all metrics for one set of positions '''
    pos = asarray(positions)
    dist = pairwise_distances(pos)
    upper = dist[np.triu_indices(len(pos), k=1)]
    _, nearest = nearest_neighbors(pos)
    center = pos.mean(axis=0)
    spread = float(np.sqrt(np.mean(np.sum((pos - center)**2, axis=1))))
    return MetricPoint(
        round=round,
        mae=float(np.mean(np.abs(nearest - desired_distance))),
        min_dist=float(upper.min()),
        max_dist=float(upper.max()),
        centroid=Vec2.of(center),
        spread=spread,
        nearest=[float(x) for x in nearest])


@dataclass
class MetricSeries:
    ''' Per-round metrics of an episode, round 0 included '''
    points: list[MetricPoint] = field(default_factory=list)
    positions: list[list[Vec2]] = field(default_factory=list)

    def append(self, point: MetricPoint, positions: Sequence[Vec2]) -> None:
        self.points.append(point)
        self.positions.append(list(positions))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def mae(self) -> list[float]:
        return [p.mae for p in self.points]

    @classmethod
    def from_positions(cls, trajectory: Sequence[Sequence[Vec2]], desired_distance: float) -> 'MetricSeries':
        ''' Compute a series from positions at every round '''
        series = cls()
        for k, positions in enumerate(trajectory):
            series.append(metric_point(k, positions, desired_distance), positions)
        return series


@dataclass
class OutcomeLabel:
    ''' Classification of an episode, with the statistics that triggered it '''
    label: str
    evidence: str = ''


@dataclass(frozen=True)
class ClassifierThresholds:
    ''' Outcome classification conventions

        Args:
            margin: MAE success line
            flocked_rounds: Consecutive final rounds that must be within margin
            collapse_ratio: Final max distance must fall below this times d
            collapse_shrink: Fractional spread reduction required for collapse
            diverge_ratio: Final min distance must exceed this times d
            diverge_growth: Fractional max-distance growth required for divergence
            oscillation_window: Final rounds examined for oscillation
            oscillation_flips: Sign changes needed within the window
    '''
    margin: float = .2
    flocked_rounds: int = 3
    collapse_ratio: float = .5
    collapse_shrink: float = .8
    diverge_ratio: float = 2.
    diverge_growth: float = .5
    oscillation_window: int = 6
    oscillation_flips: int = 3
    min_rounds: int = 5


def _oscillation(series: MetricSeries, d: float, th: ClassifierThresholds) -> Optional[str]:
    window = series.positions[-th.oscillation_window:]
    centroids = [np.asarray(p.centroid) for p in series.points[-th.oscillation_window:]]
    rel = np.array([asarray(pos) - c for pos, c in zip(window, centroids)])  # (rounds, agents, 2)
    for agent in range(rel.shape[1]):
        for axis, axname in enumerate('xy'):
            trace = rel[:, agent, axis]
            signs = np.sign(trace)
            flips = int(np.sum((signs[1:] * signs[:-1]) < 0))
            amplitude = float(trace.max() - trace.min())
            if flips >= th.oscillation_flips and amplitude > d:
                return (f'agent {agent} {axname} relative to centroid changed sign {flips} times '
                        f'with amplitude {amplitude:.2f} > {d:g}')
    return None


def classify_outcome(series: MetricSeries, spec: FormationSpec,
                     thresholds: Optional[ClassifierThresholds] = None) -> OutcomeLabel:
    ''' Label an episode flocked, collapsed, diverged, oscillating, or inconclusive '''
    th = thresholds if thresholds else ClassifierThresholds()
    if len(series) - 1 < th.min_rounds:
        raise ValidationError(f'Need at least {th.min_rounds} rounds to classify, got {len(series)-1}')
    d = spec.desired_distance
    first, last = series.points[0], series.points[-1]

    tail = series.mae[-th.flocked_rounds:]
    if all(m <= th.margin for m in tail):
        return OutcomeLabel('flocked', f'MAE {", ".join(f"{m:.3f}" for m in tail)} '
                                       f'<= {th.margin:g} over the final {th.flocked_rounds} rounds')

    shrink = 1 - last.spread / first.spread if first.spread > 0 else 1.
    if last.max_dist < th.collapse_ratio * d and shrink >= th.collapse_shrink:
        return OutcomeLabel('collapsed', f'final max distance {last.max_dist:.3f} < {th.collapse_ratio*d:g}, '
                                         f'spread {first.spread:.3f} -> {last.spread:.3f} '
                                         f'({shrink:.0%} reduction)')

    growth = last.max_dist / first.max_dist - 1 if first.max_dist > 0 else np.inf
    if last.min_dist > th.diverge_ratio * d and growth >= th.diverge_growth:
        return OutcomeLabel('diverged', f'final min distance {last.min_dist:.3f} > {th.diverge_ratio*d:g}, '
                                        f'max distance {first.max_dist:.3f} -> {last.max_dist:.3f} '
                                        f'({growth:.0%} growth)')

    why = _oscillation(series, d, th)
    if why:
        return OutcomeLabel('oscillating', why)

    return OutcomeLabel('inconclusive', f'final MAE {last.mae:.3f}, min distance {last.min_dist:.3f}, '
                                        f'max distance {last.max_dist:.3f}')
