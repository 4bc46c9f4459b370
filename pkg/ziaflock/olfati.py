''' Alpha-agent flocking control (gradient term plus velocity consensus)

    The scalar functions accept floats or numpy arrays. Vector inputs are
    pairs (or arrays whose last axis has length 2).
'''
from __future__ import annotations
from typing import Optional, Set, Union
from dataclasses import dataclass
import math

import numpy as np

from .geometry import Vec2, asarray, nearest_neighbors
from .world import WorldState, MotionLimits, Decision, semi_implicit_euler
from .errors import ValidationError

ArrayLike = Union[float, np.ndarray]

# Gauss-Legendre nodes per panel for the pairwise potential
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


@dataclass(frozen=True)
class AlphaParams:
    ''' Parameters of the alpha-agent controller

        Args:
            sigma_eps: Sigma-norm parameter, in (0, 1)
            interaction_range: Neighbor range r, world units
            lattice_distance: Desired spacing d, world units (0 < d < r)
            bump_h: Bump function plateau, in (0, 1)
            phi_a: Action function gain a (0 < a <= b)
            phi_b: Action function gain b
            cohesion_gain: Oracle-only pull toward spacing d from the
                nearest peer when it is farther than d. 0 disables it.
            cohesion_damping: Oracle-only relative velocity damping
                applied with the cohesion pull
    '''
    sigma_eps: float = .1
    interaction_range: float = 6.
    lattice_distance: float = 5.
    bump_h: float = .2
    phi_a: float = 5.
    phi_b: float = 5.
    cohesion_gain: float = 2.
    cohesion_damping: float = 1.

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_distance(cls, d: float, range_ratio: float = 1.2, **kwargs) -> 'AlphaParams':
        ''' Parameters for lattice distance d with r = range_ratio * d '''
        return cls(interaction_range=range_ratio*d, lattice_distance=d, **kwargs)

    def validate(self) -> None:
        _check_eps(self.sigma_eps)
        _check_h(self.bump_h)
        if not 0 < self.lattice_distance < self.interaction_range:
            raise ValidationError(
                f'Need 0 < lattice_distance < interaction_range, got '
                f'{self.lattice_distance}, {self.interaction_range}')
        if not 0 < self.phi_a <= self.phi_b:
            raise ValidationError(f'Need 0 < phi_a <= phi_b, got {self.phi_a}, {self.phi_b}')
        if self.cohesion_gain < 0 or self.cohesion_damping < 0:
            raise ValidationError('Cohesion gains must be nonnegative')

    @property
    def r_alpha(self) -> float:
        ''' Interaction range in sigma-norm units '''
        return _sigma_scalar(self.interaction_range, self.sigma_eps)

    @property
    def d_alpha(self) -> float:
        ''' Lattice distance in sigma-norm units '''
        return _sigma_scalar(self.lattice_distance, self.sigma_eps)


def _check_eps(eps: float) -> None:
    if not 0 < eps < 1:
        raise ValidationError(f'sigma_eps must be in (0, 1), got {eps}')


def _check_h(h: float) -> None:
    if not 0 < h < 1:
        raise ValidationError(f'bump h must be in (0, 1), got {h}')


def _sigma_scalar(length: float, eps: float) -> float:
    return (math.sqrt(1 + eps * length**2) - 1) / eps


def sigma_norm(z, sigma_eps: float) -> ArrayLike:
    ''' Sigma-norm (1/eps)(sqrt(1 + eps|z|²) - 1), differentiable at 0 '''
    _check_eps(sigma_eps)
    z = np.asarray(z, dtype=float)
    sq = np.sum(z*z, axis=-1)
    out = (np.sqrt(1 + sigma_eps*sq) - 1) / sigma_eps
    return float(out) if np.ndim(out) == 0 else out


def sigma_grad(qi, qj, sigma_eps: float) -> Union[Vec2, np.ndarray]:
    ''' Vector n_ij = (qj - qi)/sqrt(1 + eps|qj - qi|²) along the line from qi to qj '''
    _check_eps(sigma_eps)
    diff = np.asarray(qj, dtype=float) - np.asarray(qi, dtype=float)
    root = np.sqrt(1 + sigma_eps*np.sum(diff*diff, axis=-1))
    out = diff / np.expand_dims(root, -1)
    return Vec2.of(out) if out.ndim == 1 else out


def bump(z: ArrayLike, h: float) -> ArrayLike:
    ''' Bump function: 1 on [0, h), cosine taper on [h, 1], 0 beyond '''
    _check_h(h)
    z = np.asarray(z, dtype=float)
    taper = .5 * (1 + np.cos(np.pi * (z - h) / (1 - h)))
    out = np.where(z < h, 1., np.where(z <= 1, taper, 0.))
    out = np.where(z < 0, 0., out)
    return float(out) if out.ndim == 0 else out


def sigma1(z: ArrayLike) -> ArrayLike:
    ''' Uneven sigmoid z/sqrt(1 + z²) '''
    z = np.asarray(z, dtype=float)
    return z / np.sqrt(1 + z*z)


def phi(z: ArrayLike, a: float, b: float) -> ArrayLike:
    ''' Uneven sigmoid action profile, negative below 0 and positive above '''
    c = abs(a - b) / math.sqrt(4*a*b)
    return .5 * ((a + b) * sigma1(np.asarray(z, dtype=float) + c) + (a - b))


def action_phi_alpha(z: ArrayLike, params: AlphaParams) -> ArrayLike:
    ''' Pairwise action function with finite cut-off at r_alpha '''
    z = np.asarray(z, dtype=float)
    out = bump(z / params.r_alpha, params.bump_h) * phi(z - params.d_alpha, params.phi_a, params.phi_b)
    return float(out) if np.ndim(out) == 0 else out


def adjacency(qi, qj, params: AlphaParams) -> float:
    ''' Spatial adjacency weight a_ij, zero at and beyond the interaction range '''
    diff = np.asarray(qj, dtype=float) - np.asarray(qi, dtype=float)
    if math.hypot(*diff) >= params.interaction_range:
        return 0.
    return float(bump(sigma_norm(diff, params.sigma_eps) / params.r_alpha, params.bump_h))


def neighbors(i: int, state: WorldState, r: float) -> Set[int]:
    ''' Ids of agents strictly closer than r to agent i '''
    me = state.agent(i).position
    return {a.id for a in state.agents if a.id != i and me.dist(a.position) < r}


def _pair_terms(positions: np.ndarray, params: AlphaParams):
    ''' Shared pairwise quantities. Row i, column j refers to the pair (i, j). '''
    pos = np.asarray(positions, dtype=float)
    diff = pos[None, :, :] - pos[:, None, :]   # q_j - q_i
    sq = np.sum(diff*diff, axis=-1)
    root = np.sqrt(1 + params.sigma_eps*sq)
    z = (root - 1) / params.sigma_eps
    n = diff / root[..., None]
    mask = np.hypot(diff[..., 0], diff[..., 1]) < params.interaction_range
    np.fill_diagonal(mask, False)
    return z, n, mask


def gradient_terms(positions: np.ndarray, params: AlphaParams) -> np.ndarray:
    ''' Gradient-based term sum_j phi_alpha(|q_j - q_i|_sigma) n_ij for every agent '''
    z, n, mask = _pair_terms(positions, params)
    weight = np.where(mask, action_phi_alpha(z, params), 0.)
    return np.sum(weight[..., None] * n, axis=1)


def consensus_terms(positions: np.ndarray, velocities: np.ndarray, params: AlphaParams) -> np.ndarray:
    ''' Velocity consensus term sum_j a_ij (v_j - v_i) for every agent '''
    z, _, mask = _pair_terms(positions, params)
    weight = np.where(mask, bump(z / params.r_alpha, params.bump_h), 0.)
    vel = np.asarray(velocities, dtype=float)
    dv = vel[None, :, :] - vel[:, None, :]
    return np.sum(weight[..., None] * dv, axis=1)


def control_inputs(positions: np.ndarray, velocities: np.ndarray, params: AlphaParams) -> np.ndarray:
    ''' Alpha-agent control input for every agent, as an (n, 2) array '''
    return gradient_terms(positions, params) + consensus_terms(positions, velocities, params)


def control_input(i: int, state: WorldState, params: AlphaParams) -> Vec2:
    ''' Alpha-agent control input (acceleration) of agent i '''
    state.agent(i)
    pos, vel = state.snapshot()
    k = state.ids.index(i)
    return Vec2.of(control_inputs(pos, vel, params)[k])


def cohesion_terms(positions: np.ndarray, velocities: np.ndarray, params: AlphaParams) -> np.ndarray:
    ''' Pull each agent whose nearest peer is farther than d back to spacing d '''
    pos = np.asarray(positions, dtype=float)
    out = np.zeros_like(pos)
    if len(pos) < 2 or params.cohesion_gain == 0:
        return out
    vel = np.asarray(velocities, dtype=float)
    idx, dist = nearest_neighbors(pos)
    active = dist > params.lattice_distance
    if not active.any():
        return out
    away = (pos - pos[idx]) / np.where(active, dist, 1.)[:, None]
    ref = pos[idx] + params.lattice_distance * away
    err = ref - pos
    root = np.sqrt(1 + params.sigma_eps*np.sum(err*err, axis=-1))
    pull = params.cohesion_gain * err / root[:, None] - params.cohesion_damping * (vel - vel[idx])
    out[active] = pull[active]
    return out


def pairwise_potential(z: float, params: AlphaParams) -> float:
    ''' Pairwise potential psi_alpha(z), the integral of phi_alpha from d_alpha to z '''
    lo, hi = sorted((params.d_alpha, float(z)))
    if lo == hi:
        return 0.
    kinks = [params.bump_h * params.r_alpha, params.r_alpha]
    edges = [lo] + [k for k in kinks if lo < k < hi] + [hi]
    total = 0.
    for a, b in zip(edges[:-1], edges[1:]):
        npanels = max(1, math.ceil(b - a))
        bounds = np.linspace(a, b, npanels+1)
        for p0, p1 in zip(bounds[:-1], bounds[1:]):
            half = (p1 - p0) / 2
            s = p0 + half * (_GL_NODES + 1)
            total += half * float(np.sum(_GL_WEIGHTS * action_phi_alpha(s, params)))
    return total if z >= params.d_alpha else -total


def collective_potential(positions: np.ndarray, params: AlphaParams) -> float:
    ''' Sum of pairwise potentials over all pairs (constant beyond the cut-off) '''
    pos = np.asarray(positions, dtype=float)
    total = 0.
    for i in range(len(pos)):
        for j in range(i+1, len(pos)):
            z = min(sigma_norm(pos[j] - pos[i], params.sigma_eps), params.r_alpha)
            total += pairwise_potential(z, params)
    return total


def predict_round(state: WorldState, params: AlphaParams, substeps: int = 20, dt: float = .05,
                  velocities: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    ''' Integrate every agent under the alpha-agent law (plus cohesion) for one round

        Args:
            state: World snapshot to start from
            params: Controller parameters
            substeps: Number of internal integration steps
            dt: Internal time step
            velocities: Starting velocities, overriding the snapshot's

        Returns:
            Predicted positions and velocities, (n, 2) arrays in id order
    '''
    if substeps < 1:
        raise ValidationError(f'substeps must be at least 1, got {substeps}')
    if not (math.isfinite(dt) and dt > 0):
        raise ValidationError(f'dt must be positive, got {dt}')
    pos, vel = state.snapshot()
    if velocities is not None:
        vel = np.array(velocities, dtype=float)
    frozen = state.stationary_mask()
    vel[frozen] = 0.
    for _ in range(substeps):
        acc = control_inputs(pos, vel, params) + cohesion_terms(pos, vel, params)
        acc[frozen] = 0.
        pos, vel = semi_implicit_euler(pos, vel, acc, dt, frozen)
    return pos, vel


def describe_prediction(i: int, state: WorldState, params: AlphaParams,
                        limits: MotionLimits, predicted: np.ndarray,
                        velocities: Optional[np.ndarray] = None) -> Decision:
    ''' Build the Decision for agent i from a predicted end-of-round configuration '''
    pos, vel = state.snapshot()
    if velocities is not None:
        vel = np.asarray(velocities, dtype=float)
    k = state.ids.index(i)
    u = control_inputs(pos, vel, params)[k] + cohesion_terms(pos, vel, params)[k]
    target = Vec2.of(predicted[k])
    me = state.agent(i).position
    nbrs = sorted(neighbors(i, state, params.interaction_range))
    step = me.dist(target)
    reasoning = (f'Alpha-lattice control with {len(nbrs)} neighbors {nbrs}: '
                 f'|u| = {math.hypot(*u):.3f}, '
                 f'collective potential {collective_potential(pos, params):.3f}, '
                 f'step {step:.3f}')
    if step > limits.max_velocity:
        reasoning += f' (exceeds max velocity {limits.max_velocity:g})'
    return Decision(target=target, reasoning=reasoning, acceleration=Vec2.of(u))


def oracle_flocker_decide(i: int, state: WorldState, params: AlphaParams, limits: MotionLimits,
                          substeps: int = 20, dt: float = .05,
                          velocities: Optional[np.ndarray] = None) -> Decision:
    ''' Position command for agent i from integrating the flocking law over one round '''
    state.agent(i)
    predicted, _ = predict_round(state, params, substeps, dt, velocities)
    return describe_prediction(i, state, params, limits, predicted, velocities)
