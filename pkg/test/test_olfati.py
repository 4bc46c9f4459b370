''' Alpha-agent flocking controller '''
import math

import numpy as np
import pytest

from ziaflock.geometry import Vec2, rotate
from ziaflock.world import WorldState, AgentState, MotionLimits, step_world
from ziaflock.olfati import (AlphaParams, sigma_norm, sigma_grad, bump, phi, action_phi_alpha,
                             adjacency, neighbors, control_input, control_inputs, gradient_terms,
                             pairwise_potential, collective_potential, cohesion_terms,
                             predict_round, oracle_flocker_decide)
from ziaflock.errors import ValidationError


PARAMS = AlphaParams.from_distance(5.)


def test_params():
    assert PARAMS.interaction_range == pytest.approx(6)
    assert PARAMS.d_alpha == pytest.approx(8.70829, rel=1E-5)
    assert PARAMS.r_alpha == pytest.approx(10 * (math.sqrt(4.6) - 1))
    with pytest.raises(ValidationError):
        AlphaParams(interaction_range=4, lattice_distance=5)
    with pytest.raises(ValidationError):
        AlphaParams(phi_a=6, phi_b=5)


def test_sigma_norm():
    assert sigma_norm((0, 0), .1) == 0
    assert sigma_norm((3, 4), .1) == pytest.approx(10 * (math.sqrt(3.5) - 1))
    assert sigma_norm((3, 4), .1) == pytest.approx(8.70829, rel=1E-6)
    arr = sigma_norm(np.array([[0, 0], [3, 4]]), .1)
    assert arr.tolist() == pytest.approx([0, 8.70829], rel=1E-6)
    for eps in (0, 1, -.1, 1.5):
        with pytest.raises(ValidationError):
            sigma_norm((1, 1), eps)


def test_sigma_grad():
    n = sigma_grad((0, 0), (3, 4), .1)
    assert isinstance(n, Vec2)
    assert tuple(n) == pytest.approx((1.60357, 2.13809), rel=1E-5)
    assert sigma_grad((2, 2), (2, 2), .1) == Vec2(0, 0)


def test_bump():
    assert bump(.1, .2) == 1
    assert bump(0, .2) == 1
    assert bump(1., .2) == pytest.approx(0, abs=1E-15)
    assert bump(1.5, .2) == 0
    assert bump(.7, .2) == pytest.approx(.5 * (1 + math.cos(.5 * math.pi / .8)))
    assert bump(.7, .2) == pytest.approx(.30866, abs=1E-5)
    # The taper is centered between h and 1
    assert bump(.6, .2) == pytest.approx(.5)
    values = bump(np.linspace(0, 1.2, 50), .2)
    assert np.all(np.diff(values) <= 0)
    for h in (0, 1):
        with pytest.raises(ValidationError):
            bump(.5, h)


def test_phi_sign():
    assert phi(0, 5, 5) == 0
    assert phi(-1, 5, 5) < 0 < phi(1, 5, 5)
    # Uneven gains still cross zero at the origin
    assert phi(0, 2, 8) == pytest.approx(0, abs=1E-12)


def test_action_phi_alpha():
    d, r = PARAMS.d_alpha, PARAMS.r_alpha
    assert action_phi_alpha(d, PARAMS) == pytest.approx(0, abs=1E-12)
    assert action_phi_alpha(r, PARAMS) == pytest.approx(0, abs=1E-12)
    assert action_phi_alpha(r + 1, PARAMS) == 0
    assert action_phi_alpha(d - .1, PARAMS) < 0
    assert action_phi_alpha(d + .1, PARAMS) > 0
    assert action_phi_alpha(.5 * (d + r), PARAMS) > 0


def test_adjacency():
    assert adjacency((1, 1), (1, 1), PARAMS) == 1
    assert adjacency((0, 0), (6, 0), PARAMS) == 0
    assert adjacency((0, 0), (7, 0), PARAMS) == 0
    assert 0 < adjacency((0, 0), (5, 0), PARAMS) < 1


def test_neighbors():
    state = WorldState.initial([(17.04, 15.4), (-16.96, 15.4)])
    assert neighbors(0, state, 10) == set()
    state = WorldState.initial([(0, 0), (10, 0)])
    assert neighbors(0, state, 10) == set()
    state = WorldState.initial([(0, 0), (1, 0), (0, 1)])
    assert neighbors(0, state, 2) == {1, 2}
    assert neighbors(1, state, 2) == {0, 2}
    assert neighbors(2, state, 2) == {0, 1}


def test_control_isolated():
    state = WorldState.initial([(0, 0), (50, 50)])
    assert control_input(0, state, PARAMS) == Vec2(0, 0)


def test_control_lattice_pair():
    state = WorldState(0, (AgentState(0, Vec2(0, 0), Vec2(1, 1)), AgentState(1, Vec2(5, 0), Vec2(1, 1))))
    assert tuple(control_input(0, state, PARAMS)) == pytest.approx((0, 0), abs=1E-12)
    assert tuple(control_input(1, state, PARAMS)) == pytest.approx((0, 0), abs=1E-12)


def test_control_repels_close_pair():
    state = WorldState.initial([(0, 0), (2, 0)])
    assert control_input(0, state, PARAMS).x < 0
    assert control_input(1, state, PARAMS).x > 0


def test_control_attracts_far_pair():
    state = WorldState.initial([(0, 0), (5.5, 0)])
    assert control_input(0, state, PARAMS).x > 0
    assert control_input(1, state, PARAMS).x < 0


def test_gradient_matches_potential():
    ''' Gradient term equals minus the gradient of the pairwise potential '''
    rng = np.random.default_rng(7)
    h = 1E-5

    def potential(qi, qj):
        return pairwise_potential(sigma_norm(np.asarray(qj) - np.asarray(qi), PARAMS.sigma_eps), PARAMS)

    for s in np.linspace(.5, 5.7, 100):
        angle = rng.uniform(0, 2*math.pi)
        qi = rng.uniform(-5, 5, size=2)
        qj = qi + s * np.array([math.cos(angle), math.sin(angle)])
        numeric = np.array([
            (potential(qi + h*e, qj) - potential(qi - h*e, qj)) / (2*h)
            for e in np.eye(2)])
        analytic = gradient_terms(np.array([qi, qj]), PARAMS)[0]
        np.testing.assert_allclose(analytic, -numeric, rtol=1E-5, atol=1E-6)


def test_potential_minimum():
    assert pairwise_potential(PARAMS.d_alpha, PARAMS) == 0
    for z in (.5, 3, 8, 9, 11, 11.4):
        assert pairwise_potential(z, PARAMS) > 0
    # Lattice pair has lower potential than a squeezed one
    assert collective_potential(np.array([[0, 0], [5, 0]]), PARAMS) < \
        collective_potential(np.array([[0, 0], [3, 0]]), PARAMS)


def _random_flock(rng, n=5):
    return rng.uniform(-6, 6, size=(n, 2)), rng.uniform(-1, 1, size=(n, 2))


def test_zero_net_force():
    rng = np.random.default_rng(11)
    for _ in range(50):
        pos, vel = _random_flock(rng)
        u = control_inputs(pos, vel, PARAMS)
        np.testing.assert_allclose(u.sum(axis=0), 0, atol=1E-9)


def test_translation_invariance():
    rng = np.random.default_rng(12)
    for _ in range(50):
        pos, vel = _random_flock(rng)
        shift = rng.uniform(-10, 10, size=2)
        np.testing.assert_allclose(control_inputs(pos + shift, vel, PARAMS),
                                   control_inputs(pos, vel, PARAMS), rtol=0, atol=1E-12)


def test_rotation_equivariance():
    rng = np.random.default_rng(13)
    for _ in range(50):
        pos, vel = _random_flock(rng)
        angle = rng.uniform(0, 2*math.pi)
        rotated = control_inputs(rotate(pos, angle), rotate(vel, angle), PARAMS)
        np.testing.assert_allclose(rotated, rotate(control_inputs(pos, vel, PARAMS), angle),
                                   rtol=0, atol=1E-9)


def test_cohesion():
    pos = np.array([[0., 0.], [20., 0.]])
    u = cohesion_terms(pos, np.zeros_like(pos), PARAMS)
    assert u[0, 0] > 0 and u[1, 0] < 0
    pos = np.array([[0., 0.], [4., 0.]])
    assert not cohesion_terms(pos, np.zeros_like(pos), PARAMS).any()
    off = AlphaParams.from_distance(5., cohesion_gain=0)
    assert not cohesion_terms(np.array([[0., 0.], [20., 0.]]), np.zeros((2, 2)), off).any()


def test_predict_round_stationary():
    state = WorldState.initial([(0, 0), (2, 0)], stationary_ids=[1])
    pos, vel = predict_round(state, PARAMS)
    assert pos[1].tolist() == [2, 0]
    assert vel[1].tolist() == [0, 0]
    assert pos[0, 0] < 0
    with pytest.raises(ValidationError):
        predict_round(state, PARAMS, substeps=0)


def test_oracle_equilibrium():
    state = WorldState.initial([(0, 0), (5, 0)])
    for i in (0, 1):
        decision = oracle_flocker_decide(i, state, PARAMS, MotionLimits())
        assert tuple(decision.target) == pytest.approx(tuple(state.agent(i).position), abs=1E-12)
        assert 'neighbors' in decision.reasoning


def test_oracle_separates_close_pair():
    state = WorldState.initial([(0, 0), (2, 0)])
    limits = MotionLimits()
    decisions = {i: oracle_flocker_decide(i, state, PARAMS, limits) for i in (0, 1)}
    new, _ = step_world(state, decisions, limits)
    assert new.agent(0).position.dist(new.agent(1).position) > 2
    assert decisions[0].acceleration.x < 0
