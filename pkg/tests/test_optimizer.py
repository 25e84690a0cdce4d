import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semisic.bloch import gram, random_unit_vectors
from semisic.errors import InfeasibleThetaError, NoZeroTermError, OutsideDomainError, ZeroLengthError
from semisic.optimizer import (
    GammaPoint,
    Strategy,
    closed_form_optimum,
    gamma_coefficients,
    gamma_stationarity_residual,
    hessian_probe,
    mean_bound,
    mu_branch_select,
    optimal_directions,
    optimal_states,
    q_gamma,
    q_v,
    seesaw,
    zero_term_perturbation_check,
)
from semisic.povm import semi_sic_gram
from semisic.witness import WitnessSpec, q_of_b, q_prime

from .helpers import zero_term_configuration

SQRT3 = math.sqrt(3)


def _theta_dirs(theta):
    return np.array([[1, 0, 0], [0, math.cos(theta), math.sin(theta)], [0, math.cos(theta), -math.sin(theta)]])


class TestOptimalStates:
    def test_tetrahedral_directions(self):
        step = optimal_states(WitnessSpec(1, 1), _theta_dirs(math.pi / 4))
        assert np.allclose(np.linalg.norm(step.u, axis=1), SQRT3, atol=1e-14)
        assert step.value == pytest.approx(4 * SQRT3, abs=1e-12)
        assert not step.unspecified.any()

    def test_one_fifteenth(self):
        spec = WitnessSpec.from_B(1 / 15)
        opt = closed_form_optimum(spec)
        step = optimal_states(spec, opt.strategy.directions)
        assert np.allclose(np.linalg.norm(step.u, axis=1), 2.0, atol=1e-12)
        assert step.value == pytest.approx(8.0, abs=1e-12)

    def test_collinear(self):
        step = optimal_states(WitnessSpec(1, 1), [[1, 0, 0], [1, 0, 0], [-1, 0, 0]])
        assert np.allclose(np.linalg.norm(step.u, axis=1), [1, 1, 1, 3])
        assert step.value == pytest.approx(6.0)

    def test_zero_u_is_flagged(self):
        step = optimal_states(WitnessSpec(0, 0), [[1, 0, 0], [0, 0, 1], [0, 0, -1]])
        assert step.unspecified.tolist() == [True, True, False, False]
        assert np.array_equal(step.states[:2], np.zeros((2, 3)))

    def test_no_unit_state_beats_half_step(self, rng):
        for _ in range(5):
            spec = WitnessSpec(*rng.uniform(-3, 3, 2))
            dirs = random_unit_vectors(rng, 3)
            step = optimal_states(spec, dirs)
            best = Strategy(step.states, dirs).witness(spec)
            assert best == pytest.approx(step.value, abs=1e-12)
            for x in range(4):
                for probe in random_unit_vectors(rng, 100):
                    m = step.states.copy()
                    m[x] = probe
                    assert Strategy(m, dirs).witness(spec) <= best + 1e-12


class TestOptimalDirections:
    def test_tetrahedral_z_lengths(self):
        spec = WitnessSpec.from_B(1 / 12)
        states = closed_form_optimum(spec).strategy.states
        step = optimal_directions(spec, states)
        z = np.linalg.norm(step.z, axis=1)
        assert z[1:] == pytest.approx([8 / math.sqrt(12)] * 2, abs=1e-12)

    def test_one_fifteenth_z_lengths(self):
        # 8 / sqrt(2 (c1^2 + c2^2 + 4)) = 8 / sqrt(16) = 2
        spec = WitnessSpec.from_B(1 / 15)
        step = optimal_directions(spec, closed_form_optimum(spec).strategy.states)
        z = np.linalg.norm(step.z, axis=1)
        assert z[1:] == pytest.approx([2.0, 2.0], abs=1e-12)
        assert step.value == pytest.approx(8.0, abs=1e-12)

    def test_collapsed_states(self):
        spec = WitnessSpec(1.7, 0.3)
        step = optimal_directions(spec, [[0, 0, 1]] * 4)
        assert step.z[0] == pytest.approx([0, 0, 2 * 1.7 - 2 * 0.3])
        assert np.allclose(step.z[1:], 0)
        assert np.array_equal(step.directions[1:], [[0, 0, 1], [0, 0, 1]])

    def test_no_unit_direction_beats_half_step(self, rng):
        for _ in range(5):
            spec = WitnessSpec(*rng.uniform(-3, 3, 2))
            m = random_unit_vectors(rng, 4)
            step = optimal_directions(spec, m)
            best = Strategy(m, step.directions).witness(spec)
            assert best == pytest.approx(step.value, abs=1e-12)
            for y in range(3):
                for probe in random_unit_vectors(rng, 100):
                    v = step.directions.copy()
                    v[y] = probe
                    assert Strategy(m, v).witness(spec) <= best + 1e-12


class TestMuBranch:
    def test_zero_column_sums_projective(self, rng):
        spec = WitnessSpec(1.5, 0.5)
        branches = mu_branch_select(spec, random_unit_vectors(rng, 4))
        assert [b.branch for b in branches[1:]] == ["projective", "projective"]

    def test_equal_c_projective(self):
        spec = WitnessSpec(1, 1)
        branches = mu_branch_select(spec, closed_form_optimum(spec).strategy.states)
        assert [b.branch for b in branches] == ["projective"] * 3

    def test_one_fifteenth_optimum(self):
        # at the optimum |z_1| = Q / 2 = 4 exceeds |W_1| = 2 (c1 - c2)
        spec = WitnessSpec.from_B(1 / 15)
        b = mu_branch_select(spec, closed_form_optimum(spec).strategy.states)[0]
        assert b.z_norm == pytest.approx(4.0, abs=1e-12)
        assert b.column_sum == pytest.approx(2.3094010767585031, abs=1e-12)
        assert b.branch == "projective"

    def test_degenerate_when_states_collapse(self):
        spec = WitnessSpec(2.0, 0.5)
        m = [[1, 0, 0], [0, 1, 0], [1, 0, 0], [0, 1, 0]]
        b = mu_branch_select(spec, m)[0]
        assert b.branch == "degenerate" and b.mu == 1.0

    def test_tie(self):
        spec = WitnessSpec(1.0, 0.0)
        b = mu_branch_select(spec, [[0, 0, 1], [0, 0, 1], [1, 0, 0], [1, 0, 0]])[0]
        assert b.branch == "tie" and b.mu == 0.0


class TestClosedForm:
    def test_tetrahedral(self):
        opt = closed_form_optimum(WitnessSpec(1, 1))
        assert opt.theta == pytest.approx(math.pi / 4)
        g = gram(opt.strategy.states)
        assert np.allclose(g[~np.eye(4, dtype=bool)], -1 / 3, atol=1e-12)
        assert opt.value == pytest.approx(4 * SQRT3)

    def test_one_fifteenth(self):
        spec = WitnessSpec.from_B(1 / 15)
        opt = closed_form_optimum(spec)
        assert spec.cos_two_theta == pytest.approx(-0.7453559924999299, abs=1e-12)
        assert math.cos(opt.theta) == pytest.approx(0.35682208977308993, abs=1e-12)
        assert math.sin(opt.theta) == pytest.approx(0.9341723589627157, abs=1e-12)
        assert np.allclose(gram(opt.strategy.states), semi_sic_gram(1 / 15), atol=1e-12)

    def test_zero_coefficients(self):
        opt = closed_form_optimum(WitnessSpec(0, 0))
        assert opt.theta == pytest.approx(math.pi / 4)
        assert opt.value == pytest.approx(4 * math.sqrt(2))
        assert np.allclose(opt.strategy.states[:, 0], 0)

    def test_infeasible(self):
        with pytest.raises(InfeasibleThetaError):
            closed_form_optimum(WitnessSpec(10, 0.1))


class TestSeesaw:
    @pytest.mark.parametrize("B", [1 / 12, 1 / 15])
    def test_reaches_q(self, B):
        res = seesaw(WitnessSpec.from_B(B), seed=3, restarts=20, tol=1e-10)
        assert res.value == pytest.approx(q_of_b(B), abs=1e-8)
        assert res.restarts_used == 20 and len(res.restart_values) == 20
        assert res.restart_values[res.best_restart] == res.value

    def test_degenerate_branch_outside_image(self):
        spec = WitnessSpec(10, 0.1)
        res = seesaw(spec, seed=0, restarts=20)
        assert res.value >= q_prime(10, 0.1) - 1e-9
        assert res.value == pytest.approx(25.45685424949238, abs=1e-9)
        assert abs(res.strategy.mus[0]) == 1.0

    def test_projective_only_below_degenerate(self):
        spec = WitnessSpec(10, 0.1)
        res = seesaw(spec, seed=0, restarts=5, allow_degenerate=False)
        assert res.value < q_prime(10, 0.1)
        assert np.all(res.strategy.mus == 0)

    @given(st.integers(0, 2**31), st.floats(1 / 16 + 1e-4, 1 / 12))
    @settings(max_examples=15, deadline=None)
    def test_trace_nondecreasing(self, seed, B):
        res = seesaw(WitnessSpec.from_B(B), seed=seed, restarts=2)
        assert np.all(np.diff(res.trace) >= -1e-12)
        assert res.value <= q_of_b(B) + 1e-9

    def test_independent_of_workers(self):
        spec = WitnessSpec.from_B(1 / 14)
        a = seesaw(spec, seed=7, restarts=8)
        b = seesaw(spec, seed=7, restarts=8, workers=4)
        assert a.value == b.value and a.best_restart == b.best_restart
        assert np.array_equal(a.strategy.states, b.strategy.states)

    def test_equal_lengths_at_optimum(self):
        spec = WitnessSpec.from_B(1 / 13)
        res = seesaw(spec, seed=42)
        u = spec.matrix @ ((1 - np.abs(res.strategy.mus))[:, None] * res.strategy.directions)
        n = np.linalg.norm(u, axis=1)
        assert n.max() - n.min() <= 1e-8

    def test_mean_bound_every_iterate(self, rng):
        for B in (1 / 15.5, 1 / 13, 1 / 12):
            spec = WitnessSpec.from_B(B)
            v = random_unit_vectors(rng, 3)
            for _ in range(200):
                assert q_v(spec, v) <= mean_bound(spec, v) + 1e-12
                m = optimal_states(spec, v).states
                v = optimal_directions(spec, m, previous=v).directions
            # for unit directions the bound is exactly the optimum value
            assert mean_bound(spec, v) == pytest.approx(q_of_b(B), abs=1e-12)

    def test_json(self):
        res = seesaw(WitnessSpec(1, 1), seed=1, restarts=2)
        doc = json.loads(json.dumps(res.to_dict()))
        assert doc["trace"] == res.trace
        back = Strategy.from_dict(doc["strategy"])
        assert np.array_equal(back.states, res.strategy.states)

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            seesaw(WitnessSpec(1, 1), restarts=0)
        with pytest.raises(ValueError):
            seesaw(WitnessSpec(1, 1), tol=0)


class TestGamma:
    def test_closed_form_stationary(self):
        for B in (1 / 12, 1 / 15, 0.07):
            spec = WitnessSpec.from_B(B)
            point = GammaPoint.from_directions(closed_form_optimum(spec).strategy.directions)
            assert point.values[:2] == pytest.approx([0, 0], abs=1e-15)
            assert point.gamma23 == pytest.approx(spec.cos_two_theta, abs=1e-14)
            assert np.abs(gamma_stationarity_residual(spec, point)).max() <= 1e-10
            assert q_gamma(spec, point) == pytest.approx(q_of_b(B), abs=1e-12)

    def test_off_optimum(self):
        res = gamma_stationarity_residual(WitnessSpec(1, 1), GammaPoint(0.3, 0, 0))
        assert res == pytest.approx([-0.23690189534634585, 0, 0], abs=1e-14)

    def test_zero_coefficients_kill_first_two(self, rng):
        for g in rng.uniform(-0.9, 0.9, (10, 3)):
            res = gamma_stationarity_residual(WitnessSpec(0, 0), GammaPoint(*g))
            assert res[:2].tolist() == [0.0, 0.0]

    def test_zero_length(self):
        with pytest.raises(ZeroLengthError):
            gamma_stationarity_residual(WitnessSpec(0, 0), GammaPoint(0, 0, 1))

    def test_gradient_matches_q_gamma(self, rng):
        spec = WitnessSpec(1.3, 0.6)
        point = GammaPoint.from_directions(random_unit_vectors(rng, 3))
        h = 1e-6
        fd = [(q_gamma(spec, point.values + e) - q_gamma(spec, point.values - e)) / (2 * h) for e in np.eye(3) * h]
        assert gamma_stationarity_residual(spec, point) == pytest.approx(fd, abs=1e-6)

    def test_feasibility(self):
        assert GammaPoint(0, 0, 0).is_feasible()
        assert not GammaPoint(0.9, -0.9, 0.9).is_feasible()


class TestHessian:
    def test_closed_form_negative_definite(self):
        spec = WitnessSpec(1, 1)
        point = GammaPoint.from_directions(closed_form_optimum(spec).strategy.directions)
        probe = hessian_probe(spec, point)
        assert probe.max_eigenvalue <= 1e-10 and probe.max_eigenvalue < 0
        assert probe.rank == 3 and probe.negative_definite and probe.fd_agrees

    def test_symmetric_point(self):
        spec = WitnessSpec(0, 0)
        probe = hessian_probe(spec, GammaPoint(0, 0, 0))
        _, t = gamma_coefficients(spec)
        r = t / 2**0.75
        assert np.allclose(probe.hessian, -r.T @ r)
        assert probe.hessian[2, 2] == pytest.approx(-4 / 2**1.5)
        assert probe.rank == 1 and not probe.negative_definite

    def test_random_sweep(self, rng):
        for _ in range(100):
            spec = WitnessSpec(*rng.uniform(-3, 3, 2))
            point = GammaPoint.from_directions(random_unit_vectors(rng, 3))
            probe = hessian_probe(spec, point)
            assert probe.max_eigenvalue <= 1e-8
            assert probe.fd_relative_error <= 1e-4

    def test_outside_domain(self):
        with pytest.raises(OutsideDomainError):
            hessian_probe(WitnessSpec(0, 0), GammaPoint(0, 0, -1.5))


class TestZeroTerm:
    def test_engineered(self, rng):
        for _ in range(50):
            spec, dirs, x = zero_term_configuration(rng)
            assert np.linalg.norm(spec.matrix[x] @ dirs) < 1e-10
            result = zero_term_perturbation_check(spec, dirs)
            assert result and result.gain > 0

    def test_equal_c_example(self):
        spec = WitnessSpec(1, 1)
        v1 = np.array([1.0, 0, 0])
        v2 = np.array([-0.5, math.sqrt(3) / 2, 0])
        v3 = -v1 - v2
        result = zero_term_perturbation_check(spec, [v1, v2, v3])
        assert result.improved and result.term == 0

    def test_opposite_directions(self):
        result = zero_term_perturbation_check(WitnessSpec(0, 0), [[1, 0, 0], [0, 0, 1], [0, 0, -1]])
        assert result.improved and result.term in (0, 1)

    def test_optimum_has_no_zero_term(self):
        spec = WitnessSpec.from_B(1 / 15)
        with pytest.raises(NoZeroTermError):
            zero_term_perturbation_check(spec, closed_form_optimum(spec).strategy.directions)
