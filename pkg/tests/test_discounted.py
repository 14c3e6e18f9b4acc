import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from avimdp import (
    Accel,
    GeneratorSpec,
    InputError,
    MdpModel,
    brute_force_lambda_star,
    generate_random_mdp,
    lambda_bounds_from_discounted,
    reduce_to_discounted,
    solve_discounted,
)
from avimdp.discounted import discounted_bounds

from conftest import small_specs


def _exact_discounted(m, alpha):
    """Optimal discounted cost by enumerating policies (independent oracle)."""
    import itertools
    best = None
    for pol in itertools.product(*(range(k) for k in m.n_actions)):
        P = np.array([m.dense_row(i, a) for i, a in enumerate(pol)])
        r = np.array([m.actions[i][a].cost for i, a in enumerate(pol)])
        v = np.linalg.solve(np.eye(m.n_states) - alpha * P, r)
        best = v if best is None else np.minimum(best, v)
    return best


class TestSolveDiscounted:
    def test_cycle3_half(self, cycle3):
        v, _ = solve_discounted(cycle3, 0.5, eps=1e-12)
        assert np.allclose(v, [8 / 3, 16 / 3, 4], atol=1e-10)

    def test_myopic(self):
        m = generate_random_mdp(GeneratorSpec(6, 4, 0.5, rng_seed=2))
        v, it = solve_discounted(m, 0.0)
        assert np.allclose(v, [min(c) for c in m.costs()])
        assert it <= 2

    @pytest.mark.parametrize("accel", [Accel.PROJECTIVE, Accel.LINEAR_EXTENSION])
    def test_accelerated_matches_plain(self, accel):
        m = generate_random_mdp(GeneratorSpec(30, 5, 0.3, rng_seed=8))
        plain, n_plain = solve_discounted(m, 0.95, eps=1e-11)
        fast, n_fast = solve_discounted(m, 0.95, accel, eps=1e-11)
        assert np.allclose(plain, fast, atol=1e-9)
        assert n_fast <= n_plain

    def test_accelerated_iterates_stay_below_optimum(self, cycle3):
        seen = []
        solve_discounted(cycle3, 0.9, Accel.PROJECTIVE, eps=1e-10,
                         callback=lambda k, v: seen.append(v.copy()))
        vstar = _exact_discounted(cycle3, 0.9)
        for v in seen[:-1]:
            assert np.all(v <= vstar + 1e-9)

    @settings(max_examples=40, deadline=None)
    @given(small_specs.filter(lambda g: g.n_states <= 5), st.sampled_from([0.3, 0.8, 0.95]))
    def test_matches_enumeration(self, spec, alpha):
        m = generate_random_mdp(spec)
        v, _ = solve_discounted(m, alpha, Accel.PROJECTIVE, eps=1e-11)
        assert np.allclose(v, _exact_discounted(m, alpha), atol=1e-8)

    @pytest.mark.parametrize("alpha", [1.0, -0.1])
    def test_rejects_bad_discount(self, cycle3, alpha):
        with pytest.raises(InputError):
            solve_discounted(cycle3, alpha)


class TestBounds:
    def test_cycle3(self):
        b = lambda_bounds_from_discounted([8 / 3, 16 / 3, 4], 0.5)
        assert (b.lower, b.upper) == pytest.approx((4 / 3, 8 / 3))
        assert b.contains(2.0)

    def test_constant_cost_is_degenerate(self):
        m = MdpModel.from_dense([[2.5, 2.5], [2.5]], [[[0, 1], [0.5, 0.5]], [[1, 0]]], 1)
        b = discounted_bounds(m, 0.9, eps=1e-12)
        assert b.lower == pytest.approx(2.5) and b.upper == pytest.approx(2.5)
        assert b.width == pytest.approx(0.0, abs=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(small_specs.filter(lambda g: g.n_states <= 6), st.sampled_from([0.5, 0.9, 0.99]))
    def test_bracket_contains_optimum(self, spec, alpha):
        m = generate_random_mdp(spec)
        b = discounted_bounds(m, alpha, eps=1e-11)
        lam_star, _ = brute_force_lambda_star(m)
        assert b.lower <= b.upper
        assert b.contains(lam_star, tol=1e-8)

    def test_example_scale_instance(self):
        m = generate_random_mdp(GeneratorSpec(50, 50, 0.3, rng_seed=0))
        from avimdp import SolverConfig, solve
        lam = solve(m, SolverConfig(algorithm="gavi3", accel="proj")).lam
        b = discounted_bounds(m, 0.99)
        assert b.lower <= lam <= b.upper
        assert b.width < m.cost_range()[1] - m.cost_range()[0]


class TestReduction:
    def test_lazy3(self, lazy3):
        red, alpha = reduce_to_discounted(lazy3, 2, 0.5)
        assert alpha == 0.5
        assert [red.dense_row(i, 0).tolist() for i in range(3)] == [
            [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.5, 0.5, 0.0]]
        v, _ = solve_discounted(red, alpha, eps=1e-13)
        assert np.allclose(v, [2, 6, 4], atol=1e-10)
        assert 0.5 * v[2] == pytest.approx(2.0, abs=1e-8)

    def test_beta_too_large(self, lazy3):
        with pytest.raises(InputError, match="state 1, action 0"):
            reduce_to_discounted(lazy3, 2, 0.6)

    @pytest.mark.parametrize("beta", [0.0, 1.0])
    def test_beta_range(self, lazy3, beta):
        with pytest.raises(InputError):
            reduce_to_discounted(lazy3, 2, beta)

    @settings(max_examples=40, deadline=None)
    @given(small_specs.filter(lambda g: g.n_states <= 6))
    def test_rows_stay_stochastic_and_value_matches(self, spec):
        m = generate_random_mdp(spec)
        t = m.recurrent_state
        beta = min(dict(act.row).get(t, 0.0) for acts in m.actions for act in acts)
        assume(beta < 1.0)
        red, alpha = reduce_to_discounted(m, t, beta)
        for acts in red.actions:
            for act in acts:
                assert abs(sum(p for _, p in act.row) - 1.0) <= 1e-9
        if beta < 0.999:
            v = _exact_discounted(red, alpha)
            lam_star, _ = brute_force_lambda_star(m)
            assert beta * v[t] == pytest.approx(lam_star, abs=1e-8)
