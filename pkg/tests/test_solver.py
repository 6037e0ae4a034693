import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import laplacian_loop, objective_matrix, project_simplex_enum, qp_simplex_enum, quadratic_data
from partialgl.graphs import validate_in_laplacian_set
from partialgl.signals import quadratic_form
from partialgl.solver import (
    SolverConfig,
    SolverError,
    _WeightProblem,
    estimate_lipschitz,
    laplacian_from_weights,
    objective,
    pairwise_energy_vector,
    simplex_projection,
    solve_gl_sigrep,
    threshold_edges,
    weights_from_laplacian,
)


class TestWeights:
    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(2, 9), seed=st.integers(0, 2**31))
    def test_round_trip_and_loop_oracle(self, n, seed):
        w = np.random.default_rng(seed).random(n * (n - 1) // 2)
        L = laplacian_from_weights(w, n)
        assert np.allclose(L, laplacian_loop(w, n))
        assert np.array_equal(weights_from_laplacian(L), w)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            laplacian_from_weights(np.ones(4), 4)

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(2, 8), m=st.integers(1, 5), seed=st.integers(0, 2**31))
    def test_pairwise_energy_identity(self, n, m, seed):
        r = np.random.default_rng(seed)
        Y = r.standard_normal((m, n))
        w = r.random(n * (n - 1) // 2)
        L = laplacian_from_weights(w, n)
        direct = sum(quadratic_form(L, y) for y in Y)
        assert pairwise_energy_vector(Y) @ w == pytest.approx(direct, rel=1e-10, abs=1e-10)

    def test_objective_matches_trace_form(self, rng):
        Y = rng.standard_normal((6, 5))
        L = laplacian_from_weights(rng.random(10), 5)
        assert objective(L, Y, 1.5) == pytest.approx(objective_matrix(L, Y, 1.5))


class TestProjection:
    def test_example(self):
        assert np.allclose(simplex_projection([2.0, 0.0], 1.0), [1.0, 0.0])

    def test_interior_point_unchanged(self):
        v = np.array([0.2, 0.3, 0.5])
        assert np.allclose(simplex_projection(v, 1.0), v)

    @settings(max_examples=60, deadline=None)
    @given(dim=st.integers(1, 10), radius=st.floats(0.1, 10), seed=st.integers(0, 2**31))
    def test_matches_enumeration(self, dim, radius, seed):
        v = np.random.default_rng(seed).standard_normal(dim) * 3
        assert np.abs(simplex_projection(v, radius) - project_simplex_enum(v, radius)).max() <= 1e-10

    @settings(max_examples=30, deadline=None)
    @given(dim=st.integers(1, 20), seed=st.integers(0, 2**31))
    def test_idempotent_and_feasible(self, dim, seed):
        v = np.random.default_rng(seed).standard_normal(dim)
        p = simplex_projection(v, 2.5)
        assert p.min() >= 0 and p.sum() == pytest.approx(2.5)
        assert np.allclose(simplex_projection(p, 2.5), p, atol=1e-12)

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            simplex_projection([1.0], 0.0)


class TestSolve:
    def test_two_nodes_forced(self, rng):
        res = solve_gl_sigrep(rng.standard_normal((5, 2)))
        assert np.allclose(res.laplacian, [[1, -1], [-1, 1]])

    @pytest.mark.parametrize("n", [3, 4, 7])
    def test_constant_signals_give_uniform_graph(self, n):
        Y = np.ones((4, n)) * np.arange(1, 5)[:, None]
        res = solve_gl_sigrep(Y, SolverConfig(lam=2.0))
        assert np.allclose(res.weights, 1.0 / (n - 1), atol=1e-6)
        assert res.objective == pytest.approx(np.sum(res.laplacian**2), rel=1e-9)

    def test_constant_signals_grid_oracle(self):
        # n = 3: w lies on the 2-simplex of radius 3/2, scan it on a fine grid
        Y = np.ones((2, 3))
        best = np.inf
        for a in np.linspace(0, 1.5, 301):
            for b in np.linspace(0, 1.5 - a, max(2, int((1.5 - a) * 200) + 1)):
                L = laplacian_loop([a, b, 1.5 - a - b], 3)
                best = min(best, objective_matrix(L, Y, 2.0))
        res = solve_gl_sigrep(Y, SolverConfig(lam=2.0))
        assert res.objective <= best + 1e-12
        assert res.objective == pytest.approx(best, rel=1e-3)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_active_set_oracle(self, seed):
        r = np.random.default_rng(seed)
        n = int(r.integers(3, 6))
        Y = r.standard_normal((int(r.integers(1, 12)), n))
        lam = float(r.choice([0.5, 2.0, 10.0]))
        Q, c = quadratic_data(Y, lam)
        w_ref, f_ref = qp_simplex_enum(Q, c, n / 2)
        res = solve_gl_sigrep(Y, SolverConfig(lam=lam))
        assert res.converged
        assert res.objective == pytest.approx(f_ref, rel=1e-8)
        assert np.abs(res.weights - w_ref).max() <= 1e-5

    def test_linear_case_is_exact(self, rng):
        Y = rng.standard_normal((3, 6))
        res = solve_gl_sigrep(Y, SolverConfig(lam=0.0))
        z = pairwise_energy_vector(Y)
        assert res.objective == pytest.approx(3.0 * z.min(), rel=1e-12)
        assert res.converged and res.iterations == 0

    def test_beats_random_feasible_points(self, rng):
        Y = rng.standard_normal((20, 8))
        res = solve_gl_sigrep(Y, SolverConfig(lam=2.0))
        for _ in range(100):
            w = rng.dirichlet(np.ones(28)) * 4.0
            assert res.objective <= objective(laplacian_from_weights(w, 8), Y, 2.0) + 1e-10

    def test_monotone_descent(self, rng):
        res = solve_gl_sigrep(rng.standard_normal((15, 10)), SolverConfig(lam=1.0), keep_history=True)
        h = np.array(res.history)
        assert len(h) == res.iterations + 1
        assert np.all(np.diff(h) <= 1e-12 * (1 + np.abs(h[1:])))

    def test_feasible_output(self, rng):
        res = solve_gl_sigrep(rng.standard_normal((30, 12)))
        assert validate_in_laplacian_set(res.laplacian, 12).ok
        assert not res.laplacian.flags.writeable

    def test_permutation_equivariance(self, rng):
        Y = rng.standard_normal((20, 7))
        perm = rng.permutation(7)
        a = solve_gl_sigrep(Y).laplacian
        b = solve_gl_sigrep(Y[:, perm]).laplacian
        assert np.abs(a[np.ix_(perm, perm)] - b).max() <= 1e-6

    def test_unique_from_any_start(self, rng):
        Y = rng.standard_normal((20, 7))
        a = solve_gl_sigrep(Y)
        b = solve_gl_sigrep(Y, w0=rng.dirichlet(np.ones(21)) * 3.5)
        assert np.abs(a.laplacian - b.laplacian).max() <= 1e-6

    def test_nonconvergence_reported(self, rng):
        res = solve_gl_sigrep(rng.standard_normal((20, 15)), SolverConfig(lam=0.01, max_iters=2))
        assert not res.converged and res.iterations == 2

    @pytest.mark.parametrize("Y", [np.ones((3, 1)), np.zeros((0, 4))])
    def test_invalid_inputs(self, Y):
        with pytest.raises(SolverError):
            solve_gl_sigrep(Y)

    def test_invalid_config(self):
        with pytest.raises(ValueError):
            SolverConfig(lam=-1.0)


def test_lipschitz_closed_form_matches_power_iteration(rng):
    for n, lam in [(4, 2.0), (9, 0.5), (20, 3.0)]:
        prob = _WeightProblem(np.zeros(n * (n - 1) // 2), n, lam)
        est = estimate_lipschitz(prob.hess_apply, n * (n - 1) // 2, iters=200)
        assert est == pytest.approx(prob.lipschitz, rel=1e-6)
        # and against the explicit Hessian built by loops
        Q, _ = quadratic_data(np.zeros((1, n)), lam)
        assert np.linalg.eigvalsh(Q).max() == pytest.approx(prob.lipschitz, rel=1e-10)


class TestThreshold:
    def test_relative_rule(self):
        L = laplacian_from_weights([1.0, 0.05, 0.5], 3)
        g = threshold_edges(L, 0.1)
        assert g.edge_set() == {(0, 1), (1, 2)}

    def test_tie_at_threshold_excluded(self):
        g = threshold_edges(laplacian_from_weights([1.0, 0.1, 0.0], 3), 0.1)
        assert g.edge_set() == {(0, 1)}

    def test_empty(self):
        assert threshold_edges(np.zeros((3, 3))).n_edges == 0

    def test_zero_tau_keeps_support(self):
        g = threshold_edges(laplacian_from_weights([1.0, 1e-9, 0.0], 3), 0.0)
        assert g.edge_set() == {(0, 1), (0, 2)}

    @pytest.mark.parametrize("tau", [-0.1, 1.0])
    def test_bad_tau(self, tau):
        with pytest.raises(ValueError):
            threshold_edges(np.zeros((2, 2)), tau)
