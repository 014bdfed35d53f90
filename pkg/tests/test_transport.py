import math
from itertools import permutations

import numpy as np
import pytest

from refless.transport import cost_matrix, solve_wmd, wmd
from refless.vectors import ngramize_vectors


def seq_from(vectors, weights=None):
    vectors = np.asarray(vectors, dtype=np.float64)
    n = vectors.shape[0]
    idfs = np.asarray(weights, dtype=np.float64) if weights is not None else np.ones(n)
    return ngramize_vectors([f"g{i}" for i in range(n)], vectors, idfs, 1)


def brute_force_uniform(C):
    """Minimum over all permutation matchings, scaled by 1/n."""
    n = C.shape[0]
    return min(sum(C[i, p[i]] for i in range(n)) for p in permutations(range(n))) / n


def northwest_corner(fx, fy, rng):
    """A random feasible plan: northwest-corner on shuffled rows/columns."""
    rp, cp = rng.permutation(len(fx)), rng.permutation(len(fy))
    a, b = fx[rp].copy(), fy[cp].copy()
    F = np.zeros((len(fx), len(fy)))
    i = j = 0
    while i < len(a) and j < len(b):
        t = min(a[i], b[j])
        F[rp[i], cp[j]] = t
        a[i] -= t
        b[j] -= t
        if a[i] <= 1e-15:
            i += 1
        else:
            j += 1
    return F


class TestCostMatrix:
    def test_identical_singletons(self):
        a = seq_from([[1.0, 2.0]])
        np.testing.assert_array_equal(cost_matrix(a, a), [[0.0]])

    def test_orthonormal_distance(self):
        a = seq_from([[1.0, 0.0]])
        b = seq_from([[0.0, 1.0]])
        np.testing.assert_allclose(cost_matrix(a, b), [[math.sqrt(2)]])

    def test_matches_double_loop(self, rng):
        A = rng.normal(size=(2, 5))
        B = rng.normal(size=(3, 5))
        C = cost_matrix(seq_from(A), seq_from(B))
        for i in range(2):
            for j in range(3):
                expected = math.sqrt(((A[i] - B[j]) ** 2).sum())
                assert C[i, j] == pytest.approx(expected, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            cost_matrix(seq_from([[1.0]]), seq_from([[1.0, 2.0]]))

    def test_empty_sequence(self):
        empty = ngramize_vectors([], np.zeros((0, 2)), np.zeros(0), 1)
        with pytest.raises(ValueError, match="non-empty"):
            cost_matrix(empty, seq_from([[1.0, 0.0]]))


class TestSolver:
    def test_trivial_1x1(self):
        plan = solve_wmd(np.array([[0.0]]), [1.0], [1.0])
        assert plan.objective == 0.0

    def test_identity_matching_2x2(self):
        plan = solve_wmd(np.array([[0.0, 1.0], [1.0, 0.0]]), [0.5, 0.5], [0.5, 0.5])
        assert plan.objective == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(plan.flows, np.diag([0.5, 0.5]), atol=1e-12)

    def test_brute_force_small_instances(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 6))
            C = rng.random((n, n)) * 3
            f = np.full(n, 1.0 / n)
            plan = solve_wmd(C, f, f)
            assert plan.objective == pytest.approx(brute_force_uniform(C), abs=1e-9)

    def test_never_beaten_by_random_feasible_plans(self, rng):
        C = rng.random((4, 6))
        fx = rng.random(4)
        fx /= fx.sum()
        fy = rng.random(6)
        fy /= fy.sum()
        optimal = solve_wmd(C, fx, fy).objective
        for _ in range(1000):
            F = northwest_corner(fx, fy, rng)
            assert optimal <= (C * F).sum() + 1e-9

    def test_feasibility(self, rng):
        for _ in range(50):
            m, k = int(rng.integers(1, 8)), int(rng.integers(1, 8))
            C = rng.random((m, k))
            fx = rng.random(m) + 0.01
            fx /= fx.sum()
            fy = rng.random(k) + 0.01
            fy /= fy.sum()
            plan = solve_wmd(C, fx, fy)
            np.testing.assert_allclose(plan.flows.sum(axis=1), fx, atol=1e-9)
            np.testing.assert_allclose(plan.flows.sum(axis=0), fy, atol=1e-9)
            assert np.all(plan.flows >= -1e-15)
            assert plan.objective == (C * plan.flows).sum()

    def test_zero_weight_entries_get_zero_flow(self):
        C = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 3.0]])
        fx = np.array([1.0, 0.0])
        fy = np.array([0.5, 0.5, 0.0])
        plan = solve_wmd(C, fx, fy)
        np.testing.assert_array_equal(plan.flows[1, :], 0.0)
        np.testing.assert_array_equal(plan.flows[:, 2], 0.0)
        np.testing.assert_allclose(plan.flows.sum(axis=1), fx, atol=1e-12)

    def test_marginal_sum_error(self):
        with pytest.raises(ValueError, match="sums to"):
            solve_wmd(np.array([[1.0]]), [0.9], [1.0])

    def test_negative_weight_error(self):
        with pytest.raises(ValueError, match="negative"):
            solve_wmd(np.array([[1.0, 1.0]]), [1.0], [1.5, -0.5])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="lengths"):
            solve_wmd(np.array([[1.0]]), [0.5, 0.5], [1.0])


class TestWmd:
    def test_self_distance_is_zero(self, rng):
        a = seq_from(rng.normal(size=(4, 3)), rng.random(4) + 0.1)
        assert wmd(a, a) == pytest.approx(0.0, abs=1e-12)

    def test_singleton_forced_by_marginals(self, rng):
        a = seq_from(rng.normal(size=(1, 3)))
        b = seq_from(rng.normal(size=(4, 3)), rng.random(4) + 0.1)
        C = cost_matrix(a, b)
        expected = float((b.weights * C[0]).sum())
        assert wmd(a, b) == pytest.approx(expected, abs=1e-12)

    def test_symmetry(self, rng):
        for _ in range(20):
            a = seq_from(rng.normal(size=(rng.integers(1, 6), 4)))
            b = seq_from(rng.normal(size=(rng.integers(1, 6), 4)))
            assert wmd(a, b) == pytest.approx(wmd(b, a), abs=1e-9)

    def test_scale_equivariance(self, rng):
        A = rng.normal(size=(3, 4))
        B = rng.normal(size=(5, 4))
        wa, wb = rng.random(3) + 0.1, rng.random(5) + 0.1
        base = wmd(seq_from(A, wa), seq_from(B, wb))
        for s in (0.5, 2.0, 17.25):
            scaled = wmd(seq_from(s * A, wa), seq_from(s * B, wb))
            assert scaled == pytest.approx(s * base, abs=1e-9)
