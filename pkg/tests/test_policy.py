import numpy as np
import pytest

from sstac import (
    EnergyPolicy,
    InfiniteDivergenceError,
    ParameterError,
    kl,
    kl_regularized_argmax,
    tabular_features,
    to_matrix,
)

from conftest import random_policy


def project_simplex(v):
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, len(v) + 1)
    cond = u - css / ks > 0
    rho = ks[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(v - theta, 0.0)


def pga_oracle(q_row, base_row, beta, steps=2000, lr=1e-2):
    """Projected gradient ascent on <q, p> - beta * KL(p || base) over the simplex."""
    p = base_row.copy()
    for _ in range(steps):
        grad = q_row - beta * (np.log(np.maximum(p, 1e-15) / base_row) + 1.0)
        p = project_simplex(p + lr * grad)
    return p


def objective(p, q_row, base_row, beta):
    mask = p > 0
    return float(p @ q_row - beta * np.sum(p[mask] * np.log(p[mask] / base_row[mask])))


class TestToMatrix:
    def test_zero_inv_temp_is_uniform(self):
        rng = np.random.default_rng(0)
        pol = EnergyPolicy(inv_temp=0.0, energies=rng.standard_normal((3, 4)))
        np.testing.assert_allclose(to_matrix(pol), 0.25)

    def test_shift_invariance(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((3, 4))
        shifted = f + rng.standard_normal((3, 1))
        a = to_matrix(EnergyPolicy(inv_temp=2.0, energies=f))
        b = to_matrix(EnergyPolicy(inv_temp=2.0, energies=shifted))
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_closed_form_quarter_three_quarters(self):
        pol = EnergyPolicy(inv_temp=1.0, energies=np.array([[0.0, np.log(3.0)]]))
        np.testing.assert_allclose(to_matrix(pol), [[0.25, 0.75]], atol=1e-14)

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(2)
        pol = EnergyPolicy(inv_temp=5.0, energies=rng.standard_normal((6, 3)))
        np.testing.assert_allclose(to_matrix(pol).sum(axis=1), 1.0, atol=1e-12)

    def test_linear_energy_constructor(self):
        feats = tabular_features(2, 2)
        w = np.array([1.0, 2.0, 3.0, 4.0])
        pol = EnergyPolicy.from_linear(feats, w, inv_temp=1.0)
        np.testing.assert_array_equal(pol.energies, [[1.0, 2.0], [3.0, 4.0]])


class TestKl:
    def test_kl_self_is_zero(self):
        rng = np.random.default_rng(3)
        p = rng.dirichlet(np.ones(5))
        assert kl(p, p) == 0.0

    def test_point_mass_closed_form(self):
        assert abs(kl(np.array([1.0, 0.0]), np.array([0.5, 0.5])) - np.log(2.0)) < 1e-14

    def test_nonnegative_gibbs(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            p = rng.dirichlet(np.ones(4))
            q = rng.dirichlet(np.ones(4))
            assert kl(p, q) >= 0.0

    def test_infinite_divergence_raises(self):
        with pytest.raises(InfiniteDivergenceError):
            kl(np.array([0.5, 0.5]), np.array([1.0, 0.0]))

    def test_matrix_rows(self):
        rng = np.random.default_rng(5)
        p = random_policy(rng, 3, 4)
        out = kl(p, p)
        np.testing.assert_allclose(out, 0.0)
        assert out.shape == (3,)


class TestKlRegularizedArgmax:
    def test_zero_q_returns_base_policy(self):
        rng = np.random.default_rng(6)
        pol = EnergyPolicy(inv_temp=1.5, energies=rng.standard_normal((3, 4)))
        np.testing.assert_allclose(
            kl_regularized_argmax(pol, np.zeros((3, 4)), beta=2.0), to_matrix(pol), atol=1e-12
        )

    def test_huge_beta_regularizer_dominates(self):
        rng = np.random.default_rng(7)
        pol = EnergyPolicy(inv_temp=1.5, energies=rng.standard_normal((3, 4)))
        q = rng.uniform(0, 1, size=(3, 4))
        np.testing.assert_allclose(
            kl_regularized_argmax(pol, q, beta=1e12), to_matrix(pol), atol=1e-10
        )

    def test_rejects_nonpositive_beta(self):
        pol = EnergyPolicy(inv_temp=0.0, energies=np.zeros((1, 2)))
        with pytest.raises(ParameterError):
            kl_regularized_argmax(pol, np.zeros((1, 2)), beta=0.0)

    def test_matches_simplex_gradient_ascent_oracle(self):
        rng = np.random.default_rng(8)
        pol = EnergyPolicy(inv_temp=0.8, energies=rng.standard_normal((3, 4)))
        base = to_matrix(pol)
        q = rng.uniform(0, 1, size=(3, 4))
        beta = 2.0
        closed = kl_regularized_argmax(pol, q, beta)
        for s in range(3):
            oracle = pga_oracle(q[s], base[s], beta)
            assert 0.5 * np.abs(closed[s] - oracle).sum() < 1e-6

    def test_beats_random_simplex_points(self):
        rng = np.random.default_rng(9)
        pol = EnergyPolicy(inv_temp=1.0, energies=rng.standard_normal((2, 3)))
        base = to_matrix(pol)
        q = rng.uniform(0, 1, size=(2, 3))
        beta = 1.5
        closed = kl_regularized_argmax(pol, q, beta)
        for s in range(2):
            best = objective(closed[s], q[s], base[s], beta)
            for _ in range(1000):
                p = rng.dirichlet(np.ones(3))
                assert best >= objective(p, q[s], base[s], beta) - 1e-12


class TestThreePointInequality:
    def test_holds_with_vanishing_residual(self):
        # For any target distribution pi_dagger and the softmax improvement
        # pi_tilde of (pi, Q, beta):
        #   beta^{-1} <Q, pi_dagger - pi_tilde>
        #     <= KL(pi_dagger||pi) - KL(pi_dagger||pi_tilde) + <log(pi_tilde/pi) - Q/beta, pi_dagger - pi_tilde>
        # and the trailing inner product vanishes for exact tabular softmax.
        rng = np.random.default_rng(10)
        for _ in range(200):
            n_actions = int(rng.integers(2, 6))
            pol = EnergyPolicy(inv_temp=1.0, energies=rng.standard_normal((1, n_actions)))
            pi = to_matrix(pol)[0]
            q = rng.uniform(-1, 1, size=n_actions)
            beta = float(rng.uniform(0.5, 4.0))
            pi_tilde = kl_regularized_argmax(pol, q[None, :], beta)[0]
            pi_dag = rng.dirichlet(np.ones(n_actions))

            residual = float((np.log(pi_tilde / pi) - q / beta) @ (pi_dag - pi_tilde))
            assert abs(residual) <= 1e-10
            lhs = float(q @ (pi_dag - pi_tilde)) / beta
            rhs = kl(pi_dag, pi) - kl(pi_dag, pi_tilde) + residual
            assert lhs <= rhs + 1e-10
