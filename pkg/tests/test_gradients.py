import math

import numpy as np
import pytest

from pgrates.errors import InvalidInputError
from pgrates.gradients import (
    bandit_entropy_gradient,
    bandit_pg_gradient,
    entropy_rate_objective,
    finite_difference_gradient,
    mdp_entropy_gradient,
    mdp_entropy_gradient_h_form,
    mdp_entropy_rate_gradient,
    mdp_pg_gradient,
    relative_error,
    soft_value_objective,
    value_objective,
)
from pgrates.mdp_core import TabularMdp, random_mdp, self_loop_mdp, solve_soft_optimal


def test_bandit_gradient_examples():
    np.testing.assert_allclose(bandit_pg_gradient([1.0, 0.0], [0.0, 0.0]), [0.25, -0.25], atol=1e-15)
    g = bandit_pg_gradient([5.0, 4.0, 4.0], np.log([0.2, 0.3, 0.5]))
    np.testing.assert_allclose(g, [0.16, -0.06, -0.10], atol=1e-14)
    np.testing.assert_allclose(np.linalg.norm(g), 0.1 * math.sqrt(3.92), atol=1e-14)


def test_bandit_gradient_vanishes_at_vertex(rng):
    r = rng.uniform(size=5)
    theta = np.zeros(5)
    theta[2] = 30.0
    assert np.linalg.norm(bandit_pg_gradient(r, theta)) < 1e-9


def test_bandit_gradient_length_mismatch():
    with pytest.raises(InvalidInputError):
        bandit_pg_gradient([1.0, 0.0], [0.0, 0.0, 0.0])


def test_bandit_entropy_gradient_examples(rng):
    r = rng.uniform(size=4)
    np.testing.assert_allclose(bandit_entropy_gradient(r, r / 0.3, 0.3), 0.0, atol=1e-12)
    theta = rng.standard_normal(4)
    np.testing.assert_allclose(bandit_entropy_gradient(r, theta, 1e-8), bandit_pg_gradient(r, theta), atol=1e-6)
    np.testing.assert_allclose(bandit_entropy_gradient([1.0, 0.0], [0.0, 0.0], 1.0), [0.25, -0.25], atol=1e-15)
    with pytest.raises(InvalidInputError):
        bandit_entropy_gradient(r, theta, 0.0)


def test_bandit_entropy_gradient_theta_form(rng):
    # log pi and theta differ by a per-row constant, which H annihilates
    r = rng.uniform(size=6)
    theta = rng.standard_normal(6)
    pi = np.exp(theta - theta.max())
    pi /= pi.sum()
    x = r - 0.4 * theta
    H = np.diag(pi) - np.outer(pi, pi)
    np.testing.assert_allclose(bandit_entropy_gradient(r, theta, 0.4), H @ x, atol=1e-14)


def test_mdp_gradient_reduces_to_bandit(rng):
    r = rng.uniform(size=4)
    theta = rng.standard_normal(4)
    g = mdp_pg_gradient(TabularMdp.bandit(r), theta[None, :], np.ones(1))
    np.testing.assert_allclose(g[0], bandit_pg_gradient(r, theta), atol=1e-15)


def test_unreachable_state_has_zero_gradient(rng):
    mdp = self_loop_mdp(rng.uniform(size=(2, 3)), 0.9)
    mu = np.array([0.0, 1.0])
    for _ in range(5):
        theta = 3 * rng.standard_normal((2, 3))
        np.testing.assert_array_equal(mdp_pg_gradient(mdp, theta, mu)[0], 0.0)


@pytest.mark.parametrize("gamma", [0.0, 0.5, 0.9])
def test_mdp_gradients_match_finite_differences(rng, gamma):
    mdp = random_mdp(rng, 3, 3, gamma)
    mu = rng.dirichlet(np.ones(3))
    theta = rng.standard_normal((3, 3))
    fd = finite_difference_gradient(value_objective(mdp, mu), theta)
    assert relative_error(mdp_pg_gradient(mdp, theta, mu), fd) < 1e-6
    fd = finite_difference_gradient(soft_value_objective(mdp, mu, 0.2), theta)
    assert relative_error(mdp_entropy_gradient(mdp, theta, mu, 0.2), fd) < 1e-6
    fd = finite_difference_gradient(entropy_rate_objective(mdp, mu), theta)
    assert relative_error(mdp_entropy_rate_gradient(mdp, theta, mu), fd) < 1e-6


def test_entropy_gradient_limits(rng):
    mdp = random_mdp(rng, 3, 2, 0.8)
    mu = rng.dirichlet(np.ones(3))
    theta = rng.standard_normal((3, 2))
    np.testing.assert_allclose(mdp_entropy_gradient(mdp, theta, mu, 1e-12), mdp_pg_gradient(mdp, theta, mu), atol=1e-8)
    pi_star, _ = solve_soft_optimal(mdp, 0.3)
    assert np.linalg.norm(mdp_entropy_gradient(mdp, np.log(pi_star), mu, 0.3)) < 1e-6


def test_entropy_gradient_forms_agree(rng):
    mdp = random_mdp(rng, 4, 3, 0.9)
    mu = rng.dirichlet(np.ones(4))
    theta = 2 * rng.standard_normal((4, 3))
    np.testing.assert_allclose(
        mdp_entropy_gradient_h_form(mdp, theta, mu, 0.2), mdp_entropy_gradient(mdp, theta, mu, 0.2), atol=1e-10
    )


def test_gradient_rows_sum_to_zero(rng):
    mdp = random_mdp(rng, 4, 5, 0.9)
    mu = rng.dirichlet(np.ones(4))
    theta = 3 * rng.standard_normal((4, 5))
    for g in (mdp_pg_gradient(mdp, theta, mu), mdp_entropy_gradient(mdp, theta, mu, 0.5)):
        np.testing.assert_allclose(g.sum(axis=1), 0.0, atol=1e-10)


def test_finite_difference_examples():
    r = np.array([1.0, 0.0])

    def f(theta):
        p = np.exp(theta - theta.max())
        return float(p @ r / p.sum())

    np.testing.assert_allclose(finite_difference_gradient(f, np.zeros(2)), [0.25, -0.25], atol=1e-9)
    np.testing.assert_array_equal(finite_difference_gradient(lambda th: 3.0, np.ones((2, 2))), np.zeros((2, 2)))
    with pytest.raises(InvalidInputError):
        finite_difference_gradient(lambda th: float("nan"), np.zeros(2))
    with pytest.raises(InvalidInputError):
        finite_difference_gradient(f, np.zeros(2), h=0.0)


def test_relative_error_floor():
    assert relative_error([1e-3], [0.0]) == pytest.approx(1e-3)
    assert relative_error([11.0], [10.0]) == pytest.approx(0.1)
