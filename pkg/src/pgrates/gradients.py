"""Exact softmax policy gradients and a central finite-difference oracle.

All gradients are with respect to the logit table and have the same shape as
it. Rows of every gradient sum to zero, since ``H(pi)`` annihilates constants.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError
from .mdp_core import (
    check_distribution,
    discounted_entropy,
    log_softmax,
    policy_values,
    soft_policy_values,
    softmax_policy,
)


def _bandit_inputs(r, theta):
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if r.ndim != 1 or r.shape != theta.shape:
        raise InvalidInputError(
            f"reward and logit vectors must have equal length, got {r.shape} and {theta.shape}",
            field="theta",
        )
    if not np.all(np.isfinite(r)):
        raise InvalidInputError("rewards must be finite", field="rewards")
    return r, theta


def bandit_pg_gradient(r, theta):
    """``pi(a) * (r(a) - pi^T r)``."""
    r, theta = _bandit_inputs(r, theta)
    pi = softmax_policy(theta)
    return pi * (r - pi @ r)


def bandit_entropy_gradient(r, theta, tau):
    """``H(pi)(r - tau log pi)`` for the entropy-regularized expected reward."""
    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau!r}", field="tau")
    r, theta = _bandit_inputs(r, theta)
    pi = softmax_policy(theta)
    x = r - tau * log_softmax(theta)
    return pi * (x - pi @ x)


def _mdp_inputs(mdp, theta, mu):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (mdp.num_states, mdp.num_actions):
        raise InvalidInputError(
            f"logits must have shape {(mdp.num_states, mdp.num_actions)}, got {theta.shape}",
            field="theta",
        )
    mu = check_distribution(mu, mdp.num_states, "mu")
    return theta, mu


def mdp_pg_gradient(mdp, theta, mu):
    theta, mu = _mdp_inputs(mdp, theta, mu)
    pi = softmax_policy(theta)
    vb = policy_values(mdp, pi, mu)
    return vb.d[:, None] * pi * vb.adv / (1.0 - mdp.gamma)


def mdp_entropy_gradient(mdp, theta, mu, tau):
    """Gradient of the soft value ``V~(mu)`` via the soft advantage."""
    theta, mu = _mdp_inputs(mdp, theta, mu)
    pi = softmax_policy(theta)
    lp = log_softmax(theta)
    sb = soft_policy_values(mdp, pi, mu, tau, log_pi=lp)
    d = policy_values(mdp, pi, mu).d
    return d[:, None] * pi * sb.adv_soft / (1.0 - mdp.gamma)


def mdp_entropy_gradient_h_form(mdp, theta, mu, tau):
    """Same gradient written as ``d(s)/(1-gamma) * H(pi_s)(Q~(s,.) - tau theta(s,.))``."""
    theta, mu = _mdp_inputs(mdp, theta, mu)
    pi = softmax_policy(theta)
    sb = soft_policy_values(mdp, pi, mu, tau, log_pi=log_softmax(theta))
    d = policy_values(mdp, pi, mu).d
    x = sb.q_soft - tau * theta
    hx = pi * (x - np.sum(pi * x, axis=1, keepdims=True))
    return d[:, None] * hx / (1.0 - mdp.gamma)


def mdp_entropy_rate_gradient(mdp, theta, rho):
    """Gradient of the discounted entropy: the soft gradient at unit temperature minus the plain one."""
    return mdp_entropy_gradient(mdp, theta, rho, 1.0) - mdp_pg_gradient(mdp, theta, rho)


# ---------------------------------------------------------------------------
# objectives as plain callables, for finite differences and smoothness witnesses


def value_objective(mdp, mu):
    def f(theta):
        return float(mu @ policy_values(mdp, softmax_policy(theta), mu).v)

    return f


def soft_value_objective(mdp, mu, tau):
    def f(theta):
        sb = soft_policy_values(mdp, softmax_policy(theta), mu, tau, log_pi=log_softmax(theta))
        return float(mu @ sb.v_soft)

    return f


def entropy_rate_objective(mdp, rho):
    def f(theta):
        return discounted_entropy(mdp, softmax_policy(theta), rho, log_pi=log_softmax(theta))

    return f


def finite_difference_gradient(objective, theta, h=1e-5):
    """Central differences ``(f(theta + h e) - f(theta - h e)) / 2h`` per coordinate."""
    if not h > 0:
        raise InvalidInputError("step must be positive", field="h")
    theta = np.array(theta, dtype=float)
    flat = theta.reshape(-1)
    g = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = objective(theta)
        flat[i] = orig - h
        fm = objective(theta)
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise InvalidInputError(f"objective is not finite near coordinate {i}", field="objective")
        g[i] = (fp - fm) / (2.0 * h)
    return g.reshape(theta.shape)


def relative_error(g, g_ref):
    """Max absolute deviation scaled by ``max(1, |g_ref|_inf)``."""
    g_ref = np.asarray(g_ref, dtype=float)
    return float(np.max(np.abs(np.asarray(g) - g_ref)) / max(1.0, np.max(np.abs(g_ref))))
