"""Finite tabular MDPs solved exactly.

Policies are softmax transforms of an ``S x A`` logit table. Values, soft
values, discounted state distributions and discounted entropies are computed
by dense linear solves against ``I - gamma * P_pi``. Optimal and soft-optimal
solutions come from value iteration on the corresponding fixed-point
equations.

Logit tables, policy tables and state distributions are plain ``numpy``
arrays; the helpers ``check_distribution`` and ``check_policy`` enforce their
invariants at the call boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidInputError, NumericalError

ROW_SUM_TOL = 1e-12
DIST_SUM_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Finite MDP with transition tensor ``P[s, a, s']``, rewards ``r[s, a]`` in [0, 1]
    and discount ``gamma`` in [0, 1)."""

    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float

    def __post_init__(self):
        r = np.array(self.rewards, dtype=float)
        if r.ndim != 2 or r.size == 0:
            raise InvalidInputError("rewards must be a non-empty S x A table", field="rewards")
        S, A = r.shape
        if not np.all(np.isfinite(r)) or r.min() < 0.0 or r.max() > 1.0:
            raise InvalidInputError("rewards must lie in [0, 1]", field="rewards")
        P = np.array(self.transitions, dtype=float)
        if P.shape != (S, A, S):
            raise InvalidInputError(
                f"transitions must have shape {(S, A, S)}, got {P.shape}", field="transitions"
            )
        if not np.all(np.isfinite(P)) or P.min() < 0.0:
            raise InvalidInputError("transition probabilities must be >= 0", field="transitions")
        if np.max(np.abs(P.sum(axis=-1) - 1.0)) > ROW_SUM_TOL:
            raise InvalidInputError("every transition row must sum to 1", field="transitions")
        gamma = float(self.gamma)
        if not (0.0 <= gamma < 1.0):
            raise InvalidInputError(f"gamma must lie in [0, 1), got {gamma!r}", field="gamma")
        r.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "transitions", P)
        object.__setattr__(self, "gamma", gamma)

    @property
    def num_states(self):
        return self.rewards.shape[0]

    @property
    def num_actions(self):
        return self.rewards.shape[1]

    @property
    def is_bandit(self):
        return self.num_states == 1 and self.gamma == 0.0

    @classmethod
    def bandit(cls, rewards):
        """Single-state, ``gamma = 0`` embedding of a K-armed bandit."""
        r = np.asarray(rewards, dtype=float)
        if r.ndim != 1:
            raise InvalidInputError("bandit rewards must be a vector", field="rewards")
        return cls(np.ones((1, r.size, 1)), r[None, :], 0.0)

    @classmethod
    def from_dict(cls, data):
        """Build an instance from the JSON layout (full form or bandit shorthand)."""
        if not isinstance(data, dict):
            raise ConfigError("MDP description must be a JSON object")
        if "rewards" not in data:
            raise ConfigError("missing field 'rewards'", field="rewards")
        rewards = data["rewards"]
        if "transitions" not in data:
            try:
                r = np.asarray(rewards, dtype=float)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"rewards: {exc}", field="rewards") from exc
            if r.ndim != 1:
                raise ConfigError(
                    "'transitions' is required unless rewards is a bandit vector",
                    field="transitions",
                )
            if "gamma" in data and float(data["gamma"]) != 0.0:
                raise ConfigError("bandit shorthand implies gamma = 0", field="gamma")
            try:
                return cls.bandit(r)
            except InvalidInputError as exc:
                raise ConfigError(str(exc), field=exc.field) from exc
        for key in ("gamma", "transitions"):
            if key not in data:
                raise ConfigError(f"missing field {key!r}", field=key)
        try:
            r = np.asarray(rewards, dtype=float)
            P = np.asarray(data["transitions"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed array: {exc}") from exc
        if r.ndim != 2:
            raise ConfigError("rewards must be an S x A table", field="rewards")
        for key, expected in (("num_states", r.shape[0]), ("num_actions", r.shape[1])):
            if key in data and int(data[key]) != expected:
                raise ConfigError(
                    f"{key}={data[key]} disagrees with rewards shape {r.shape}", field=key
                )
        try:
            gamma = float(data["gamma"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"gamma: {exc}", field="gamma") from exc
        try:
            return cls(P, r, gamma)
        except InvalidInputError as exc:
            raise ConfigError(str(exc), field=exc.field) from exc

    def to_dict(self):
        return {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "gamma": self.gamma,
            "rewards": self.rewards.tolist(),
            "transitions": self.transitions.tolist(),
        }


@dataclass(frozen=True, eq=False)
class ValueBundle:
    v: np.ndarray
    q: np.ndarray
    adv: np.ndarray
    d: np.ndarray


@dataclass(frozen=True, eq=False)
class SoftValueBundle:
    v_soft: np.ndarray
    q_soft: np.ndarray
    adv_soft: np.ndarray
    entropy_rate: float
    temperature: float


@dataclass(frozen=True, eq=False)
class OptimalSolution:
    """Optimal values with the greedy deterministic policy.

    ``optimal_actions`` marks every action within the tie tolerance of the
    maximum; ``unique[s]`` is False when a state has more than one.
    """

    v_star: np.ndarray
    q_star: np.ndarray
    a_star: np.ndarray
    delta_star: float
    unique: np.ndarray
    optimal_actions: np.ndarray

    @property
    def all_unique(self):
        return bool(np.all(self.unique))

    def policy(self):
        S, A = self.q_star.shape
        pi = np.zeros((S, A))
        pi[np.arange(S), self.a_star] = 1.0
        return pi


# ---------------------------------------------------------------------------
# validation helpers


def check_distribution(x, n, name="mu", positive=False):
    w = np.asarray(x, dtype=float)
    if w.shape != (n,):
        raise InvalidInputError(f"{name} must have length {n}, got shape {w.shape}", field=name)
    if not np.all(np.isfinite(w)) or w.min() < 0.0:
        raise InvalidInputError(f"{name} must be non-negative", field=name)
    if abs(w.sum() - 1.0) > ROW_SUM_TOL:
        raise InvalidInputError(f"{name} must sum to 1", field=name)
    if positive and w.min() <= 0.0:
        raise InvalidInputError(f"{name} must be strictly positive", field=name)
    return w


def check_policy(mdp, pi, strictly_positive=False):
    p = np.asarray(pi, dtype=float)
    if p.shape != (mdp.num_states, mdp.num_actions):
        raise InvalidInputError(
            f"policy must have shape {(mdp.num_states, mdp.num_actions)}, got {p.shape}",
            field="pi",
        )
    if not np.all(np.isfinite(p)) or p.min() < 0.0:
        raise InvalidInputError("policy entries must be non-negative", field="pi")
    if np.max(np.abs(p.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
        raise InvalidInputError("policy rows must sum to 1", field="pi")
    if strictly_positive and p.min() <= 0.0:
        raise InvalidInputError("policy has a zero entry; log pi is undefined", field="pi")
    return p


def uniform_distribution(n):
    return np.full(n, 1.0 / n)


# ---------------------------------------------------------------------------
# softmax


def softmax_policy(theta):
    """Row-wise softmax of a logit array (last axis), max-subtracted."""
    z = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logits must be finite", field="theta")
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(theta):
    z = np.asarray(theta, dtype=float)
    if not np.all(np.isfinite(z)):
        raise InvalidInputError("logits must be finite", field="theta")
    return z - logsumexp(z, axis=-1)[..., None]


def logsumexp(x, axis=-1):
    m = np.max(x, axis=axis, keepdims=True)
    out = m + np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def h_matrix(pi_row):
    """``diag(pi) - pi pi^T``, the Jacobian of softmax at ``pi``."""
    p = np.asarray(pi_row, dtype=float)
    if p.ndim != 1 or not np.all(np.isfinite(p)) or p.min() < 0.0:
        raise InvalidInputError("pi must be a non-negative vector", field="pi")
    if abs(p.sum() - 1.0) > ROW_SUM_TOL:
        raise InvalidInputError("pi must sum to 1", field="pi")
    return np.diag(p) - np.outer(p, p)


def kl_divergence(p, q, log_p=None, log_q=None):
    """Row-wise KL(p || q) along the last axis. Entries of ``p`` equal to zero contribute 0."""
    p = np.asarray(p, dtype=float)
    lp = np.log(np.where(p > 0, p, 1.0)) if log_p is None else np.asarray(log_p)
    lq = np.log(np.asarray(q, dtype=float)) if log_q is None else np.asarray(log_q)
    return np.sum(np.where(p > 0, p * (lp - lq), 0.0), axis=-1)


# ---------------------------------------------------------------------------
# exact evaluation


def policy_transition(mdp, pi):
    """``(P_pi, r_pi)``: state-to-state kernel and expected one-step reward under ``pi``."""
    P_pi = np.einsum("sa,sat->st", pi, mdp.transitions)
    r_pi = np.sum(pi * mdp.rewards, axis=1)
    return P_pi, r_pi


def _resolvent(mdp, P_pi):
    return np.eye(mdp.num_states) - mdp.gamma * P_pi


def _solve(M, b):
    try:
        return np.linalg.solve(M, b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - impossible for gamma < 1
        raise NumericalError(f"singular resolvent: {exc}", t=None) from exc


def _q_from_v(mdp, v):
    return mdp.rewards + mdp.gamma * np.einsum("sat,t->sa", mdp.transitions, v)


def _visitation(mdp, M, mu):
    d = (1.0 - mdp.gamma) * _solve(M.T, mu)
    if abs(d.sum() - 1.0) > DIST_SUM_TOL:
        raise NumericalError(f"discounted distribution sums to {d.sum()!r}", t=None)
    return d


def policy_values(mdp, pi, mu):
    pi = check_policy(mdp, pi)
    mu = check_distribution(mu, mdp.num_states, "mu")
    P_pi, r_pi = policy_transition(mdp, pi)
    M = _resolvent(mdp, P_pi)
    v = _solve(M, r_pi)
    q = _q_from_v(mdp, v)
    return ValueBundle(v=v, q=q, adv=q - v[:, None], d=_visitation(mdp, M, mu))


def discounted_state_distribution(mdp, pi, mu):
    pi = check_policy(mdp, pi)
    mu = check_distribution(mu, mdp.num_states, "mu")
    P_pi, _ = policy_transition(mdp, pi)
    return _visitation(mdp, _resolvent(mdp, P_pi), mu)


def discounted_entropy(mdp, pi, rho, log_pi=None):
    """Expected discounted sum of per-step action entropies started from ``rho``."""
    pi = check_policy(mdp, pi, strictly_positive=log_pi is None)
    rho = check_distribution(rho, mdp.num_states, "rho")
    lp = np.log(pi) if log_pi is None else log_pi
    P_pi, _ = policy_transition(mdp, pi)
    h = _solve(_resolvent(mdp, P_pi), -np.sum(pi * lp, axis=1))
    return float(rho @ h)


def soft_policy_values(mdp, pi, mu, tau, log_pi=None):
    """Entropy-augmented values. ``log_pi`` may be passed to avoid ``log(pi)`` underflow."""
    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau!r}", field="tau")
    pi = check_policy(mdp, pi, strictly_positive=log_pi is None)
    mu = check_distribution(mu, mdp.num_states, "mu")
    lp = np.log(pi) if log_pi is None else np.asarray(log_pi, dtype=float)
    P_pi, _ = policy_transition(mdp, pi)
    M = _resolvent(mdp, P_pi)
    ent = -np.sum(pi * lp, axis=1)
    v_soft = _solve(M, np.sum(pi * mdp.rewards, axis=1) + tau * ent)
    q_soft = _q_from_v(mdp, v_soft)
    h = _solve(M, ent)
    return SoftValueBundle(
        v_soft=v_soft,
        q_soft=q_soft,
        adv_soft=q_soft - tau * lp - v_soft[:, None],
        entropy_rate=float(mu @ h),
        temperature=float(tau),
    )


def value_gap(mdp, pi, rho, solution, d_rho=None):
    """``V*(rho) - V^pi(rho)`` through per-state action gaps, so it is never negative.

    Uses ``(1/(1-gamma)) sum_s d_rho^pi(s) sum_a pi(a|s) (V*(s) - Q*(s,a))``.
    """
    if d_rho is None:
        d_rho = discounted_state_distribution(mdp, pi, rho)
    gaps = solution.v_star[:, None] - solution.q_star
    per_state = np.sum(pi * np.maximum(gaps, 0.0), axis=1)
    return float(d_rho @ per_state) / (1.0 - mdp.gamma)


def soft_value_gap(mdp, pi, rho, tau, log_pi, log_pi_soft, d_rho=None):
    """``V~*(rho) - V~^pi(rho)`` as the visitation-weighted ``tau * KL(pi || pi*_tau)``."""
    if d_rho is None:
        d_rho = discounted_state_distribution(mdp, pi, rho)
    kl = kl_divergence(pi, None, log_p=log_pi, log_q=log_pi_soft)
    return float(d_rho @ (tau * kl)) / (1.0 - mdp.gamma)


# ---------------------------------------------------------------------------
# optimal solutions


def _vi_threshold(gamma, tol):
    return tol * (1.0 - gamma) / (2.0 * gamma)


def solve_optimal(mdp, tol=1e-10, max_iter=1_000_000):
    """Optimal action values by value iteration, then exact evaluation of the greedy policy.

    The greedy policy is re-evaluated with a linear solve and improved until
    stable, so ``q_star`` is exact up to solve round-off rather than ``tol``.
    """
    if not tol > 0:
        raise InvalidInputError("tol must be positive", field="tol")
    S, A = mdp.num_states, mdp.num_actions
    q = mdp.rewards.copy()
    if mdp.gamma > 0.0:
        thresh = _vi_threshold(mdp.gamma, tol)
        for _ in range(max_iter):
            q_new = _q_from_v(mdp, q.max(axis=1))
            diff = np.max(np.abs(q_new - q))
            q = q_new
            if diff < thresh:
                break
        a = np.argmax(q, axis=1)
        for _ in range(S * A + 1):
            pi = np.zeros((S, A))
            pi[np.arange(S), a] = 1.0
            P_pi, r_pi = policy_transition(mdp, pi)
            q_eval = _q_from_v(mdp, _solve(_resolvent(mdp, P_pi), r_pi))
            a_next = np.argmax(q_eval, axis=1)
            stable = np.all(q_eval[np.arange(S), a] >= q_eval[np.arange(S), a_next])
            if stable:
                q = q_eval
                break
            a = a_next

    a_star = np.argmax(q, axis=1)
    qmax = q[np.arange(S), a_star]
    near = q >= (qmax - 10.0 * tol)[:, None]
    unique = near.sum(axis=1) == 1
    if A == 1:
        delta = math.inf
    elif np.all(unique):
        others = q.copy()
        others[np.arange(S), a_star] = -np.inf
        delta = float(np.min(qmax - others.max(axis=1)))
    else:
        delta = 0.0
    return OptimalSolution(
        v_star=qmax.copy(),
        q_star=q,
        a_star=a_star,
        delta_star=delta,
        unique=unique,
        optimal_actions=near,
    )


def solve_soft_optimal(mdp, tau, tol=1e-10, rho=None, max_iter=1_000_000):
    """Soft-optimal policy ``pi*_tau`` from soft value iteration.

    Returns ``(pi, bundle)`` where ``bundle`` evaluates ``pi`` exactly; its
    ``entropy_rate`` is taken with respect to ``rho`` (uniform by default).
    """
    if not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau!r}", field="tau")
    S = mdp.num_states
    v = tau * logsumexp(mdp.rewards / tau, axis=1)
    if mdp.gamma > 0.0:
        thresh = _vi_threshold(mdp.gamma, tol)
        for _ in range(max_iter):
            v_new = tau * logsumexp(_q_from_v(mdp, v) / tau, axis=1)
            diff = np.max(np.abs(v_new - v))
            v = v_new
            if diff < thresh:
                break
    q = _q_from_v(mdp, v)
    log_pi = log_softmax(q / tau)
    pi = np.exp(log_pi)
    pi /= pi.sum(axis=1, keepdims=True)
    rho = uniform_distribution(S) if rho is None else rho
    return pi, soft_policy_values(mdp, pi, rho, tau, log_pi=log_pi)


# ---------------------------------------------------------------------------
# instances


def random_mdp(rng, num_states, num_actions, gamma):
    """Rewards i.i.d. uniform on [0, 1]; transition rows from a flat Dirichlet."""
    r = rng.uniform(size=(num_states, num_actions))
    P = rng.dirichlet(np.ones(num_states), size=(num_states, num_actions))
    P /= P.sum(axis=-1, keepdims=True)
    return TabularMdp(P, r, gamma)


def random_bandit(rng, num_actions):
    return TabularMdp.bandit(rng.uniform(size=num_actions))


def self_loop_mdp(rewards, gamma):
    """Each state returns to itself under every action: ``S`` independent bandits."""
    r = np.asarray(rewards, dtype=float)
    S, A = r.shape
    P = np.zeros((S, A, S))
    P[np.arange(S), :, np.arange(S)] = 1.0
    return TabularMdp(P, r, gamma)
