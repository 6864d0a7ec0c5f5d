"""Numerical certificates for the convergence inequalities, and rate fits on traces.

Every check returns a :class:`CheckReport` oriented so that ``lhs`` is the side
expected to be larger: ``margin = lhs - rhs`` and the check passes iff
``margin >= -tol``. Equalities are reported with ``lhs = 0`` and
``rhs = |value - expected|``.
"""

from __future__ import annotations

import json
import math
from collections import namedtuple
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DegenerateInstanceError, InvalidInputError
from .gradients import (
    bandit_entropy_gradient,
    bandit_pg_gradient,
    entropy_rate_objective,
    mdp_entropy_gradient,
    mdp_entropy_rate_gradient,
    mdp_pg_gradient,
    value_objective,
)
from .mdp_core import (
    TabularMdp,
    check_distribution,
    discounted_state_distribution,
    h_matrix,
    kl_divergence,
    log_softmax,
    policy_values,
    soft_policy_values,
    soft_value_gap,
    softmax_policy,
    solve_optimal,
    solve_soft_optimal,
    uniform_distribution,
    value_gap,
)

ALGEBRAIC_TOL = 1e-10
SOLVE_TOL = 1e-8


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


@dataclass(frozen=True)
class CheckReport:
    name: str
    lhs: float
    rhs: float
    tol: float
    context: dict = field(default_factory=dict)
    applicable: bool = True

    @property
    def margin(self):
        return float(self.lhs) - float(self.rhs)

    @property
    def passed(self):
        if not self.applicable:
            return True
        return bool(self.margin >= -self.tol)

    def to_dict(self):
        return {
            "name": self.name,
            "lhs": _jsonable(float(self.lhs)),
            "rhs": _jsonable(float(self.rhs)),
            "margin": _jsonable(self.margin),
            "tol": self.tol,
            "pass": self.passed,
            "applicable": self.applicable,
            "context": _jsonable(self.context),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _equality(name, value, expected, tol, **context):
    context.update(value=float(value), expected=float(expected))
    return CheckReport(name, 0.0, abs(float(value) - float(expected)), tol, context)


def _as_problem(problem):
    if isinstance(problem, TabularMdp):
        return problem
    return TabularMdp.bandit(problem)


def _bandit_rewards(problem):
    if isinstance(problem, TabularMdp):
        if not problem.is_bandit:
            raise InvalidInputError("expected a bandit instance", field="problem")
        return problem.rewards[0]
    r = np.asarray(problem, dtype=float)
    if r.ndim != 1 or not np.all(np.isfinite(r)):
        raise InvalidInputError("rewards must be a finite vector", field="rewards")
    return r


def _is_bandit(problem):
    return not isinstance(problem, TabularMdp) or problem.is_bandit


def _norm(x):
    return float(np.sqrt(np.sum(np.square(x))))


def _positive_mu(mdp, mu):
    mu = uniform_distribution(mdp.num_states) if mu is None else check_distribution(
        mu, mdp.num_states, "mu"
    )
    if mu.min() <= 0.0:
        raise InvalidInputError("mu must be strictly positive", field="mu")
    return mu


# ---------------------------------------------------------------------------
# gradient-domination inequalities


def lojasiewicz_bandit(r, theta, tol=ALGEBRAIC_TOL):
    r = _bandit_rewards(r)
    theta = np.asarray(theta, dtype=float)
    pi = softmax_policy(theta)
    g = bandit_pg_gradient(r, theta)
    rmax = r.max()
    opt = r == rmax
    delta = float(pi @ (rmax - r))
    n_opt = int(opt.sum())
    rhs = float(pi[opt].sum()) / math.sqrt(n_opt) * delta
    return CheckReport("lojasiewicz_bandit", _norm(g), rhs, tol, {"K": r.size, "num_optimal": n_opt})


def lojasiewicz_mdp(mdp, theta, mu, rho, tol=1e-9, solution=None):
    mu = _positive_mu(mdp, mu)
    rho = check_distribution(rho, mdp.num_states, "rho")
    sol = solve_optimal(mdp) if solution is None else solution
    pi = softmax_policy(theta)
    vb = policy_values(mdp, pi, mu)
    g = vb.d[:, None] * pi * vb.adv / (1.0 - mdp.gamma)
    delta = value_gap(mdp, pi, rho, sol)
    d_star = discounted_state_distribution(mdp, sol.policy(), rho)
    mismatch = float(np.max(d_star / vb.d))
    c = float(np.min(pi[np.arange(mdp.num_states), sol.a_star]))
    rhs = c / (math.sqrt(mdp.num_states) * mismatch) * delta
    ctx = {"S": mdp.num_states, "A": mdp.num_actions, "gamma": mdp.gamma, "mismatch": mismatch}
    return CheckReport("lojasiewicz_mdp", _norm(g), rhs, tol, ctx)


def entropy_lojasiewicz(problem, theta, mu=None, rho=None, tau=None, tol=ALGEBRAIC_TOL, log_pi_soft=None):
    """Square-root gradient domination of the entropy-regularized value.

    Bandits (a reward vector or a one-state, ``gamma = 0`` instance) use
    ``C = sqrt(2 tau) min pi``; general MDPs include the state-count, ``mu``
    and visitation-mismatch factors.
    """
    if tau is None or not tau > 0:
        raise InvalidInputError(f"tau must be positive, got {tau!r}", field="tau")
    theta = np.asarray(theta, dtype=float)
    if _is_bandit(problem):
        r = _bandit_rewards(problem)
        theta = theta.reshape(-1)
        pi = softmax_policy(theta)
        lp = log_softmax(theta)
        g = bandit_entropy_gradient(r, theta, tau)
        soft_gap = float(tau * kl_divergence(pi, None, log_p=lp, log_q=log_softmax(r / tau)))
        C = math.sqrt(2.0 * tau) * float(pi.min())
        ctx = {"K": r.size, "tau": tau}
    else:
        mdp = problem
        mu = _positive_mu(mdp, mu)
        rho = mu if rho is None else check_distribution(rho, mdp.num_states, "rho")
        if log_pi_soft is None:
            pi_soft, _ = solve_soft_optimal(mdp, tau)
            log_pi_soft = np.log(pi_soft)
        pi = softmax_policy(theta)
        lp = log_softmax(theta)
        g = mdp_entropy_gradient(mdp, theta, mu, tau)
        soft_gap = soft_value_gap(mdp, pi, rho, tau, lp, log_pi_soft)
        d_mu = discounted_state_distribution(mdp, pi, mu)
        d_soft = discounted_state_distribution(mdp, np.exp(log_pi_soft), rho)
        mismatch = float(np.max(d_soft / d_mu))
        C = (
            math.sqrt(2.0 * tau / mdp.num_states)
            * math.sqrt(float(mu.min()))
            * float(pi.min())
            / math.sqrt(mismatch)
        )
        ctx = {"S": mdp.num_states, "A": mdp.num_actions, "gamma": mdp.gamma, "tau": tau}
    ctx["soft_gap"] = soft_gap
    return CheckReport("entropy_lojasiewicz", _norm(g), C * math.sqrt(max(soft_gap, 0.0)), tol, ctx)


def reward_gap(r):
    r = np.sort(_bandit_rewards(r))[::-1]
    return float(r[0] - r[1]) if r.size > 1 else math.inf


def reversed_lojasiewicz(problem, theta, mu=None, tol=ALGEBRAIC_TOL, solution=None):
    """Upper bound on the gradient norm by the (scaled) sub-optimality."""
    theta = np.asarray(theta, dtype=float)
    if _is_bandit(problem):
        r = _bandit_rewards(problem)
        gap = reward_gap(r)
        if not gap > 0:
            raise DegenerateInstanceError("reversed inequality needs a unique best action", field="rewards")
        theta = theta.reshape(-1)
        pi = softmax_policy(theta)
        delta = float(pi @ (r.max() - r))
        bound = math.sqrt(2.0) / gap * delta
        g = bandit_pg_gradient(r, theta)
        ctx = {"K": r.size, "gap": gap}
    else:
        mdp = problem
        mu = _positive_mu(mdp, mu)
        sol = solve_optimal(mdp) if solution is None else solution
        if not sol.delta_star > 0:
            raise DegenerateInstanceError("reversed inequality needs a positive optimal value gap")
        pi = softmax_policy(theta)
        vb = policy_values(mdp, pi, mu)
        g = vb.d[:, None] * pi * vb.adv / (1.0 - mdp.gamma)
        delta = value_gap(mdp, pi, mu, sol, d_rho=vb.d)
        bound = math.sqrt(2.0) / ((1.0 - mdp.gamma) * sol.delta_star) * delta
        ctx = {"S": mdp.num_states, "A": mdp.num_actions, "gamma": mdp.gamma, "gap": sol.delta_star}
    return CheckReport("reversed_lojasiewicz", bound, _norm(g), tol, ctx)


def degree_check(r, theta, xi, mode="plain", tau=0.2, tol=ALGEBRAIC_TOL):
    """``|grad| >= C(theta) * gap^(1 - xi)`` for the plain or entropy-regularized bandit objective."""
    if not 0.0 <= xi <= 1.0:
        raise InvalidInputError(f"xi must lie in [0, 1], got {xi!r}", field="xi")
    r = _bandit_rewards(r)
    theta = np.asarray(theta, dtype=float)
    pi = softmax_policy(theta)
    if mode == "plain":
        g = bandit_pg_gradient(r, theta)
        gap = float(pi @ (r.max() - r))
        C = float(pi[np.argmax(r)])
    elif mode == "entropy":
        g = bandit_entropy_gradient(r, theta, tau)
        lp = log_softmax(theta)
        gap = float(tau * kl_divergence(pi, None, log_p=lp, log_q=log_softmax(r / tau)))
        C = math.sqrt(2.0 * tau) * float(pi.min())
    else:
        raise InvalidInputError(f"unknown mode {mode!r}", field="C_mode")
    rhs = C * max(gap, 0.0) ** (1.0 - xi)
    return CheckReport(f"degree_{mode}", _norm(g), rhs, tol, {"xi": xi, "gap": gap})


def degree_probe(r=(0.6, 0.4, 0.2), tau=0.2, xi=0.1, num_samples=13, C_mode="plain", eps=None, tol=ALGEBRAIC_TOL):
    """Evaluate the degree inequality along ``pi = (1 - 3e, 2e, e)``.

    The default grid is ``10^-2, 10^-2.5, ..., 10^-8``.
    """
    if eps is None:
        eps = np.logspace(-2.0, -8.0, num_samples)
    reports = []
    for e in np.atleast_1d(eps):
        pi = np.array([1.0 - 3.0 * e, 2.0 * e, e])
        rep = degree_check(r, np.log(pi), xi, C_mode, tau, tol)
        rep.context["eps"] = float(e)
        reports.append(rep)
    return reports


# ---------------------------------------------------------------------------
# entropy bandit closed forms


def contraction_residual(r, theta, tau):
    """``zeta = tau theta - r`` with its mean removed, and its Euclidean norm."""
    z = tau * np.asarray(theta, dtype=float) - np.asarray(r, dtype=float)
    z = z - z.mean()
    return z, _norm(z)


def zeta_initial_bound(theta1, tau):
    theta1 = np.asarray(theta1, dtype=float)
    return 2.0 * (tau * float(np.max(np.abs(theta1))) + 1.0) * math.sqrt(theta1.size)


def min_prob_floor(theta1, tau):
    """Closed-form lower bound on every action probability of an entropy bandit run."""
    theta1 = np.asarray(theta1, dtype=float)
    K = theta1.size
    n = float(np.max(np.abs(theta1)))
    return math.exp(-math.log(K) - 1.0 / tau - 4.0 * (n + 1.0 / tau) * math.sqrt(K))


def entropy_envelope(theta1, tau, eta, t, c=None):
    theta1 = np.asarray(theta1, dtype=float)
    K = theta1.size
    c = min_prob_floor(theta1, tau) if c is None else c
    n = float(np.max(np.abs(theta1)))
    return 2.0 * (tau * n + 1.0) ** 2 * K / tau * np.exp(-2.0 * tau * eta * c * (np.asarray(t, dtype=float) - 1.0))


def pseudo_rate_bound(t, c_t):
    return 5.0 / (np.asarray(t, dtype=float) * np.square(c_t))


def uniform_init_bound(t, K):
    return 5.0 * K * K / np.asarray(t, dtype=float)


def threshold_ratio(r):
    """``(r2 - r3) / (2 (r1 - r2))`` for three strictly decreasing rewards."""
    r = _bandit_rewards(r)
    if r.size != 3 or not (r[0] > r[1] > r[2]):
        raise InvalidInputError("need three strictly decreasing rewards", field="rewards")
    return float((r[1] - r[2]) / (2.0 * (r[0] - r[1])))


def threshold_region_check(r, theta1, iterations, eta=0.4):
    """After ``pi(1)/pi(3)`` first reaches the threshold ratio, ``pi(1)`` never drops below its earlier minimum."""
    r = _bandit_rewards(r)
    ratio = threshold_ratio(r)
    theta = np.array(theta1, dtype=float)
    before, after = math.inf, math.inf
    t0 = None
    for t in range(1, iterations + 1):
        lp = log_softmax(theta)
        if t0 is None and lp[0] - lp[2] >= math.log(ratio):
            t0 = t
        p1 = math.exp(lp[0])
        if t0 is None or t == t0:
            before = min(before, p1)
        else:
            after = min(after, p1)
        theta = theta + eta * bandit_pg_gradient(r, theta)
    ctx = {"t0": t0, "ratio": ratio, "iterations": iterations}
    if t0 is None or after == math.inf:
        return CheckReport("threshold_region", 0.0, 0.0, 0.0, ctx, applicable=False)
    return CheckReport("threshold_region", after, before, 0.0, ctx)


# ---------------------------------------------------------------------------
# smoothness

Objective = namedtuple("Objective", "value gradient")


def bandit_objective(r):
    r = np.asarray(r, dtype=float)
    return Objective(lambda th: float(softmax_policy(th) @ r), lambda th: bandit_pg_gradient(r, th))


def mdp_value_objective(mdp, mu):
    return Objective(value_objective(mdp, mu), lambda th: mdp_pg_gradient(mdp, th, mu))


def mdp_entropy_rate_objective(mdp, rho):
    return Objective(entropy_rate_objective(mdp, rho), lambda th: mdp_entropy_rate_gradient(mdp, th, rho))


def smoothness_witness(objective, theta, theta_prime, beta):
    """``|f(th') - f(th) - <grad f(th), th' - th>| <= beta/2 |th' - th|^2``."""
    if not beta > 0:
        raise InvalidInputError("beta must be positive", field="beta")
    f, grad = objective
    theta = np.asarray(theta, dtype=float)
    theta_prime = np.asarray(theta_prime, dtype=float)
    d = theta_prime - theta
    sq = float(np.sum(d * d))
    resid = abs(f(theta_prime) - f(theta) - float(np.sum(grad(theta) * d)))
    tol = 1e-10 * (1.0 + beta * sq)
    return CheckReport("smoothness", 0.5 * beta * sq, resid, tol, {"beta": beta, "step": math.sqrt(sq)})


# ---------------------------------------------------------------------------
# matrix and logit inequalities


def spectrum_check(pi, tol=1e-12):
    """Eigenvalues of ``H(pi)``: the smallest is zero and the rest interlace the sorted probabilities."""
    pi = np.asarray(pi, dtype=float)
    lam = np.linalg.eigvalsh(h_matrix(pi))
    p = np.sort(pi)
    slack = [-abs(lam[0])]
    slack.extend(lam[1:] - p[:-1])
    slack.extend(p[1:] - lam[1:])
    return CheckReport("spectrum", float(min(slack)), 0.0, tol, {"K": pi.size})


def norm_decay_check(pi, x, tol=1e-12):
    pi = np.asarray(pi, dtype=float)
    x = np.asarray(x, dtype=float)
    xc = x - x.mean()
    H = h_matrix(pi)
    n = _norm(xc)
    m = float(pi.min())
    return [
        CheckReport("norm_decay_h", _norm(H @ xc), m * n, tol, {"K": pi.size}),
        CheckReport("norm_decay_complement", (1.0 - m) * n, _norm(xc - H @ xc), tol, {"K": pi.size}),
    ]


def _logit_shift(theta, theta_prime):
    diff = np.asarray(theta_prime, dtype=float) - np.asarray(theta, dtype=float)
    return float(np.max(np.abs(diff - diff.mean())))


def kl_logit_check(theta, theta_prime, tol=1e-12):
    lp, lq = log_softmax(theta), log_softmax(theta_prime)
    kl = float(kl_divergence(np.exp(lp), None, log_p=lp, log_q=lq))
    return CheckReport("kl_logit", 0.5 * _logit_shift(theta, theta_prime) ** 2, kl, tol)


def policy_logit_check(theta, theta_prime, tol=1e-12):
    l1 = float(np.sum(np.abs(softmax_policy(theta) - softmax_policy(theta_prime))))
    return CheckReport("policy_logit", _logit_shift(theta, theta_prime), l1, tol)


# ---------------------------------------------------------------------------
# value identities


def performance_difference_check(mdp, pi, pi_prime, rho, form="first", tol=SOLVE_TOL):
    """``V^pi'(rho) - V^pi(rho)`` against its visitation-weighted expansion.

    ``first``: weights ``d_rho^pi'`` and advantages of ``pi``; ``second``:
    weights ``d_rho^pi`` and action values of ``pi'``.
    """
    v = policy_values(mdp, pi, rho)
    vp = policy_values(mdp, pi_prime, rho)
    direct = float(rho @ (vp.v - v.v))
    if form == "first":
        formula = float(vp.d @ np.sum(pi_prime * v.adv, axis=1))
    elif form == "second":
        formula = float(v.d @ np.sum((pi_prime - pi) * vp.q, axis=1))
    else:
        raise InvalidInputError(f"unknown form {form!r}", field="form")
    return _equality(f"performance_difference_{form}", direct, formula / (1.0 - mdp.gamma), tol, gamma=mdp.gamma)


def value_suboptimality_check(mdp, pi, rho, solution=None, tol=SOLVE_TOL):
    sol = solve_optimal(mdp) if solution is None else solution
    v = policy_values(mdp, pi, rho)
    direct = float(rho @ (sol.v_star - v.v))
    formula = float(v.d @ np.sum((sol.policy() - pi) * sol.q_star, axis=1)) / (1.0 - mdp.gamma)
    return _equality("value_suboptimality", direct, formula, tol, gamma=mdp.gamma)


def soft_suboptimality_check(mdp, theta, rho, tau, tol=SOLVE_TOL):
    pi_soft, soft_bundle = solve_soft_optimal(mdp, tau, rho=rho)
    pi = softmax_policy(theta)
    lp = log_softmax(theta)
    sb = soft_policy_values(mdp, pi, rho, tau, log_pi=lp)
    direct = float(rho @ (soft_bundle.v_soft - sb.v_soft))
    kl_form = soft_value_gap(mdp, pi, rho, tau, lp, np.log(pi_soft))
    return _equality("soft_suboptimality", direct, kl_form, tol, gamma=mdp.gamma, tau=tau)


# ---------------------------------------------------------------------------
# rate estimation and trace envelopes


@dataclass(frozen=True)
class RateFit:
    model: str
    slope: float
    intercept: float
    r_squared: float
    window: tuple
    column: str = "delta"
    n: int = 0

    def to_dict(self):
        return {
            "model": self.model,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "window": list(self.window),
            "column": self.column,
            "n": self.n,
        }


def _trace_arrays(trace, column):
    if isinstance(trace, tuple):
        t, y = trace
        return np.asarray(t, dtype=float), np.asarray(y, dtype=float)
    return trace.t.astype(float), trace.column(column)


def rate_fit(trace, model="power", window=None, column=None, floor=0.0):
    """Least-squares line through ``(log t, log y)`` (power) or ``(t, log y)`` (exponential).

    ``trace`` is a :class:`RunTrace` or a ``(t, y)`` pair. Only the prefix of
    the trace before the first value ``<= floor`` is usable; the default window
    is the last decade of that prefix for the power model and its second half
    for the exponential one. The default column is ``soft_delta`` for
    exponential fits when the trace has it. Points are weighted by their
    spacing in ``t``.
    """
    if model not in ("power", "exponential"):
        raise InvalidInputError(f"unknown rate model {model!r}", field="model")
    if column is None:
        column = "delta"
        if model == "exponential" and not isinstance(trace, tuple):
            if np.any(np.isfinite(trace.soft_delta)):
                column = "soft_delta"
    t, y = _trace_arrays(trace, column)
    bad = np.nonzero(~(y > floor) | ~np.isfinite(y))[0]
    usable = bad[0] if bad.size else t.size
    if usable < 3:
        raise InvalidInputError("fewer than three usable values in the trace", field="window")
    t, y = t[:usable], y[:usable]
    t_hi = float(t[-1])
    if window is None:
        window = (t_hi / 10.0, t_hi) if model == "power" else (t_hi / 2.0, t_hi)
    lo, hi = window
    sel = np.nonzero((t >= lo) & (t <= hi))[0]
    if sel.size < 3:
        raise InvalidInputError("fewer than three positive values in the fit window", field="window")
    x = np.log(t[sel]) if model == "power" else t[sel]
    ly = np.log(y[sel])
    # weight each record by the span of t it stands for, so thinned traces fit like dense ones
    span = np.diff(t[sel])
    w = np.append(span, span[-1])
    slope, intercept = np.polyfit(x, ly, 1, w=np.sqrt(w))
    resid = ly - (slope * x + intercept)
    ss_res = float(w @ resid**2)
    ss_tot = float(w @ (ly - np.average(ly, weights=w)) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return RateFit(
        model, float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)),
        (float(t[sel[0]]), float(t[sel[-1]])), column, int(sel.size),
    )


def _envelope(name, t, value, bound, tol, **context):
    """Upper envelope ``value_t <= bound_t`` reported at its tightest point."""
    slack = np.asarray(bound, dtype=float) - np.asarray(value, dtype=float)
    ok = np.isfinite(slack)
    if not np.any(ok):
        return CheckReport(name, 0.0, 0.0, tol, context, applicable=False)
    i = int(np.argmin(np.where(ok, slack, np.inf)))
    context.update(t=int(t[i]), checked=int(ok.sum()))
    return CheckReport(name, float(bound[i]), float(value[i]), tol, context)


def lower_bound_check(trace, delta_star=None, gamma=None, bandit=None, tol=1e-14):
    """``delta_t >= Delta^2 / (6 t)`` (bandit) or ``(1-gamma)^5 Delta*^2 / (12 t)`` on the final quarter."""
    if isinstance(trace, tuple):
        t, delta = (np.asarray(a, dtype=float) for a in trace)
        bandit = True if bandit is None else bandit
        gamma = 0.0 if gamma is None else gamma
    else:
        t, delta = trace.t.astype(float), trace.delta
        delta_star = trace.delta_star if delta_star is None else delta_star
        gamma = trace.config.problem.gamma if gamma is None else gamma
        bandit = trace.config.problem.is_bandit if bandit is None else bandit
    if t.size < 100:
        raise InvalidInputError("lower-bound check needs at least 100 records", field="trace")
    sel = t >= 0.75 * t.max()
    ctx = {"delta_star": delta_star, "gamma": gamma, "bandit": bool(bandit)}
    if not (delta_star and delta_star > 0 and math.isfinite(delta_star)) or np.all(delta[sel] == 0.0):
        return CheckReport("lower_bound", 0.0, 0.0, tol, ctx, applicable=False)
    if bandit:
        bound = delta_star**2 / (6.0 * t[sel])
    else:
        bound = (1.0 - gamma) ** 5 * delta_star**2 / (12.0 * t[sel])
    slack = delta[sel] - bound
    i = int(np.argmin(slack))
    ctx["t"] = int(t[sel][i])
    return CheckReport("lower_bound", float(delta[sel][i]), float(bound[i]), tol, ctx)


def pseudo_rate_check(trace, tol=1e-12):
    t = trace.t
    return _envelope("pseudo_rate", t, trace.delta, pseudo_rate_bound(t, trace.c_running), tol)


def uniform_init_check(trace, tol=1e-12):
    t = trace.t
    K = trace.config.problem.num_actions
    return _envelope("uniform_init_rate", t, trace.delta, uniform_init_bound(t, K), tol, K=K)


def entropy_envelope_check(trace, tol=1e-12):
    cfg = trace.config
    theta1 = cfg.initial_logits()[0]
    tau = cfg.method.tau
    t = trace.t
    bound = entropy_envelope(theta1, tau, trace.eta, t)
    return _envelope("entropy_envelope", t, trace.soft_delta, bound, tol, tau=tau, eta=trace.eta)


def monotone_check(trace, column="opt_prob", tol=1e-12):
    """Recorded ``column`` is nondecreasing; reports the largest drop."""
    y = trace.column(column)
    steps = np.diff(y)
    drop = float(-steps.min()) if steps.size else 0.0
    return CheckReport(f"monotone_{column}", 0.0, max(drop, 0.0), tol, {"records": int(y.size)})


def contraction_check(trace, tol=ALGEBRAIC_TOL):
    excess = trace.max_contraction_excess
    applicable = math.isfinite(excess)
    return CheckReport("contraction", 0.0, excess if applicable else 0.0, tol, applicable=applicable)


def ascent_check(trace, tol=1e-12):
    drop = trace.max_ascent_drop
    applicable = math.isfinite(drop)
    return CheckReport("monotone_ascent", 0.0, drop if applicable else 0.0, tol, applicable=applicable)


def min_prob_floor_check(trace):
    cfg = trace.config
    c = min_prob_floor(cfg.initial_logits()[0], cfg.method.tau)
    return CheckReport("min_prob_floor", trace.min_prob_inf, c, 0.0, {"c": c})


# ---------------------------------------------------------------------------
# fixtures


def nonconcavity_fixture(f=None, theta1=None, theta2=None, tol=0.0):
    """Midpoint value below the endpoint average, i.e. a witness of non-concavity.

    Defaults to rewards ``(1, 9/10, 1/10)`` with ``theta1 = 0`` and
    ``theta2 = (log 9, log 16, log 25)``.
    """
    if f is None:
        r = np.array([1.0, 0.9, 0.1])
        f = bandit_objective(r).value
    if theta1 is None:
        theta1 = np.zeros(3)
    if theta2 is None:
        theta2 = np.log([9.0, 16.0, 25.0])
    theta1 = np.asarray(theta1, dtype=float)
    theta2 = np.asarray(theta2, dtype=float)
    avg = 0.5 * (f(theta1) + f(theta2))
    mid = f(0.5 * (theta1 + theta2))
    return CheckReport("nonconcavity", avg, mid, tol, {"average": avg, "midpoint": mid})


def _exact_bandit_value(r, weights):
    w = [Fraction(x) for x in weights]
    total = sum(w)
    return sum(Fraction(ri) * wi for ri, wi in zip(r, w)) / total


def fixture_reports():
    """Fixed-instance checks against exact rational and closed-form values."""
    r_exact = (Fraction(1), Fraction(9, 10), Fraction(1, 10))
    avg_exact = (_exact_bandit_value(r_exact, (1, 1, 1)) + _exact_bandit_value(r_exact, (9, 16, 25))) / 2
    mid_exact = _exact_bandit_value(r_exact, (3, 4, 5))
    nc = nonconcavity_fixture()
    reports = [
        nc,
        _equality("nonconcavity_average", nc.context["average"], avg_exact, 1e-12, exact=str(avg_exact)),
        _equality("nonconcavity_midpoint", nc.context["midpoint"], mid_exact, 1e-12, exact=str(mid_exact)),
    ]
    eps = 0.1
    pi = np.array([2 * eps, 0.5 - 2 * eps, 0.5])
    g = bandit_pg_gradient([5.0, 4.0, 4.0], np.log(pi))
    reports.append(_equality("gradient_norm_fixture", _norm(g), eps * math.sqrt(3.92), 1e-12, eps=eps))
    reports.append(lojasiewicz_bandit([5.0, 4.0, 4.0], np.log(pi)))
    reports.append(_equality("threshold_ratio", threshold_ratio([1.0, 0.9, 0.1]), 4.0, 1e-12))
    return reports
