"""Seeded randomized verification suites.

Each instance draws from its own child of ``SeedSequence(seed)``, so results do
not depend on how instances are spread across worker processes. Worker count
defaults to the CPU count and is capped by ``PGRATES_THREADS``.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import analysis as an
from .gradients import (
    finite_difference_gradient,
    mdp_entropy_gradient,
    mdp_entropy_gradient_h_form,
    mdp_pg_gradient,
    relative_error,
    soft_value_objective,
    value_objective,
)
from .mdp_core import random_mdp, softmax_policy

TAUS = (0.05, 0.2, 1.0)
GRADCHECK_TOL = 1e-5


def _random_logits(rng, shape):
    scale = rng.choice([0.5, 2.0, 5.0])
    return scale * rng.standard_normal(shape)


def _bandit(rng, k_max=10):
    return rng.uniform(size=int(rng.integers(2, k_max + 1)))


def _mdp(rng, s_max=4, a_max=4, gammas=(0.5, 0.9)):
    S = int(rng.integers(1, s_max + 1))
    A = int(rng.integers(2, a_max + 1))
    return random_mdp(rng, S, A, float(rng.choice(gammas)))


def _positive_dist(rng, n):
    return rng.dirichlet(np.ones(n))


# --- per-instance trials ---------------------------------------------------


def _loj_bandit(rng):
    r = _bandit(rng)
    return [an.lojasiewicz_bandit(r, _random_logits(rng, r.size))]


def _loj_mdp(rng):
    mdp = _mdp(rng)
    theta = _random_logits(rng, (mdp.num_states, mdp.num_actions))
    mu, rho = _positive_dist(rng, mdp.num_states), _positive_dist(rng, mdp.num_states)
    return [an.lojasiewicz_mdp(mdp, theta, mu, rho)]


def _rev_bandit(rng):
    r = _bandit(rng)
    return [an.reversed_lojasiewicz(r, _random_logits(rng, r.size))]


def _rev_mdp(rng):
    mdp = _mdp(rng)
    theta = _random_logits(rng, (mdp.num_states, mdp.num_actions))
    return [an.reversed_lojasiewicz(mdp, theta, _positive_dist(rng, mdp.num_states))]


def _ent_bandit(rng):
    r = _bandit(rng)
    tau = float(rng.choice(TAUS))
    return [an.entropy_lojasiewicz(r, _random_logits(rng, r.size), tau=tau)]


def _ent_mdp(rng):
    mdp = _mdp(rng)
    tau = float(rng.choice(TAUS))
    theta = _random_logits(rng, (mdp.num_states, mdp.num_actions))
    mu, rho = _positive_dist(rng, mdp.num_states), _positive_dist(rng, mdp.num_states)
    return [an.entropy_lojasiewicz(mdp, theta, mu, rho, tau, tol=1e-9)]


def _pair(rng, shape, radius=1.0):
    theta = _random_logits(rng, shape)
    d = rng.standard_normal(shape)
    d *= radius * rng.uniform() / max(np.linalg.norm(d), 1e-300)
    return theta, theta + d


def _smooth_bandit(rng):
    r = _bandit(rng)
    theta, theta_p = _pair(rng, r.size)
    return [an.smoothness_witness(an.bandit_objective(r), theta, theta_p, 2.5)]


def _smooth_mdp(rng):
    mdp = _mdp(rng, gammas=(0.9,))
    mu = _positive_dist(rng, mdp.num_states)
    theta, theta_p = _pair(rng, (mdp.num_states, mdp.num_actions))
    beta = 8.0 / (1.0 - mdp.gamma) ** 3
    rep = an.smoothness_witness(an.mdp_value_objective(mdp, mu), theta, theta_p, beta)
    rep.context["objective"] = "value"
    return [rep]


def _smooth_entropy_rate(rng):
    mdp = _mdp(rng, gammas=(0.9,))
    rho = _positive_dist(rng, mdp.num_states)
    theta, theta_p = _pair(rng, (mdp.num_states, mdp.num_actions))
    beta = (4.0 + 8.0 * math.log(mdp.num_actions)) / (1.0 - mdp.gamma) ** 3
    rep = an.smoothness_witness(an.mdp_entropy_rate_objective(mdp, rho), theta, theta_p, beta)
    rep.context["objective"] = "entropy_rate"
    return [rep]


def _spectrum(rng):
    K = int(rng.integers(2, 11))
    pi = rng.dirichlet(np.full(K, float(rng.choice([0.2, 1.0, 5.0]))))
    pi = np.maximum(pi, 1e-300)
    pi /= pi.sum()
    x = rng.standard_normal(K)
    return [an.spectrum_check(pi), *an.norm_decay_check(pi, x)]


def _logit_pair(rng):
    K = int(rng.integers(2, 11))
    theta, theta_p = _random_logits(rng, K), _random_logits(rng, K)
    return [an.kl_logit_check(theta, theta_p), an.policy_logit_check(theta, theta_p)]


def _gradcheck(rng):
    S = int(rng.integers(1, 6))
    A = int(rng.integers(2, 6))
    gamma = float(rng.choice([0.0, 0.5, 0.9]))
    mdp = random_mdp(rng, S, A, gamma)
    mu = _positive_dist(rng, S)
    tau = float(rng.choice(TAUS))
    theta = rng.standard_normal((S, A))
    err_plain = relative_error(mdp_pg_gradient(mdp, theta, mu),
                               finite_difference_gradient(value_objective(mdp, mu), theta))
    err_soft = relative_error(mdp_entropy_gradient(mdp, theta, mu, tau),
                              finite_difference_gradient(soft_value_objective(mdp, mu, tau), theta))
    ctx = {"S": S, "A": A, "gamma": gamma, "tau": tau, "plain": err_plain, "entropy": err_soft}
    return [an.CheckReport("gradcheck", 0.0, max(err_plain, err_soft), GRADCHECK_TOL, ctx)]


def _identities(rng):
    mdp = _mdp(rng)
    S, A = mdp.num_states, mdp.num_actions
    rho = _positive_dist(rng, S)
    theta, theta_p = _random_logits(rng, (S, A)), _random_logits(rng, (S, A))
    pi, pi_p = softmax_policy(theta), softmax_policy(theta_p)
    tau = float(rng.choice(TAUS))
    h_form = mdp_entropy_gradient_h_form(mdp, theta, rho, tau)
    adv_form = mdp_entropy_gradient(mdp, theta, rho, tau)
    return [
        an.performance_difference_check(mdp, pi, pi_p, rho, "first"),
        an.performance_difference_check(mdp, pi, pi_p, rho, "second"),
        an.value_suboptimality_check(mdp, pi, rho),
        an.soft_suboptimality_check(mdp, theta, rho, tau),
        an._equality("entropy_gradient_forms", float(np.max(np.abs(h_form - adv_form))), 0.0, an.SOLVE_TOL),
        *_logit_pair(rng),
    ]


def _degree_entropy(rng):
    r = _bandit(rng)
    return [an.degree_check(r, _random_logits(rng, r.size), 0.5, "entropy", 0.2)]


def _mdp_share(trials, divisor):
    return trials // divisor


SUITES = {
    "lojasiewicz": lambda n: [(_loj_bandit, n), (_loj_mdp, _mdp_share(n, 5))],
    "reversed": lambda n: [(_rev_bandit, n), (_rev_mdp, _mdp_share(n, 5))],
    "entropy_lojasiewicz": lambda n: [(_ent_bandit, n), (_ent_mdp, _mdp_share(n, 5))],
    "smoothness": lambda n: [
        (_smooth_bandit, n), (_smooth_mdp, _mdp_share(n, 10)), (_smooth_entropy_rate, _mdp_share(n, 10))
    ],
    "spectrum": lambda n: [(_spectrum, n)],
    "gradcheck": lambda n: [(_gradcheck, n)],
    "identities": lambda n: [(_identities, n)],
    "degree": lambda n: [(_degree_entropy, n)],
    "fixtures": lambda n: [],
}


def _run_chunk(items):
    out = []
    for fn, seq in items:
        out.extend(fn(np.random.default_rng(seq)))
    return out


def _fixed_reports(name):
    if name == "fixtures":
        return an.fixture_reports()
    if name == "degree":
        reports = []
        for rep in an.degree_probe(xi=0.1, eps=[1e-6]):
            # a violated inequality is the expected outcome here
            reports.append(an.CheckReport("degree_plain_zero", rep.rhs, rep.lhs, 0.0, dict(rep.context)))
        reports.extend(an.degree_probe(xi=0.0, C_mode="plain"))
        return reports
    return []


def worker_count():
    n = os.cpu_count() or 1
    cap = os.environ.get("PGRATES_THREADS")
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def run_suite(name, trials=1000, seed=0, workers=None):
    """Run suite ``name`` over ``trials`` seeded instances; returns the list of reports.

    ``trials = 0`` runs nothing (fixed-instance suites still report their fixtures).
    """
    if name not in SUITES:
        raise KeyError(name)
    if trials < 0:
        raise ValueError("trials must be non-negative")
    reports = _fixed_reports(name) if trials > 0 or name == "fixtures" else []
    plan = [fn for fn, count in SUITES[name](trials) for _ in range(count)]
    if not plan:
        return reports
    seeds = np.random.SeedSequence(seed).spawn(len(plan))
    items = list(zip(plan, seeds))
    workers = worker_count() if workers is None else max(1, workers)
    if workers == 1 or len(items) < 400:
        return reports + _run_chunk(items)
    size = math.ceil(len(items) / workers)
    chunks = [items[i:i + size] for i in range(0, len(items), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_run_chunk, chunks):
            reports.extend(part)
    return reports
