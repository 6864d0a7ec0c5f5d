import json
import math
from fractions import Fraction

import numpy as np
import pytest

from pgrates import analysis as an
from pgrates.errors import DegenerateInstanceError, InvalidInputError
from pgrates.mdp_core import TabularMdp, random_mdp, softmax_policy, solve_optimal
from pgrates.optimizer import MethodSpec, RunConfig, logits_from_policy, run


# --- report plumbing ---------------------------------------------------------------


def test_check_report_sign_convention():
    ok = an.CheckReport("x", 1.0, 1.0 + 1e-12, 1e-10)
    assert ok.margin == pytest.approx(-1e-12) and ok.passed
    bad = an.CheckReport("x", 1.0, 1.1, 1e-10)
    assert not bad.passed
    skipped = an.CheckReport("x", 0.0, 5.0, 0.0, applicable=False)
    assert skipped.passed
    doc = json.loads(bad.to_json())
    assert doc["pass"] is False and doc["name"] == "x"
    assert doc["margin"] == pytest.approx(-0.1)


# --- gradient-domination inequalities ----------------------------------------------


def test_lojasiewicz_bandit_fixture():
    rep = an.lojasiewicz_bandit([5.0, 4.0, 4.0], np.log([0.2, 0.3, 0.5]))
    assert rep.lhs == pytest.approx(0.197990, abs=1e-6)
    assert rep.rhs == pytest.approx(0.16, abs=1e-14)
    assert rep.passed


def test_lojasiewicz_bandit_near_optimum():
    rep = an.lojasiewicz_bandit([1.0, 0.5, 0.2], [40.0, 0.0, 0.0])
    assert rep.lhs < 1e-15 and rep.rhs < 1e-15 and rep.passed


def test_lojasiewicz_bandit_multiple_maximisers(rng):
    r = np.array([0.8, 0.8, 0.1, 0.3])
    for _ in range(100):
        assert an.lojasiewicz_bandit(r, 3 * rng.standard_normal(4)).passed


def test_lojasiewicz_mdp_reduces_to_bandit(rng):
    r = rng.uniform(size=4)
    theta = rng.standard_normal(4)
    a = an.lojasiewicz_mdp(TabularMdp.bandit(r), theta[None, :], np.ones(1), np.ones(1))
    b = an.lojasiewicz_bandit(r, theta)
    assert a.lhs == pytest.approx(b.lhs, rel=1e-12)
    assert a.rhs == pytest.approx(b.rhs, rel=1e-9)


def test_lojasiewicz_mdp_requires_positive_mu(rng):
    mdp = random_mdp(rng, 2, 2, 0.5)
    with pytest.raises(InvalidInputError):
        an.lojasiewicz_mdp(mdp, np.zeros((2, 2)), [1.0, 0.0], [0.5, 0.5])


def test_lojasiewicz_mdp_random(rng):
    for _ in range(30):
        mdp = random_mdp(rng, 3, 3, 0.9)
        mu, rho = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        assert an.lojasiewicz_mdp(mdp, 2 * rng.standard_normal((3, 3)), mu, rho).passed


def test_entropy_lojasiewicz_examples():
    r = np.array([0.3, 0.7, 0.2])
    rep = an.entropy_lojasiewicz(r, r / 0.5, tau=0.5)
    assert abs(rep.lhs) < 1e-12 and abs(rep.rhs) < 1e-7 and rep.passed
    rep = an.entropy_lojasiewicz([1.0, 0.0], [0.0, 0.0], tau=1.0)
    pi_s = np.array([math.e, 1.0]) / (1 + math.e)
    kl = 0.5 * math.log(0.5 / pi_s[0]) + 0.5 * math.log(0.5 / pi_s[1])
    assert rep.rhs == pytest.approx(math.sqrt(2) * 0.5 * math.sqrt(kl), rel=1e-12)
    assert rep.lhs == pytest.approx(math.sqrt(2) * 0.25, rel=1e-12)
    assert rep.passed
    with pytest.raises(InvalidInputError):
        an.entropy_lojasiewicz(r, r, tau=0.0)


def test_entropy_lojasiewicz_mdp(rng):
    for _ in range(20):
        mdp = random_mdp(rng, 3, 2, 0.9)
        mu, rho = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        assert an.entropy_lojasiewicz(mdp, rng.standard_normal((3, 2)), mu, rho, 0.2, tol=1e-9).passed


def test_reversed_lojasiewicz():
    rep = an.reversed_lojasiewicz([1.0, 0.9, 0.1], np.zeros(3))
    assert rep.context["gap"] == pytest.approx(0.1)
    delta = 1.0 - 2.0 / 3.0
    assert rep.lhs == pytest.approx(math.sqrt(2) / 0.1 * delta)
    assert rep.passed
    assert an.reversed_lojasiewicz([1.0, 0.9, 0.1], [40.0, 0.0, 0.0]).passed
    with pytest.raises(DegenerateInstanceError):
        an.reversed_lojasiewicz([0.5, 0.5, 0.1], np.zeros(3))


def test_reversed_lojasiewicz_mdp(rng):
    mdp = random_mdp(rng, 3, 3, 0.8)
    for _ in range(20):
        assert an.reversed_lojasiewicz(mdp, 2 * rng.standard_normal((3, 3)), rng.dirichlet(np.ones(3))).passed


# --- degree probe ----------------------------------------------------------------


def test_degree_probe_plain_fails_for_positive_xi():
    (rep,) = an.degree_probe(xi=0.1, eps=[1e-6])
    assert not rep.passed


def test_degree_probe_plain_passes_at_zero():
    assert all(rep.passed for rep in an.degree_probe(xi=0.0))


def test_degree_entropy_half(rng):
    r = np.array([0.6, 0.4, 0.2])
    for _ in range(200):
        assert an.degree_check(r, 3 * rng.standard_normal(3), 0.5, "entropy", 0.2).passed
    assert all(rep.passed for rep in an.degree_probe(xi=0.5, C_mode="entropy"))


def test_degree_rejects_bad_xi():
    with pytest.raises(InvalidInputError):
        an.degree_check([0.6, 0.4], [0.0, 0.0], 1.5)


# --- closed forms -----------------------------------------------------------------


def test_contraction_residual(rng):
    r = rng.uniform(size=5)
    z, n = an.contraction_residual(r, r / 0.3, 0.3)
    assert n < 1e-14
    z, n = an.contraction_residual(r, r / 0.3 + 7.5, 0.3)
    assert n < 1e-13
    theta = 4 * rng.standard_normal(5)
    _, n = an.contraction_residual(r, theta, 0.3)
    assert n <= an.zeta_initial_bound(theta, 0.3)


def test_threshold_ratio():
    assert an.threshold_ratio([1.0, 0.9, 0.1]) == pytest.approx(4.0)
    with pytest.raises(InvalidInputError):
        an.threshold_ratio([1.0, 0.1, 0.9])


def test_threshold_region_check():
    theta = logits_from_policy([0.01, 0.05, 0.94])
    rep = an.threshold_region_check([1.0, 0.9, 0.1], theta, 12_000)
    assert rep.applicable and rep.passed


def test_bounds_are_positive_and_decreasing():
    theta = np.array([1.0, -2.0, 0.5])
    c = an.min_prob_floor(theta, 0.2)
    assert 0 < c < 1 / 3
    env = an.entropy_envelope(theta, 0.2, 5.0, np.array([1, 10, 100]), c=0.1)
    assert np.all(np.diff(env) < 0)
    assert env[1] == pytest.approx(env[0] * math.exp(-2 * 0.2 * 5.0 * 0.1 * 9))
    assert env[0] == pytest.approx(2 * (0.2 * 2 + 1) ** 2 * 3 / 0.2)


# --- smoothness and property checks -------------------------------------------


def test_smoothness_witness(rng):
    r = rng.uniform(size=5)
    obj = an.bandit_objective(r)
    theta = rng.standard_normal(5)
    rep = an.smoothness_witness(obj, theta, theta, 2.5)
    assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.passed
    for _ in range(200):
        d = rng.standard_normal(5)
        d *= rng.uniform() / np.linalg.norm(d)
        assert an.smoothness_witness(obj, theta, theta + d, 2.5).passed
    # a tiny beta is refuted for a large enough step
    assert not an.smoothness_witness(an.bandit_objective([1.0, 0.0]), np.zeros(2), np.array([3.0, -3.0]), 1e-3).passed


def test_spectrum_and_decay(rng):
    pi = rng.dirichlet(np.ones(6))
    assert an.spectrum_check(pi).passed
    assert all(rep.passed for rep in an.norm_decay_check(pi, rng.standard_normal(6)))


def test_logit_checks(rng):
    for _ in range(50):
        a, b = 3 * rng.standard_normal(5), 3 * rng.standard_normal(5)
        assert an.kl_logit_check(a, b).passed
        assert an.policy_logit_check(a, b).passed


def test_value_identities(rng):
    mdp = random_mdp(rng, 3, 3, 0.9)
    rho = rng.dirichlet(np.ones(3))
    theta, theta_p = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    pi, pi_p = softmax_policy(theta), softmax_policy(theta_p)
    for form in ("first", "second"):
        rep = an.performance_difference_check(mdp, pi, pi_p, rho, form)
        assert rep.passed and rep.name == f"performance_difference_{form}"
    assert an.value_suboptimality_check(mdp, pi, rho).passed
    assert an.soft_suboptimality_check(mdp, theta, rho, 0.2).passed


# --- rate fits ----------------------------------------------------------------------


def test_rate_fit_power_exact():
    t = np.arange(1, 10_001, dtype=float)
    fit = an.rate_fit((t, 5.0 / t), "power")
    assert fit.slope == pytest.approx(-1.0, abs=1e-6)
    assert fit.r_squared > 1 - 1e-9
    assert fit.window == (1000.0, 10_000.0)


def test_rate_fit_exponential_exact():
    t = np.arange(1, 2001, dtype=float)
    fit = an.rate_fit((t, 3.0 * np.exp(-0.01 * t)), "exponential")
    assert fit.slope == pytest.approx(-0.01, abs=1e-6)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-6)


def test_rate_fit_stops_at_first_nonpositive_value():
    t = np.arange(1, 101, dtype=float)
    y = np.exp(-0.1 * t)
    y[60:] = 0.0
    fit = an.rate_fit((t, y), "exponential")
    assert fit.window[1] == 60.0
    with pytest.raises(InvalidInputError):
        an.rate_fit((t, np.zeros(100)), "power")
    with pytest.raises(InvalidInputError):
        an.rate_fit((t, y), "cubic")


def test_rate_fit_on_plain_trace():
    rng = np.random.default_rng(0)
    r = rng.uniform(size=20)
    theta = rng.standard_normal(20)
    trace = run(RunConfig(TabularMdp.bandit(r), MethodSpec("plain", eta=0.4), init=theta, iterations=30_000))
    fit = an.rate_fit(trace, "power")
    assert -1.2 <= fit.slope <= -0.9


# --- lower bound -------------------------------------------------------------------


def test_lower_bound_on_real_trace():
    rng = np.random.default_rng(5)
    r = rng.uniform(size=5)
    trace = run(RunConfig(TabularMdp.bandit(r), MethodSpec("plain"), iterations=100_000))
    rep = an.lower_bound_check(trace)
    assert rep.applicable and rep.passed


def test_lower_bound_detects_fast_decay():
    t = np.arange(1, 1001, dtype=float)
    rep = an.lower_bound_check((t, 1.0 / t**2), delta_star=0.1)
    assert not rep.passed


def test_lower_bound_requires_records():
    t = np.arange(1, 51, dtype=float)
    with pytest.raises(InvalidInputError):
        an.lower_bound_check((t, 1.0 / t), delta_star=0.1)


def test_lower_bound_vacuous_at_optimum():
    t = np.arange(1, 201, dtype=float)
    rep = an.lower_bound_check((t, np.zeros(200)), delta_star=0.1)
    assert not rep.applicable and rep.passed


def test_trace_envelopes():
    r = np.random.default_rng(2).uniform(size=6)
    plain = run(RunConfig(TabularMdp.bandit(r), MethodSpec("plain"), iterations=5000))
    for rep in (an.pseudo_rate_check(plain), an.uniform_init_check(plain), an.monotone_check(plain),
                an.ascent_check(plain)):
        assert rep.passed, rep
    ent = run(RunConfig(TabularMdp.bandit(r), MethodSpec("entropy", tau=0.2), init="random", iterations=3000))
    for rep in (an.entropy_envelope_check(ent), an.contraction_check(ent), an.min_prob_floor_check(ent)):
        assert rep.passed, rep


# --- fixtures ----------------------------------------------------------------------


def test_nonconcavity_fixture_exact_values():
    rep = an.nonconcavity_fixture()
    assert rep.passed
    assert rep.context["average"] == pytest.approx(float(Fraction(1777, 3000)), abs=1e-12)
    assert rep.context["midpoint"] == pytest.approx(float(Fraction(71, 120)), abs=1e-12)


def test_nonconcavity_control_and_symmetry():
    concave = lambda th: -float(th[0] ** 2)  # noqa: E731
    rep = an.nonconcavity_fixture(concave, np.array([-1.0]), np.array([1.0]))
    assert not rep.passed
    fwd = an.nonconcavity_fixture()
    rev = an.nonconcavity_fixture(theta1=np.log([9.0, 16.0, 25.0]), theta2=np.zeros(3))
    assert rev.passed
    assert rev.margin == pytest.approx(fwd.margin, abs=1e-15)


def test_fixture_reports_all_pass():
    reports = an.fixture_reports()
    assert all(rep.passed for rep in reports)
    assert {"nonconcavity", "gradient_norm_fixture", "threshold_ratio"} <= {rep.name for rep in reports}
