"""Gradient ascent on softmax logits with full per-iteration tracing.

Four methods are supported:

``plain``
    ``theta <- theta + eta * dV/dtheta``.
``entropy``
    The same ascent on the entropy-regularized value at fixed temperature.
``two_stage``
    Entropy-regularized updates until a switch iteration (explicit, or
    detected when the L1 policy change drops below ``switch_tol``), then plain
    updates.
``decaying``
    Bandits only. Temperature ``alpha * Delta / log t`` and the rescaled update
    ``theta <- (tau_t / tau_{t+1}) * (theta + H(pi)(r - tau_t log pi) / tau_t)``.

Bandit runs go through the compiled loop in :mod:`pgrates.kernels`; MDP runs
use dense linear solves every step.
"""

from __future__ import annotations

import io
import json
import math
import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import kernels
from .errors import ConfigError, InvalidInputError, NumericalError
from .mdp_core import (
    TabularMdp,
    check_distribution,
    discounted_state_distribution,
    log_softmax,
    policy_values,
    soft_policy_values,
    softmax_policy,
    solve_optimal,
    solve_soft_optimal,
    soft_value_gap,
    uniform_distribution,
    value_gap,
)

KINDS = ("plain", "entropy", "two_stage", "decaying")
COLUMNS = ("t", "delta", "soft_delta", "opt_prob", "min_prob", "zeta_norm", "grad_norm", "tau_t")
DENSE_UNTIL = 10_000
_KIND_CODE = {
    "plain": kernels.PLAIN,
    "entropy": kernels.ENTROPY,
    "two_stage": kernels.TWO_STAGE,
    "decaying": kernels.DECAYING,
}


@dataclass(frozen=True)
class MethodSpec:
    kind: str = "plain"
    eta: float | str = "auto"
    tau: float | None = None
    alpha: float | None = None
    t1: int | str = "adaptive"
    switch_tol: float = 1e-6

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown method kind {self.kind!r}", field="method.kind")
        if self.eta != "auto":
            try:
                eta = float(self.eta)
            except (TypeError, ValueError):
                raise ConfigError("eta must be a positive number or 'auto'", field="method.eta")
            if not (eta > 0 and math.isfinite(eta)):
                raise ConfigError("eta must be a positive number or 'auto'", field="method.eta")
            object.__setattr__(self, "eta", eta)
        if self.kind in ("entropy", "two_stage"):
            if self.tau is None or not float(self.tau) > 0:
                raise ConfigError(f"{self.kind} requires tau > 0", field="method.tau")
            object.__setattr__(self, "tau", float(self.tau))
            if self.eta != "auto" and self.tau * self.eta > 1.0 + 1e-12:
                raise ConfigError("entropy updates require tau * eta <= 1", field="method.eta")
        if self.kind == "decaying":
            if self.alpha is None or not float(self.alpha) > 0:
                raise ConfigError("decaying requires alpha > 0", field="method.alpha")
            object.__setattr__(self, "alpha", float(self.alpha))
            if self.eta != "auto":
                raise ConfigError(
                    "decaying fixes eta_t = 1 / tau_t; leave eta as 'auto'", field="method.eta"
                )
        if self.t1 != "adaptive":
            if isinstance(self.t1, bool) or not isinstance(self.t1, (int, np.integer)) or self.t1 < 0:
                raise ConfigError("t1 must be a non-negative integer or 'adaptive'", field="method.t1")
        if not self.switch_tol > 0:
            raise ConfigError("switch_tol must be positive", field="method.switch_tol")

    @classmethod
    def from_dict(cls, data):
        if isinstance(data, str):
            return cls(kind=data)
        if not isinstance(data, dict):
            raise ConfigError("method must be a string or an object", field="method")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown method field(s) {sorted(unknown)}", field="method")
        return cls(**data)

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def temperature_at(method, delta_star, t):
    """Temperature in force at iteration ``t`` (the decaying schedule uses ``log 2`` at t = 1)."""
    if t < 1:
        raise InvalidInputError("iterations are numbered from 1", field="t")
    if method.kind == "plain":
        return 0.0
    if method.kind in ("entropy", "two_stage"):
        return method.tau
    if not (delta_star > 0 and math.isfinite(delta_star)):
        raise ConfigError(
            "decaying temperature needs a strictly positive reward gap", field="method.alpha"
        )
    return method.alpha * delta_star / math.log(max(t, 2))


def default_eta(problem, method, stage="entropy"):
    """Step size used when ``eta='auto'`` (``stage`` picks the phase of a two-stage run)."""
    kind = method.kind
    if kind == "two_stage":
        kind = "entropy" if stage == "entropy" else "plain"
    gamma = problem.gamma
    A = problem.num_actions
    if kind == "plain":
        return 0.4 if problem.is_bandit else (1.0 - gamma) ** 3 / 8.0
    if kind == "entropy":
        if problem.is_bandit:
            return 1.0 / method.tau
        return (1.0 - gamma) ** 3 / (8.0 + method.tau * (4.0 + 8.0 * math.log(A)))
    return math.nan


def logits_from_policy(pi):
    """Logits whose softmax is ``pi`` (rows must be strictly positive)."""
    p = np.asarray(pi, dtype=float)
    if not np.all(p > 0):
        raise InvalidInputError("initial policy must be strictly positive", field="init")
    return np.log(p / p.sum(axis=-1, keepdims=True))


@dataclass(frozen=True, eq=False)
class RunConfig:
    """One optimization run.

    ``init`` is ``"uniform"``, ``"random"`` (standard normal logits drawn from
    ``seed``) or an explicit ``S x A`` logit table (a length-K vector is
    accepted for bandits). ``rho`` defaults to ``mu``, which defaults to
    uniform. Records are kept for every ``t <= dense_until`` and every
    ``record_every``-th iteration after that, plus the last one.
    """

    problem: TabularMdp
    method: MethodSpec = field(default_factory=MethodSpec)
    mu: np.ndarray | None = None
    rho: np.ndarray | None = None
    init: object = "uniform"
    seed: int = 0
    iterations: int = 1000
    record_every: int = 1
    dense_until: int = DENSE_UNTIL

    def __post_init__(self):
        S, A = self.problem.num_states, self.problem.num_actions
        if int(self.iterations) < 1:
            raise ConfigError("iterations must be >= 1", field="iterations")
        if int(self.record_every) < 1:
            raise ConfigError("record_every must be >= 1", field="record_every")
        if int(self.dense_until) < 0:
            raise ConfigError("dense_until must be >= 0", field="dense_until")
        object.__setattr__(self, "iterations", int(self.iterations))
        object.__setattr__(self, "record_every", int(self.record_every))
        object.__setattr__(self, "dense_until", int(self.dense_until))
        try:
            mu = uniform_distribution(S) if self.mu is None else check_distribution(self.mu, S, "mu")
            rho = mu if self.rho is None else check_distribution(self.rho, S, "rho")
        except InvalidInputError as exc:
            raise ConfigError(str(exc), field=exc.field) from exc
        if not self.problem.is_bandit and mu.min() <= 0.0:
            raise ConfigError("gradient distribution mu must be strictly positive", field="mu")
        if self.method.kind == "decaying" and not self.problem.is_bandit:
            raise ConfigError("the decaying schedule is defined for bandits only", field="method.kind")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "rho", rho)
        if isinstance(self.init, str):
            if self.init not in ("uniform", "random"):
                raise ConfigError(f"unknown init {self.init!r}", field="init")
        else:
            theta = np.array(self.init, dtype=float)
            if theta.ndim == 1 and S == 1:
                theta = theta[None, :]
            if theta.shape != (S, A) or not np.all(np.isfinite(theta)):
                raise ConfigError(f"init logits must be a finite {S} x {A} table", field="init")
            theta.setflags(write=False)
            object.__setattr__(self, "init", theta)

    def initial_logits(self):
        S, A = self.problem.num_states, self.problem.num_actions
        if isinstance(self.init, str):
            if self.init == "uniform":
                return np.zeros((S, A))
            return np.random.default_rng(self.seed).standard_normal((S, A))
        return np.array(self.init, dtype=float)

    @classmethod
    def from_dict(cls, data):
        """Parse the JSON run description.

        The problem is either nested under ``"problem"`` or given inline
        (``rewards`` / ``transitions`` / ``gamma``, including the bandit
        shorthand). ``init`` may be a string or ``{"logits": ...}`` /
        ``{"policy": ...}``.
        """
        if not isinstance(data, dict):
            raise ConfigError("run config must be a JSON object")
        problem_keys = {"rewards", "transitions", "gamma", "num_states", "num_actions"}
        if "problem" in data:
            problem = TabularMdp.from_dict(data["problem"])
        else:
            problem = TabularMdp.from_dict({k: v for k, v in data.items() if k in problem_keys})
        allowed = problem_keys | {
            "problem", "method", "mu", "rho", "init", "seed", "iterations", "record_every",
            "dense_until", "name",
        }
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown field(s) {sorted(unknown)}", field=sorted(unknown)[0])
        init = data.get("init", "uniform")
        if isinstance(init, dict):
            if "logits" in init:
                init = init["logits"]
            elif "policy" in init:
                try:
                    init = logits_from_policy(init["policy"])
                except InvalidInputError as exc:
                    raise ConfigError(str(exc), field="init") from exc
            else:
                raise ConfigError("init object needs 'logits' or 'policy'", field="init")
        kwargs = {
            "problem": problem,
            "method": MethodSpec.from_dict(data.get("method", "plain")),
            "mu": data.get("mu"),
            "rho": data.get("rho"),
            "init": init,
        }
        for key in ("seed", "iterations", "record_every", "dense_until"):
            if key in data:
                value = data[key]
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"{key} must be an integer", field=key)
                kwargs[key] = value
        return cls(**kwargs)

    def to_dict(self):
        init = self.init if isinstance(self.init, str) else {"logits": np.asarray(self.init).tolist()}
        return {
            "problem": self.problem.to_dict(),
            "method": self.method.to_dict(),
            "mu": self.mu.tolist(),
            "rho": self.rho.tolist(),
            "init": init,
            "seed": self.seed,
            "iterations": self.iterations,
            "record_every": self.record_every,
            "dense_until": self.dense_until,
        }


@dataclass(frozen=True)
class IterationRecord:
    t: int
    delta: float
    soft_delta: float
    opt_prob: float
    min_prob: float
    zeta_norm: float
    grad_norm: float
    tau_t: float


@dataclass(eq=False)
class RunTrace:
    """Recorded statistics of one run.

    ``table`` holds one row per recorded iteration with the columns of
    :data:`COLUMNS` followed by the running minimum of ``opt_prob``; NaN marks
    a statistic that does not apply. Step-wise diagnostics cover every
    iteration, recorded or not:

    * ``max_ascent_drop``: largest decrease of the optimized objective between
      consecutive iterations at equal temperature (``-inf`` if never compared);
    * ``max_contraction_excess``: largest ``|zeta_{t+1}| - (1 - tau eta min pi_t)|zeta_t|``
      (bandit entropy phases only);
    * ``min_prob_inf``: smallest action probability seen.
    """

    config: RunConfig
    table: np.ndarray
    final_logits: np.ndarray
    wall_time: float
    backend: str
    delta_star: float
    min_prob_inf: float
    max_ascent_drop: float
    max_contraction_excess: float
    switch_t: int = -1
    eta: float = math.nan

    def column(self, name):
        if name == "c_running":
            return self.table[:, 8]
        return self.table[:, COLUMNS.index(name)]

    @property
    def t(self):
        return self.table[:, 0].astype(np.int64)

    @property
    def delta(self):
        return self.column("delta")

    @property
    def soft_delta(self):
        return self.column("soft_delta")

    @property
    def opt_prob(self):
        return self.column("opt_prob")

    @property
    def min_prob(self):
        return self.column("min_prob")

    @property
    def zeta_norm(self):
        return self.column("zeta_norm")

    @property
    def grad_norm(self):
        return self.column("grad_norm")

    @property
    def tau_t(self):
        return self.column("tau_t")

    @property
    def c_running(self):
        return self.column("c_running")

    @property
    def records(self):
        return [
            IterationRecord(int(row[0]), *(float(x) for x in row[1:8])) for row in self.table
        ]

    def first_t(self, column, predicate):
        """Smallest recorded ``t`` whose value satisfies ``predicate``, or None."""
        hits = np.nonzero(predicate(self.column(column)))[0]
        return int(self.table[hits[0], 0]) if hits.size else None

    def to_csv(self, target=None):
        """Write the trace as CSV; returns the text when ``target`` is None."""
        buf = io.StringIO()
        buf.write(",".join(COLUMNS) + "\n")
        for row in self.table:
            cells = [str(int(row[0]))]
            cells.extend("" if math.isnan(x) else repr(float(x)) for x in row[1:8])
            buf.write(",".join(cells) + "\n")
        text = buf.getvalue()
        if target is None:
            return text
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", newline="") as fh:
                fh.write(text)
        return None

    def summary(self):
        last = self.table[-1]

        def num(x):
            x = float(x)
            return None if math.isnan(x) or math.isinf(x) else x

        return {
            "iterations": self.config.iterations,
            "records": int(self.table.shape[0]),
            "final_delta": num(last[1]),
            "final_soft_delta": num(last[2]),
            "c_running": num(last[8]),
            "min_prob_inf": num(self.min_prob_inf),
            "max_ascent_drop": num(self.max_ascent_drop),
            "max_contraction_excess": num(self.max_contraction_excess),
            "switch_t": self.switch_t,
            "delta_star": num(self.delta_star),
            "eta": num(self.eta),
            "backend": self.backend,
        }

    def to_json(self):
        doc = {"config": self.config.to_dict(), "summary": self.summary()}
        doc["records"] = {
            name: [None if math.isnan(x) else float(x) for x in self.column(name)]
            for name in COLUMNS
        }
        doc["records"]["t"] = self.t.tolist()
        return json.dumps(doc, sort_keys=True)


def run(config, backend=None):
    """Execute ``config``; raises :class:`NumericalError` carrying ``t`` on a non-finite iterate."""
    start = time.perf_counter()
    if config.problem.is_bandit:
        trace = _run_bandit(config, backend)
    else:
        trace = _run_mdp(config)
    trace.wall_time = time.perf_counter() - start
    return trace


def _resolve_etas(config):
    method = config.method
    if method.kind == "decaying":
        return math.nan, math.nan
    if method.eta != "auto":
        return method.eta, method.eta
    return default_eta(config.problem, method, "entropy"), default_eta(config.problem, method, "plain")


def _run_bandit(config, backend):
    method = config.method
    problem = config.problem
    r = problem.rewards[0]
    sol = solve_optimal(problem)
    delta_star = sol.delta_star
    alpha_delta = 0.0
    if method.kind == "decaying":
        temperature_at(method, delta_star, 1)
        alpha_delta = method.alpha * delta_star
    eta, eta_plain = _resolve_etas(config)
    if method.kind == "plain":
        eta = eta_plain
    t1 = -1 if method.t1 == "adaptive" else int(method.t1)
    n = kernels.record_count(config.iterations, config.dense_until, config.record_every)
    out = np.full((n, kernels.NCOLS), np.nan)
    impl = kernels.get_backend(backend)
    n_rec, theta, _c, min_inf, drop, excess, switch_t, fail_t = impl(
        r,
        config.initial_logits()[0],
        sol.optimal_actions[0].astype(np.uint8),
        _KIND_CODE[method.kind],
        float(eta),
        float(eta_plain),
        float(method.tau or 0.0),
        float(alpha_delta),
        int(t1),
        float(method.switch_tol),
        config.iterations,
        config.dense_until,
        config.record_every,
        out,
    )
    if fail_t:
        raise NumericalError(f"non-finite logits at iteration {fail_t}", t=int(fail_t))
    return RunTrace(
        config=config,
        table=out[:n_rec],
        final_logits=np.asarray(theta)[None, :],
        wall_time=0.0,
        backend=backend or kernels.BACKEND,
        delta_star=delta_star,
        min_prob_inf=min_inf,
        max_ascent_drop=drop,
        max_contraction_excess=excess,
        switch_t=int(switch_t),
        eta=float(eta),
    )


def _run_mdp(config):
    mdp = config.problem
    method = config.method
    mu, rho = config.mu, config.rho
    gamma = mdp.gamma
    sol = solve_optimal(mdp)
    rho_is_mu = np.array_equal(rho, mu)
    opt_sets = sol.optimal_actions
    log_pi_soft = None
    if method.kind in ("entropy", "two_stage"):
        pi_soft, _ = solve_soft_optimal(mdp, method.tau)
        log_pi_soft = np.log(pi_soft)
    eta, eta_plain = _resolve_etas(config)
    if method.kind == "plain":
        eta = eta_plain
    T = config.iterations
    n = kernels.record_count(T, config.dense_until, config.record_every)
    out = np.full((n, kernels.NCOLS), np.nan)

    theta = config.initial_logits()
    stage = 1
    switch_t = -1
    n_rec = 0
    c_run = math.inf
    min_inf = math.inf
    max_drop = -math.inf
    prev_tau, prev_obj, pi_prev = -1.0, 0.0, None
    for t in range(1, T + 1):
        pi = softmax_policy(theta)
        lp = log_softmax(theta)
        if method.kind == "two_stage" and stage == 1:
            if method.t1 != "adaptive":
                if t > method.t1:
                    stage, switch_t = 2, t
            elif pi_prev is not None and np.abs(pi - pi_prev).sum() < method.switch_tol:
                stage, switch_t = 2, t
        tau_t = 0.0 if method.kind == "plain" or stage == 2 else method.tau

        vb = policy_values(mdp, pi, mu)
        d_rho = vb.d if rho_is_mu else discounted_state_distribution(mdp, pi, rho)
        delta = value_gap(mdp, pi, rho, sol, d_rho=d_rho)
        opt = float(np.min(np.sum(np.where(opt_sets, pi, 0.0), axis=1)))
        minp = float(pi.min())
        c_run = min(c_run, opt)
        min_inf = min(min_inf, minp)
        if tau_t > 0.0:
            sb = soft_policy_values(mdp, pi, mu, tau_t, log_pi=lp)
            g = vb.d[:, None] * pi * sb.adv_soft / (1.0 - gamma)
            obj = float(mu @ sb.v_soft)
            soft_delta = soft_value_gap(mdp, pi, rho, tau_t, lp, log_pi_soft, d_rho=d_rho)
        else:
            g = vb.d[:, None] * pi * vb.adv / (1.0 - gamma)
            obj = float(mu @ vb.v)
            soft_delta = math.nan
        gnorm = float(np.sqrt(np.sum(g * g)))
        if tau_t == prev_tau:
            max_drop = max(max_drop, prev_obj - obj)

        if t <= config.dense_until or (t - config.dense_until) % config.record_every == 0 or t == T:
            out[n_rec] = (t, delta, soft_delta, opt, minp, math.nan, gnorm, tau_t, c_run)
            n_rec += 1
        if t == T:
            break
        step = eta_plain if stage == 2 else eta
        theta = theta + step * g
        if not np.all(np.isfinite(theta)):
            raise NumericalError(f"non-finite logits at iteration {t + 1}", t=t + 1)
        pi_prev, prev_tau, prev_obj = pi, tau_t, obj

    return RunTrace(
        config=config,
        table=out[:n_rec],
        final_logits=theta,
        wall_time=0.0,
        backend="numpy",
        delta_star=sol.delta_star,
        min_prob_inf=min_inf,
        max_ascent_drop=max_drop,
        max_contraction_excess=-math.inf,
        switch_t=switch_t,
        eta=float(eta),
    )
