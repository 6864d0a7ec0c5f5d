"""Pure-Python bandit iteration loop; the reference the compiled kernel must match."""

import math

import numpy as np

PLAIN, ENTROPY, TWO_STAGE, DECAYING = 0, 1, 2, 3
NCOLS = 9


def _temperature(kind, tau, alpha_delta, stage, t):
    if kind == PLAIN:
        return 0.0
    if kind == DECAYING:
        return alpha_delta / math.log(max(t, 2))
    if kind == TWO_STAGE and stage == 2:
        return 0.0
    return tau


def bandit_trajectory(
    r,
    theta0,
    opt_mask,
    kind,
    eta,
    eta_plain,
    tau,
    alpha_delta,
    t_switch,
    switch_tol,
    iterations,
    dense_until,
    record_every,
    out,
):
    r = np.ascontiguousarray(r, dtype=float)
    theta = np.array(theta0, dtype=float)
    mask = np.asarray(opt_mask, dtype=bool)
    gaps = r.max() - r

    n_rec = 0
    c_run = math.inf
    min_inf = math.inf
    max_drop = -math.inf
    max_excess = -math.inf
    switch_at = -1
    fail_t = 0
    stage = 1
    p_prev = None
    prev_tau = -1.0
    prev_obj = 0.0
    prev_zeta = 0.0
    prev_minp = 0.0

    for t in range(1, iterations + 1):
        m = theta.max()
        e = np.exp(theta - m)
        z = e.sum()
        p = e / z
        logp = theta - (m + math.log(z))

        if kind == TWO_STAGE and stage == 1:
            if t_switch > 0:
                if t > t_switch:
                    stage, switch_at = 2, t
            elif p_prev is not None and np.abs(p - p_prev).sum() < switch_tol:
                stage, switch_at = 2, t
        tau_t = _temperature(kind, tau, alpha_delta, stage, t)

        delta = float(p @ gaps)
        opt = float(p[mask].sum())
        minp = float(p.min())
        c_run = min(c_run, opt)
        min_inf = min(min_inf, minp)

        x = r - tau_t * logp
        px = float(p @ x)
        g = p * (x - px)
        gnorm = math.sqrt(float(g @ g))

        if tau_t > 0.0:
            ys = r / tau_t
            ym = ys.max()
            log_ps = ys - (ym + math.log(np.exp(ys - ym).sum()))
            soft_delta = tau_t * float(p @ (logp - log_ps))
            zv = tau_t * theta - r
            zv = zv - zv.mean()
            zeta = math.sqrt(float(zv @ zv))
        else:
            soft_delta = math.nan
            zeta = math.nan

        if kind != DECAYING and tau_t == prev_tau:
            max_drop = max(max_drop, prev_obj - px)
            if tau_t > 0.0:
                max_excess = max(max_excess, zeta - (1.0 - tau_t * eta * prev_minp) * prev_zeta)

        if t <= dense_until or (t - dense_until) % record_every == 0 or t == iterations:
            out[n_rec, :] = (t, delta, soft_delta, opt, minp, zeta, gnorm, tau_t, c_run)
            n_rec += 1

        if t == iterations:
            break

        if kind == DECAYING:
            tau_next = _temperature(kind, tau, alpha_delta, stage, t + 1)
            theta = (tau_t / tau_next) * (theta + g / tau_t)
        else:
            step = eta_plain if (kind == TWO_STAGE and stage == 2) else eta
            theta = theta + step * g
        if not np.all(np.isfinite(theta)):
            fail_t = t + 1
            break

        p_prev = p
        prev_tau = tau_t
        prev_obj = px
        prev_zeta = zeta
        prev_minp = minp

    return n_rec, theta, c_run, min_inf, max_drop, max_excess, switch_at, fail_t
