# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bandit iteration loop. Same contract as ``_kernels_py.bandit_trajectory``."""

import numpy as np
from libc.math cimport exp, log, sqrt, fabs, isfinite, INFINITY, NAN

cdef enum:
    PLAIN = 0
    TWO_STAGE = 2
    DECAYING = 3


cdef inline double _temperature(int kind, double tau, double alpha_delta, int stage, long t) nogil:
    if kind == PLAIN:
        return 0.0
    if kind == DECAYING:
        return alpha_delta / log(<double>(t if t > 2 else 2))
    if kind == TWO_STAGE and stage == 2:
        return 0.0
    return tau


def bandit_trajectory(
    r_in,
    theta0,
    opt_mask,
    int kind,
    double eta,
    double eta_plain,
    double tau,
    double alpha_delta,
    long t_switch,
    double switch_tol,
    long iterations,
    long dense_until,
    long record_every,
    double[:, ::1] out,
):
    cdef const double[::1] r = np.ascontiguousarray(r_in, dtype=np.float64)
    cdef double[::1] theta = np.array(theta0, dtype=np.float64)
    cdef const unsigned char[::1] mask = np.ascontiguousarray(opt_mask, dtype=np.uint8)
    cdef Py_ssize_t K = r.shape[0]
    cdef double[::1] p = np.empty(K)
    cdef double[::1] logp = np.empty(K)
    cdef double[::1] p_prev = np.empty(K)
    cdef double[::1] g = np.empty(K)
    cdef double[::1] gaps = np.empty(K)
    cdef double[::1] log_ps = np.empty(K)

    cdef Py_ssize_t a, n_rec = 0
    cdef long t, switch_at = -1, fail_t = 0
    cdef int stage = 1, have_prev = 0
    cdef double rmax, m, z, logz, delta, opt, minp, px, gnorm, tau_t, tau_next
    cdef double soft_delta, zeta, zmean, zv, ym, zs, diff, step, scale
    cdef double c_run = INFINITY, min_inf = INFINITY
    cdef double max_drop = -INFINITY, max_excess = -INFINITY
    cdef double prev_tau = -1.0, prev_obj = 0.0, prev_zeta = 0.0, prev_minp = 0.0

    rmax = r[0]
    for a in range(1, K):
        if r[a] > rmax:
            rmax = r[a]
    for a in range(K):
        gaps[a] = rmax - r[a]

    with nogil:
        for t in range(1, iterations + 1):
            m = theta[0]
            for a in range(1, K):
                if theta[a] > m:
                    m = theta[a]
            z = 0.0
            for a in range(K):
                p[a] = exp(theta[a] - m)
                z += p[a]
            logz = m + log(z)
            for a in range(K):
                p[a] = p[a] / z
                logp[a] = theta[a] - logz

            if kind == TWO_STAGE and stage == 1:
                if t_switch > 0:
                    if t > t_switch:
                        stage = 2
                        switch_at = t
                elif have_prev:
                    diff = 0.0
                    for a in range(K):
                        diff += fabs(p[a] - p_prev[a])
                    if diff < switch_tol:
                        stage = 2
                        switch_at = t
            tau_t = _temperature(kind, tau, alpha_delta, stage, t)

            delta = 0.0
            opt = 0.0
            minp = p[0]
            px = 0.0
            for a in range(K):
                delta += p[a] * gaps[a]
                if mask[a]:
                    opt += p[a]
                if p[a] < minp:
                    minp = p[a]
                g[a] = r[a] - tau_t * logp[a]
                px += p[a] * g[a]
            if opt < c_run:
                c_run = opt
            if minp < min_inf:
                min_inf = minp
            gnorm = 0.0
            for a in range(K):
                g[a] = p[a] * (g[a] - px)
                gnorm += g[a] * g[a]
            gnorm = sqrt(gnorm)

            if tau_t > 0.0:
                ym = r[0] / tau_t
                for a in range(1, K):
                    if r[a] / tau_t > ym:
                        ym = r[a] / tau_t
                zs = 0.0
                for a in range(K):
                    zs += exp(r[a] / tau_t - ym)
                zs = ym + log(zs)
                soft_delta = 0.0
                zmean = 0.0
                for a in range(K):
                    soft_delta += p[a] * (logp[a] - (r[a] / tau_t - zs))
                    zmean += tau_t * theta[a] - r[a]
                soft_delta *= tau_t
                zmean /= K
                zeta = 0.0
                for a in range(K):
                    zv = tau_t * theta[a] - r[a] - zmean
                    zeta += zv * zv
                zeta = sqrt(zeta)
            else:
                soft_delta = NAN
                zeta = NAN

            if kind != DECAYING and tau_t == prev_tau:
                if prev_obj - px > max_drop:
                    max_drop = prev_obj - px
                if tau_t > 0.0:
                    zv = zeta - (1.0 - tau_t * eta * prev_minp) * prev_zeta
                    if zv > max_excess:
                        max_excess = zv

            if t <= dense_until or (t - dense_until) % record_every == 0 or t == iterations:
                out[n_rec, 0] = t
                out[n_rec, 1] = delta
                out[n_rec, 2] = soft_delta
                out[n_rec, 3] = opt
                out[n_rec, 4] = minp
                out[n_rec, 5] = zeta
                out[n_rec, 6] = gnorm
                out[n_rec, 7] = tau_t
                out[n_rec, 8] = c_run
                n_rec += 1

            if t == iterations:
                break

            if kind == DECAYING:
                tau_next = _temperature(kind, tau, alpha_delta, stage, t + 1)
                scale = tau_t / tau_next
                for a in range(K):
                    theta[a] = scale * (theta[a] + g[a] / tau_t)
            else:
                step = eta_plain if (kind == TWO_STAGE and stage == 2) else eta
                for a in range(K):
                    theta[a] = theta[a] + step * g[a]
            for a in range(K):
                if not isfinite(theta[a]):
                    fail_t = t + 1
            if fail_t:
                break

            for a in range(K):
                p_prev[a] = p[a]
            have_prev = 1
            prev_tau = tau_t
            prev_obj = px
            prev_zeta = zeta
            prev_minp = minp

    return (n_rec, np.asarray(theta).copy(), c_run, min_inf, max_drop, max_excess,
            switch_at, fail_t)
