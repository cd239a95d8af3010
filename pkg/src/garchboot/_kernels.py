"""Compiled inner loops shared by the simulation, estimation and bootstrap code.

Parameter vectors are laid out as ``theta = (omega, alpha_1..alpha_q,
beta_1..beta_p)``; every kernel takes ``q`` explicitly so that ``p`` is
``len(theta) - 1 - q``.
"""

import math

import numpy as np
from numba import njit

PENALTY = 1.0e6


@njit(cache=True, nogil=True)
def cond_var(x2, theta, q, out):
    """Likelihood-side variance recursion with every presample value set to x2[0]."""
    n = x2.shape[0]
    p = theta.shape[0] - 1 - q
    m = min(max(p, q), n)
    init = x2[0]
    omega = theta[0]
    for t in range(m):
        s = omega
        for i in range(1, q + 1):
            s += theta[i] * (x2[t - i] if t - i >= 0 else init)
        for j in range(1, p + 1):
            s += theta[q + j] * (out[t - j] if t - j >= 0 else init)
        out[t] = s
    if q == 1 and p == 0:
        a = theta[1]
        for t in range(m, n):
            out[t] = omega + a * x2[t - 1]
    elif q == 1 and p == 1:
        a = theta[1]
        b = theta[2]
        for t in range(m, n):
            out[t] = omega + a * x2[t - 1] + b * out[t - 1]
    else:
        for t in range(m, n):
            s = omega
            for i in range(1, q + 1):
                s += theta[i] * x2[t - i]
            for j in range(1, p + 1):
                s += theta[q + j] * out[t - j]
            out[t] = s


@njit(cache=True, nogil=True)
def weighted_objective(x2, w, theta, q, buf):
    """(1/n) * sum_t w_t * (x2_t / s2_t + log s2_t)."""
    n = x2.shape[0]
    cond_var(x2, theta, q, buf)
    acc = 0.0
    for t in range(n):
        s2 = buf[t]
        acc += w[t] * (x2[t] / s2 + math.log(s2))
    return acc / n


@njit(cache=True, nogil=True)
def _penalized(u, scale, x2, w, q, coef_max, buf, theta):
    # u holds omega / scale; coefficients are unscaled
    theta[0] = u[0] * scale
    bsum = 0.0
    for k in range(1, u.shape[0]):
        theta[k] = u[k]
        if k > q:
            bsum += u[k]
    f = weighted_objective(x2, w, theta, q, buf)
    excess = bsum - coef_max
    if excess > 0.0:
        f += PENALTY * excess
    return f


@njit(cache=True, nogil=True)
def _clip(v, lb, ub):
    for k in range(v.shape[0]):
        if v[k] < lb[k]:
            v[k] = lb[k]
        elif v[k] > ub[k]:
            v[k] = ub[k]


@njit(cache=True, nogil=True)
def nelder_mead(x2, w, q, scale, lb, ub, x0, step, coef_max, fatol, xatol, max_iter):
    """Box-projected Nelder-Mead simplex search.

    Works in the normalized coordinates ``(omega / scale, alpha, beta)``.
    Every trial point is clipped to ``[lb, ub]`` before evaluation, and the
    start point is one vertex of the initial simplex, so the returned value
    never exceeds the objective at ``x0``.

    Returns
    -------
    x : ndarray
        Best vertex (normalized coordinates).
    f : float
        Objective at ``x``.
    nit : int
        Iterations used.
    converged : bool
        Whether both the objective spread and the vertex spread fell below
        ``fatol`` and ``xatol``.
    """
    d = x0.shape[0]
    n = x2.shape[0]
    buf = np.empty(n)
    theta = np.empty(d)
    sim = np.empty((d + 1, d))
    fs = np.empty(d + 1)

    sim[0] = x0
    _clip(sim[0], lb, ub)
    for k in range(d):
        v = sim[0].copy()
        v[k] += step[k]
        if v[k] > ub[k]:
            v[k] = sim[0][k] - step[k]
        _clip(v, lb, ub)
        sim[k + 1] = v
    for k in range(d + 1):
        fs[k] = _penalized(sim[k], scale, x2, w, q, coef_max, buf, theta)

    xr = np.empty(d)
    xe = np.empty(d)
    xc = np.empty(d)
    cen = np.empty(d)
    nit = 0
    converged = False
    while nit < max_iter:
        # stable sort keeps lower original index first on ties
        order = np.argsort(fs, kind="mergesort")
        sim = sim[order]
        fs = fs[order]

        fspread = 0.0
        xspread = 0.0
        for k in range(1, d + 1):
            df = abs(fs[k] - fs[0])
            if df > fspread:
                fspread = df
            for m in range(d):
                dx = abs(sim[k, m] - sim[0, m])
                if dx > xspread:
                    xspread = dx
        if fspread <= fatol and xspread <= xatol:
            converged = True
            break
        nit += 1

        for m in range(d):
            acc = 0.0
            for k in range(d):
                acc += sim[k, m]
            cen[m] = acc / d

        for m in range(d):
            xr[m] = 2.0 * cen[m] - sim[d, m]
        _clip(xr, lb, ub)
        fr = _penalized(xr, scale, x2, w, q, coef_max, buf, theta)

        if fr < fs[0]:
            for m in range(d):
                xe[m] = 3.0 * cen[m] - 2.0 * sim[d, m]
            _clip(xe, lb, ub)
            fe = _penalized(xe, scale, x2, w, q, coef_max, buf, theta)
            if fe < fr:
                sim[d] = xe
                fs[d] = fe
            else:
                sim[d] = xr
                fs[d] = fr
            continue
        if fr < fs[d - 1]:
            sim[d] = xr
            fs[d] = fr
            continue

        shrink = False
        if fr < fs[d]:
            for m in range(d):
                xc[m] = 1.5 * cen[m] - 0.5 * sim[d, m]
            _clip(xc, lb, ub)
            fc = _penalized(xc, scale, x2, w, q, coef_max, buf, theta)
            if fc <= fr:
                sim[d] = xc
                fs[d] = fc
            else:
                shrink = True
        else:
            for m in range(d):
                xc[m] = 0.5 * cen[m] + 0.5 * sim[d, m]
            _clip(xc, lb, ub)
            fc = _penalized(xc, scale, x2, w, q, coef_max, buf, theta)
            if fc < fs[d]:
                sim[d] = xc
                fs[d] = fc
            else:
                shrink = True
        if shrink:
            for k in range(1, d + 1):
                for m in range(d):
                    sim[k, m] = sim[0, m] + 0.5 * (sim[k, m] - sim[0, m])
                fs[k] = _penalized(sim[k], scale, x2, w, q, coef_max, buf, theta)

    best = 0
    for k in range(1, d + 1):
        if fs[k] < fs[best]:
            best = k
    return sim[best].copy(), fs[best], nit, converged


@njit(cache=True, nogil=True)
def simulate_recursion(eta, theta, q, h0, x, h):
    """Data-generating recursion; presample squares and variances equal h0."""
    n = eta.shape[0]
    p = theta.shape[0] - 1 - q
    for t in range(n):
        s = theta[0]
        for i in range(1, q + 1):
            if t - i >= 0:
                s += theta[i] * x[t - i] * x[t - i]
            else:
                s += theta[i] * h0
        for j in range(1, p + 1):
            if t - j >= 0:
                s += theta[q + j] * h[t - j]
            else:
                s += theta[q + j] * h0
        h[t] = s
        x[t] = math.sqrt(s) * eta[t]


@njit(cache=True, nogil=True)
def bootstrap_recursion(eta, theta, q, init, x):
    """Residual-bootstrap path; presample squares and variances equal ``init``."""
    h = np.empty(eta.shape[0])
    simulate_recursion(eta, theta, q, init, x, h)


@njit(cache=True, nogil=True)
def outer_gradient_mean(x, h, theta, q, discard):
    """Average of g g^T / h^2 where g is the variance gradient w.r.t. theta.

    The gradient follows from differentiating the variance recursion; its
    state starts at zero and the first ``discard`` steps are skipped.
    """
    n = x.shape[0]
    d = theta.shape[0]
    p = d - 1 - q
    grads = np.zeros((p + 1, d))  # ring of current + p lagged gradients
    J = np.zeros((d, d))
    g = np.empty(d)
    count = 0
    for t in range(n):
        g[0] = 1.0
        for i in range(1, q + 1):
            g[i] = x[t - i] * x[t - i] if t - i >= 0 else 0.0
        for j in range(1, p + 1):
            g[q + j] = h[t - j] if t - j >= 0 else 0.0
        for j in range(1, p + 1):
            lag = grads[(t - j) % (p + 1)]
            b = theta[q + j]
            for k in range(d):
                g[k] += b * lag[k]
        slot = grads[t % (p + 1)]
        for k in range(d):
            slot[k] = g[k]
        if t >= discard:
            inv = 1.0 / (h[t] * h[t])
            for a in range(d):
                for b in range(d):
                    J[a, b] += g[a] * g[b] * inv
            count += 1
    return J / count


@njit(cache=True, nogil=True)
def lyapunov_product(eta2, theta, q, renorm_every):
    """(1/t) log ||A_t ... A_1||_F with renormalization every few steps."""
    d = theta.shape[0] - 1
    p = d - q
    P = np.eye(d)
    A = np.zeros((d, d))
    # fixed structure: shifted identities below the two parameter rows
    for i in range(1, q):
        A[i, i - 1] = 1.0
    for j in range(1, p):
        A[q + j, q + j - 1] = 1.0
    if p > 0:
        for k in range(d):
            A[q, k] = theta[1 + k]
    logsum = 0.0
    T = eta2.shape[0]
    for t in range(T):
        for k in range(d):
            A[0, k] = theta[1 + k] * eta2[t]
        P = A @ P
        if (t + 1) % renorm_every == 0 or t == T - 1:
            nrm = 0.0
            for a in range(d):
                for b in range(d):
                    nrm += P[a, b] * P[a, b]
            nrm = math.sqrt(nrm)
            if nrm == 0.0:
                return -np.inf
            logsum += math.log(nrm)
            P = P / nrm
    return logsum / T
