"""Compiled kernels for the exponential-smoothing engine.

The in-sample filter and the Nelder-Mead driver live here because they are
called millions of times when scoring a corpus; everything else stays in
plain numpy. Model forms are encoded as integers:

    error    0 additive, 1 multiplicative
    trend    0 none, 1 additive (damping is a separate flag)
    seasonal 0 none, 1 additive, 2 multiplicative
"""

from __future__ import annotations

import numpy as np
from numba import njit

BIG = 1e100
_EXPLODE = 1e150


@njit(cache=True)
def _expit(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


@njit(cache=True)
def _decode(theta, m, tc, damped, sc, fixed):
    """Map an unconstrained optimizer vector to natural parameters.

    fixed is a length-4 array (alpha, beta, gamma, phi) where NaN marks a
    free parameter. Free smoothing parameters are logit-transformed so the
    admissible region 0<alpha<1, 0<beta<alpha, 0<gamma<1-alpha,
    0.8<=phi<=0.98 holds by construction. The last seasonal state is pinned
    by the normalisation (sum 0 additive, mean 1 multiplicative).
    """
    k = 0
    if np.isnan(fixed[0]):
        alpha = _expit(theta[k])
        k += 1
    else:
        alpha = fixed[0]
    alpha = min(max(alpha, 1e-8), 1.0 - 1e-8)

    beta = 0.0
    if tc == 1:
        if np.isnan(fixed[1]):
            beta = alpha * _expit(theta[k])
            k += 1
        else:
            beta = fixed[1]

    gamma = 0.0
    if sc > 0:
        if np.isnan(fixed[2]):
            gamma = (1.0 - alpha) * _expit(theta[k])
            k += 1
        else:
            gamma = fixed[2]

    phi = 1.0
    if damped:
        if np.isnan(fixed[3]):
            phi = 0.8 + 0.18 * _expit(theta[k])
            k += 1
        else:
            phi = fixed[3]

    l0 = theta[k]
    k += 1
    b0 = 0.0
    if tc == 1:
        b0 = theta[k]
        k += 1

    s0 = np.zeros(m)
    if sc > 0:
        acc = 0.0
        for j in range(m - 1):
            s0[j] = theta[k + j]
            acc += theta[k + j]
        if sc == 1:
            s0[m - 1] = -acc
        else:
            s0[m - 1] = float(m) - acc
    return alpha, beta, gamma, phi, l0, b0, s0


@njit(cache=True)
def _filter(y, m, ec, tc, damped, sc, alpha, beta, gamma, phi, l0, b0, s0,
            shist, store, lev, tre, fitted, resid):
    """Run the innovations recursion over y.

    shist must have length len(y)+m (a scratch slot per seasonal update);
    when store is true the state/fitted/residual trajectories are written
    into the remaining caller-provided arrays. Returns (sse, slogr, ok)
    where slogr accumulates log(mu_t) for multiplicative-error forms.
    """
    n = y.size
    l = l0
    b = b0
    for j in range(m):
        shist[j] = s0[j]
    if store:
        lev[0] = l0
        tre[0] = b0

    sse = 0.0
    slogr = 0.0
    for t in range(n):
        if tc == 1:
            bd = phi * b if damped else b
            r = l + bd
        else:
            bd = 0.0
            r = l

        if sc == 0:
            mu = r
        elif sc == 1:
            mu = r + shist[t]
        else:
            mu = r * shist[t]

        if not np.isfinite(mu) or mu > _EXPLODE or mu < -_EXPLODE:
            return BIG, 0.0, False

        if ec == 1:
            if mu <= 0.0:
                return BIG, 0.0, False
            e = (y[t] - mu) / mu
            slogr += np.log(mu)
        else:
            e = y[t] - mu
        sse += e * e

        if ec == 0:
            # additive error; multiplicative seasonality is never combined
            # with it in this package
            l = r + alpha * e
            if tc == 1:
                b = bd + beta * e
            if sc == 1:
                shist[t + m] = shist[t] + gamma * e
        else:
            if sc == 0:
                l = r * (1.0 + alpha * e)
                if tc == 1:
                    b = bd + beta * r * e
            elif sc == 1:
                l = r + alpha * mu * e
                if tc == 1:
                    b = bd + beta * mu * e
                shist[t + m] = shist[t] + gamma * mu * e
            else:
                l = r * (1.0 + alpha * e)
                if tc == 1:
                    b = bd + beta * r * e
                snew = shist[t] * (1.0 + gamma * e)
                if snew <= 0.0:
                    return BIG, 0.0, False
                shist[t + m] = snew

        if store:
            lev[t + 1] = l
            tre[t + 1] = b
            fitted[t] = mu
            resid[t] = e

    return sse, slogr, True


@njit(cache=True)
def _objective(theta, y, m, ec, tc, damped, sc, fixed, shist, dummy):
    """Concentrated -2 log-likelihood up to an additive constant."""
    alpha, beta, gamma, phi, l0, b0, s0 = _decode(theta, m, tc, damped, sc, fixed)
    if sc == 2:
        for j in range(m):
            if s0[j] <= 1e-8:
                return BIG
    sse, slogr, ok = _filter(y, m, ec, tc, damped, sc, alpha, beta, gamma, phi,
                             l0, b0, s0, shist, False, dummy, dummy, dummy, dummy)
    if not ok:
        return BIG
    n = y.size
    if sse < 1e-300:
        sse = 1e-300
    val = n * np.log(sse / n) + 2.0 * slogr
    if not np.isfinite(val):
        return BIG
    return val


@njit(cache=True)
def _nelder_mead(x0, step, y, m, ec, tc, damped, sc, fixed, maxiter, fatol, xatol):
    """Derivative-free simplex minimisation of the fit objective.

    Deterministic for fixed inputs: stable (mergesort) ordering, fixed
    reflection/expansion/contraction/shrink coefficients 1, 2, 0.5, 0.5.
    """
    n = x0.size
    shist = np.empty(y.size + m)
    dummy = np.empty(1)

    sim = np.empty((n + 1, n))
    fs = np.empty(n + 1)
    sim[0, :] = x0
    fs[0] = _objective(x0, y, m, ec, tc, damped, sc, fixed, shist, dummy)
    for i in range(n):
        sim[i + 1, :] = x0
        sim[i + 1, i] = x0[i] + step[i]
        fs[i + 1] = _objective(sim[i + 1], y, m, ec, tc, damped, sc, fixed, shist, dummy)

    order = np.argsort(fs, kind="mergesort")
    sim = sim[order]
    fs = fs[order]

    it = 0
    while it < maxiter:
        it += 1
        fspread = 0.0
        xspread = 0.0
        for i in range(1, n + 1):
            d = abs(fs[i] - fs[0])
            if d > fspread:
                fspread = d
            for j in range(n):
                d = abs(sim[i, j] - sim[0, j])
                if d > xspread:
                    xspread = d
        if fspread <= fatol and xspread <= xatol:
            break

        xbar = np.zeros(n)
        for i in range(n):
            for j in range(n):
                xbar[j] += sim[i, j]
        for j in range(n):
            xbar[j] /= n

        xr = xbar + (xbar - sim[n])
        fr = _objective(xr, y, m, ec, tc, damped, sc, fixed, shist, dummy)
        shrink = False
        if fr < fs[0]:
            xe = xbar + 2.0 * (xbar - sim[n])
            fe = _objective(xe, y, m, ec, tc, damped, sc, fixed, shist, dummy)
            if fe < fr:
                sim[n] = xe
                fs[n] = fe
            else:
                sim[n] = xr
                fs[n] = fr
        elif fr < fs[n - 1]:
            sim[n] = xr
            fs[n] = fr
        elif fr < fs[n]:
            xc = xbar + 0.5 * (xbar - sim[n])
            fc = _objective(xc, y, m, ec, tc, damped, sc, fixed, shist, dummy)
            if fc <= fr:
                sim[n] = xc
                fs[n] = fc
            else:
                shrink = True
        else:
            xcc = xbar - 0.5 * (xbar - sim[n])
            fcc = _objective(xcc, y, m, ec, tc, damped, sc, fixed, shist, dummy)
            if fcc < fs[n]:
                sim[n] = xcc
                fs[n] = fcc
            else:
                shrink = True

        if shrink:
            for i in range(1, n + 1):
                for j in range(n):
                    sim[i, j] = sim[0, j] + 0.5 * (sim[i, j] - sim[0, j])
                fs[i] = _objective(sim[i], y, m, ec, tc, damped, sc, fixed, shist, dummy)

        order = np.argsort(fs, kind="mergesort")
        sim = sim[order]
        fs = fs[order]

    return sim[0], fs[0]


@njit(cache=True)
def _filter_traces(y, m, ec, tc, damped, sc, alpha, beta, gamma, phi, l0, b0, s0):
    """Filter with full state trajectories, for fit results and diagnostics."""
    n = y.size
    shist = np.empty(n + m)
    lev = np.empty(n + 1)
    tre = np.empty(n + 1)
    fitted = np.empty(n)
    resid = np.empty(n)
    sse, slogr, ok = _filter(y, m, ec, tc, damped, sc, alpha, beta, gamma, phi,
                             l0, b0, s0, shist, True, lev, tre, fitted, resid)
    return sse, slogr, ok, lev, tre, shist, fitted, resid
