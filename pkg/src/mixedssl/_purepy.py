"""Pure-Python reference kernels.

These mirror the compiled extension in `_core.pyx` operation for operation;
the slice-sampler math uses scalar libm calls so both backends agree bit for
bit on the same inputs. Selected at import time by `_backend` when the
extension is unavailable (or forced via MIXEDSSL_BACKEND=python).
"""

from __future__ import annotations

import math

import numpy as np

TWO_PI = 2.0 * math.pi
_ARC_EPS = 1e-12


def constraint_arcs(center: float, amp_cos: float, amp_sin: float, sign: float):
    """Angle set where sign*(amp_cos*cos(t) + amp_sin*sin(t) + center) >= 0.

    Returned as a sorted list of non-wrapping closed arcs within [0, 2*pi];
    the full circle is [(0, 2*pi)] and an infeasible constraint gives [].
    """
    a = amp_cos * sign
    b = amp_sin * sign
    c = center * sign
    r = math.hypot(a, b)
    if r < 1e-300:
        return [(0.0, TWO_PI)] if c >= 0.0 else []
    u0 = -c / r
    if u0 <= -1.0:
        return [(0.0, TWO_PI)]
    if u0 >= 1.0:
        return []
    alpha = math.acos(u0)
    phi = math.atan2(b, a)
    lo = math.fmod(phi - alpha, TWO_PI)
    if lo < 0.0:
        lo += TWO_PI
    hi = lo + 2.0 * alpha
    if hi <= TWO_PI:
        return [(lo, hi)]
    return [(0.0, hi - TWO_PI), (lo, TWO_PI)]


def arcs_intersect(first, second):
    """Intersection of two sorted lists of disjoint arcs."""
    out = []
    i = j = 0
    while i < len(first) and j < len(second):
        lo = max(first[i][0], second[j][0])
        hi = min(first[i][1], second[j][1])
        if hi - lo > _ARC_EPS:
            out.append((lo, hi))
        if first[i][1] < second[j][1]:
            i += 1
        else:
            j += 1
    return out


def liness_chain(z, mean, cov_chol, signs, eps, u, burn_in, n_keep, thin, out):
    """Advance one orthant-constrained elliptical slice sampling chain.

    z : (qb,) start, strictly inside the orthant; overwritten with the final state
    mean, cov_chol : conditional Gaussian (lower Cholesky factor of covariance)
    signs : (qb,) orthant signs in {+1, -1}; 0 marks an unconstrained coordinate
    eps : (T, qb) standard normals, u : (T,) uniforms, T = burn_in + n_keep*thin
    out : (n_keep, qb) buffer for the kept states
    Returns the number of fallback events (numerically empty feasible set).
    """
    qb = len(z)
    total_steps = burn_in + n_keep * thin
    fallbacks = 0
    kept = 0
    znew = [0.0] * qb
    nu = [0.0] * qb
    for t in range(total_steps):
        for k in range(qb):
            acc = 0.0
            for m in range(k + 1):
                acc += cov_chol[k, m] * eps[t, m]
            nu[k] = acc
        arcs = [(0.0, TWO_PI)]
        for k in range(qb):
            s = signs[k]
            if s == 0.0:
                continue
            arcs = arcs_intersect(arcs, constraint_arcs(mean[k], z[k] - mean[k], nu[k], s))
            if not arcs:
                break
        measure = sum(hi - lo for lo, hi in arcs)
        if measure <= _ARC_EPS:
            fallbacks += 1
        else:
            x = u[t] * measure
            theta = arcs[-1][1]
            for lo, hi in arcs:
                width = hi - lo
                if x <= width:
                    theta = lo + x
                    break
                x -= width
            ct = math.cos(theta)
            st = math.sin(theta)
            ok = True
            for k in range(qb):
                val = mean[k] + (z[k] - mean[k]) * ct + nu[k] * st
                znew[k] = val
                if signs[k] != 0.0 and signs[k] * val < 0.0:
                    ok = False
            if ok:
                for k in range(qb):
                    z[k] = znew[k]
            else:
                fallbacks += 1
        if t >= burn_in and (t - burn_in) % thin == thin - 1:
            for k in range(qb):
                out[kept, k] = z[k]
            kept += 1
    return fallbacks


def cd_sweeps(B, U, G, omega, lam_star, delta, n, H, tol, max_sweeps):
    """Cyclic coordinate ascent sweeps over the coefficient matrix.

    B : (p, q) updated in place
    U : (p, q) running X^T(Zbar - XB), kept consistent with B in place
    G : (p, p) Gram matrix X^T X
    omega : (q, q) latent precision fixed during the step
    lam_star : (p, q) effective l1 penalties
    delta : (q,) hard-threshold gates (per outcome; they depend only on omega_kk)
    Sweeps run column-major (all j for k=0, then k=1, ...) until the largest
    coefficient change in a sweep drops below tol or max_sweeps is exhausted.
    Returns (sweeps_used, last_max_change).
    """
    p, q = B.shape
    nH = float(n * H)
    sweeps = 0
    max_change = np.inf
    for _ in range(max_sweeps):
        sweeps += 1
        max_change = 0.0
        for k in range(q):
            omcol = omega[:, k]
            d = nH * omega[k, k]
            for j in range(p):
                score = H * (float(U[j] @ omcol) + n * B[j, k] * omega[k, k])
                shrunk = abs(score) - lam_star[j, k]
                if shrunk > 0.0 and abs(score) / d > delta[k]:
                    new = math.copysign(shrunk, score) / d
                else:
                    new = 0.0
                old = B[j, k]
                if new != old:
                    change = new - old
                    B[j, k] = new
                    U[:, k] -= G[:, j] * change
                    if abs(change) > max_change:
                        max_change = abs(change)
        if max_change < tol:
            break
    return sweeps, max_change
