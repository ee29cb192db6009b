# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: coordinate-descent sweeps and the constrained
elliptical slice sampling chain. Semantics match `_purepy` exactly."""

from libc.math cimport acos, atan2, cos, sin, sqrt, hypot, fmod, fabs, copysign, pi
from libc.stdlib cimport malloc, free

import numpy as np

cdef double TWO_PI = 2.0 * pi
cdef double ARC_EPS = 1e-12


cdef int _constraint_arcs(double center, double amp_cos, double amp_sin,
                          double sign, double* lo, double* hi) noexcept nogil:
    """Write the feasible arcs of one sign constraint into lo/hi.

    Returns the number of arcs (0, 1, or 2); the full circle is one arc
    [0, 2*pi]. Arcs are sorted and non-wrapping.
    """
    cdef double a = amp_cos * sign
    cdef double b = amp_sin * sign
    cdef double c = center * sign
    cdef double r = hypot(a, b)
    cdef double u0, alpha, phi, arc_lo, arc_hi
    if r < 1e-300:
        if c >= 0.0:
            lo[0] = 0.0
            hi[0] = TWO_PI
            return 1
        return 0
    u0 = -c / r
    if u0 <= -1.0:
        lo[0] = 0.0
        hi[0] = TWO_PI
        return 1
    if u0 >= 1.0:
        return 0
    alpha = acos(u0)
    phi = atan2(b, a)
    arc_lo = fmod(phi - alpha, TWO_PI)
    if arc_lo < 0.0:
        arc_lo += TWO_PI
    arc_hi = arc_lo + 2.0 * alpha
    if arc_hi <= TWO_PI:
        lo[0] = arc_lo
        hi[0] = arc_hi
        return 1
    lo[0] = 0.0
    hi[0] = arc_hi - TWO_PI
    lo[1] = arc_lo
    hi[1] = TWO_PI
    return 2


cdef int _arcs_intersect(double* alo, double* ahi, int na,
                         double* blo, double* bhi, int nb,
                         double* olo, double* ohi) noexcept nogil:
    cdef int i = 0, j = 0, n = 0
    cdef double lo, hi
    while i < na and j < nb:
        lo = alo[i] if alo[i] > blo[j] else blo[j]
        hi = ahi[i] if ahi[i] < bhi[j] else bhi[j]
        if hi - lo > ARC_EPS:
            olo[n] = lo
            ohi[n] = hi
            n += 1
        if ahi[i] < bhi[j]:
            i += 1
        else:
            j += 1
    return n


def liness_chain(double[::1] z, const double[::1] mean, const double[:, ::1] cov_chol,
                 const double[::1] signs, const double[:, ::1] eps, const double[::1] u,
                 Py_ssize_t burn_in, Py_ssize_t n_keep, Py_ssize_t thin,
                 double[:, ::1] out):
    """See `_purepy.liness_chain`; identical contract."""
    cdef Py_ssize_t qb = z.shape[0]
    cdef Py_ssize_t total_steps = burn_in + n_keep * thin
    cdef Py_ssize_t t, k, m, kept = 0
    cdef long fallbacks = 0
    cdef int cap = 2 * <int>qb + 4
    cdef double* buf = <double*>malloc(sizeof(double) * (6 * cap + 2 * qb))
    if buf == NULL:
        raise MemoryError()
    cdef double* cur_lo = buf
    cdef double* cur_hi = buf + cap
    cdef double* nxt_lo = buf + 2 * cap
    cdef double* nxt_hi = buf + 3 * cap
    cdef double* con_lo = buf + 4 * cap
    cdef double* con_hi = buf + 5 * cap
    cdef double* nu = buf + 6 * cap
    cdef double* znew = buf + 6 * cap + qb
    cdef int n_cur, n_con, a
    cdef double acc, measure, x, theta, width, ct, st, val, s
    cdef bint ok
    with nogil:
        for t in range(total_steps):
            for k in range(qb):
                acc = 0.0
                for m in range(k + 1):
                    acc += cov_chol[k, m] * eps[t, m]
                nu[k] = acc
            cur_lo[0] = 0.0
            cur_hi[0] = TWO_PI
            n_cur = 1
            for k in range(qb):
                s = signs[k]
                if s == 0.0:
                    continue
                n_con = _constraint_arcs(mean[k], z[k] - mean[k], nu[k], s,
                                         con_lo, con_hi)
                n_cur = _arcs_intersect(cur_lo, cur_hi, n_cur,
                                        con_lo, con_hi, n_con,
                                        nxt_lo, nxt_hi)
                for a in range(n_cur):
                    cur_lo[a] = nxt_lo[a]
                    cur_hi[a] = nxt_hi[a]
                if n_cur == 0:
                    break
            measure = 0.0
            for a in range(n_cur):
                measure += cur_hi[a] - cur_lo[a]
            if measure <= ARC_EPS:
                fallbacks += 1
            else:
                x = u[t] * measure
                theta = cur_hi[n_cur - 1]
                for a in range(n_cur):
                    width = cur_hi[a] - cur_lo[a]
                    if x <= width:
                        theta = cur_lo[a] + x
                        break
                    x -= width
                ct = cos(theta)
                st = sin(theta)
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
    free(buf)
    return fallbacks


def cd_sweeps(double[:, ::1] B, double[:, ::1] U, const double[:, ::1] G,
              const double[:, ::1] omega, const double[:, ::1] lam_star, const double[::1] delta,
              Py_ssize_t n, Py_ssize_t H, double tol, Py_ssize_t max_sweeps):
    """See `_purepy.cd_sweeps`; identical contract."""
    cdef Py_ssize_t p = B.shape[0]
    cdef Py_ssize_t q = B.shape[1]
    cdef double nH = <double>(n * H)
    cdef double nd = <double>n
    cdef double Hd = <double>H
    cdef Py_ssize_t sweeps = 0, j, k, k2, r
    cdef double max_change = -1.0
    cdef double score, d, shrunk, new, old, change, abs_change
    cdef Py_ssize_t s
    for s in range(max_sweeps):
        sweeps += 1
        max_change = 0.0
        for k in range(q):
            d = nH * omega[k, k]
            for j in range(p):
                score = 0.0
                for k2 in range(q):
                    score += U[j, k2] * omega[k2, k]
                score = Hd * (score + nd * B[j, k] * omega[k, k])
                shrunk = fabs(score) - lam_star[j, k]
                if shrunk > 0.0 and fabs(score) / d > delta[k]:
                    new = copysign(shrunk, score) / d
                else:
                    new = 0.0
                old = B[j, k]
                if new != old:
                    change = new - old
                    B[j, k] = new
                    for r in range(p):
                        U[r, k] -= G[r, j] * change
                    abs_change = fabs(change)
                    if abs_change > max_change:
                        max_change = abs_change
        if max_change < tol:
            break
    return sweeps, max_change
