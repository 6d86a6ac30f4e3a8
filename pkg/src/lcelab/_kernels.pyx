# cython: language_level=3
"""Compiled inner loops.

Every function here has a pure-Python twin with the same signature in
``_fallback.py``; ``lcelab.kernels`` picks one at import time.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport acos, cos, fabs, sqrt

cnp.import_array()

DEF MAX_SUBSET = 32
DEF TWO_PI_OVER_3 = 2.0943951023931957


cdef inline double _lam2(double a, double b, double d) noexcept nogil:
    cdef double h = 0.5 * (a - d)
    return 0.5 * (a + d) + sqrt(h * h + b * b)


cdef inline double _lam3(double a, double b, double c,
                         double d, double e, double f) noexcept nogil:
    # symmetric [[a, b, c], [b, d, e], [c, e, f]]
    cdef double p1 = b * b + c * c + e * e
    cdef double q = (a + d + f) / 3.0
    cdef double aa = a - q, dd = d - q, ff = f - q
    cdef double p2 = aa * aa + dd * dd + ff * ff + 2.0 * p1
    if p2 <= 0.0:
        return q
    cdef double p = sqrt(p2 / 6.0)
    aa /= p
    dd /= p
    ff /= p
    cdef double bb = b / p, cc = c / p, ee = e / p
    cdef double r = 0.5 * (aa * (dd * ff - ee * ee)
                           - bb * (bb * ff - ee * cc)
                           + cc * (bb * ee - dd * cc))
    if r <= -1.0:
        return q + p  # phi = pi/3
    if r >= 1.0:
        return q + 2.0 * p
    return q + 2.0 * p * cos(acos(r) / 3.0)


cdef double _lam_jacobi(double* S, int m) noexcept nogil:
    """Largest eigenvalue of the m x m symmetric matrix S (destroyed)."""
    cdef int sweep, i, j, k
    cdef double off, theta, t, c, s, sii, sjj, sij, ski, skj, best
    for sweep in range(64):
        off = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                off += S[i * m + j] * S[i * m + j]
        if off < 1e-30:
            break
        for i in range(m):
            for j in range(i + 1, m):
                sij = S[i * m + j]
                if fabs(sij) < 1e-300:
                    continue
                sii = S[i * m + i]
                sjj = S[j * m + j]
                theta = (sjj - sii) / (2.0 * sij)
                if theta >= 0:
                    t = 1.0 / (theta + sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + sqrt(1.0 + theta * theta))
                c = 1.0 / sqrt(1.0 + t * t)
                s = t * c
                for k in range(m):
                    ski = S[k * m + i]
                    skj = S[k * m + j]
                    S[k * m + i] = c * ski - s * skj
                    S[k * m + j] = s * ski + c * skj
                for k in range(m):
                    ski = S[i * m + k]
                    skj = S[j * m + k]
                    S[i * m + k] = c * ski - s * skj
                    S[j * m + k] = s * ski + c * skj
    best = S[0]
    for i in range(1, m):
        if S[i * m + i] > best:
            best = S[i * m + i]
    return best


def max_restricted_eig(const double[:, ::1] G, int m, double lower):
    """Max over m-subsets F of lambda_max(G[F, F]).

    Subsets whose Gershgorin bound does not exceed ``lower`` are skipped.
    Returns ``(best, support)``; ``support`` is empty when nothing beat
    ``lower``.
    """
    cdef Py_ssize_t N = G.shape[0]
    if m < 1 or m > N or m > MAX_SUBSET:
        raise ValueError("subset size out of range")
    cdef int c[MAX_SUBSET]
    cdef int bestc[MAX_SUBSET]
    cdef double S[MAX_SUBSET * MAX_SUBSET]
    cdef int i, j, r, s
    cdef double best = lower, bound, row, lam
    cdef bint found = False, done = False
    with nogil:
        for i in range(m):
            c[i] = i
        while not done:
            bound = 0.0
            for r in range(m):
                row = G[c[r], c[r]]
                for s in range(m):
                    if s != r:
                        row += fabs(G[c[r], c[s]])
                if row > bound:
                    bound = row
            if bound > best:
                if m == 1:
                    lam = G[c[0], c[0]]
                elif m == 2:
                    lam = _lam2(G[c[0], c[0]], G[c[0], c[1]], G[c[1], c[1]])
                elif m == 3:
                    lam = _lam3(G[c[0], c[0]], G[c[0], c[1]], G[c[0], c[2]],
                                G[c[1], c[1]], G[c[1], c[2]], G[c[2], c[2]])
                else:
                    for r in range(m):
                        for s in range(m):
                            S[r * m + s] = G[c[r], c[s]]
                    lam = _lam_jacobi(S, m)
                if lam > best:
                    best = lam
                    found = True
                    for r in range(m):
                        bestc[r] = c[r]
            # next combination in lexicographic order
            i = m - 1
            while i >= 0 and c[i] == N - m + i:
                i -= 1
            if i < 0:
                done = True
            else:
                c[i] += 1
                for j in range(i + 1, m):
                    c[j] = c[j - 1] + 1
    support = np.empty(m if found else 0, dtype=np.int64)
    if found:
        for r in range(m):
            support[r] = bestc[r]
    return best, support


cdef inline int _ctz(unsigned long long k) noexcept nogil:
    cdef int b = 0
    while not (k & 1):
        k >>= 1
        b += 1
    return b


def subset_cross_max(const double[:, ::1] G):
    """Max over subsets E of sum_{i in E, j not in E} G[i, j] (Gray-code scan)."""
    cdef Py_ssize_t N = G.shape[0]
    if N > 62:
        raise ValueError("too many vectors for exhaustive scan")
    cdef double[::1] r = np.zeros(N)
    cdef double[::1] rowsum = np.asarray(G).sum(axis=1)
    cdef unsigned long long k, total = 1ULL << N
    cdef unsigned long long mask = 0, best_mask = 0
    cdef int b
    cdef Py_ssize_t j
    cdef double cross = 0.0, best = 0.0
    with nogil:
        for k in range(1, total):
            b = _ctz(k)
            if mask & (1ULL << b):
                for j in range(N):
                    r[j] -= G[b, j]
                cross -= (rowsum[b] - G[b, b] - r[b]) - r[b]
                mask &= ~(1ULL << b)
            else:
                cross += (rowsum[b] - G[b, b] - r[b]) - r[b]
                for j in range(N):
                    r[j] += G[b, j]
                mask |= 1ULL << b
            if cross > best:
                best = cross
                best_mask = mask
    return best, best_mask


def subset_sum_ratio(const double[:, ::1] X, const double[::1] denom):
    """Max over nonempty E of |sum_{i in E} X[i]| / denom[|E|] (Gray-code scan)."""
    cdef Py_ssize_t N = X.shape[0], n = X.shape[1]
    if N > 62:
        raise ValueError("too many vectors for exhaustive scan")
    cdef double[::1] S = np.zeros(n)
    cdef unsigned long long k, total = 1ULL << N
    cdef unsigned long long mask = 0, best_mask = 0
    cdef int b, size = 0
    cdef Py_ssize_t j
    cdef double sq, ratio, best = -1.0
    with nogil:
        for k in range(1, total):
            b = _ctz(k)
            if mask & (1ULL << b):
                for j in range(n):
                    S[j] -= X[b, j]
                mask &= ~(1ULL << b)
                size -= 1
            else:
                for j in range(n):
                    S[j] += X[b, j]
                mask |= 1ULL << b
                size += 1
            if size == 0:
                continue
            sq = 0.0
            for j in range(n):
                sq += S[j] * S[j]
            ratio = sqrt(sq) / denom[size]
            if ratio > best:
                best = ratio
                best_mask = mask
    return best, best_mask


def hit_and_run(const double[:, ::1] A, const double[::1] b, double[::1] x,
                const double[:, ::1] dirs, const double[::1] us,
                long start_step, long burn_in, long thin, double margin,
                double[:, ::1] out, long out_pos):
    """Advance a hit-and-run chain over ``len(us)`` steps, updating ``x`` in place.

    A state is written to ``out[out_pos]`` after global step ``s`` whenever
    ``s >= burn_in`` and ``(s - burn_in + 1) % thin == 0``. Returns
    ``(status, out_pos)``; status 1 means an unbounded chord was hit.
    """
    cdef Py_ssize_t steps = us.shape[0], mrows = A.shape[0], n = A.shape[1]
    cdef Py_ssize_t step, i, j
    cdef double norm, ad, slack, ratio, t_lo, t_hi, t, delta
    cdef double[::1] d = np.empty(n)
    cdef long s
    cdef int status = 0
    with nogil:
        for step in range(steps):
            norm = 0.0
            for j in range(n):
                norm += dirs[step, j] * dirs[step, j]
            norm = sqrt(norm)
            for j in range(n):
                d[j] = dirs[step, j] / norm
            t_lo = -1e308
            t_hi = 1e308
            for i in range(mrows):
                ad = 0.0
                slack = b[i]
                for j in range(n):
                    ad += A[i, j] * d[j]
                    slack -= A[i, j] * x[j]
                if ad > 0.0:
                    ratio = slack / ad
                    if ratio < t_hi:
                        t_hi = ratio
                elif ad < 0.0:
                    ratio = slack / ad
                    if ratio > t_lo:
                        t_lo = ratio
            if t_hi >= 1e308 or t_lo <= -1e308:
                status = 1
                break
            delta = margin * (t_hi - t_lo)
            t = t_lo + us[step] * (t_hi - t_lo)
            if t < t_lo + delta:
                t = t_lo + delta
            if t > t_hi - delta:
                t = t_hi - delta
            for j in range(n):
                x[j] += t * d[j]
            s = start_step + step
            if s >= burn_in and (s - burn_in + 1) % thin == 0 and out_pos < out.shape[0]:
                for j in range(n):
                    out[out_pos, j] = x[j]
                out_pos += 1
    return status, out_pos


def farthest_point(const double[:, ::1] cloud, long start, double radius, long max_points):
    """Greedy farthest-point insertion until every cloud point is within ``radius``.

    Returns ``(indices, covering_radius)``; stops early at ``max_points``.
    """
    cdef Py_ssize_t M = cloud.shape[0], m = cloud.shape[1]
    cdef double[::1] dist = np.empty(M)
    cdef long[::1] chosen = np.empty(max_points, dtype=np.int64)
    cdef Py_ssize_t i, j
    cdef long count = 0, cur = start, far
    cdef double dd, diff, farthest
    with nogil:
        for i in range(M):
            dist[i] = 1e308
        while True:
            chosen[count] = cur
            count += 1
            farthest = -1.0
            far = 0
            for i in range(M):
                dd = 0.0
                for j in range(m):
                    diff = cloud[i, j] - cloud[cur, j]
                    dd += diff * diff
                if dd < dist[i]:
                    dist[i] = dd
                if dist[i] > farthest:
                    farthest = dist[i]
                    far = i
            if farthest <= radius * radius or count >= max_points:
                break
            cur = far
    return np.asarray(chosen[:count]).copy(), sqrt(farthest)
