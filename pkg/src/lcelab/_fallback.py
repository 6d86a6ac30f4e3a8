"""Pure-Python (numpy) versions of the compiled kernels.

Signatures and return conventions match ``_kernels.pyx`` exactly.
"""
from __future__ import annotations

import itertools

import numpy as np

MAX_SUBSET = 32


def _lam_max_batch(sub: np.ndarray) -> np.ndarray:
    """Largest eigenvalue of a stack of small symmetric matrices."""
    m = sub.shape[-1]
    if m == 1:
        return sub[:, 0, 0]
    if m == 2:
        a, b, d = sub[:, 0, 0], sub[:, 0, 1], sub[:, 1, 1]
        return 0.5 * (a + d) + np.sqrt((0.5 * (a - d)) ** 2 + b * b)
    return np.linalg.eigvalsh(sub)[:, -1]


def max_restricted_eig(G, m, lower):
    G = np.ascontiguousarray(G, dtype=float)
    N = G.shape[0]
    if m < 1 or m > N or m > MAX_SUBSET:
        raise ValueError("subset size out of range")
    if m == 1:
        d = np.diag(G)
        i = int(np.argmax(d))
        if d[i] > lower:
            return float(d[i]), np.array([i], dtype=np.int64)
        return float(lower), np.empty(0, dtype=np.int64)

    absG = np.abs(G)
    diag = np.diag(G)
    best = float(lower)
    best_support = None
    # fix the first m - 2 indices, vectorise over the final pair
    for prefix in itertools.combinations(range(N), m - 2):
        start = prefix[-1] + 1 if prefix else 0
        if N - start < 2:
            continue
        j, k = np.triu_indices(N - start, 1)
        j = j + start
        k = k + start
        pref = np.array(prefix, dtype=np.int64)
        # Gershgorin row sums of G[F, F] for F = prefix + (j, k)
        to_prefix = absG[pref].sum(axis=0)  # sum_{s in prefix} |G[s, .]|
        rows = [
            diag[r] + to_prefix[r] - absG[r, r] + absG[r, j] + absG[r, k]
            for r in pref
        ]
        rows.append(diag[j] + to_prefix[j] + absG[j, k])
        rows.append(diag[k] + to_prefix[k] + absG[j, k])
        bound = np.max(np.vstack(rows), axis=0)
        keep = np.nonzero(bound > best)[0]
        if keep.size == 0:
            continue
        idx = np.empty((keep.size, m), dtype=np.int64)
        if prefix:
            idx[:, : m - 2] = pref
        idx[:, m - 2] = j[keep]
        idx[:, m - 1] = k[keep]
        sub = G[idx[:, :, None], idx[:, None, :]]
        lam = _lam_max_batch(sub)
        t = int(np.argmax(lam))
        if lam[t] > best:
            best = float(lam[t])
            best_support = idx[t].copy()
    if best_support is None:
        return best, np.empty(0, dtype=np.int64)
    return best, best_support


def _gray_masks(N: int, chunk: int = 1 << 16):
    """Yield ``(codes, bits)`` blocks of all subsets of ``range(N)`` in Gray order."""
    total = 1 << N
    weights = 1 << np.arange(N, dtype=np.int64)
    for lo in range(0, total, chunk):
        k = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        codes = k ^ (k >> 1)
        bits = ((codes[:, None] & weights) != 0).astype(float)
        yield codes, bits


def subset_cross_max(G):
    G = np.ascontiguousarray(G, dtype=float)
    N = G.shape[0]
    if N > 62:
        raise ValueError("too many vectors for exhaustive scan")
    rowsum = G.sum(axis=1)
    best, best_mask = 0.0, 0
    for codes, bits in _gray_masks(N):
        # cross(E) = 1_E^T G 1_{E^c} = 1_E^T rowsum - 1_E^T G 1_E
        inner = np.einsum("ij,jk,ik->i", bits, G, bits)
        cross = bits @ rowsum - inner
        t = int(np.argmax(cross))
        if cross[t] > best:
            best, best_mask = float(cross[t]), int(codes[t])
    return best, best_mask


def subset_sum_ratio(X, denom):
    X = np.ascontiguousarray(X, dtype=float)
    denom = np.asarray(denom, dtype=float)
    N = X.shape[0]
    if N > 62:
        raise ValueError("too many vectors for exhaustive scan")
    best, best_mask = -1.0, 0
    for codes, bits in _gray_masks(N):
        sizes = bits.sum(axis=1).astype(np.int64)
        nz = sizes > 0
        if not nz.any():
            continue
        norms = np.linalg.norm(bits[nz] @ X, axis=1)
        ratio = norms / denom[sizes[nz]]
        t = int(np.argmax(ratio))
        if ratio[t] > best:
            best, best_mask = float(ratio[t]), int(codes[nz][t])
    return best, best_mask


def hit_and_run(A, b, x, dirs, us, start_step, burn_in, thin, margin, out, out_pos):
    steps = us.shape[0]
    for step in range(steps):
        d = dirs[step] / np.sqrt(dirs[step] @ dirs[step])
        ad = A @ d
        slack = b - A @ x
        pos = ad > 0.0
        neg = ad < 0.0
        if not pos.any() or not neg.any():
            return 1, out_pos
        t_hi = np.min(slack[pos] / ad[pos])
        t_lo = np.max(slack[neg] / ad[neg])
        delta = margin * (t_hi - t_lo)
        t = t_lo + us[step] * (t_hi - t_lo)
        t = min(max(t, t_lo + delta), t_hi - delta)
        x += t * d
        s = start_step + step
        if s >= burn_in and (s - burn_in + 1) % thin == 0 and out_pos < out.shape[0]:
            out[out_pos] = x
            out_pos += 1
    return 0, out_pos


def farthest_point(cloud, start, radius, max_points):
    cloud = np.ascontiguousarray(cloud, dtype=float)
    dist = np.full(cloud.shape[0], np.inf)
    chosen = []
    cur = int(start)
    while True:
        chosen.append(cur)
        diff = cloud - cloud[cur]
        np.minimum(dist, np.einsum("ij,ij->i", diff, diff), out=dist)
        far = int(np.argmax(dist))
        farthest = dist[far]
        if farthest <= radius * radius or len(chosen) >= max_points:
            break
        cur = far
    return np.array(chosen, dtype=np.int64), float(np.sqrt(farthest))
