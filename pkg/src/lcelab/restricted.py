"""Restricted norms A_m, best column-subset sums and the pairwise subset split."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .ensembles import SampleMatrix
from .errors import BudgetExceeded, DomainError, PreconditionError
from .rng import as_generator

MAX_SUPPORTS = 10**6
MAX_SUBSET_N = 22
SPLIT_SAMPLES = 1 << 10
SWAP_CANDIDATES = 8
POWER_STEPS = 6


@dataclass(frozen=True)
class RestrictedNormResult:
    m: int
    value: float
    support: tuple
    z: tuple
    method: str

    def to_dict(self) -> dict:
        d = asdict(self)
        d["support"] = list(self.support)
        d["z"] = list(self.z)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> RestrictedNormResult:
        return cls(int(d["m"]), float(d["value"]), tuple(d["support"]), tuple(d["z"]), d["method"])


def _top_pair(G: np.ndarray, F) -> tuple[float, np.ndarray]:
    sub = G[np.ix_(F, F)]
    w, V = np.linalg.eigh(sub)
    v = V[:, -1]
    if v.sum() < 0:
        v = -v
    return max(float(w[-1]), 0.0), v


def _result(G, F, m, method) -> RestrictedNormResult:
    F = sorted(int(i) for i in F)
    lam, v = _top_pair(G, F)
    return RestrictedNormResult(m, math.sqrt(lam), tuple(F), tuple(float(x) for x in v), method)


def _rayleigh_lower(G, F, v0) -> float:
    # a few power steps from a warm start; the Rayleigh quotient never exceeds lambda_max
    sub = G[np.ix_(F, F)]
    v = v0 / np.linalg.norm(v0)
    for _ in range(POWER_STEPS):
        w = sub @ v
        nw = np.linalg.norm(w)
        if nw == 0:
            break
        v = w / nw
    return float(v @ sub @ v)


def _alternate(A, G, F, m, max_rounds=50):
    """Re-pick the top-m columns by <X_j, u>^2 for the current top direction u."""
    F = sorted(F)
    lam, v = _top_pair(G, F)
    for _ in range(max_rounds):
        u = A[:, F] @ v
        scores = (A.T @ u) ** 2
        cand = sorted(np.argsort(-scores, kind="stable")[:m].tolist())
        if cand == F:
            break
        lam_c, v_c = _top_pair(G, cand)
        if lam_c <= lam * (1 + 1e-14):
            break
        F, lam, v = cand, lam_c, v_c
    return F, lam, v


def _swap_search(A, G, F, m, max_swaps):
    """Single-column swaps, trying low-score members against high-score outsiders."""
    N = G.shape[0]
    F = sorted(F)
    lam, v = _top_pair(G, F)
    for _ in range(max_swaps):
        inside = np.zeros(N, dtype=bool)
        inside[F] = True
        outside = np.flatnonzero(~inside)
        if outside.size == 0:
            break
        u = A[:, F] @ v
        align = A.T @ u
        scores = align**2
        members = np.array(F)
        out_order = members[np.argsort(scores[members], kind="stable")[:SWAP_CANDIDATES]]
        in_order = outside[np.argsort(-scores[outside], kind="stable")[:SWAP_CANDIDATES]]
        improved = False
        pos = {j: k for k, j in enumerate(F)}
        for j in in_order:
            for i in out_order:
                cand = sorted(F[:pos[i]] + F[pos[i] + 1:] + [int(j)])
                # warm start: old coefficients, the new slot seeded by its alignment with u
                w0 = np.array([v[pos[c]] if c in pos else align[j] / math.sqrt(max(lam, 1e-300)) for c in cand])
                if _rayleigh_lower(G, cand, w0) > lam * (1 + 1e-12):
                    lam_c, v_c = _top_pair(G, cand)
                    F, lam, v = cand, lam_c, v_c
                    improved = True
                    break
            if improved:
                break
        if not improved:
            break
    return F, lam, v


def _heuristic(A, G, m, restarts, seed):
    n, N = A.shape
    norms = np.einsum("ij,ij->j", A, A)
    rng = as_generator(seed)
    # greedy start: heaviest column, then repeatedly the column best aligned with the top direction
    F = [int(np.argmax(norms))]
    while len(F) < m:
        lam, v = _top_pair(G, F)
        u = A[:, F] @ v
        scores = (A.T @ u) ** 2
        scores[F] = -np.inf
        F.append(int(np.argmax(scores)))
    starts = [F]
    for _ in range(restarts):
        u = rng.standard_normal(n)
        scores = (A.T @ u) ** 2
        starts.append(np.argsort(-scores, kind="stable")[:m].tolist())
    best_F, best_lam = None, -1.0
    for F0 in starts:
        F1, _, _ = _alternate(A, G, F0, m)
        F2, lam, _ = _swap_search(A, G, F1, m, max_swaps=4 * m)
        if lam > best_lam:
            best_F, best_lam = F2, lam
    return best_F, best_lam


def a_m(
    M: SampleMatrix,
    m: int,
    mode: str = "exact",
    max_supports: int = MAX_SUPPORTS,
    restarts: int = 16,
    seed: int = 0,
) -> RestrictedNormResult:
    """sup of |Az| over unit z with at most m nonzero coordinates.

    ``exact`` enumerates every support of size m (budget ``max_supports``);
    ``heuristic`` returns a lower bound from greedy selection plus swaps.
    """
    A = np.ascontiguousarray(M.data)
    N = A.shape[1]
    if not 1 <= m <= N:
        raise PreconditionError("need 1 <= m <= N")
    if mode not in ("exact", "heuristic"):
        raise DomainError(f"unknown mode {mode!r}")
    G = np.ascontiguousarray(A.T @ A)
    if m == 1:
        norms = np.einsum("ij,ij->j", A, A)
        return _result(G, [int(np.argmax(norms))], m, "exact")
    if m == N:
        return _result(G, range(N), m, "exact")
    if mode == "heuristic":
        F, _ = _heuristic(A, G, m, restarts, seed)
        return _result(G, F, m, "local-search")
    if math.comb(N, m) > max_supports:
        raise BudgetExceeded("enumeration budget exceeded")
    F, lam = _heuristic(A, G, m, min(restarts, 4), seed)
    found, support = kernels.max_restricted_eig(G, m, lam * (1 - 1e-9))
    if len(support):
        F = support.tolist()
    return _result(G, F, m, "exact")


# ------------------------------------------------------------ subset sums


@dataclass(frozen=True)
class SubsetSumResult:
    E: tuple
    value: float
    ratio: float
    method: str


def subset_sum_scale(n: int, N: int, k) -> np.ndarray:
    """sqrt(n k) + k log(2N/n), the shape of the subset-sum bound."""
    k = np.asarray(k, dtype=float)
    return np.sqrt(n * k) + k * math.log(2.0 * N / n)


def best_subset_sum(M: SampleMatrix, mode: str = "exact", objective: str = "ratio") -> SubsetSumResult:
    """Maximise |sum_{i in E} X_i| / scale(|E|) (or the raw norm) over nonempty E."""
    X = np.ascontiguousarray(M.columns)
    N, n = X.shape
    if objective == "ratio":
        denom = np.concatenate([[1.0], subset_sum_scale(n, N, np.arange(1, N + 1))])
    elif objective == "raw":
        denom = np.ones(N + 1)
    else:
        raise DomainError(f"unknown objective {objective!r}")
    if mode == "exact":
        if N > MAX_SUBSET_N:
            raise BudgetExceeded(f"exact subset search needs N <= {MAX_SUBSET_N}")
        ratio, mask = kernels.subset_sum_ratio(X, denom)
        E = tuple(i for i in range(N) if (mask >> i) & 1)
    elif mode == "greedy":
        S = np.zeros(n)
        free = np.ones(N, dtype=bool)
        chosen, best, best_k = [], -1.0, 0
        for k in range(1, N + 1):
            cand = np.linalg.norm(S + X, axis=1) / denom[k]
            cand[~free] = -np.inf
            j = int(np.argmax(cand))
            chosen.append(j)
            free[j] = False
            S = S + X[j]
            if cand[j] > best:
                best, best_k = float(cand[j]), k
        E = tuple(sorted(chosen[:best_k]))
        ratio = best
    else:
        raise DomainError(f"unknown mode {mode!r}")
    value = float(np.linalg.norm(X[list(E)].sum(axis=0)))
    return SubsetSumResult(E, value, float(ratio), mode)


# ------------------------------------------------------------- subset split


@dataclass(frozen=True)
class SplitResult:
    E: tuple
    cross: float
    total: float
    certified: bool


def cross_term(G: np.ndarray, E) -> float:
    mask = np.zeros(G.shape[0], dtype=bool)
    mask[list(E)] = True
    return float(G[np.ix_(mask, ~mask)].sum())


def split_set(vectors, mode: str = "exact", seed: int = 0) -> SplitResult:
    """Find E with sum_{i != j} <x_i, x_j> <= 4 sum_{i in E, j not in E} <x_i, x_j>."""
    X = np.ascontiguousarray(np.atleast_2d(np.asarray(vectors, dtype=float)))
    N = X.shape[0]
    G = np.ascontiguousarray(X @ X.T)
    total = float(G.sum() - np.trace(G))
    if mode == "exact":
        if N > MAX_SUBSET_N:
            raise BudgetExceeded(f"exact split needs N <= {MAX_SUBSET_N}")
        best, mask = kernels.subset_cross_max(G)
        E = tuple(i for i in range(N) if (mask >> i) & 1)
    elif mode == "randomized":
        rng = as_generator(seed)
        bits = rng.random((SPLIT_SAMPLES, N)) < 0.5
        B = bits.astype(float)
        crosses = np.einsum("ki,ij,kj->k", B, G, 1.0 - B)
        k = int(np.argmax(crosses))
        E = tuple(np.flatnonzero(bits[k]).tolist())
    else:
        raise DomainError(f"unknown mode {mode!r}")
    cross = cross_term(G, E)
    slack = 1e-12 * max(1.0, float(np.abs(G).sum()))
    return SplitResult(E, cross, total, total <= 4.0 * cross + slack)
