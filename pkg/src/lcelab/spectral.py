"""Empirical covariance, Gram spectra, Marchenko-Pastur reference, l2 -> lp norms."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, optimize
from scipy.sparse.linalg import LinearOperator, eigsh

from ._optim import random_starts, sphere_ascent
from .ensembles import SampleMatrix
from .errors import DomainError
from .rng import as_generator

DENSE_LIMIT = 2048
EIG_TOL = 1e-10
MP_ABS_TOL = 1e-8


def empirical_covariance(M: SampleMatrix) -> np.ndarray:
    """(1/N) sum of X_i X_i^T."""
    A = M.data
    S = A @ A.T / M.N
    return 0.5 * (S + S.T)


def _deviation_iterative(M: SampleMatrix) -> float:
    A = M.data
    n, N = A.shape

    def matvec(v):
        v = np.ravel(v)
        return A @ (A.T @ v) / N - v

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    neg = LinearOperator((n, n), matvec=lambda v: -matvec(v), dtype=float)
    top = eigsh(op, k=1, which="LA", tol=EIG_TOL, return_eigenvectors=False)[0]
    bottom = eigsh(neg, k=1, which="LA", tol=EIG_TOL, return_eigenvectors=False)[0]
    return float(max(abs(top), abs(bottom)))


def covariance_deviation(M: SampleMatrix, dense_limit: int = DENSE_LIMIT) -> float:
    """||(1/N) sum X_i X_i^T - Id|| in operator norm.

    Dense symmetric eigensolver up to ``dense_limit`` rows, Lanczos above.
    """
    if M.n > dense_limit and M.n >= 3:
        return _deviation_iterative(M)
    S = empirical_covariance(M)
    w = np.linalg.eigvalsh(S - np.eye(M.n))
    return float(max(abs(w[0]), abs(w[-1])))


@dataclass(frozen=True)
class SpectrumSummary:
    eigenvalues: tuple
    lambda_min_over_N: float
    lambda_max_over_N: float
    deviation: float
    beta: float
    n: int
    N: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eigenvalues"] = list(self.eigenvalues)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> SpectrumSummary:
        d = dict(d)
        d["eigenvalues"] = tuple(d["eigenvalues"])
        return cls(**d)

    def eigenvalues_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            for v in self.eigenvalues:
                w.writerow([repr(float(v))])


def gram_spectrum(M: SampleMatrix) -> SpectrumSummary:
    """Eigenvalues of A A^T (ascending) with the normalised extremes."""
    A = M.data
    G = A @ A.T
    lam = np.clip(np.linalg.eigvalsh(0.5 * (G + G.T)), 0.0, None)
    scaled = lam / M.N
    return SpectrumSummary(
        eigenvalues=tuple(float(v) for v in lam),
        lambda_min_over_N=float(scaled[0]),
        lambda_max_over_N=float(scaled[-1]),
        deviation=float(np.max(np.abs(scaled - 1.0))),
        beta=M.n / M.N,
        n=M.n,
        N=M.N,
    )


# ----------------------------------------------------------- Marchenko-Pastur


def mp_edges(beta: float) -> tuple[float, float]:
    if not 0 < beta <= 1:
        raise DomainError("beta must lie in (0, 1]")
    r = math.sqrt(beta)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def _mp_theta(x, a, b):
    s = np.clip((np.asarray(x, dtype=float) - a) / (b - a), 0.0, 1.0)
    return np.arcsin(np.sqrt(s))


def _mp_integrand(theta, a, b, beta):
    # density after x = a + (b - a) sin^2(theta); smooth even when a = 0
    s2 = math.sin(theta) ** 2
    c2 = math.cos(theta) ** 2
    return (b - a) ** 2 * s2 * c2 / (math.pi * beta * (a + (b - a) * s2))


def mp_cdf(x, beta: float) -> np.ndarray:
    """Marchenko-Pastur CDF (unit variance, ratio beta) by quadrature."""
    a, b = mp_edges(beta)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    order = np.argsort(xs)
    thetas = _mp_theta(xs[order], a, b)
    out = np.empty(xs.size)
    acc, prev = 0.0, 0.0
    for k, th in zip(order, thetas):
        if th > prev:
            piece, _ = integrate.quad(_mp_integrand, prev, th, args=(a, b, beta), epsabs=MP_ABS_TOL / 10, epsrel=1e-12, limit=200)
            acc += piece
            prev = th
        out[k] = min(acc, 1.0)
    return out if np.ndim(x) else out[0]


def mp_quantile(q: float, beta: float) -> float:
    a, b = mp_edges(beta)
    if q <= 0:
        return a
    if q >= 1:
        return b
    return optimize.brentq(lambda x: mp_cdf(x, beta) - q, a, b, xtol=1e-14)


def esd_distance(summary: SpectrumSummary) -> float:
    """Kolmogorov distance between the ESD of lambda_i / N and the MP law."""
    beta = summary.n / summary.N
    x = np.sort(np.asarray(summary.eigenvalues) / summary.N)
    F = mp_cdf(x, beta)
    n = x.size
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(i / n - F)), np.max(np.abs((i - 1) / n - F))))


# ----------------------------------------------------------------- l2 -> lp


@dataclass(frozen=True)
class EllpNorm:
    value: float
    method: str
    argmax: tuple


def ell2_to_ellp_norm(M: SampleMatrix, p: float, restarts: int = 32, seed: int = 0) -> EllpNorm:
    """||Gamma||_{l2 -> lp} for the N x n matrix Gamma with rows X_i.

    Exact for p = 2 and p = inf; otherwise the best value of projected
    gradient ascent, a lower bound tagged ``heuristic-lower``.
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    G = M.columns
    if p == 2:
        _, s, Vt = np.linalg.svd(G, full_matrices=False)
        return EllpNorm(float(s[0]), "exact", tuple(Vt[0]))
    if math.isinf(p):
        norms = np.linalg.norm(G, axis=1)
        i = int(np.argmax(norms))
        y = G[i] / norms[i] if norms[i] > 0 else np.eye(M.n)[0]
        return EllpNorm(float(norms[i]), "exact", tuple(y))

    def fun(y):
        return float(np.sum(np.abs(G @ y) ** p) ** (1.0 / p))

    def grad(y):
        z = G @ y
        total = np.sum(np.abs(z) ** p)
        if total == 0.0:
            return G.T @ np.sign(z)
        return G.T @ (np.abs(z) ** (p - 1.0) * np.sign(z)) * total ** (1.0 / p - 1.0)

    rng = as_generator(seed)
    starts = list(random_starts(rng, M.n, restarts))
    _, _, Vt = np.linalg.svd(G, full_matrices=False)
    starts.append(Vt[0])
    best_y, best = None, -1.0
    for y0 in starts:
        y, f = sphere_ascent(fun, grad, y0)
        if f > best:
            best_y, best = y, f
    return EllpNorm(best, "heuristic-lower", tuple(best_y))
