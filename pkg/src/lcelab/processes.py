"""p-moment deviation processes on the sphere, truncation, psi_1 norms, Bernstein tails."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from ._optim import random_starts, sphere_ascent
from .ensembles import DEFAULT_REFERENCE_SIZE, EnsembleSpec, MomentModel, SampleMatrix
from .errors import DomainError, PreconditionError
from .rng import as_generator
from .spectral import empirical_covariance

MIN_PSI_SAMPLES = 1000
PSI_BRACKET = 50.0
PSI_REL_TOL = 1e-13


@dataclass(frozen=True)
class MomentProcessResult:
    p: float
    sup_value: float
    argmax: tuple
    method: str
    truncation: float | None = None
    lower_bound: bool = False

    def to_dict(self) -> dict:
        d = asdict(self)
        d["argmax"] = list(self.argmax)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> MomentProcessResult:
        d = dict(d)
        d["argmax"] = tuple(d["argmax"])
        return cls(**d)


class _Process:
    """y -> (1/N) sum |<X_i, y>|^p - E|<X, y>|^p with its gradient."""

    def __init__(self, M: SampleMatrix, p: float, model: MomentModel):
        self.G = M.columns
        self.p = p
        self.model = model

    def signed(self, y) -> float:
        return float(np.mean(np.abs(self.G @ y) ** self.p)) - self.model.value(y)

    def grad_signed(self, y) -> np.ndarray:
        z = self.G @ y
        w = self.p * np.abs(z) ** (self.p - 1.0) * np.sign(z)
        return self.G.T @ w / z.size - self.model.grad(y)

    def abs_value(self, y) -> float:
        return abs(self.signed(y))

    def abs_grad(self, y) -> np.ndarray:
        return math.copysign(1.0, self.signed(y)) * self.grad_signed(y)


def process_value(M: SampleMatrix, y, p: float, spec: EnsembleSpec, reference_size: int = DEFAULT_REFERENCE_SIZE, reference_seed: int = 0) -> float:
    """Signed centred p-moment deviation at a single direction."""
    y = np.asarray(y, dtype=float)
    return _Process(M, p, MomentModel(spec, p, reference_size, reference_seed)).signed(y / np.linalg.norm(y))


def p_moment_deviation(
    M: SampleMatrix,
    p: float,
    spec: EnsembleSpec,
    restarts: int = 32,
    seed: int = 0,
    method: str = "auto",
    reference_size: int = DEFAULT_REFERENCE_SIZE,
    reference_seed: int = 0,
) -> MomentProcessResult:
    """sup over unit y of |(1/N) sum |<X_i,y>|^p - E|<X,y>|^p|.

    Exact through the eigenproblem for p = 2 on isotropic laws, otherwise
    the best of ``restarts`` projected-gradient ascents (a lower bound).
    """
    if p < 1:
        raise DomainError("p must be >= 1")
    if method not in ("auto", "exact-p2", "multistart"):
        raise DomainError(f"unknown method {method!r}")
    exact_ok = p == 2 and spec.isotropic
    if method == "exact-p2" and not exact_ok:
        raise PreconditionError("the eigenvalue path needs p = 2 and an isotropic law")
    n = M.n
    S = empirical_covariance(M) - np.eye(n) if exact_ok else None
    if exact_ok and method != "multistart":
        w, V = np.linalg.eigh(S)
        k = 0 if abs(w[0]) > abs(w[-1]) else n - 1
        return MomentProcessResult(float(p), float(abs(w[k])), tuple(V[:, k]), "exact-p2")
    proc = _Process(M, float(p), MomentModel(spec, p, reference_size, reference_seed))
    rng = as_generator(seed)
    starts = list(random_starts(rng, n, restarts))
    if S is None:
        S = empirical_covariance(M) - np.eye(n)
    _, V = np.linalg.eigh(S)
    starts += [V[:, 0], V[:, -1]]
    best_y, best = None, -1.0
    for y0 in starts:
        y, f = sphere_ascent(proc.abs_value, proc.abs_grad, y0)
        if f > best:
            best_y, best = y, f
    return MomentProcessResult(float(p), float(best), tuple(best_y), "multistart", lower_bound=p != 2)


def _probe_rows(probe, n: int) -> np.ndarray:
    P = np.atleast_2d(np.asarray(probe, dtype=float))
    if P.size == 0:
        raise PreconditionError("probe set is empty")
    if P.shape[1] != n:
        raise PreconditionError("probe vectors must have the matrix dimension")
    return P / np.linalg.norm(P, axis=1, keepdims=True)


def truncated_deviation(
    M: SampleMatrix,
    p: float,
    B: float,
    probe,
    spec: EnsembleSpec,
    reference_size: int = DEFAULT_REFERENCE_SIZE,
    reference_seed: int = 0,
) -> float:
    """max over probe directions of |(1/N) sum min(|<X_i,y>|,B)^p - E min(|<X,y>|,B)^p|."""
    if B <= 1:
        raise PreconditionError("truncation level B must exceed 1")
    P = _probe_rows(probe, M.n)
    model = MomentModel(spec, p, reference_size, reference_seed)
    Z = np.minimum(np.abs(M.columns @ P.T), B) ** p
    emp = Z.mean(axis=0)
    expected = np.array([model.truncated_value(y, B) for y in P])
    return float(np.max(np.abs(emp - expected)))


def deviation_split(
    M: SampleMatrix,
    p: float,
    B: float,
    y,
    spec: EnsembleSpec,
    reference_size: int = DEFAULT_REFERENCE_SIZE,
    reference_seed: int = 0,
) -> dict:
    """Decompose the signed deviation at y as truncated + empirical tail + expected tail."""
    if B <= 1:
        raise PreconditionError("truncation level B must exceed 1")
    y = _probe_rows(y, M.n)[0]
    model = MomentModel(spec, p, reference_size, reference_seed)
    a = np.abs(M.columns @ y)
    full_emp = float(np.mean(a**p))
    trunc_emp = float(np.mean(np.minimum(a, B) ** p))
    full_exp = model.value(y)
    trunc_exp = model.truncated_value(y, B)
    return {
        "full": full_emp - full_exp,
        "truncated": trunc_emp - trunc_exp,
        "empirical_tail": full_emp - trunc_emp,
        "expected_tail": -(full_exp - trunc_exp),
        "exceedances": int(np.count_nonzero(a >= B)),
        "exceedance_energy": float(np.sum(a[a >= B] ** 2)),
    }


# ------------------------------------------------------------------ psi_1


@dataclass(frozen=True)
class Psi1Estimate:
    value: float
    samples_used: int
    bracket: tuple
    at_edge: bool = False


def psi1_estimate(samples, min_samples: int = MIN_PSI_SAMPLES) -> Psi1Estimate:
    """Empirical inf{C > 0 : mean exp(|Y|/C) <= 2} by bisection."""
    y = np.abs(np.asarray(samples, dtype=float).reshape(-1))
    if y.size < min_samples:
        raise PreconditionError(f"need at least {min_samples} samples")
    top = float(y.max())
    if top == 0.0:
        return Psi1Estimate(0.0, y.size, (0.0, 0.0))
    log_target = math.log(2.0) + math.log(y.size)

    def excess(C):
        # log mean exp(|Y|/C) - log 2, strictly decreasing in C
        return logsumexp(y / C) - log_target

    lo, hi = top / PSI_BRACKET, top * PSI_BRACKET
    if excess(lo) <= 0:
        return Psi1Estimate(lo, y.size, (lo, lo), at_edge=True)
    if excess(hi) >= 0:
        return Psi1Estimate(hi, y.size, (hi, hi), at_edge=True)
    while hi - lo > PSI_REL_TOL * hi:
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            lo = mid
        else:
            hi = mid
    return Psi1Estimate(hi, y.size, (lo, hi))


def moment_psi1_ratio(samples, p: int, psi: Psi1Estimate | None = None) -> float:
    """(mean |Y|^p)^(1/p) / (p * psi_1 estimate)."""
    if p < 1:
        raise DomainError("p must be >= 1")
    y = np.abs(np.asarray(samples, dtype=float).reshape(-1))
    psi = psi1_estimate(y) if psi is None else psi
    if psi.value == 0.0:
        raise PreconditionError("psi_1 estimate is zero")
    return float(np.mean(y**p) ** (1.0 / p) / (p * psi.value))


def bernstein_tail(sigma2: float, a: float, N: int, tau: float) -> float:
    """exp(-tau^2 N / (2 (sigma2 + a tau / 3))), clamped to [0, 1]."""
    if sigma2 < 0 or a <= 0 or N < 1 or tau < 0:
        raise DomainError("need sigma2 >= 0, a > 0, N >= 1, tau >= 0")
    if tau == 0:
        return 1.0
    return float(min(1.0, max(0.0, math.exp(-tau * tau * N / (2.0 * (sigma2 + a * tau / 3.0))))))
