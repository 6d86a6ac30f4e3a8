"""Hit-and-run sampling of polytopes {x : Ax <= b} and affine isotropization."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ensembles import SampleMatrix
from .errors import DegenerateBody, DomainError, IsotropizationFailed, PreconditionError, UnboundedPolytope
from .rng import derive_seed, stream

BOUNDARY_MARGIN = 1e-12
EIGEN_FLOOR = 1e-10
STEP_BLOCK = 1 << 14
CHAIN_SIZE = 4096


@dataclass(frozen=True, eq=False)
class Polytope:
    A: np.ndarray
    b: np.ndarray
    interior_point: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, order="C", ndmin=2)
        b = np.array(self.b, dtype=float).reshape(-1)
        x0 = np.array(self.interior_point, dtype=float).reshape(-1)
        if A.shape != (b.size, x0.size):
            raise DomainError("A must be m x n with b of length m and an n-vector interior point")
        if not np.all(A @ x0 < b):
            raise DomainError("interior_point is not strictly inside the polytope")
        # every coordinate ray from the interior point must leave the body
        for j in range(x0.size):
            col = A[:, j]
            if not (np.any(col > 0) and np.any(col < 0)):
                raise UnboundedPolytope(f"polytope unbounded along coordinate {j}")
        for arr in (A, b, x0):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "interior_point", x0)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def contains(self, x, strict: bool = False) -> np.ndarray:
        x = np.atleast_2d(x)
        lhs = x @ self.A.T
        ok = lhs < self.b if strict else lhs <= self.b
        return ok.all(axis=1)

    @classmethod
    def box(cls, lo, hi) -> Polytope:
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        n = lo.size
        A = np.vstack([np.eye(n), -np.eye(n)])
        return cls(A, np.concatenate([hi, -lo]), (lo + hi) / 2.0)

    @classmethod
    def cube(cls, n: int, half_side: float = np.sqrt(3.0)) -> Polytope:
        return cls.box(-half_side * np.ones(n), half_side * np.ones(n))

    @classmethod
    def simplex(cls, n: int) -> Polytope:
        """{x >= 0, sum x <= 1}."""
        A = np.vstack([-np.eye(n), np.ones((1, n))])
        b = np.concatenate([np.zeros(n), [1.0]])
        return cls(A, b, np.full(n, 1.0 / (n + 1)))

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "interior_point": self.interior_point.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> Polytope:
        return cls(d["A"], d["b"], d["interior_point"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> Polytope:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class IsotropizationResult:
    """Affine map x -> map @ (x - shift) placing the body near isotropic position."""

    shift: np.ndarray
    map: np.ndarray
    residual: float
    iterations: int
    history: tuple = field(default=())

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.map))

    def apply(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts - self.shift) @ self.map.T

    def to_dict(self) -> dict:
        return {
            "shift": np.asarray(self.shift).tolist(),
            "map": np.asarray(self.map).tolist(),
            "residual": float(self.residual),
            "iterations": int(self.iterations),
            "history": [float(h) for h in self.history],
        }

    @classmethod
    def from_dict(cls, d: dict) -> IsotropizationResult:
        return cls(
            np.asarray(d["shift"], dtype=float),
            np.asarray(d["map"], dtype=float),
            float(d["residual"]),
            int(d["iterations"]),
            tuple(d.get("history", ())),
        )


def default_burn_in(n: int) -> int:
    return 1000 * n


def default_thin(n: int) -> int:
    return n * n


def hit_and_run_step(poly: Polytope, x, rng: np.random.Generator) -> np.ndarray:
    """One hit-and-run move from the strictly interior point ``x``."""
    x = np.array(x, dtype=float)
    n = poly.dim
    dirs = rng.standard_normal((1, n))
    us = rng.random(1)
    out = np.empty((1, n))
    status, _ = kernels.hit_and_run(poly.A, poly.b, x, dirs, us, 0, 0, 1, BOUNDARY_MARGIN, out, 0)
    if status:
        raise UnboundedPolytope("polytope unbounded in sampled direction")
    return out[0]


def _run_chain(poly: Polytope, count: int, burn_in: int, thin: int, rng: np.random.Generator, start) -> np.ndarray:
    n = poly.dim
    x = np.array(start, dtype=float)
    out = np.empty((count, n))
    total = burn_in + count * thin
    pos = 0
    done = 0
    while done < total:
        steps = min(STEP_BLOCK, total - done)
        dirs = rng.standard_normal((steps, n))
        us = rng.random(steps)
        status, pos = kernels.hit_and_run(poly.A, poly.b, x, dirs, us, done, burn_in, thin, BOUNDARY_MARGIN, out, pos)
        if status:
            raise UnboundedPolytope("polytope unbounded in sampled direction")
        done += steps
    return out


def sample_polytope(
    poly: Polytope,
    count: int,
    burn_in: int | None = None,
    thin: int | None = None,
    seed: int = 0,
    chain_size: int = CHAIN_SIZE,
    start=None,
) -> SampleMatrix:
    """Approximately uniform points of ``poly`` as columns of a SampleMatrix.

    Draws are split over independent chains of ``chain_size`` recorded
    states; chain ``c`` uses sub-stream (seed, c) and starts at ``start``
    (default: the polytope's interior point).
    """
    n = poly.dim
    burn_in = default_burn_in(n) if burn_in is None else int(burn_in)
    thin = default_thin(n) if thin is None else int(thin)
    if burn_in < 0 or thin < 1:
        raise PreconditionError("need burn_in >= 0 and thin >= 1")
    if count < 1:
        raise PreconditionError("count must be at least 1")
    start = poly.interior_point if start is None else np.asarray(start, dtype=float)
    chains = []
    for c, lo in enumerate(range(0, count, chain_size)):
        k = min(chain_size, count - lo)
        chains.append(_run_chain(poly, k, burn_in, thin, stream(seed, c), start))
    return SampleMatrix(np.concatenate(chains, axis=0).T, seed=seed)


def _inverse_sqrt(cov: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(cov)
    if w[0] < EIGEN_FLOOR:
        raise DegenerateBody("covariance not invertible")
    return (V / np.sqrt(w)) @ V.T


def isotropize(
    poly: Polytope,
    tol: float,
    max_iter: int = 10,
    seed: int = 0,
    samples_per_iter: int | None = None,
    burn_in: int | None = None,
    thin: int | None = None,
) -> IsotropizationResult:
    """Iteratively whiten ``poly`` until the pushed-forward sample is within ``tol``.

    The residual is ||(1/M) sum y y^T - Id|| over the transformed sample at
    the current map, so it measures centring and scaling together.
    """
    if not 0 < tol < 1:
        raise DomainError("tol must lie in (0, 1)")
    n = poly.dim
    M = 100 * n if samples_per_iter is None else int(samples_per_iter)
    shift = np.zeros(n)
    T = np.eye(n)
    history = []
    best = None
    for it in range(max_iter):
        pts = sample_polytope(poly, M, burn_in, thin, seed=derive_seed(seed, "isotropize", it)).columns
        y = (pts - shift) @ T.T
        second = y.T @ y / M
        residual = float(np.max(np.abs(np.linalg.eigvalsh(second - np.eye(n)))))
        history.append(residual)
        current = IsotropizationResult(shift.copy(), T.copy(), residual, it + 1, tuple(history))
        if best is None or residual < best.residual:
            best = current
        if residual <= tol:
            return current
        mu = y.mean(axis=0)
        cov = np.cov(y, rowvar=False, bias=True).reshape(n, n)
        W = _inverse_sqrt(cov)
        shift = shift + np.linalg.solve(T, mu)
        T = W @ T
    raise IsotropizationFailed(
        f"isotropization did not reach tol={tol} in {max_iter} iterations", best.residual, best
    )
