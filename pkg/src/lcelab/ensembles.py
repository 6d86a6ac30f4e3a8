"""Random-vector laws, sample matrices and their true marginal moments.

Every isotropic kind is normalised analytically: the cube is
``[-sqrt(3), sqrt(3)]^n``, the ball has radius ``sqrt(n + 2)`` and the
exponential law has coordinate density ``exp(-sqrt(2)|s|) / sqrt(2)``.
"""
from __future__ import annotations

import csv
import functools
import json
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import special

from .errors import DomainError, PreconditionError, SamplerNotInitialized
from .rng import stream

if TYPE_CHECKING:  # pragma: no cover
    from .mcmc import IsotropizationResult, Polytope

KINDS = ("gaussian", "exponential", "cube", "ball", "polytope", "hG", "anisotropic")

# columns are drawn in fixed-size blocks, each block owning two sub-streams
COLUMN_BLOCK = 4096
DEFAULT_REFERENCE_SIZE = 10**6

_SQRT3 = math.sqrt(3.0)
_LAPLACE_SCALE = 1.0 / math.sqrt(2.0)
_TINY = 2.0**-53


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Description of a random-vector law on R^dim.

    ``anisotropic`` wraps ``base`` and multiplies its draws by ``cov_factor``.
    ``polytope`` needs both the body and an isotropizing affine map.
    """

    kind: str
    dim: int
    polytope: Polytope | None = None
    isotropization: IsotropizationResult | None = None
    cov_factor: np.ndarray | None = None
    base: EnsembleSpec | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown ensemble kind {self.kind!r}")
        if int(self.dim) < 1:
            raise DomainError("dim must be a positive integer")
        object.__setattr__(self, "dim", int(self.dim))
        if self.kind == "anisotropic":
            if self.base is None or self.cov_factor is None:
                raise DomainError("anisotropic spec needs a base spec and cov_factor")
            T = np.array(self.cov_factor, dtype=float)
            if T.shape != (self.dim, self.base.dim):
                raise DomainError("cov_factor shape must be (dim, base.dim)")
            T.setflags(write=False)
            object.__setattr__(self, "cov_factor", T)
        if self.kind == "polytope":
            if self.polytope is None:
                raise DomainError("polytope spec needs a polytope")
            if self.polytope.dim != self.dim:
                raise DomainError("polytope dimension does not match dim")

    @property
    def log_concave(self) -> bool:
        if self.kind == "hG":
            return False
        if self.kind == "anisotropic":
            return self.base.log_concave
        return True

    @property
    def isotropic(self) -> bool:
        """True for laws that are exactly centred with identity covariance."""
        return self.kind in ("gaussian", "exponential", "cube", "ball", "hG")

    @property
    def radial(self) -> bool:
        """Marginal law of <X, y> depends only on |y| (rotation invariance)."""
        return self.kind in ("gaussian", "ball", "hG")

    def with_dim(self, n: int) -> EnsembleSpec:
        if self.kind in ("anisotropic", "polytope"):
            if n != self.dim:
                raise DomainError(f"{self.kind} spec has fixed dimension {self.dim}")
            return self
        return EnsembleSpec(self.kind, n)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "dim": self.dim}
        if self.kind == "anisotropic":
            out["cov_factor"] = self.cov_factor.tolist()
            out["base"] = self.base.to_dict()
        if self.kind == "polytope":
            out["polytope"] = self.polytope.to_dict()
            if self.isotropization is not None:
                out["isotropization"] = self.isotropization.to_dict()
        return out

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> EnsembleSpec:
        kind = d["kind"]
        dim = d.get("dim")
        if kind == "anisotropic":
            base = cls.from_dict(d["base"])
            T = np.asarray(d["cov_factor"], dtype=float)
            return cls(kind, dim if dim is not None else T.shape[0], cov_factor=T, base=base)
        if kind == "polytope":
            from .mcmc import IsotropizationResult, Polytope

            poly = Polytope.from_dict(d["polytope"])
            iso = d.get("isotropization")
            return cls(
                kind,
                dim if dim is not None else poly.dim,
                polytope=poly,
                isotropization=IsotropizationResult.from_dict(iso) if iso else None,
            )
        return cls(kind, dim)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> EnsembleSpec:
        return cls.from_dict(json.loads(text))

    def key(self) -> str:
        return self.to_json()


def anisotropic(base: EnsembleSpec, T) -> EnsembleSpec:
    T = np.asarray(T, dtype=float)
    return EnsembleSpec("anisotropic", T.shape[0], cov_factor=T, base=base)


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """The n x N matrix whose columns are the sampled vectors."""

    data: np.ndarray
    seed: int | None = None
    spec: EnsembleSpec | None = None

    def __post_init__(self):
        a = np.array(self.data, dtype=float, order="C")
        if a.ndim != 2:
            raise PreconditionError("sample matrix must be two-dimensional")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def N(self) -> int:
        return self.data.shape[1]

    @property
    def columns(self) -> np.ndarray:
        """N x n view, one sampled vector per row."""
        return self.data.T

    @classmethod
    def from_columns(cls, columns, seed=None, spec=None) -> SampleMatrix:
        cols = np.atleast_2d(np.asarray(columns, dtype=float))
        return cls(cols.T, seed=seed, spec=spec)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for col in self.columns:
                writer.writerow([repr(float(v)) for v in col])

    @classmethod
    def from_csv(cls, path) -> SampleMatrix:
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
        if not rows:
            raise PreconditionError(f"{path}: no columns")
        return cls.from_columns(rows)


def _draw(spec: EnsembleSpec, main: np.random.Generator, aux: np.random.Generator, count: int) -> np.ndarray:
    """``count`` draws as rows of a (count, dim) array."""
    n = spec.dim
    kind = spec.kind
    if kind == "gaussian":
        return main.standard_normal((count, n))
    if kind == "exponential":
        u = main.random((count, n)) - 0.5
        tail = np.maximum(1.0 - 2.0 * np.abs(u), _TINY)
        return -_LAPLACE_SCALE * np.sign(u) * np.log(tail)
    if kind == "cube":
        return _SQRT3 * (2.0 * main.random((count, n)) - 1.0)
    if kind == "ball":
        g = main.standard_normal((count, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = math.sqrt(n + 2.0) * aux.random(count) ** (1.0 / n)
        return g * r[:, None]
    if kind == "hG":
        g = main.standard_normal((count, n))
        return g * aux.standard_normal(count)[:, None]
    if kind == "anisotropic":
        return _draw(spec.base, main, aux, count) @ spec.cov_factor.T
    raise SamplerNotInitialized("sampler not initialized")


def sample_vector(spec: EnsembleSpec, rng) -> np.ndarray:
    """One draw from ``spec`` using generator ``rng``."""
    if spec.kind == "polytope":
        if spec.isotropization is None:
            raise SamplerNotInitialized("sampler not initialized")
        from .mcmc import sample_polytope

        seed = int(rng.integers(0, 2**63))
        raw = sample_polytope(spec.polytope, 1, seed=seed)
        return spec.isotropization.apply(raw.columns)[0]
    return _draw(spec, rng, rng, 1)[0]


def sample_matrix(spec: EnsembleSpec, N: int, seed: int, **mcmc_options) -> SampleMatrix:
    """N independent columns; column block ``b`` uses sub-streams (seed, b, *).

    The first k columns do not depend on N.
    """
    if N < 1:
        raise PreconditionError("N must be at least 1")
    if spec.kind == "polytope":
        if spec.isotropization is None:
            raise SamplerNotInitialized("sampler not initialized")
        from .mcmc import sample_polytope

        raw = sample_polytope(spec.polytope, N, seed=seed, **mcmc_options)
        rows = spec.isotropization.apply(raw.columns)
        return SampleMatrix(rows.T, seed=seed, spec=spec)
    blocks = []
    for b, start in enumerate(range(0, N, COLUMN_BLOCK)):
        count = min(COLUMN_BLOCK, N - start)
        blocks.append(_draw(spec, stream(seed, b, 0), stream(seed, b, 1), count))
    rows = np.concatenate(blocks, axis=0)
    return SampleMatrix(rows.T, seed=seed, spec=spec)


# ---------------------------------------------------------------- moments


def gaussian_abs_moment(p: float) -> float:
    """E|g|^p for a standard normal g."""
    return 2.0 ** (p / 2.0) * math.gamma((p + 1.0) / 2.0) / math.sqrt(math.pi)


def _ball_marginal_moment(n: int, p: float) -> float:
    # first coordinate of the uniform ball of radius R has density ~ (R^2 - t^2)^((n-1)/2)
    R = math.sqrt(n + 2.0)
    log = (
        p * math.log(R)
        + special.gammaln((p + 1.0) / 2.0)
        + special.gammaln(n / 2.0 + 1.0)
        - 0.5 * math.log(math.pi)
        - special.gammaln((n + p) / 2.0 + 1.0)
    )
    return math.exp(log)


def _radial_unit_moment(spec: EnsembleSpec, p: float) -> float:
    if spec.kind == "gaussian":
        return gaussian_abs_moment(p)
    if spec.kind == "ball":
        return _ball_marginal_moment(spec.dim, p)
    if spec.kind == "hG":
        return gaussian_abs_moment(p) ** 2
    raise DomainError(f"{spec.kind} is not rotation invariant")


@dataclass(frozen=True)
class Moment:
    value: float
    estimated: bool
    stderr: float = 0.0

    def __float__(self) -> float:
        return self.value


@functools.lru_cache(maxsize=8)
def _reference_rows(spec_key: str, size: int, seed: int) -> np.ndarray:
    spec = EnsembleSpec.from_json(spec_key)
    rows = np.ascontiguousarray(sample_matrix(spec, size, seed).columns)
    rows.setflags(write=False)
    return rows


def reference_sample(spec: EnsembleSpec, size: int = DEFAULT_REFERENCE_SIZE, seed: int = 0) -> np.ndarray:
    """Cached independent reference draws (size, dim), reused across directions."""
    return _reference_rows(spec.key(), int(size), int(seed))


class MomentModel:
    """y -> E|<X, y>|^p and its gradient, exact where a closed form exists.

    Exact cases: rotation-invariant kinds (gaussian, ball, hG), any exactly
    isotropic kind at p = 2, and anisotropic wrappers of those.
    Everything else is a Monte Carlo average over a cached reference sample.
    """

    def __init__(self, spec: EnsembleSpec, p: float, reference_size: int = DEFAULT_REFERENCE_SIZE, seed: int = 0):
        if p < 1:
            raise DomainError("moment order p must be >= 1")
        self.spec = spec
        self.p = float(p)
        self._reference = (int(reference_size), int(seed))
        base, T = spec, None
        if spec.kind == "anisotropic":
            base, T = spec.base, spec.cov_factor
        self._T = T
        if base.radial:
            self._const = _radial_unit_moment(base, self.p)
        elif base.isotropic and self.p == 2.0:
            self._const = 1.0
        else:
            self._const = None
        self.exact = self._const is not None
        self._ref = None if self.exact else reference_sample(spec, reference_size, seed)

    def _pull(self, y):
        return y if self._T is None else self._T.T @ y

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float)
        if self.exact:
            return self._const * float(np.linalg.norm(self._pull(y))) ** self.p
        return float(np.mean(np.abs(self._ref @ y) ** self.p))

    def grad(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        p = self.p
        if self.exact:
            w = self._pull(y)
            r = float(np.linalg.norm(w))
            if r == 0.0:
                return np.zeros_like(y)
            g = self._const * p * r ** (p - 2.0) * w
            return g if self._T is None else self._T @ g
        proj = self._ref @ y
        weights = p * np.abs(proj) ** (p - 1.0) * np.sign(proj)
        return self._ref.T @ weights / proj.size

    def stderr(self, y) -> float:
        if self.exact:
            return 0.0
        vals = np.abs(self._ref @ np.asarray(y, dtype=float)) ** self.p
        return float(vals.std(ddof=1) / math.sqrt(vals.size))

    def truncated_value(self, y, B: float) -> float:
        """E min(|<X, y>|, B)^p."""
        y = np.asarray(y, dtype=float)
        base = self.spec.base if self.spec.kind == "anisotropic" else self.spec
        if base.kind == "gaussian":
            sigma = float(np.linalg.norm(self._pull(y)))
            if sigma == 0.0:
                return 0.0
            return sigma**self.p * gaussian_truncated_moment(self.p, B / sigma)
        ref = self._ref
        if ref is None:
            ref = reference_sample(self.spec, *self._reference)
        return float(np.mean(np.minimum(np.abs(ref @ y), B) ** self.p))


def gaussian_truncated_moment(p: float, B: float) -> float:
    """E min(|g|, B)^p for a standard normal g."""
    inner = gaussian_abs_moment(p) * special.gammainc((p + 1.0) / 2.0, B * B / 2.0)
    return float(inner + B**p * special.erfc(B / math.sqrt(2.0)))


def true_moment(spec: EnsembleSpec, y, p: float, reference_size: int = DEFAULT_REFERENCE_SIZE, seed: int = 0) -> Moment:
    """E|<X, y>|^p for unit y, flagged ``estimated`` when computed by Monte Carlo."""
    if p < 1:
        raise DomainError("moment order p must be >= 1")
    y = np.asarray(y, dtype=float)
    if abs(np.linalg.norm(y) - 1.0) > 1e-8:
        raise PreconditionError("y must be a unit vector")
    model = MomentModel(spec, p, reference_size, seed)
    return Moment(model.value(y), not model.exact, model.stderr(y))
