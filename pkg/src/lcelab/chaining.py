"""Nets of sparse balls, dyadic support decompositions and the chaining statistic."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import kernels
from .ensembles import SampleMatrix
from .errors import BudgetExceeded, ConfigError, DomainError, LceError, PreconditionError
from .rng import as_generator

NET_SIZE_CAP = 10**7
CLOUD_CAP = 10**7
CLOUD_FLOOR = 200_000
CLOUD_FACTOR = 100
APPROX_LIMIT = 0.4
UNIT_TOL = 1e-8


@dataclass(frozen=True)
class NetSpec:
    dim: int
    eps: float
    alpha: float = 1.0

    def __post_init__(self):
        if self.dim < 0:
            raise DomainError("dim must be non-negative")
        if not 0 < self.eps <= 1:
            raise DomainError("eps must lie in (0, 1]")
        if not 0 < self.alpha <= 1:
            raise DomainError("alpha must lie in (0, 1]")

    @property
    def cardinality_bound(self) -> float:
        return (3.0 / self.eps) ** self.dim


def _log_volumes(m: int, alpha: float) -> tuple[float, float]:
    log_cube = m * math.log(2.0 * alpha)
    log_ball = 0.5 * m * math.log(math.pi) - gammaln(0.5 * m + 1.0)
    return log_cube, log_ball


def sample_body(m: int, alpha: float, count: int, rng) -> np.ndarray:
    """Uniform points of the unit ball intersected with the cube [-alpha, alpha]^m."""
    if alpha * math.sqrt(m) <= 1.0:
        return rng.uniform(-alpha, alpha, size=(count, m))
    log_cube, log_ball = _log_volumes(m, alpha)
    out, have = [], 0
    while have < count:
        want = max(2 * (count - have), 1024)
        if log_cube <= log_ball:
            pts = rng.uniform(-alpha, alpha, size=(want, m))
            keep = np.einsum("ij,ij->i", pts, pts) <= 1.0
        else:
            g = rng.standard_normal((want, m))
            g /= np.linalg.norm(g, axis=1, keepdims=True)
            pts = g * rng.random((want, 1)) ** (1.0 / m)
            keep = np.all(np.abs(pts) <= alpha, axis=1)
        pts = pts[keep]
        out.append(pts)
        have += pts.shape[0]
    return np.concatenate(out)[:count]


def _fill_radius(m: int, alpha: float, count: int) -> float:
    # rough mesh size of a uniform cloud, used as a safety margin below eps
    log_cube, log_ball = _log_volumes(m, alpha)
    log_body = min(log_cube, log_ball)
    log_unit = 0.5 * m * math.log(math.pi) - gammaln(0.5 * m + 1.0)
    return math.exp((log_body + math.log(math.log(count) + 1.0) - math.log(count) - log_unit) / m)


def build_net(spec: NetSpec, seed: int = 0, cloud_size: int | None = None) -> np.ndarray:
    """eps-net of B_2^m intersected with alpha B_inf^m, one point per row.

    Greedy farthest-point insertion over a dense random cloud, started at
    the origin. The insertion radius sits below eps by twice the cloud's
    estimated mesh size, so cloud coverage transfers to the body.
    """
    m = spec.dim
    bound = spec.cardinality_bound
    if bound > NET_SIZE_CAP:
        raise BudgetExceeded(f"net size bound {bound:.3g} exceeds {NET_SIZE_CAP}")
    if m == 0 or min(1.0, spec.alpha * math.sqrt(m)) <= spec.eps:
        # the whole body lies within eps of the origin
        return np.zeros((1, m))
    rng = as_generator(seed)
    if cloud_size is None:
        cloud_size = int(min(max(CLOUD_FACTOR * bound, CLOUD_FLOOR), CLOUD_CAP))
    cloud = np.vstack([np.zeros((1, m)), sample_body(m, spec.alpha, cloud_size, rng)])
    radius = max(spec.eps - 2.0 * _fill_radius(m, spec.alpha, cloud_size), 0.5 * spec.eps)
    idx, reached = kernels.farthest_point(cloud, 0, radius, int(math.floor(bound)))
    if reached > radius:
        raise LceError(f"net would exceed its cardinality bound {bound:.6g}")
    return cloud[idx].copy()


def covering_radius(net: np.ndarray, probes: np.ndarray) -> float:
    """max over probes of the distance to the nearest net point."""
    worst = 0.0
    sq_net = np.einsum("ij,ij->i", net, net)
    for lo in range(0, probes.shape[0], 4096):
        P = probes[lo:lo + 4096]
        d2 = np.einsum("ij,ij->i", P, P)[:, None] - 2.0 * P @ net.T + sq_net[None, :]
        worst = max(worst, float(np.sqrt(max(np.min(d2, axis=1).max(), 0.0))))
    return worst


def nearest_point(net: np.ndarray, x: np.ndarray) -> np.ndarray:
    d2 = np.einsum("ij,ij->i", net - x, net - x)
    return net[int(np.argmin(d2))]


def sphere_net(n: int, eps: float, seed: int = 0, cloud_size: int = 200_000) -> np.ndarray:
    """Greedy eps-separated covering of a dense cloud on the unit sphere."""
    rng = as_generator(seed)
    g = rng.standard_normal((cloud_size, n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    idx, _ = kernels.farthest_point(g, 0, eps, cloud_size)
    return g[idx].copy()


def net_to_csv(net: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.atleast_2d(net):
            w.writerow([repr(float(v)) for v in row])


# ------------------------------------------------------- dyadic decomposition


def single_level_holds(n: int, N: int, m: int) -> bool:
    return m * math.log(48.0 * math.e * N / m) <= math.sqrt(n)


def level_condition(n: int, N: int, m: int, l: int) -> float:
    """Left side of the per-level size condition at level count l."""
    return (m / 2.0**l) * math.log(48.0 * math.e * 2.0**l * N / m)


def smallest_level(n: int, N: int, m: int) -> int:
    l = 0
    while level_condition(n, N, m, l) > math.sqrt(n):
        l += 1
    return l


@dataclass(frozen=True)
class DyadicDecomposition:
    l: int
    m: int
    levels: tuple
    a: tuple
    infinity_caps: tuple

    @property
    def support(self) -> tuple:
        return tuple(sorted(i for lev in self.levels for i in lev))


def dyadic_decompose(z, n: int, N: int, m: int | None = None) -> DyadicDecomposition:
    """Split supp z into levels E_0, ..., E_l by decreasing magnitude.

    E_0 holds the top floor(m/2^l) ranks and E_k the ranks in
    (floor(m/2^k), floor(m/2^(k-1))]. Only support indices are stored, so
    high levels may be empty.
    """
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != N:
        raise PreconditionError("z must have N coordinates")
    if abs(np.linalg.norm(z) - 1.0) > UNIT_TOL:
        raise PreconditionError("z must be a unit vector")
    supp = np.flatnonzero(z)
    m = supp.size if m is None else int(m)
    if not supp.size <= m <= N or m < 1:
        raise PreconditionError("need |supp z| <= m <= N")
    l = 0 if single_level_holds(n, N, m) else smallest_level(n, N, m)
    order = supp[np.argsort(-np.abs(z[supp]), kind="stable")]
    rank = {int(i): r + 1 for r, i in enumerate(order)}
    bounds = [m // 2**k for k in range(l + 1)]
    a = [bounds[l]] + [bounds[k - 1] - bounds[k] for k in range(1, l + 1)]
    levels = [tuple(sorted(i for i, r in rank.items() if r <= bounds[l]))]
    for k in range(1, l + 1):
        levels.append(tuple(sorted(i for i, r in rank.items() if bounds[k] < r <= bounds[k - 1])))
    caps = (1.0,) + tuple(math.sqrt(2.0**k / m) for k in range(1, l + 1))
    return DyadicDecomposition(l, m, tuple(levels), tuple(a), caps)


def level_net_specs(decomp: DyadicDecomposition) -> list[NetSpec]:
    """Per-level net parameters: (1/4, 1) at level 0, (2^-k, sqrt(2^k/m)) above."""
    specs = [NetSpec(len(decomp.levels[0]), 0.25, 1.0)]
    for k in range(1, decomp.l + 1):
        specs.append(NetSpec(len(decomp.levels[k]), 2.0**-k, min(1.0, decomp.infinity_caps[k])))
    return specs


def level_nets(decomp: DyadicDecomposition, seed: int = 0, cloud_size: int | None = None) -> list[np.ndarray]:
    return [build_net(s, seed=seed + k, cloud_size=cloud_size) for k, s in enumerate(level_net_specs(decomp))]


def net_approximation_error(z, decomp: DyadicDecomposition, nets) -> float:
    """|z - x|^2 with x the per-level nearest net points; must stay below 0.4."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if nets is None or len(nets) != len(decomp.levels):
        raise ConfigError("one net per decomposition level is required")
    x = np.zeros_like(z)
    for k, (lev, net) in enumerate(zip(decomp.levels, nets)):
        if not lev:
            continue
        if net is None or np.shape(net)[1] != len(lev):
            raise ConfigError(f"net for level {k} is missing or has the wrong dimension")
        x[list(lev)] = nearest_point(np.asarray(net), z[list(lev)])
    err = float(np.sum((z - x) ** 2))
    if err >= APPROX_LIMIT:
        raise LceError(f"net approximation error {err:.4f} is not below {APPROX_LIMIT}")
    return err


# ------------------------------------------------------ chaining statistic


def _split_support(z, F, E, N):
    z = np.asarray(z, dtype=float).reshape(-1)
    F = sorted(set(int(i) for i in F))
    E = sorted(set(int(i) for i in E))
    if z.size != N:
        raise PreconditionError("z must have N coordinates")
    if any(not 0 <= i < N for i in F):
        raise PreconditionError("F must index columns")
    if not set(E) <= set(F):
        raise PreconditionError("E must be a subset of F")
    off = np.ones(N, dtype=bool)
    off[F] = False
    if np.any(z[off] != 0):
        raise PreconditionError("z must be supported on F")
    rest = sorted(set(F) - set(E))
    return z, E, rest


def chaining_statistic(M: SampleMatrix, z, F, E) -> float:
    """sum over i in E of |<z_i X_i, sum_{j in F minus E} z_j X_j>|."""
    A = M.data
    z, E, rest = _split_support(z, F, E, M.N)
    if not E or not rest:
        return 0.0
    y = A[:, rest] @ z[rest]
    return float(np.sum(np.abs(z[E] * (A[:, E].T @ y))))


def chaining_pointwise_bound(M: SampleMatrix, z, F, E, alpha: float, a_m_value: float) -> float:
    """alpha * A_m * sum_{i in E} |<X_i, y/|y|>| with y the complementary partial sum."""
    A = M.data
    z, E, rest = _split_support(z, F, E, M.N)
    if not E or not rest:
        return 0.0
    y = A[:, rest] @ z[rest]
    ny = np.linalg.norm(y)
    if ny == 0:
        return 0.0
    return float(alpha * a_m_value * np.sum(np.abs(A[:, E].T @ (y / ny))))


# ----------------------------------------------------- net-to-sphere transfer


def transfer_constants(c: float) -> tuple[float, float, float, float]:
    """(delta/eps, delta_1/eps, c_1, c') for net fineness c."""
    if not 0 < c < 1:
        raise DomainError("c must lie in (0, 1)")
    d = (1 + 5 * c - 3 * c**2) / (2 * (1 - c))
    d1 = (2 + c + 3 * c**2 - 3 * c**3) / (2 * (1 - c))
    c1 = max(d, d1)
    return d, d1, c1, 2 * c1 * (1 + c1)


def net_to_sphere_transfer(sup_on_net: float, eps: float, c: float) -> float:
    """Sphere-wide deviation bound c' eps implied by a net sup of at most eps."""
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    _, _, _, cprime = transfer_constants(c)
    if sup_on_net > eps:
        raise PreconditionError("sup on the net exceeds eps")
    return cprime * eps
