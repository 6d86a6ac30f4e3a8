"""Closed-form bound evaluators and calibration of their absolute constants.

All logarithms are natural. Every evaluator takes its unspecified absolute
constants through ``BoundConstants`` and is monotone in the leading one.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

from .errors import DomainError, PreconditionError

MIN_CALIBRATION_RECORDS = 10


@dataclass(frozen=True)
class BoundConstants:
    C: float = 1.0
    c: float = 1.0
    K: float = 1.0
    t: float = 1.0
    s: float = 1.0
    psi: float = 2.0

    def __post_init__(self):
        for name in ("C", "c", "K", "t", "s", "psi"):
            if getattr(self, name) < 0:
                raise DomainError(f"{name} must be non-negative")
        for name in ("K", "t", "s"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be at least 1")

    def with_C(self, C: float) -> BoundConstants:
        return replace(self, C=C)


DEFAULT = BoundConstants()


def norm_bound(n: int, N: int, m: int, consts: BoundConstants = DEFAULT, refined: bool = False) -> float:
    """C K (sqrt(n) + sqrt(m) log(2N/m)); ``refined`` uses log(2N/max(n, m))."""
    if not 1 <= m <= N:
        raise DomainError("need 1 <= m <= N")
    denom = max(n, m) if refined else m
    return consts.C * consts.K * (math.sqrt(n) + math.sqrt(m) * math.log(2.0 * N / denom))


def two_sided_band(n: int, N: int, consts: BoundConstants = DEFAULT) -> tuple[float, float]:
    """1 -/+ C sqrt(n/N) log(2N/n)."""
    if n > N:
        raise DomainError("need n <= N")
    w = consts.C * math.sqrt(n / N) * math.log(2.0 * N / n)
    return 1.0 - w, 1.0 + w


@dataclass(frozen=True)
class SampleComplexity:
    """N-threshold coefficient(eps, t, p) * n^max(p/2, 1) as a callable of n."""

    coefficient: float
    exponent: float

    def __call__(self, n) -> float:
        return self.coefficient * n**self.exponent


def sample_complexity(eps: float, t: float, p: float, consts: BoundConstants = DEFAULT) -> SampleComplexity:
    if not 0 < eps < 1:
        raise DomainError("eps must lie in (0, 1)")
    if t < 1 or p < 1:
        raise DomainError("need t >= 1 and p >= 1")
    C = consts.C
    if p == 2:
        coef = C * t**4 / eps**2 * math.log(2.0 * t * t / eps**2) ** 2
    elif p > 2:
        coef = C * t ** (2 * p) / eps**2 * math.log(2.0 * t * t / eps**2) ** (2 * p - 2)
    else:
        coef = C * t ** (2 * p) / eps**2 * math.log(2.0 * t ** (2 * p) / eps**2) ** (2 * p - 2)
    return SampleComplexity(coef, max(p / 2.0, 1.0))


def gaussian_sample_size(n: int, eps: float) -> int:
    """Smallest N with N >= 4n/eps^2."""
    return math.ceil(4.0 * n / eps**2 - 1e-9)


def prop_rhs(n: int, N: int, p: float, s: float, t: float, consts: BoundConstants = DEFAULT) -> float:
    """Three-term right-hand side of the truncated p-moment deviation estimate."""
    if not n <= N <= math.exp(math.sqrt(n)):
        raise DomainError("need n <= N <= exp(sqrt(n))")
    if s < 1 or t < 1 or p < 1:
        raise DomainError("need s, t, p >= 1")
    C = consts.C
    lead = C ** (p - 1) * t * s ** (p - 1) * p * math.log(2.0 * N / n) ** (p - 1) * math.sqrt(n / N)
    middle = C**p * s**p * n ** (p / 2.0) / N
    tail = C**p * p**p * (n / (2.0 * N)) ** s
    return lead + middle + tail


def techn_bound(m: int, N: int, l: int, consts: BoundConstants = DEFAULT) -> float:
    """C psi K ((m/2^l) log(48 e N 2^l / m) + sqrt(m) log(2N/m))."""
    if not 1 <= m <= N:
        raise DomainError("need 1 <= m <= N")
    if l < 0 or 2**l > m:
        raise DomainError("need 0 <= l <= log2(m)")
    first = (m / 2.0**l) * math.log(48.0 * math.e * N * 2.0**l / m)
    return consts.C * consts.psi * consts.K * (first + math.sqrt(m) * math.log(2.0 * N / m))


def techn_level(m: int, N: int) -> int:
    """Largest l <= log2 m with (2m/2^l) log(12 e N 2^l / m) >= sqrt(m) log(2N/m)."""
    target = math.sqrt(m) * math.log(2.0 * N / m)
    best = 0
    l = 0
    while 2 ** l <= m:
        if (2.0 * m / 2.0**l) * math.log(12.0 * math.e * N * 2.0**l / m) >= target:
            best = l
        l += 1
    return best


def ellp_bound(n: int, N: int, p: float, consts: BoundConstants = DEFAULT) -> float:
    """C (N^(1/p) + sqrt(n)) for p >= 2; C (N^(1/p) + N^(1/p - 1/2) sqrt(n)) below."""
    if p < 1:
        raise DomainError("p must be >= 1")
    inv = 0.0 if math.isinf(p) else 1.0 / p
    if p >= 2:
        return consts.C * (N**inv + math.sqrt(n))
    return consts.C * (N**inv + N ** (inv - 0.5) * math.sqrt(n))


def level_net_log_count(m: int, N: int, k: int) -> float:
    """log of the level-k net-sum cardinality bound (4m/2^k) log(6 e 4^k N / m)."""
    return (4.0 * m / 2.0**k) * math.log(6.0 * math.e * 4.0**k * N / m)


def chaining_threshold(m: int, N: int, eps: float) -> float:
    """Smallest admissible L = 2m log(12 e N / (m eps)) in the chaining tail estimate."""
    return 2.0 * m * math.log(12.0 * math.e * N / (m * eps))


def chaining_tail(L: float) -> float:
    return math.exp(-L / 2.0)


def max_column_tail(n: int, K: float) -> float:
    return math.exp(-K * math.sqrt(n))


def exp_lower_tail(n: int, t: float) -> float:
    return math.exp(-math.sqrt(2.0) * t * math.sqrt(n))


def hg_growth(n: int, N: int, c: float = 1.0) -> float:
    """c (n/N) log N."""
    return c * (n / N) * math.log(N)


# ---------------------------------------------------------------- calibration


@dataclass(frozen=True)
class BoundSpec:
    evaluate: Callable[[dict, float], float]
    statistic: str
    direction: str  # "upper": stat <= bound(C); "lower": stat >= bound(C)
    linear: bool = True


def _band_width(pt, C):
    return C * math.sqrt(pt["n"] / pt["N"]) * math.log(2.0 * pt["N"] / pt["n"])


def _consts(pt, C):
    keys = {k: pt[k] for k in ("K", "t", "s", "psi") if k in pt}
    return BoundConstants(C=C, **keys)


BOUNDS: dict[str, BoundSpec] = {
    "norm_bound": BoundSpec(lambda pt, C: norm_bound(pt["n"], pt["N"], pt["m"], _consts(pt, C)), "a_m", "upper"),
    "norm_bound_refined": BoundSpec(
        lambda pt, C: norm_bound(pt["n"], pt["N"], pt["m"], _consts(pt, C), refined=True), "a_m", "upper"
    ),
    "two_sided_band": BoundSpec(_band_width, "band_deviation", "upper"),
    "ellp_bound": BoundSpec(lambda pt, C: ellp_bound(pt["n"], pt["N"], pt["p"], _consts(pt, C)), "ellp_norm", "upper"),
    "techn_bound": BoundSpec(lambda pt, C: techn_bound(pt["m"], pt["N"], pt["l"], _consts(pt, C)), "a_m", "upper"),
    "prop_rhs": BoundSpec(
        lambda pt, C: prop_rhs(pt["n"], pt["N"], pt["p"], pt.get("s", 1.0), pt.get("t", 1.0), _consts(pt, C)),
        "sup_value",
        "upper",
        linear=False,
    ),
    "subset_sum": BoundSpec(lambda pt, C: C, "ratio", "upper"),
    "hg_growth": BoundSpec(lambda pt, C: hg_growth(pt["n"], pt["N"], C), "lambda_max_over_N", "lower"),
}


@dataclass(frozen=True)
class CalibrationResult:
    bound: str
    constant: float
    direction: str
    records: int
    grid: tuple = field(default=())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["grid"] = [dict(g) for g in self.grid]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _fields(rec):
    if isinstance(rec, dict):
        return rec.get("point", {}), rec.get("stats", {}), rec.get("error")
    return rec.point, rec.stats, getattr(rec, "error", None)


def _solve(spec: BoundSpec, pt: dict, stat: float) -> float:
    """Constant at which the bound meets ``stat`` exactly."""
    if spec.linear:
        unit = spec.evaluate(pt, 1.0)
        if unit <= 0:
            raise PreconditionError("bound shape is not positive at this grid point")
        return stat / unit
    lo, hi = 0.0, 1.0
    while spec.evaluate(pt, hi) < stat:
        hi *= 2.0
        if hi > 1e300:
            raise PreconditionError("bound never reaches the statistic")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if spec.evaluate(pt, mid) >= stat:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-14 * hi:
            break
    return hi


def calibrate(records, bound: str, statistic: str | None = None, min_records: int = MIN_CALIBRATION_RECORDS) -> CalibrationResult:
    """Extreme constant making ``bound`` hold for every record.

    Upper bounds give the smallest C with stat <= bound(C) everywhere,
    lower bounds the largest c with stat >= bound(c) everywhere.
    """
    if bound not in BOUNDS:
        raise DomainError(f"unknown bound id {bound!r}")
    spec = BOUNDS[bound]
    key = statistic or spec.statistic
    records = list(records)
    if not records:
        raise PreconditionError("no records to calibrate")
    usable = []
    for rec in records:
        pt, stats, err = _fields(rec)
        if err:
            continue
        if key not in stats or stats[key] is None:
            raise PreconditionError(f"record lacks statistic {key!r}")
        usable.append((pt, float(stats[key])))
    if len(usable) < min_records:
        raise PreconditionError(f"need at least {min_records} records, got {len(usable)}")
    try:
        solved = [_solve(spec, pt, stat) for pt, stat in usable]
    except KeyError as exc:
        raise PreconditionError(f"grid point lacks field {exc.args[0]!r} for bound {bound!r}") from None
    constant = max(solved) if spec.direction == "upper" else min(solved)
    grid = tuple(dict(t) for t in sorted({tuple(sorted(pt.items())) for pt, _ in usable}))
    return CalibrationResult(bound, float(constant), spec.direction, len(usable), grid)
