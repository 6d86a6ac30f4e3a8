"""The named Monte Carlo experiments. Each trial maps (point, spec, seed) to statistics."""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import bounds, chaining, processes, restricted, spectral
from ..ensembles import EnsembleSpec, sample_matrix
from ..rng import derive_seed


@dataclass(frozen=True)
class Experiment:
    name: str
    required: tuple
    trial: Callable[[dict, EnsembleSpec, int, dict], dict]
    statistic: str
    failure: str | None = None
    bound: str | None = None
    default_kind: str = "gaussian"
    kinds: tuple | None = None
    constraint: Callable[[dict], str | None] | None = None

    def check_point(self, pt: dict, spec: EnsembleSpec, options: dict) -> str | None:
        for key in self.required:
            if key not in pt:
                return f"missing {key!r}"
        for key, v in pt.items():
            if key != "mode" and (isinstance(v, bool) or not isinstance(v, (int, float, str))):
                return f"{key!r} must be a number"
        if self.kinds is not None and spec.kind not in self.kinds:
            return f"ensemble kind must be one of {', '.join(self.kinds)}"
        if "n" in pt and spec.kind in ("anisotropic", "polytope") and int(pt["n"]) != spec.dim:
            return f"n must equal the fixed ensemble dimension {spec.dim}"
        if self.constraint is not None:
            return self.constraint(pt)
        return None


def _spec(spec: EnsembleSpec, pt: dict) -> EnsembleSpec:
    return spec.with_dim(int(pt["n"]))


def _n_le_N(pt):
    if int(pt["n"]) > int(pt["N"]):
        return "need n <= N"
    return None


def _eps_ok(pt):
    if not 0 < float(pt["eps"]) < 1:
        return "need 0 < eps < 1"
    return None


# ------------------------------------------------------------------ trials


def _covariance_N(pt: dict) -> int:
    n = int(pt["n"])
    if "N" in pt:
        return int(pt["N"])
    if "ratio" in pt:
        return math.ceil(float(pt["ratio"]) * n - 1e-9)
    consts = bounds.BoundConstants(C=float(pt.get("C", 1.0)), t=float(pt.get("t", 1.0)))
    return math.ceil(bounds.sample_complexity(float(pt["eps"]), consts.t, 2, consts)(n) - 1e-9)


def covariance_approximation(pt, spec, seed, opt):
    n, eps = int(pt["n"]), float(pt["eps"])
    N = _covariance_N(pt)
    M = sample_matrix(_spec(spec, pt), N, seed)
    dev = spectral.covariance_deviation(M)
    return {"deviation": dev, "N": float(N), "N_over_n": N / n, "failure": float(dev > eps)}


def gaussian_baseline(pt, spec, seed, opt):
    n, eps = int(pt["n"]), float(pt["eps"])
    N = int(pt["N"]) if "N" in pt else bounds.gaussian_sample_size(n, eps)
    M = sample_matrix(_spec(spec, pt), N, seed)
    dev = spectral.covariance_deviation(M)
    return {"deviation": dev, "N": float(N), "N_over_n": N / n, "failure": float(dev > eps)}


def two_sided_band(pt, spec, seed, opt):
    n, N = int(pt["n"]), int(pt["N"])
    s = spectral.gram_spectrum(sample_matrix(_spec(spec, pt), N, seed))
    low, high = bounds.two_sided_band(n, N, bounds.BoundConstants(C=float(opt.get("band_C", 1.0))))
    lo, hi = s.lambda_min_over_N, s.lambda_max_over_N
    return {
        "lambda_min_over_N": lo,
        "lambda_max_over_N": hi,
        "band_deviation": max(abs(lo - 1.0), abs(hi - 1.0)),
        "failure": float(lo < low or hi > high),
    }


def mp_distance(pt, spec, seed, opt):
    N = int(pt["N"])
    s = spectral.gram_spectrum(sample_matrix(_spec(spec, pt), N, seed))
    d = spectral.esd_distance(s)
    a, b = spectral.mp_edges(s.beta)
    return {
        "esd_distance": d,
        "lambda_min_over_N": s.lambda_min_over_N,
        "lambda_max_over_N": s.lambda_max_over_N,
        "edge_error": max(abs(s.lambda_min_over_N - a), abs(s.lambda_max_over_N - b)),
        "failure": float(d > float(opt.get("max_distance", 0.05))),
    }


def _restricted_mode(pt, opt, N, m):
    mode = pt.get("mode", opt.get("mode", "auto"))
    if mode == "auto":
        mode = "exact" if math.comb(N, m) <= int(opt.get("max_supports", restricted.MAX_SUPPORTS)) else "heuristic"
    return mode


def restricted_norm_sweep(pt, spec, seed, opt):
    n, N, m = int(pt["n"]), int(pt["N"]), int(pt["m"])
    M = sample_matrix(_spec(spec, pt), N, seed)
    mode = _restricted_mode(pt, opt, N, m)
    r = restricted.a_m(
        M,
        m,
        mode,
        max_supports=int(opt.get("max_supports", restricted.MAX_SUPPORTS)),
        restarts=int(opt.get("restarts", 16)),
        seed=derive_seed(seed, "search"),
    )
    shape = bounds.norm_bound(n, N, m)
    return {
        "a_m": r.value,
        "shape": shape,
        "ratio": r.value / shape,
        "exact": float(r.method == "exact"),
        "max_column_norm": float(np.linalg.norm(M.data, axis=0).max()),
    }


def max_column_tail(pt, spec, seed, opt):
    n, N = int(pt["n"]), int(pt["N"])
    K = float(pt.get("K", 1.0))
    C0 = float(pt.get("C0", opt.get("C0", 2.0)))
    M = sample_matrix(_spec(spec, pt), N, seed)
    top = float(np.linalg.norm(M.data, axis=0).max())
    event = top >= C0 * K * math.sqrt(n)
    return {"max_column_norm": top, "event": float(event), "bound": bounds.max_column_tail(n, K), "failure": float(event)}


def exp_lower_tail(pt, spec, seed, opt):
    n, N = int(pt["n"]), int(pt["N"])
    t = float(pt.get("t", 1.0))
    m = int(pt.get("m", N))
    M = sample_matrix(_spec(spec, pt), N, seed)
    mode = "exact" if m in (1, N) else _restricted_mode(pt, opt, N, m)
    value = restricted.a_m(M, m, mode, seed=derive_seed(seed, "search")).value
    event = value >= t * math.sqrt(n)
    return {"a_m": value, "event": float(event), "bound": bounds.exp_lower_tail(n, t)}


def hg_growth(pt, spec, seed, opt):
    n, N = int(pt["n"]), int(pt["N"])
    M = sample_matrix(_spec(spec, pt), N, seed)
    s = spectral.gram_spectrum(M)
    out = {
        "sup_value": spectral.covariance_deviation(M),
        "lambda_max_over_N": s.lambda_max_over_N,
        "growth": bounds.hg_growth(n, N),
    }
    baseline = opt.get("baseline", "gaussian")
    if baseline:
        B = sample_matrix(EnsembleSpec(baseline, n), N, seed)
        out["baseline_sup_value"] = spectral.covariance_deviation(B)
        out["baseline_lambda_max_over_N"] = spectral.gram_spectrum(B).lambda_max_over_N
    return out


def p_moment_process(pt, spec, seed, opt):
    n, N, p = int(pt["n"]), int(pt["N"]), float(pt["p"])
    eps = float(pt.get("eps", 0.5))
    M = sample_matrix(_spec(spec, pt), N, seed)
    r = processes.p_moment_deviation(
        M,
        p,
        _spec(spec, pt),
        restarts=int(opt.get("restarts", 32)),
        seed=derive_seed(seed, "starts"),
        reference_size=int(opt.get("reference_size", 10**6)),
    )
    threshold = bounds.sample_complexity(eps, 1.0, p)(n)
    try:
        rhs = bounds.prop_rhs(n, N, p, 1.0, 1.0)
    except ValueError:
        rhs = None
    return {
        "sup_value": r.sup_value,
        "lower_bound": float(r.lower_bound),
        "prop_rhs": rhs,
        "threshold": threshold,
        "N_over_threshold": N / threshold,
    }


def subset_sum(pt, spec, seed, opt):
    N = int(pt["N"])
    M = sample_matrix(_spec(spec, pt), N, seed)
    mode = pt.get("mode", "exact" if N <= restricted.MAX_SUBSET_N else "greedy")
    r = restricted.best_subset_sum(M, mode)
    return {"ratio": r.ratio, "value": r.value, "size": float(len(r.E)), "exact": float(mode == "exact")}


@functools.lru_cache(maxsize=64)
def _spot_net(k: int, eps: float, alpha: float) -> np.ndarray:
    return chaining.build_net(chaining.NetSpec(k, eps, alpha), seed=0)


def chaining_sup(G: np.ndarray, m: int, eps: float, alpha: float) -> float:
    """max over |F| <= m, E in F and z in the net on F of the chaining statistic."""
    N = G.shape[0]
    best = 0.0
    for k in range(2, m + 1):
        Z = _spot_net(k, eps, alpha)
        absZ = np.abs(Z)
        for F in itertools.combinations(range(N), k):
            sub = G[np.ix_(F, F)]
            for bits in range(1, (1 << k) - 1):
                inE = np.array([(bits >> b) & 1 for b in range(k)], dtype=bool)
                Y = (Z * ~inE) @ sub
                val = float(np.max(np.sum(absZ[:, inE] * np.abs(Y[:, inE]), axis=1)))
                best = max(best, val)
    return best


def chaining_tail_spotcheck(pt, spec, seed, opt):
    n, N, m = int(pt["n"]), int(pt["N"]), int(pt["m"])
    eps, alpha = float(pt["eps"]), float(pt["alpha"])
    L = pt.get("L", "min")
    L = bounds.chaining_threshold(m, N, eps) if L == "min" else float(L)
    psi = float(opt.get("psi", 2.0))
    M = sample_matrix(_spec(spec, pt), N, seed)
    A = M.data
    G = A.T @ A
    am = restricted.a_m(M, m, "exact").value
    stat = chaining_sup(G, m, eps, alpha)
    event = stat > psi * alpha * L * am
    return {"statistic": stat, "a_m": am, "L": L, "event": float(event), "bound": bounds.chaining_tail(L), "failure": float(event)}


def _restricted_ok(pt):
    if not 1 <= int(pt["m"]) <= int(pt["N"]):
        return "need 1 <= m <= N"
    return None


def _tail_ok(pt):
    if int(pt["N"]) > math.exp(math.sqrt(int(pt["n"]))):
        return "need N <= exp(sqrt(n))"
    if float(pt.get("K", 1.0)) < 1:
        return "need K >= 1"
    return None


def _p_ok(pt):
    return "need p >= 1" if float(pt["p"]) < 1 else None


def _spot_ok(pt):
    m, N = int(pt["m"]), int(pt["N"])
    if not 2 <= m <= N:
        return "need 2 <= m <= N"
    if N > 16:
        return "spot check enumerates supports; keep N <= 16"
    if not (0 < float(pt["eps"]) <= 1 and 0 < float(pt["alpha"]) <= 1):
        return "need eps, alpha in (0, 1]"
    L = pt.get("L", "min")
    if L != "min" and (isinstance(L, str) or float(L) <= 0):
        return "L must be positive or \"min\""
    return None


def _hg_ok(pt):
    if int(pt["N"]) > math.exp(int(pt["n"])):
        return "need N <= exp(n)"
    return None


EXPERIMENTS: dict[str, Experiment] = {
    e.name: e
    for e in [
        Experiment("covariance-approximation", ("n", "eps"), covariance_approximation, "deviation", "failure", constraint=_eps_ok),
        Experiment("gaussian-baseline", ("n", "eps"), gaussian_baseline, "deviation", "failure", kinds=("gaussian",), constraint=_eps_ok),
        Experiment("two-sided-band", ("n", "N"), two_sided_band, "band_deviation", "failure", "two_sided_band", constraint=_n_le_N),
        Experiment("mp-distance", ("n", "N"), mp_distance, "esd_distance", "failure", constraint=_n_le_N),
        Experiment("restricted-norm-sweep", ("n", "N", "m"), restricted_norm_sweep, "a_m", None, "norm_bound", constraint=_restricted_ok),
        Experiment("max-column-tail", ("n", "N"), max_column_tail, "max_column_norm", "failure", constraint=_tail_ok),
        Experiment(
            "exp-lower-tail", ("n", "N"), exp_lower_tail, "a_m", "event", default_kind="exponential", kinds=("exponential",)
        ),
        Experiment("hG-growth", ("n", "N"), hg_growth, "sup_value", None, "hg_growth", default_kind="hG", constraint=_hg_ok),
        Experiment("p-moment-process", ("n", "N", "p"), p_moment_process, "sup_value", None, "prop_rhs", constraint=_p_ok),
        Experiment("subset-sum", ("n", "N"), subset_sum, "ratio", None, "subset_sum"),
        Experiment(
            "chaining-tail-spotcheck", ("n", "N", "m", "eps", "alpha"), chaining_tail_spotcheck, "statistic", "failure", constraint=_spot_ok
        ),
    ]
}
