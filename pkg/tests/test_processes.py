"""Moment deviation processes, truncation, psi_1 estimation and Bernstein tails."""
from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from lcelab.ensembles import EnsembleSpec, SampleMatrix, gaussian_truncated_moment, sample_matrix
from lcelab.errors import DomainError, PreconditionError
from lcelab.processes import (
    MomentProcessResult,
    bernstein_tail,
    deviation_split,
    moment_psi1_ratio,
    p_moment_deviation,
    process_value,
    psi1_estimate,
    truncated_deviation,
)
from lcelab.spectral import covariance_deviation

GAUSS = EnsembleSpec("gaussian", 1)


class TestMomentDeviation:
    def test_one_dimensional(self, rng):
        x = rng.standard_normal(50)
        r = p_moment_deviation(SampleMatrix(x[None, :]), 2, GAUSS)
        assert r.sup_value == pytest.approx(abs(np.mean(x**2) - 1))

    def test_large_gaussian(self):
        M = sample_matrix(EnsembleSpec("gaussian", 5), 10**6, 1)
        assert p_moment_deviation(M, 2, EnsembleSpec("gaussian", 5)).sup_value <= 0.02

    def test_exact_matches_covariance_deviation(self, rng):
        for kind in ("gaussian", "cube", "exponential"):
            M = sample_matrix(EnsembleSpec(kind, 4), 30, int(rng.integers(1000)))
            r = p_moment_deviation(M, 2, EnsembleSpec(kind, 4))
            assert r.method == "exact-p2"
            assert r.sup_value == pytest.approx(covariance_deviation(M), rel=1e-8)

    def test_exact_vs_multistart(self, rng):
        for _ in range(50):
            n = int(rng.integers(1, 7))
            spec = EnsembleSpec("gaussian", n)
            M = SampleMatrix(rng.standard_normal((n, int(rng.integers(n, 40)))))
            ex = p_moment_deviation(M, 2, spec).sup_value
            ms = p_moment_deviation(M, 2, spec, method="multistart", restarts=8).sup_value
            assert ms == pytest.approx(ex, abs=1e-4)

    def test_argmax_reproduces_value(self, rng):
        spec = EnsembleSpec("gaussian", 3)
        M = SampleMatrix(rng.standard_normal((3, 60)))
        for p in (1.0, 2.0, 3.5):
            r = p_moment_deviation(M, p, spec, restarts=8)
            y = np.array(r.argmax)
            assert abs(process_value(M, y, p, spec)) == pytest.approx(r.sup_value, rel=1e-6)
            assert r.lower_bound == (p != 2)

    def test_p_domain(self, rng):
        with pytest.raises(DomainError):
            p_moment_deviation(SampleMatrix(np.ones((1, 3))), 0.5, GAUSS)

    def test_exact_path_requires_isotropy(self):
        spec = EnsembleSpec("anisotropic", 1, cov_factor=[[2.0]], base=GAUSS)
        with pytest.raises(PreconditionError):
            p_moment_deviation(SampleMatrix(np.ones((1, 3))), 2, spec, method="exact-p2")

    def test_json_roundtrip(self, rng):
        r = p_moment_deviation(SampleMatrix(rng.standard_normal((2, 9))), 3, EnsembleSpec("gaussian", 2), restarts=4)
        assert MomentProcessResult.from_dict(json.loads(r.to_json())) == r


class TestTruncation:
    def test_large_B_matches_untruncated(self, rng):
        spec = EnsembleSpec("gaussian", 2)
        M = SampleMatrix(rng.uniform(-2, 2, size=(2, 40)))
        probe = rng.standard_normal((25, 2))
        probe /= np.linalg.norm(probe, axis=1, keepdims=True)
        full = max(abs(process_value(M, y, 3.0, spec)) for y in probe)
        assert truncated_deviation(M, 3.0, 1e9, probe, spec) == pytest.approx(full, rel=1e-12)

    def test_small_B_deterministic_empirical_part(self):
        spec = EnsembleSpec("gaussian", 1)
        M = SampleMatrix(np.array([[5.0, -6.0, 7.0]]))
        B, p = 1.5, 2.0
        expected = abs(B**p - gaussian_truncated_moment(p, B))
        assert truncated_deviation(M, p, B, [[1.0]], spec) == pytest.approx(expected, rel=1e-12)

    def test_preconditions(self, rng):
        M = SampleMatrix(rng.standard_normal((2, 5)))
        with pytest.raises(PreconditionError):
            truncated_deviation(M, 2, 1.0, [[1.0, 0.0]], EnsembleSpec("gaussian", 2))
        with pytest.raises(PreconditionError):
            truncated_deviation(M, 2, 3.0, np.empty((0, 2)), EnsembleSpec("gaussian", 2))

    def test_split_identity_and_exceedance_inequality(self, rng):
        for kind in ("gaussian", "exponential"):
            spec = EnsembleSpec(kind, 3)
            M = sample_matrix(spec, 500, int(rng.integers(1000)))
            for p, B in ((1.5, 1.2), (3.0, 2.0)):
                y = rng.standard_normal(3)
                parts = deviation_split(M, p, B, y, spec, reference_size=50_000)
                total = parts["truncated"] + parts["empirical_tail"] + parts["expected_tail"]
                assert parts["full"] == pytest.approx(total, rel=1e-6, abs=1e-12)
                assert B * math.sqrt(parts["exceedances"]) <= math.sqrt(parts["exceedance_energy"]) + 1e-12


class TestPsi1:
    def test_constant(self):
        est = psi1_estimate(np.full(2000, 3.0))
        assert est.value == pytest.approx(3.0 / math.log(2), rel=1e-9)
        assert np.mean(np.exp(3.0 / est.value)) == pytest.approx(2.0, abs=1e-6)

    def test_laplace(self):
        x = sample_matrix(EnsembleSpec("exponential", 1), 10**6, 7).data[0]
        assert psi1_estimate(x).value == pytest.approx(math.sqrt(2), abs=0.05)

    def test_normal_matches_quadrature(self):
        def excess(C):
            val, _ = integrate.quad(lambda t: math.exp(t / C - t * t / 2) / math.sqrt(2 * math.pi), 0, 60)
            return 2 * val - 2.0

        root = optimize.brentq(excess, 0.5, 5.0)
        x = np.random.default_rng(3).standard_normal(10**6)
        est = psi1_estimate(x).value
        assert 1.0 <= est <= 1.6
        assert est == pytest.approx(root, abs=0.03)

    def test_too_few_samples(self):
        with pytest.raises(PreconditionError):
            psi1_estimate(np.ones(10))

    def test_all_zero(self):
        assert psi1_estimate(np.zeros(1000)).value == 0.0

    @given(st.floats(0.01, 100.0))
    @settings(max_examples=25, deadline=None)
    def test_homogeneous(self, lam):
        x = np.random.default_rng(0).standard_normal(1000)
        assert psi1_estimate(lam * x).value == pytest.approx(lam * psi1_estimate(x).value, rel=1e-6)

    def test_mean_condition_at_root(self, rng):
        x = rng.exponential(size=5000)
        est = psi1_estimate(x)
        assert not est.at_edge
        assert np.mean(np.exp(x / est.value)) == pytest.approx(2.0, abs=1e-6)


class TestMomentRatio:
    def test_constant(self):
        assert moment_psi1_ratio(np.full(1000, 2.5), 1) == pytest.approx(math.log(2))

    def test_laplace_second_moment(self):
        x = sample_matrix(EnsembleSpec("exponential", 1), 10**6, 8).data[0]
        assert moment_psi1_ratio(x, 2) == pytest.approx(1 / (2 * math.sqrt(2)), abs=0.01)

    @pytest.mark.parametrize("kind", ["gaussian", "exponential"])
    def test_ratio_at_most_one(self, kind):
        x = sample_matrix(EnsembleSpec(kind, 1), 200_000, 9).data[0]
        psi = psi1_estimate(x)
        worst = max(moment_psi1_ratio(x, p, psi) for p in range(1, 9))
        assert worst <= 1.0 + 0.1


class TestBernstein:
    def test_examples(self):
        assert bernstein_tail(1, 1, 100, 0) == 1.0
        assert bernstein_tail(1, 1, 100, 0.5) == pytest.approx(math.exp(-75 / 7), rel=1e-12)

    def test_monotone_grid(self):
        taus = np.linspace(0, 2, 21)
        Ns = [1, 10, 100, 1000]
        T = np.array([[bernstein_tail(0.5, 2.0, N, t) for t in taus] for N in Ns])
        assert np.all(np.diff(T, axis=1) <= 0) and np.all(np.diff(T, axis=0) <= 0)

    @given(st.floats(0, 10), st.floats(1e-3, 10), st.integers(1, 10**6), st.floats(0, 10))
    def test_range(self, s2, a, N, tau):
        assert 0.0 <= bernstein_tail(s2, a, N, tau) <= 1.0

    def test_domain(self):
        with pytest.raises(DomainError):
            bernstein_tail(-1, 1, 1, 1)
