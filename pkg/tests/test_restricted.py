"""Restricted norms, best subset sums and the subset split."""
from __future__ import annotations

import json
import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lcelab.ensembles import EnsembleSpec, SampleMatrix, sample_matrix
from lcelab.errors import BudgetExceeded, PreconditionError
from lcelab.restricted import RestrictedNormResult, a_m, best_subset_sum, cross_term, split_set, subset_sum_scale

from .conftest import matrix_from_columns


def _brute_a_m(A, m):
    return max(np.linalg.norm(A[:, list(F)], 2) for F in combinations(range(A.shape[1]), m))


class TestRestrictedNorm:
    def test_m1_is_max_column(self, rng):
        M = SampleMatrix(rng.standard_normal((3, 9)))
        r = a_m(M, 1)
        assert r.value == pytest.approx(np.linalg.norm(M.data, axis=0).max())
        assert r.method == "exact"

    def test_mN_is_operator_norm(self, rng):
        M = SampleMatrix(rng.standard_normal((4, 7)))
        assert a_m(M, 7).value == pytest.approx(np.linalg.norm(M.data, 2), rel=1e-8)

    def test_repeated_column(self):
        assert a_m(matrix_from_columns([1, 0], [1, 0]), 2).value == pytest.approx(math.sqrt(2))

    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_exact_matches_brute_force(self, rng, m):
        for _ in range(4):
            A = rng.standard_normal((3, 10))
            assert a_m(SampleMatrix(A), m).value == pytest.approx(_brute_a_m(A, m), rel=1e-10)

    def test_witness_reproduces_value(self, rng):
        M = SampleMatrix(rng.standard_normal((5, 14)))
        for mode in ("exact", "heuristic"):
            r = a_m(M, 3, mode)
            z = np.zeros(M.N)
            z[list(r.support)] = r.z
            assert len(r.support) <= 3
            assert np.linalg.norm(z) == pytest.approx(1.0)
            assert np.linalg.norm(M.data @ z) == pytest.approx(r.value, rel=1e-8)

    def test_monotone_in_m(self, rng):
        M = SampleMatrix(rng.standard_normal((4, 11)))
        vals = [a_m(M, m).value for m in range(1, 12)]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(vals, vals[1:]))

    def test_heuristic_sandwich(self, rng):
        M = sample_matrix(EnsembleSpec("exponential", 10), 120, 4)
        r = a_m(M, 12, "heuristic")
        assert r.method == "local-search"
        assert np.linalg.norm(M.data, axis=0).max() <= r.value * (1 + 1e-12)
        assert r.value <= np.linalg.norm(M.data, 2) * (1 + 1e-12)

    def test_heuristic_usually_exact_on_small_cases(self, rng):
        hits = 0
        for _ in range(10):
            M = SampleMatrix(rng.standard_normal((3, 12)))
            hits += a_m(M, 3, "heuristic").value >= a_m(M, 3).value * (1 - 1e-9)
        assert hits >= 8

    @given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
    @settings(max_examples=20, deadline=None)
    def test_scaling(self, c):
        A = np.random.default_rng(0).standard_normal((3, 8))
        assert a_m(SampleMatrix(c * A), 3).value == pytest.approx(abs(c) * a_m(SampleMatrix(A), 3).value, rel=1e-9)

    def test_budget(self, rng):
        M = SampleMatrix(rng.standard_normal((2, 40)))
        with pytest.raises(BudgetExceeded, match="enumeration budget exceeded"):
            a_m(M, 10)
        assert a_m(M, 2, max_supports=math.comb(40, 2)).method == "exact"

    def test_bad_m(self, rng):
        M = SampleMatrix(rng.standard_normal((2, 4)))
        for m in (0, 5):
            with pytest.raises(PreconditionError):
                a_m(M, m)

    def test_json_roundtrip(self, rng):
        r = a_m(SampleMatrix(rng.standard_normal((2, 6))), 2)
        back = RestrictedNormResult.from_dict(json.loads(r.to_json()))
        assert back.value == r.value and tuple(back.support) == tuple(r.support)


class TestBestSubsetSum:
    def test_equal_columns_raw(self):
        v = [1.0, 2.0, 2.0]
        r = best_subset_sum(SampleMatrix.from_columns([v] * 5), objective="raw")
        assert r.E == (0, 1, 2, 3, 4) and r.value == pytest.approx(15.0)

    def test_antipodal_pair(self):
        r = best_subset_sum(matrix_from_columns([3, 4], [-3, -4]), objective="raw")
        assert len(r.E) == 1 and r.value == pytest.approx(5.0)

    def test_greedy_below_exact(self, rng):
        for seed in range(5):
            M = sample_matrix(EnsembleSpec("gaussian", 8), 12, seed)
            ex = best_subset_sum(M, "exact")
            gr = best_subset_sum(M, "greedy")
            assert gr.ratio <= ex.ratio * (1 + 1e-12)
            assert best_subset_sum(M, "exact") == ex

    def test_exact_ratio_brute_force(self, rng):
        M = SampleMatrix(rng.standard_normal((3, 9)))
        X = M.columns
        best = max(
            np.linalg.norm(X[list(E)].sum(axis=0)) / subset_sum_scale(3, 9, k)
            for k in range(1, 10)
            for E in combinations(range(9), k)
        )
        assert best_subset_sum(M).ratio == pytest.approx(float(best), rel=1e-10)

    def test_budget(self, rng):
        with pytest.raises(BudgetExceeded):
            best_subset_sum(SampleMatrix(rng.standard_normal((2, 23))))


class TestSplitSet:
    def test_three_equal_vectors(self):
        r = split_set([[1, 0], [1, 0], [1, 0]])
        assert r.total == pytest.approx(6.0)
        assert r.cross >= 2.0 and r.certified
        assert cross_term(np.ones((3, 3)), [0]) == pytest.approx(2.0)

    def test_two_vectors(self):
        r = split_set([[1, 0], [1, 0]])
        assert r.total == pytest.approx(2.0) and r.cross == pytest.approx(1.0) and r.certified

    def test_exhaustive_quarter_bound(self, rng):
        """The maximal cross term is always at least a quarter of the off-diagonal sum."""
        for _ in range(100):
            N = int(rng.integers(2, 13))
            X = rng.standard_normal((N, int(rng.integers(1, 5))))
            r = split_set(X)
            assert r.certified
            assert 4 * r.cross >= r.total - 1e-9

    def test_randomized(self, rng):
        X = rng.standard_normal((30, 3)) + 1.0
        r = split_set(X, "randomized", seed=1)
        assert r.certified

    def test_exact_budget(self, rng):
        with pytest.raises(BudgetExceeded):
            split_set(rng.standard_normal((23, 2)))
