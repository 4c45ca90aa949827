#!/usr/bin/env python3
"""
Tests for the lower-bound verifiers
"""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.constructions import cube_simplex_construction, log_needed_construction
from core.linalg import operator_norm
from core.multiset import Multiset
from core.sampling import make_rng, sample_error
from core.verifiers import (
    beta_residual,
    best_beta_error,
    bm_certificate,
    bm_lower_bound,
    cross_check_diagonal_path,
    diagonal_sample_error,
    frobenius_beta,
    l1_center_gap,
    l1_gap_exhaustive,
    min_error_over_multisets,
    multiset_count,
    optimize_beta,
    random_support,
    support_lower_bound,
    verify_support_bound,
)


def test_l1_center_gap_examples():
    # t = 3, k = 1: a = (1/12, 1/12, 1/12); index 3 is the zero vector
    assert l1_center_gap(3, 1, Multiset.from_indices([3])) == pytest.approx(0.25)
    assert l1_center_gap(3, 1, Multiset.from_indices([0])) == pytest.approx(7 / 12)
    assert l1_center_gap(3, 1, Multiset.from_indices([0, 1, 2])) == pytest.approx(3 * (1 / 6 - 1 / 12))


def test_l1_center_gap_rejects_bad_multisets():
    with pytest.raises(ValueError):
        l1_center_gap(3, 1, Multiset(()))
    with pytest.raises(ValueError):
        l1_center_gap(3, 1, Multiset.from_indices([0, 0, 1, 1]))


def test_l1_gap_exhaustive_small_case():
    report = l1_gap_exhaustive(3, 1)

    assert report.holds
    assert report.examined == multiset_count(4, 3) == 34
    assert report.bound == Fraction(1, 4)
    assert report.minimum == Fraction(1, 4)
    assert report.to_dict()["minimum_exact"] == "1/4"


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=2))
def test_l1_gap_never_below_bound(t, k):
    report = l1_gap_exhaustive(t, k)
    assert report.violations == 0
    assert report.minimum >= Fraction(t, 12 * k)


def test_multiset_count():
    assert multiset_count(5, 1) == 5
    assert multiset_count(5, 4) == 5 + 15 + 35 + 70


def test_smallest_log_needed_instance_is_certified():
    inst = log_needed_construction(8, 1, Fraction(1, 32))
    report = min_error_over_multisets(inst, mode="auto")

    assert report.mode == "exhaustive"
    assert report.certified
    assert report.examined == 5
    assert report.minimum == pytest.approx(0.25)
    assert report.witness == Multiset.from_indices([3])
    assert report.holds
    assert report.csv_rows() == [[1, pytest.approx(0.25), "3"]]


def test_larger_gamma_instance_is_certified():
    inst = log_needed_construction(8, 4, Fraction(1, 32))
    report = min_error_over_multisets(inst, mode="exhaustive")

    assert inst.max_size == 4
    assert report.sizes == [1, 2, 3, 4]
    assert report.examined == multiset_count(5, 4)
    assert report.certified
    assert report.holds


def test_random_mode_is_not_certified():
    inst = log_needed_construction(8, 1, Fraction(1, 32))
    report = min_error_over_multisets(inst, mode="random", samples=500, seed=3)

    assert report.mode == "random+greedy"
    assert not report.certified
    assert report.samples == 500
    assert report.minimum == pytest.approx(0.25)


def test_auto_mode_falls_back_to_random_above_threshold():
    inst = log_needed_construction(8, 4, Fraction(1, 32))
    report = min_error_over_multisets(inst, mode="auto", threshold=10, samples=2000, seed=0)

    assert report.mode == "random+greedy"
    assert report.minimum >= float(inst.eps)


def test_forced_exhaustive_search_respects_threshold():
    inst = log_needed_construction(8, 4, Fraction(1, 32))

    with pytest.raises(ValueError, match="threshold 10"):
        min_error_over_multisets(inst, mode="exhaustive", threshold=10)
    assert min_error_over_multisets(inst, mode="exhaustive", threshold=multiset_count(5, 4)).certified


def test_unknown_mode_is_rejected():
    with pytest.raises(ValueError):
        min_error_over_multisets(log_needed_construction(8, 1, Fraction(1, 32)), mode="smart")


@pytest.mark.parametrize("padding", ["zero", "identity"])
def test_diagonal_fast_path_matches_operator_norm(padding):
    inst = log_needed_construction(12, 2, 0.01, padding=padding)
    dec = inst.decomposition()
    rng = make_rng(5)
    for _ in range(20):
        sigma = Multiset.from_counts(rng.multinomial(7, np.full(inst.count, 1.0 / inst.count)))
        assert diagonal_sample_error(inst, sigma) == pytest.approx(sample_error(dec, sigma), abs=1e-12)
    assert cross_check_diagonal_path(inst, trials=30, seed=1) <= 1e-12


def full_support(inst):
    return [(i, j) for i in range(inst.d) for j in range(inst.d_prime)]


@pytest.mark.parametrize("d,delta", [(4, 0.5), (8, 1.0), (6, 1.2)])
def test_full_support_reaches_identity(d, delta):
    inst = cube_simplex_construction(d, delta)

    beta = frobenius_beta(inst, full_support(inst))

    np.testing.assert_allclose(beta, 1.0 / (inst.d * inst.d_prime), atol=1e-12)
    assert best_beta_error(inst, full_support(inst), iterations=0) <= 1e-9


def test_single_row_support_cannot_approximate():
    inst = cube_simplex_construction(8, 1.0)
    support = [(0, j) for j in range(inst.d_prime)]

    assert support_lower_bound(inst, support) == 1.0
    assert best_beta_error(inst, support, iterations=50) >= 1.0 - 1e-12


def test_bm_lower_bound_values():
    assert bm_lower_bound(8, 1.0, 0.05) == pytest.approx(16.0)
    assert bm_lower_bound(64, 0.5, 0.25) == pytest.approx(64 * 0.25)
    with pytest.raises(ValueError):
        bm_lower_bound(8, 1.0, 0.5)
    with pytest.raises(ValueError):
        bm_lower_bound(8, 3.0, 0.05)
    with pytest.raises(ValueError):
        bm_lower_bound(2, 0.1, 0.05)


@pytest.mark.parametrize("seed", range(4))
def test_certificates_are_sound_on_random_supports(seed):
    inst = cube_simplex_construction(8, 1.0)
    rng = make_rng(seed)
    support = random_support(inst, 15, rng)

    result = optimize_beta(inst, support, iterations=100)
    cert = bm_certificate(inst, support, result.beta, eps=0.05)
    norm = operator_norm(beta_residual(inst, result.beta))

    assert len(support) == len(set(support)) == 15
    assert cert.value <= norm + 1e-9
    assert result.error <= result.frobenius_error + 1e-12
    assert support_lower_bound(inst, support) <= result.error + 1e-12
    assert result.error > 0.05


def test_subgradient_keeps_beta_on_support():
    inst = cube_simplex_construction(4, 0.5)
    support = [(0, 0), (0, 1), (1, 2), (2, 3), (3, 0), (3, 1)]

    result = optimize_beta(inst, support, iterations=30)

    mask = np.zeros((inst.d, inst.d_prime), dtype=bool)
    for i, j in support:
        mask[i, j] = True
    assert np.all(result.beta[~mask] == 0.0)


def test_verify_support_bound_report():
    report = verify_support_bound(8, 1.0, 0.05, supports=3, seed=0, iterations=100)

    assert report.bound == pytest.approx(16.0)
    assert report.support_size == 15
    assert len(report.trials) == 3
    assert report.full_support_error <= 1e-9
    assert report.all_above_eps
    assert report.certificates_sound
    assert report.holds
    assert len(report.csv_rows()) == 3
    assert report.to_dict()["holds"]


def test_certificate_meets_analytic_bound_on_a_sparse_row():
    inst = cube_simplex_construction(8, 1.0)
    support = [(0, 0)] + [(i, j) for i in range(1, inst.d) for j in range(inst.d_prime)]
    beta = np.full((inst.d, inst.d_prime), 1.0 / (inst.d * inst.d_prime))
    beta[0] = 0.0
    beta[0, 0] = 1.0 / inst.d

    cert = bm_certificate(inst, support, beta, eps=0.05)

    assert (cert.row, cert.row_support) == (0, 1)
    assert cert.coefficient_sum == pytest.approx(1.0)
    assert cert.e_test == pytest.approx(0.0, abs=1e-12)
    # the residual row is the simplex offset itself, of length delta
    assert cert.x_test == pytest.approx(1.0)
    assert cert.analytic_bound == pytest.approx(0.25)
    assert cert.consistent is True


def test_default_number_of_supports():
    report = verify_support_bound(8, 1.0, 0.05, supports=200, seed=1, iterations=50)

    assert len(report.trials) == 200
    assert report.certificates_sound
    assert report.certificates_consistent
    assert report.all_above_eps
    assert report.holds
    assert report.to_dict()["certificates_consistent"]
