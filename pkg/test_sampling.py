#!/usr/bin/env python3
"""
Tests for randomized sparsification: draws, sample errors and searches
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from core.constructions import log_needed_construction
from core.decompositions import (
    ball_in_cube_pairs,
    bm_stability_sample_size,
    cross_polytope_decomposition,
    diads,
    gamma_of,
)
from core.linalg import basis_vector, operator_norm
from core.multiset import Multiset
from core.sampling import (
    derive_seed,
    draw_multiset,
    find_good_multiset,
    lust_piquard_diagnostic,
    make_rng,
    nonsymm_find_multiset,
    rudelson_experiment,
    sample_error,
    scaling_fit,
    summarize_errors,
    symmetrization_check,
)


def test_derive_seed_is_deterministic_and_separates_streams():
    assert derive_seed(7, 3) == derive_seed(7, 3)
    seeds = {derive_seed(7, r) for r in range(100)}
    assert len(seeds) == 100
    assert derive_seed(7, 0) != derive_seed(8, 0)
    assert 0 <= derive_seed(0, 0) < 2 ** 64


def test_multiset_counts_and_indices():
    sigma = Multiset.from_indices([3, 1, 3, 0])

    assert sigma.size == 4
    assert sigma.support == [0, 1, 3]
    assert sigma.indices() == [0, 1, 3, 3]
    np.testing.assert_array_equal(sigma.counts(5), [1, 1, 0, 2, 0])
    assert Multiset.from_dict(sigma.to_dict()) == sigma
    with pytest.raises(ValueError):
        sigma.counts(3)
    with pytest.raises(ValueError):
        Multiset(((2, 1), (1, 1)))


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=50), st.integers(min_value=0, max_value=2 ** 32))
def test_draw_multiset_has_size_k(k, seed):
    weights = np.array([0.1, 0.2, 0.3, 0.4])
    sigma = draw_multiset(weights, k, make_rng(seed))

    assert sigma.size == k
    assert all(0 <= i < 4 for i in sigma.support)
    assert draw_multiset(weights, k, make_rng(seed)) == sigma


def test_draw_multiset_rejects_bad_input():
    with pytest.raises(ValueError):
        draw_multiset([0.5, 0.5], 0, make_rng(0))
    with pytest.raises(ValueError):
        draw_multiset([0.5, 0.6], 3, make_rng(0))
    with pytest.raises(ValueError):
        draw_multiset([1.5, -0.5], 3, make_rng(0))


def test_zero_weight_members_are_never_drawn():
    sigma = draw_multiset([0.5, 0.0, 0.5], 1000, make_rng(1))
    assert 1 not in sigma.support


PSD_FAMILIES = [
    cross_polytope_decomposition(2),
    cross_polytope_decomposition(5),
    log_needed_construction(8, 1, Fraction(1, 32)).decomposition(),
    log_needed_construction(16, 2, Fraction(1, 100), padding="identity").decomposition(),
]


@settings(max_examples=80, deadline=None)
@given(st.sampled_from(range(len(PSD_FAMILIES))), st.integers(min_value=1, max_value=40),
       st.integers(min_value=0, max_value=2 ** 32 - 1))
def test_sample_error_never_exceeds_member_or_target_norm(family, k, seed):
    dec = PSD_FAMILIES[family]
    sigma = draw_multiset(dec.weights, k, make_rng(seed))
    # both the average and the target are PSD
    bound = max(gamma_of(dec), operator_norm(dec.target))

    assert sample_error(dec, sigma) <= bound + 1e-12 * (1 + bound)


def test_sample_error_of_cross_polytope():
    dec = cross_polytope_decomposition(2)
    # members are +e1, +e2, -e1, -e2
    assert sample_error(dec, Multiset.from_indices([0, 1, 2, 3])) == pytest.approx(0.0, abs=1e-15)
    assert sample_error(dec, Multiset.from_indices([0, 0])) == pytest.approx(1.0)
    assert sample_error(dec, Multiset.from_indices([0, 3])) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        sample_error(dec, Multiset(()))


def test_summarize_errors():
    stats = summarize_errors([1.0, 2.0, 3.0], z=1.96)

    assert stats["mean"] == pytest.approx(2.0)
    assert stats["std"] == pytest.approx(1.0)
    assert stats["ci_high"] - stats["mean"] == pytest.approx(1.96 / math.sqrt(3))
    assert summarize_errors([0.5])["std"] == 0.0
    with pytest.raises(ValueError):
        summarize_errors([])


def test_rudelson_experiment_is_reproducible():
    dec = cross_polytope_decomposition(4)
    first = rudelson_experiment(dec, 16, replicates=20, seed=11)
    second = rudelson_experiment(dec, 16, replicates=20, seed=11)
    threaded = rudelson_experiment(dec, 16, replicates=20, seed=11, workers=4)

    assert first.errors == second.errors
    assert threaded.errors == first.errors
    assert first.seeds == [derive_seed(11, r) for r in range(20)]
    assert first.replicates == 20
    assert first.ci_low <= first.mean <= first.ci_high
    assert first.params["rng"] == "PCG64"
    assert [row[0] for row in first.csv_rows()] == list(range(20))


def test_rudelson_error_decreases_with_k():
    dec = cross_polytope_decomposition(8)
    small = rudelson_experiment(dec, 16, replicates=50, seed=0)
    large = rudelson_experiment(dec, 1024, replicates=50, seed=0)
    assert large.mean < small.mean


def test_rudelson_experiment_rejects_bad_sizes():
    dec = cross_polytope_decomposition(2)
    with pytest.raises(ValueError):
        rudelson_experiment(dec, 0)
    with pytest.raises(ValueError):
        rudelson_experiment(dec, 4, replicates=0)


def test_find_good_multiset_success_and_failure():
    dec = cross_polytope_decomposition(4)

    found = find_good_multiset(dec, 8, eps=3.0, max_attempts=5, seed=0)
    assert found.success
    assert found.attempts == 1
    assert found.error <= 3.0

    # three draws can never balance two coordinates
    missed = find_good_multiset(cross_polytope_decomposition(2), 3, eps=1e-12, max_attempts=7, seed=0)
    assert not missed.success
    assert missed.attempts == 7
    assert missed.multiset is None
    assert missed.best_error > 0
    assert missed.to_dict()["best_multiset"]["size"] == 3


def test_nonsymmetric_search_for_the_ball():
    d, eps = 16, 0.3
    k = bm_stability_sample_size(d, 1.0, eps, 2.0)
    assert k == 986

    result = nonsymm_find_multiset(ball_in_cube_pairs(d), k, eps, max_attempts=100, seed=0)

    assert result.success
    assert result.within_bounds
    g = result.guarantees
    assert g.lifted_error <= eps
    assert g.err_a <= eps
    assert max(g.bal_u, g.bal_v) <= eps / math.sqrt(d)
    assert result.to_dict()["within_bounds"]


def test_nonsymmetric_search_failure_is_a_value():
    result = nonsymm_find_multiset(ball_in_cube_pairs(4), 1, 1e-6, max_attempts=3, seed=0)

    assert not result.success
    assert result.guarantees is None
    assert not result.within_bounds
    assert result.best_guarantees.lifted_error > 1e-6


@pytest.mark.parametrize("p", [2.0, 4.0, 9.0])
def test_lust_piquard_single_symmetric_diad(p):
    u = basis_vector(3, 0)
    q = 3.0 * diads(u[None, :], u[None, :])

    assert lust_piquard_diagnostic(q, p=p, trials=8, seed=0) == pytest.approx(1.0 / math.sqrt(2.0 * p))


@pytest.mark.parametrize("d", [4, 6, 8, 16, 32, 64])
def test_lust_piquard_ratio_is_bounded_on_random_diads(d):
    rng = np.random.default_rng(d)
    u = rng.standard_normal((d, d))
    v = rng.standard_normal((d, d))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    v /= np.linalg.norm(v, axis=1, keepdims=True)

    ratio = lust_piquard_diagnostic(d * diads(u, v), trials=30, seed=1)

    assert 0.0 < ratio < 2.0


def test_lust_piquard_rejects_degenerate_input():
    with pytest.raises(ValueError):
        lust_piquard_diagnostic(np.eye(2), p=1.5)
    with pytest.raises(ValueError):
        lust_piquard_diagnostic(np.zeros((2, 3, 3)))


def test_symmetrization_bound_holds_for_cross_polytope():
    check = symmetrization_check(cross_polytope_decomposition(4), 16, replicates=100, seed=0)

    assert check.holds
    assert check.lhs > 0
    assert check.to_dict()["replicates"] == 100


def test_scaling_fit_recovers_power_law():
    ks = [16, 64, 256, 1024]
    fit = scaling_fit(ks, [2.0 / math.sqrt(k) for k in ks])

    assert fit.slope == pytest.approx(-0.5)
    assert fit.intercept == pytest.approx(math.log(2.0))
    assert fit.r_squared == pytest.approx(1.0)
    with pytest.raises(ValueError):
        scaling_fit([4], [1.0])
