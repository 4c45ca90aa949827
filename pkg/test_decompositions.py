#!/usr/bin/env python3
"""
Tests for decompositions, contact pairs, lifting and the sample-size rules
"""

import math

import numpy as np
import pytest

from core.constructions import cube_simplex_construction, symmetrization_counterexample
from core.decompositions import (
    ContactPairDecomposition,
    DimensionMismatchError,
    PsdDecomposition,
    ball_in_cube_pairs,
    bm_stability_sample_size,
    contact_pair_decomposition,
    cross_polytope_decomposition,
    cross_polytope_john,
    diads,
    extract_guarantees,
    gamma_of,
    john_to_psd,
    lift_pairs,
    lifted_symmetrization_bounds,
    nonsymmetric_sample_size,
    normalize_weights,
    required_sample_size,
    symmetrize,
    symmetrize_contact_pairs,
    symmetrized_decomposition,
    validate_john_decomposition,
    validate_johns_position,
    validate_psd_decomposition,
)
from core.multiset import Multiset


def test_normalize_weights_window():
    w = normalize_weights([0.5, 0.5 + 1e-10])
    assert float(w.sum()) == pytest.approx(1.0, abs=1e-15)

    with pytest.raises(ValueError):
        normalize_weights([0.5, 0.6])
    with pytest.raises(ValueError):
        normalize_weights([1.5, -0.5])
    with pytest.raises(ValueError):
        normalize_weights([])


def test_diads_follow_outer_orientation():
    u = np.array([[1.0, 2.0]])
    v = np.array([[3.0, 5.0]])
    np.testing.assert_array_equal(diads(u, v)[0], np.outer(v[0], u[0]))


@pytest.mark.parametrize("d", [1, 2, 5])
def test_cross_polytope_decomposition_is_valid(d):
    dec = cross_polytope_decomposition(d)
    report = validate_psd_decomposition(dec)

    assert report.valid
    assert dec.count == 2 * d
    assert gamma_of(dec) == pytest.approx(d)
    assert validate_john_decomposition(cross_polytope_john(d), balanced=True).valid


def test_decomposition_shape_mismatch():
    with pytest.raises(DimensionMismatchError):
        PsdDecomposition(weights=np.array([1.0]), matrices=np.zeros((2, 2, 2)), target=np.eye(2))
    with pytest.raises(DimensionMismatchError):
        PsdDecomposition(weights=np.array([1.0]), matrices=np.zeros((1, 2, 2)), target=np.eye(3))


def test_decomposition_is_read_only():
    dec = cross_polytope_decomposition(3)
    with pytest.raises(ValueError):
        dec.matrices[0, 0, 0] = 7.0


def test_validator_reports_non_psd_member_and_residual():
    matrices = np.array([np.diag([2.0, -1.0]), np.diag([0.0, 3.0])])
    dec = PsdDecomposition(weights=np.array([0.5, 0.5]), matrices=matrices, target=np.eye(2), psd=True)

    report = validate_psd_decomposition(dec)

    assert not report.valid
    assert [v.name for v in report.violations] == ["non_psd_members"]
    assert report.checked["target_residual"] == pytest.approx(0.0, abs=1e-15)

    shifted = PsdDecomposition(weights=dec.weights, matrices=dec.matrices, target=2 * np.eye(2), psd=False)
    names = {v.name for v in validate_psd_decomposition(shifted).violations}
    assert names == {"target_residual"}


def test_build_defaults_target_to_weighted_sum():
    matrices = np.array([np.eye(2), 3 * np.eye(2)])
    dec = PsdDecomposition.build([0.25, 0.75], matrices)
    np.testing.assert_allclose(dec.target, 2.5 * np.eye(2))


def test_symmetrize_cross_polytope():
    dec = cross_polytope_decomposition(4)
    data = symmetrize(dec)

    assert data.gamma == pytest.approx(4.0)
    assert data.b == pytest.approx(1.0)
    np.testing.assert_allclose(data.B, np.eye(4), atol=1e-12)
    assert validate_psd_decomposition(symmetrized_decomposition(data, dec.weights)).valid


@pytest.mark.parametrize("d,delta", [(3, 0.1), (10, 0.3), (100, 0.1)])
def test_counterexample_symmetrization_exceeds_one(d, delta):
    data = symmetrize(symmetrization_counterexample(d, delta))

    assert data.gamma == pytest.approx(4.0 * d)
    assert data.b == pytest.approx(1.0 + (d - 2) * (1 + delta ** 2) * delta ** 2 / 8.0, rel=1e-10)
    assert data.b > 1.0


def test_counterexample_b_at_reference_size():
    assert symmetrize(symmetrization_counterexample(100, 0.1)).b == pytest.approx(1.1237, abs=1e-4)


def test_john_to_psd_matches_cross_polytope():
    np.testing.assert_allclose(john_to_psd(cross_polytope_john(3)).matrices,
                               cross_polytope_decomposition(3).matrices)


def test_ball_in_cube_pairs_are_in_johns_position():
    cpd = ball_in_cube_pairs(5)
    report = validate_johns_position(cpd)

    assert report.valid
    assert set(report.checked) == {"weight_sum", "min_weight", "h1_residual", "h2_u", "h2_v", "pairing"}
    assert validate_psd_decomposition(contact_pair_decomposition(cpd)).valid


def test_unbalanced_pairs_fail_centring_checks():
    cpd = cube_simplex_construction(4, 0.5).pairs()
    balanced = ContactPairDecomposition(weights=cpd.weights, u=cpd.u, v=cpd.v, balanced=True)

    names = {v.name for v in validate_johns_position(balanced).violations}

    assert names == {"h2_u", "h2_v"}
    assert validate_johns_position(symmetrize_contact_pairs(cpd)).valid


def test_lift_requires_balanced_pairs():
    with pytest.raises(ValueError, match="H2"):
        lift_pairs(cube_simplex_construction(4, 0.5).pairs())


@pytest.mark.parametrize("d", [2, 4, 7])
def test_lifted_decomposition_sums_to_identity(d):
    lifted = lift_pairs(ball_in_cube_pairs(d))
    dec = lifted.decomposition()

    assert lifted.dim == d + 1
    assert validate_psd_decomposition(dec).valid
    np.testing.assert_allclose(lifted.a[:, -1], 1.0 / math.sqrt(d))


def test_full_multiset_has_zero_guarantees():
    cpd = ball_in_cube_pairs(3)
    g = extract_guarantees(lift_pairs(cpd), Multiset.from_indices(range(cpd.count)))

    assert g.err_a == pytest.approx(0.0, abs=1e-12)
    assert g.bal_u == pytest.approx(0.0, abs=1e-12)
    assert g.lifted_error == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_guarantees_are_bounded_by_lifted_error(seed):
    cpd = symmetrize_contact_pairs(cube_simplex_construction(5, 0.7).pairs())
    lifted = lift_pairs(cpd)
    rng = np.random.default_rng(seed)
    sigma = Multiset.from_indices(rng.integers(0, cpd.count, size=30))

    g = extract_guarantees(lifted, sigma)

    assert g.err_a <= g.lifted_error + 1e-12
    assert math.sqrt(5) * g.bal_u <= g.lifted_error + 1e-12
    assert math.sqrt(5) * g.bal_v <= g.lifted_error + 1e-12


def test_extract_guarantees_rejects_empty_and_wrong_dimension():
    lifted = lift_pairs(ball_in_cube_pairs(3))
    with pytest.raises(ValueError):
        extract_guarantees(lifted, Multiset(()))
    with pytest.raises(DimensionMismatchError):
        extract_guarantees(lifted, Multiset.from_indices([0]), d=4)


def test_lifted_bounds_for_the_ball():
    bounds = lifted_symmetrization_bounds(lift_pairs(ball_in_cube_pairs(6)), 1.0)

    assert bounds.gamma == pytest.approx(7.0)
    assert bounds.b == pytest.approx(1.0)
    assert bounds.b_bound == pytest.approx(1.0)
    assert bounds.within


def test_lifted_bounds_without_b_bound_beyond_two():
    bounds = lifted_symmetrization_bounds(lift_pairs(ball_in_cube_pairs(3)), 2.5)
    assert bounds.b_bound is None
    assert bounds.within
    with pytest.raises(ValueError):
        lifted_symmetrization_bounds(lift_pairs(ball_in_cube_pairs(3)), 0.5)


def test_sample_size_rules():
    assert required_sample_size(16, 16, 1.0, 0.5, 1.0) == 355
    assert nonsymmetric_sample_size(16, 16, 1.0, 0.5, 1.0) == 355
    assert bm_stability_sample_size(16, 1.0, 0.3, 2.0) == 986
    # ln(e^2) = 2 must not round up to the next integer
    assert required_sample_size(math.e ** 2, 1.0, 0.0, 1.0, 1.0) == 2


def test_sample_size_just_above_an_integer_rounds_up():
    # ln(e) = 1, so the raw size is 3 + 5e-10
    assert required_sample_size(math.e, 1.0, 0.0, 1.0, 3.0 + 5e-10) == 4
    assert nonsymmetric_sample_size(math.e, 1.0, 0.0, 1.0, 3.0 + 5e-10) == 4
    assert required_sample_size(math.e, 1.0, 0.0, 1.0, 3.0) == 3


@pytest.mark.parametrize("kwargs", [
    {"d": 1, "gamma": 1.0, "norm_a": 1.0, "eps": 0.5, "c": 1.0},
    {"d": 4, "gamma": 1.0, "norm_a": 1.0, "eps": 0.0, "c": 1.0},
    {"d": 4, "gamma": 1.0, "norm_a": 1.0, "eps": 1.5, "c": 1.0},
    {"d": 4, "gamma": 1.0, "norm_a": 1.0, "eps": 0.5, "c": 0.0},
    {"d": 4, "gamma": 0.0, "norm_a": 1.0, "eps": 0.5, "c": 1.0},
])
def test_required_sample_size_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        required_sample_size(**kwargs)


def test_bm_stability_needs_near_ball():
    with pytest.raises(ValueError):
        bm_stability_sample_size(16, 3.0, 0.3, 2.0)
