#!/usr/bin/env python3
"""
Tests for the dense linear-algebra layer
"""

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from core.linalg import (
    DimensionMismatchError,
    LinalgError,
    basis_vector,
    configure_linalg,
    effective_p,
    is_psd,
    jacobi_eigh,
    linalg_settings,
    operator_norm,
    outer,
    power_operator_norm,
    psd_sqrt_schatten,
    schatten_norm,
    singular_values,
    symmetric_eigenvalues,
    top_singular_pair,
    trace,
)

ENTRIES = st.floats(min_value=-10.0, max_value=10.0, allow_nan=False, allow_infinity=False)


def square_matrices(max_side=6):
    return st.integers(min_value=1, max_value=max_side).flatmap(
        lambda n: arrays(np.float64, (n, n), elements=ENTRIES)
    )


def test_outer_orientation():
    u = np.array([1.0, 2.0, 3.0])
    v = np.array([4.0, 5.0, 6.0])
    x = np.array([0.5, -1.0, 2.0])

    m = outer(u, v)

    assert m[1, 2] == v[1] * u[2]
    np.testing.assert_allclose(m @ x, (u @ x) * v)
    np.testing.assert_array_equal(outer(basis_vector(2, 0), basis_vector(2, 1)), [[0.0, 0.0], [1.0, 0.0]])


def test_top_singular_pair():
    a = np.diag([1.0, 3.0, 2.0])

    sigma, left, right = top_singular_pair(a)

    assert sigma == pytest.approx(3.0)
    np.testing.assert_allclose(np.abs(left), [0.0, 1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(left @ a @ right, 3.0)


def test_outer_rejects_mismatched_lengths():
    with pytest.raises(DimensionMismatchError):
        outer([1.0, 2.0], [1.0, 2.0, 3.0])


def test_non_finite_and_non_square_inputs_are_rejected():
    with pytest.raises(LinalgError):
        operator_norm(np.array([[1.0, np.nan], [0.0, 1.0]]))
    with pytest.raises(DimensionMismatchError):
        operator_norm(np.ones((2, 3)))
    with pytest.raises(LinalgError):
        trace(np.ones(3))


@settings(max_examples=60, deadline=None)
@given(square_matrices())
def test_operator_norm_matches_scipy(a):
    expected = float(scipy.linalg.svdvals(a)[0])
    scale = 1.0 + expected
    assert operator_norm(a, method="numpy") == pytest.approx(expected, abs=1e-10 * scale)
    assert operator_norm(a, method="jacobi") == pytest.approx(expected, abs=1e-9 * scale)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_power_iteration_agrees_with_svd(seed):
    a = np.random.default_rng(seed).standard_normal((8, 8))
    expected = float(scipy.linalg.svdvals(a)[0])

    assert power_operator_norm(a, rng=np.random.default_rng(seed)) == pytest.approx(expected, rel=1e-6)
    assert operator_norm(a, method="power") == pytest.approx(expected, rel=1e-6)


def test_power_iteration_of_zero_matrix():
    assert power_operator_norm(np.zeros((3, 3))) == 0.0


@settings(max_examples=60, deadline=None)
@given(square_matrices())
def test_jacobi_eigenvalues_match_lapack(a):
    s = a + a.T
    w, v = jacobi_eigh(s)
    expected = np.linalg.eigvalsh(s)
    scale = 1.0 + float(np.max(np.abs(expected)))

    np.testing.assert_allclose(w, expected, atol=1e-9 * scale)
    np.testing.assert_allclose(v.T @ v, np.eye(s.shape[0]), atol=1e-9)
    np.testing.assert_allclose(v @ np.diag(w) @ v.T, s, atol=1e-9 * scale)


@pytest.mark.parametrize("backend", ["numpy", "jacobi"])
@pytest.mark.parametrize("a,b,c", [(2.0, 1.0, 2.0), (1.0, 0.0, -3.0), (0.5, -2.0, 4.0)])
def test_two_by_two_eigenvalues_solve_characteristic_polynomial(backend, a, b, c):
    root = math.sqrt(((a - c) / 2.0) ** 2 + b * b)
    expected = sorted([(a + c) / 2.0 - root, (a + c) / 2.0 + root])

    w = symmetric_eigenvalues(np.array([[a, b], [b, c]]), backend=backend)

    np.testing.assert_allclose(w, expected, atol=1e-12)


def test_three_by_three_eigenvalues_are_roots_of_characteristic_polynomial():
    s = np.array([[4.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 2.0]])
    poly = np.poly(s)
    for lam in symmetric_eigenvalues(s, backend="jacobi"):
        assert abs(np.polyval(poly, lam)) < 1e-9


@pytest.mark.parametrize("backend", ["numpy", "jacobi"])
def test_singular_values_are_descending(backend):
    a = np.random.default_rng(3).standard_normal((5, 5))
    s = singular_values(a, backend=backend)

    assert np.all(np.diff(s) <= 1e-12)
    np.testing.assert_allclose(s, scipy.linalg.svdvals(a), atol=1e-7)


@settings(max_examples=60, deadline=None)
@given(square_matrices(), st.sampled_from([1.0, 2.0, 3.0, 7.5]))
def test_schatten_norm_is_sandwiched_by_operator_norm(a, p):
    d = a.shape[0]
    top = operator_norm(a)
    value = schatten_norm(a, p)

    assert top - 1e-9 * (1 + top) <= value <= d ** (1.0 / p) * top + 1e-9 * (1 + top)


def square_pairs(max_side=5):
    return st.integers(min_value=1, max_value=max_side).flatmap(
        lambda n: st.tuples(arrays(np.float64, (n, n), elements=ENTRIES),
                            arrays(np.float64, (n, n), elements=ENTRIES))
    )


@settings(max_examples=60, deadline=None)
@given(square_matrices())
def test_operator_norm_is_transpose_invariant(a):
    top = operator_norm(a)
    assert operator_norm(a.T) == pytest.approx(top, abs=1e-10 * (1 + top))
    assert operator_norm(a.T, method="jacobi") == pytest.approx(top, abs=1e-9 * (1 + top))


@settings(max_examples=60, deadline=None)
@given(square_pairs(), st.sampled_from([1.0, 2.0, 4.5, math.inf]))
def test_norms_satisfy_triangle_inequality(pair, p):
    a, b = pair
    slack = 1e-9 * (1 + operator_norm(a) + operator_norm(b)) * a.shape[0]

    assert operator_norm(a + b) <= operator_norm(a) + operator_norm(b) + slack
    assert schatten_norm(a + b, p) <= schatten_norm(a, p) + schatten_norm(b, p) + slack


@settings(max_examples=60, deadline=None)
@given(square_matrices())
def test_trace_is_bounded_by_dimension_times_norm(a):
    d = a.shape[0]
    top = operator_norm(a)
    assert abs(trace(a)) <= d * top + 1e-9 * (1 + d * top)


@pytest.mark.parametrize("d", [8, 64, 256])
def test_schatten_at_log_dimension_is_within_factor_e(d):
    p = effective_p(d)
    assert p == pytest.approx(math.log(d))
    rng = np.random.default_rng(d)
    # the identity attains d^(1/ln d) = e exactly
    for a in (rng.standard_normal((d, d)), np.diag(rng.uniform(-1.0, 1.0, d)), np.eye(d)):
        top = operator_norm(a)
        value = schatten_norm(a, p)
        assert top * (1 - 1e-12) <= value <= math.e * top * (1 + 1e-12)
    assert schatten_norm(np.eye(d), p) == pytest.approx(math.e, rel=1e-12)


def test_schatten_special_cases():
    a = np.random.default_rng(4).standard_normal((4, 4))

    assert schatten_norm(a, 2) == pytest.approx(np.linalg.norm(a, "fro"))
    assert schatten_norm(a, 1) == pytest.approx(float(np.sum(scipy.linalg.svdvals(a))))
    assert schatten_norm(a, math.inf) == pytest.approx(operator_norm(a))
    assert schatten_norm(np.zeros((3, 3)), 4) == 0.0
    with pytest.raises(LinalgError):
        schatten_norm(a, 0.5)


def test_psd_sqrt_schatten_of_diagonal():
    s = np.diag([4.0, 9.0, 0.0])
    # square roots are 2 and 3
    assert psd_sqrt_schatten(s, 2) == pytest.approx(math.sqrt(13.0))
    assert psd_sqrt_schatten(s, 4, backend="jacobi") == pytest.approx((2.0 ** 4 + 3.0 ** 4) ** 0.25)


def test_effective_p():
    assert effective_p(2) == 2.0
    assert effective_p(7) == 2.0
    assert effective_p(1000) == pytest.approx(math.log(1000))


def test_is_psd():
    assert is_psd(np.eye(3))
    assert is_psd(np.zeros((2, 2)))
    assert is_psd(np.array([[2.0, 1.0], [1.0, 2.0]]), backend="jacobi")
    assert not is_psd(np.diag([1.0, -1.0]))
    assert not is_psd(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert not is_psd(np.ones((2, 3)))


def test_configure_linalg_switches_default_backend():
    a = np.random.default_rng(5).standard_normal((6, 6))
    previous = configure_linalg(backend="jacobi")
    try:
        assert linalg_settings()["backend"] == "jacobi"
        assert operator_norm(a) == pytest.approx(float(scipy.linalg.svdvals(a)[0]), rel=1e-10)
    finally:
        configure_linalg(**previous)
    assert linalg_settings()["backend"] == previous["backend"]


def test_configure_linalg_rejects_unknown_settings():
    with pytest.raises(LinalgError):
        configure_linalg(colour="blue")
    with pytest.raises(LinalgError):
        configure_linalg(backend="lapack")
