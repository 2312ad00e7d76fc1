import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stabkit.errors import DimensionError, SingularMatrixError, StabkitError
from stabkit.linalg import (as_covariance, as_matrix, clip_psd, eigenvalues,
                            frobenius_norm, is_normal, is_psd, min_gain_identity_check,
                            normality_defect, resolvent_distance_identity,
                            spectral_abscissa, spectral_norm, spectrum, trace_norm,
                            unvec, vec)

from oracles import random_normal

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square(n_max=5):
    return st.integers(1, n_max).flatmap(lambda n: arrays(float, (n, n), elements=finite))


def test_as_matrix_rejects_bad_shapes():
    with pytest.raises(DimensionError):
        as_matrix(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        as_matrix([[1.0, np.nan], [0.0, 1.0]])
    with pytest.raises(DimensionError):
        as_matrix(np.ones((0, 0)))
    assert as_matrix(3.0).shape == (1, 1)


def test_vec_is_column_stacking():
    C = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert vec(C).tolist() == [1.0, 3.0, 2.0, 4.0]
    assert np.array_equal(unvec(vec(C)), C)


@given(square())
def test_vec_kron_identity(A):
    n = A.shape[0]
    B = np.arange(n * n, dtype=float).reshape(n, n) - 2
    C = np.eye(n) + 0.5
    assert np.allclose(vec(A @ C @ B), np.kron(B.T, A) @ vec(C), atol=1e-9)


def test_abscissa_known():
    A = np.array([[-1.0, 5.0], [0.0, -3.0]])
    assert spectral_abscissa(A) == pytest.approx(-1.0)
    assert spectral_abscissa(np.diag([-2.0, 0.5, -1.0])) == pytest.approx(0.5)


@given(square(), st.floats(-5, 5))
def test_abscissa_shift_equivariance(A, c):
    assert spectral_abscissa(A + c * np.eye(A.shape[0])) == pytest.approx(
        spectral_abscissa(A) + c, abs=1e-6 * (1 + spectral_norm(A)))


def test_spectrum_has_eigenvectors(rng):
    A = rng.standard_normal((4, 4))
    sp = spectrum(A)
    V = sp.right_eigenvectors
    assert np.allclose(A @ V, V * sp.eigenvalues, atol=1e-10)
    assert np.allclose(np.sort_complex(eigenvalues(A)), np.sort_complex(sp.eigenvalues))


def test_norms_known():
    B = np.diag([3.0, -4.0])
    assert spectral_norm(B) == 4.0
    assert frobenius_norm(B) == 5.0
    assert trace_norm(B) == 7.0


@given(square())
def test_norm_ordering(B):
    s, f, t = spectral_norm(B), frobenius_norm(B), trace_norm(B)
    assert s <= f * (1 + 1e-12) + 1e-12
    assert f <= t * (1 + 1e-12) + 1e-12


def test_min_gain_identity(rng):
    for _ in range(20):
        B = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        g, inv = min_gain_identity_check(B)
        assert abs(g - inv) <= 1e-10 * max(1.0, g)
    with pytest.raises(SingularMatrixError):
        min_gain_identity_check(np.array([[1.0, 2.0], [2.0, 4.0]]))


def test_normality():
    assert is_normal(np.array([[-1.0, 2.0], [-2.0, -1.0]]))
    assert not is_normal(np.array([[-1.0, 100.0], [-1.0, -1.0]]))
    assert normality_defect(np.zeros((2, 2))) == 0.0


def test_resolvent_distance_identity(rng):
    for _ in range(10):
        A = random_normal(rng, 4)
        z = complex(rng.standard_normal(), rng.standard_normal())
        norm, inv_dist = resolvent_distance_identity(A, z)
        assert abs(norm / inv_dist - 1) <= 1e-9
    with pytest.raises(StabkitError):
        resolvent_distance_identity(np.array([[-1.0, 100.0], [-1.0, -1.0]]), 1j)
    with pytest.raises(SingularMatrixError):
        resolvent_distance_identity(np.diag([-1.0, -2.0]), -1.0)


def test_psd_helpers():
    C = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert is_psd(C)
    assert not is_psd(np.diag([1.0, -1.0]))
    assert not is_psd(np.array([[1.0, 1.0], [0.0, 1.0]]))
    assert is_psd(np.diag([1.0, -1e-12]))
    clipped = clip_psd(np.diag([1.0, -1.0]))
    assert np.allclose(clipped, np.diag([1.0, 0.0]))
    with pytest.raises(DimensionError):
        as_covariance(np.diag([1.0, -1.0]))


@settings(max_examples=50)
@given(square(4))
def test_clip_psd_is_projection(M):
    P = clip_psd(M)
    assert is_psd(P, tol=1e-9)
    assert np.allclose(clip_psd(P), P, atol=1e-9 * (1 + spectral_norm(M)))
