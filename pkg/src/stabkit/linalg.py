"""Dense linear-algebra primitives and elementary stability quantities.

Everything here works on small dense numpy arrays. Matrix space is identified
with R^(n*n) through column-stacking, ``vec(C) = C.reshape(-1, order="F")``,
so that ``vec(A @ C @ B) == kron(B.T, A) @ vec(C)``.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import (DimensionError, NumericalError, SingularMatrixError,
                     StabkitError)

DEFAULT_TOL = 1e-9

__all__ = [
    "DEFAULT_TOL", "Spectrum", "as_matrix", "as_covariance", "vec", "unvec",
    "eigenvalues", "spectrum", "spectral_abscissa", "spectral_norm",
    "frobenius_norm", "trace_norm", "min_gain_identity_check", "is_normal",
    "normality_defect", "resolvent_distance_identity", "is_psd", "clip_psd",
]


def as_matrix(A, *, complex_ok=False, name="matrix") -> np.ndarray:
    """Validate ``A`` as a finite square matrix and return it as an array."""
    dtype = complex if complex_ok else float
    try:
        M = np.array(A, dtype=dtype)
    except (TypeError, ValueError) as exc:
        raise DimensionError(f"{name} is not numeric: {exc}") from None
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise DimensionError(f"{name} has non-finite entries")
    return M


def vec(C):
    return np.asarray(C).reshape(-1, order="F")


def unvec(v, n=None):
    v = np.asarray(v)
    if n is None:
        n = int(round(np.sqrt(v.size)))
    if n * n != v.size:
        raise DimensionError(f"cannot reshape length {v.size} into a square matrix")
    return v.reshape((n, n), order="F")


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    right_eigenvectors: Optional[np.ndarray] = None

    @property
    def abscissa(self):
        return float(np.max(self.eigenvalues.real))


def _cond_hint(A):
    try:
        return f"(cond={np.linalg.cond(A):.3e}, norm={np.linalg.norm(A):.3e})"
    except np.linalg.LinAlgError:
        return "(condition number unavailable)"


def eigenvalues(A) -> np.ndarray:
    """Eigenvalues of a real or complex square matrix.

    Real symmetric and complex Hermitian inputs go through the symmetric solver.
    """
    A = np.asarray(A)
    try:
        if np.allclose(A, A.conj().T, rtol=0.0, atol=0.0):
            return np.linalg.eigvalsh(A).astype(complex)
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed {_cond_hint(A)}: {exc}") from None


def spectrum(A) -> Spectrum:
    A = as_matrix(A, complex_ok=np.iscomplexobj(A))
    try:
        vals, vecs = np.linalg.eig(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue iteration failed {_cond_hint(A)}: {exc}") from None
    return Spectrum(vals, vecs)


def spectral_abscissa(A) -> float:
    """Largest real part over the spectrum of ``A``; negative iff ``A`` is stable."""
    return float(np.max(eigenvalues(A).real))


def spectral_norm(B) -> float:
    return float(np.linalg.norm(np.asarray(B), 2))


def frobenius_norm(B) -> float:
    return float(np.linalg.norm(np.asarray(B), "fro"))


def trace_norm(B) -> float:
    """Sum of singular values (Schatten-1 / nuclear norm)."""
    return float(np.linalg.norm(np.asarray(B), "nuc"))


def min_gain_identity_check(B, tol=DEFAULT_TOL):
    """Return ``(min_{|x|=1} |Bx|, 1 / max_{|y|=1} |B^-1 y|)``.

    The first entry comes from the singular values of ``B``, the second from an
    explicit inverse; for invertible ``B`` they coincide.
    """
    B = as_matrix(B, complex_ok=True)
    s = np.linalg.svd(B, compute_uv=False)
    if s[-1] <= tol * max(s[0], 1.0):
        raise SingularMatrixError(f"matrix is singular to tolerance (sigma_min={s[-1]:.3e})")
    min_gain = float(s[-1])
    try:
        B_inv = np.linalg.inv(B)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("matrix inversion failed") from None
    return min_gain, 1.0 / spectral_norm(B_inv)


def normality_defect(A) -> float:
    """Relative commutator size ``|AA^T - A^T A|_F / |A|_F^2``."""
    A = np.asarray(A)
    scale = frobenius_norm(A) ** 2
    if scale == 0.0:
        return 0.0
    AH = A.conj().T
    return frobenius_norm(A @ AH - AH @ A) / scale


def is_normal(A, tol=DEFAULT_TOL) -> bool:
    return normality_defect(A) <= tol


def resolvent_distance_identity(A, z, tol=DEFAULT_TOL):
    """Return ``(|(z - A)^-1|, 1 / dist(z, spect(A)))`` for a normal ``A``."""
    A = as_matrix(A, complex_ok=np.iscomplexobj(A))
    lam = eigenvalues(A)
    dist = float(np.min(np.abs(z - lam)))
    scale = max(1.0, spectral_norm(A))
    if dist <= tol * scale:
        raise SingularMatrixError(f"z={z} lies within tolerance of the spectrum")
    if not is_normal(A, tol=max(tol, 1e-9)):
        raise StabkitError("resolvent distance identity requires a normal matrix")
    R = np.linalg.inv(z * np.eye(A.shape[0]) - A)
    return spectral_norm(R), 1.0 / dist


def is_psd(C, tol=DEFAULT_TOL) -> bool:
    """Symmetric within ``tol`` and smallest eigenvalue >= -tol * |C|."""
    C = np.asarray(C, dtype=float)
    scale = max(spectral_norm(C), np.finfo(float).tiny)
    if frobenius_norm(C - C.T) > tol * scale * C.shape[0]:
        return False
    return float(np.linalg.eigvalsh((C + C.T) / 2)[0]) >= -tol * scale


def clip_psd(C) -> np.ndarray:
    """Symmetrize and zero out negative eigenvalues (projection onto the PSD cone)."""
    C = np.asarray(C, dtype=float)
    S = (C + C.T) / 2
    w, V = np.linalg.eigh(S)
    return (V * np.clip(w, 0.0, None)) @ V.T


def as_covariance(C, tol=DEFAULT_TOL, name="covariance") -> np.ndarray:
    """Validate a covariance matrix; returns the symmetrized, clipped copy."""
    C = as_matrix(C, name=name)
    if not is_psd(C, tol=max(tol, 1e-9)):
        raise DimensionError(f"{name} is not symmetric positive semi-definite")
    return clip_psd(C)


def expm(M) -> np.ndarray:
    return scipy.linalg.expm(M)
