"""Lifted Lyapunov operator and white-noise dynamical stability.

Covariances evolve under ``C -> A C + C A^T``. Under column-stacking this is the
``n^2 x n^2`` matrix ``kron(I, A) + kron(A, I)``.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from .errors import DefectiveMatrixError, InvariantViolation, NumericalError
from .linalg import (DEFAULT_TOL, as_covariance, as_matrix, clip_psd, eigenvalues,
                     frobenius_norm, is_psd, spectral_norm, unvec, vec)
from .resolvent import require_stable

log = logging.getLogger(__name__)

__all__ = [
    "LiftedOperator", "WhiteNoiseResult", "lift", "stationary_covariance",
    "white_noise_dynamical_stability", "lifted_spectrum_check",
    "complete_positivity_check", "symmetric_basis", "psd_restricted_norm",
    "random_psd",
]

# above this base dimension the smallest singular value comes from inverse iteration
FULL_SVD_MAX_N = 20


@dataclass(frozen=True)
class LiftedOperator:
    n: int
    matrix: np.ndarray

    def apply(self, C):
        return unvec(self.matrix @ vec(C), self.n)

    def solve(self, C):
        """``X`` with ``A X + X A^T = C``."""
        return unvec(np.linalg.solve(self.matrix, vec(C)), self.n)


def lift(A) -> LiftedOperator:
    A = as_matrix(A)
    n = A.shape[0]
    I = np.eye(n)
    return LiftedOperator(n, np.kron(I, A) + np.kron(A, I))


def _check_vectorization():
    rng = np.random.default_rng(0)
    A, C = rng.standard_normal((3, 3)), rng.standard_normal((3, 3))
    if not np.allclose(lift(A).apply(C), A @ C + C @ A.T, atol=1e-12):
        raise InvariantViolation("column-stacking convention broken in lift()")


_check_vectorization()


def stationary_covariance(A, Sigma, tol=DEFAULT_TOL) -> np.ndarray:
    """Solve ``A C + C A^T + Sigma = 0`` for the stationary covariance of a stable ``A``."""
    A = as_matrix(A)
    require_stable(A, tol)
    Sigma = as_covariance(Sigma, tol, name="Sigma")
    if Sigma.shape != A.shape:
        raise ValueError(f"Sigma has shape {Sigma.shape}, A has {A.shape}")
    try:
        C = -lift(A).solve(Sigma)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"lifted solve failed: {exc}") from None
    C = (C + C.T) / 2
    resid = frobenius_norm(A @ C + C @ A.T + Sigma)
    eps = np.finfo(float).eps
    bound = tol * frobenius_norm(Sigma) + 1e3 * eps * np.linalg.norm(A, 2) * frobenius_norm(C)
    if resid > bound:
        raise NumericalError(f"stationary covariance residual {resid:.3e} exceeds {bound:.3e}")
    return C


def symmetric_basis(n) -> np.ndarray:
    """Columns: a Frobenius-orthonormal basis of symmetric n x n matrices, vectorized."""
    cols = []
    for j in range(n):
        for i in range(j, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = 1.0 / np.sqrt(2.0)
            cols.append(vec(E))
    return np.array(cols).T


def _smallest_singular_triplet(L, n):
    """``(s, x, y)`` with ``L x = s y`` for the smallest singular value of ``L``."""
    if n <= FULL_SVD_MAX_N:
        U, s, Vt = np.linalg.svd(L)
        return float(s[-1]), Vt[-1], U[:, -1]
    # u <- (L L^T)^-1 u converges to the left vector; L^-1 u is along the right one
    lu = scipy.linalg.lu_factor(L)
    u = np.ones(L.shape[0]) / np.sqrt(L.shape[0])
    s_prev = 0.0
    for _ in range(1000):
        y = scipy.linalg.lu_solve(lu, u)
        z = scipy.linalg.lu_solve(lu, y, trans=1)
        u = z / np.linalg.norm(z)
        s = 1.0 / np.linalg.norm(y)
        if abs(s - s_prev) <= 1e-15 * s:
            break
        s_prev = s
    y = scipy.linalg.lu_solve(lu, u)
    s = 1.0 / float(np.linalg.norm(y))
    return s, y * s, u


@dataclass(frozen=True)
class WhiteNoiseResult:
    """Worst-case white-noise response of a stable ``A``.

    ``-Ahat^-1 worst_sigma == worst_response / sdyn_w`` with both matrices
    PSD and of unit Frobenius norm.
    """
    sdyn_w: float
    worst_sigma: np.ndarray
    worst_response: np.ndarray

    @property
    def amplification(self):
        return 1.0 / self.sdyn_w


def _unit_psd_direction(M, tol):
    S = (M + M.T) / 2
    if np.trace(S) < 0:
        S = -S
    S /= frobenius_norm(S)
    return S


def white_noise_dynamical_stability(A, tol=DEFAULT_TOL) -> WhiteNoiseResult:
    """``1 / |Ahat^-1|`` together with the maximizing noise and response covariances.

    The value is the smallest singular value of the full lifted matrix. The
    noise direction comes from the same computation restricted to symmetric
    matrices (equal value, since ``-Ahat^-1`` is completely positive), then is
    checked for positive semi-definiteness.
    """
    A = as_matrix(A)
    require_stable(A, tol)
    n = A.shape[0]
    L = lift(A).matrix
    s_full, _, _ = _smallest_singular_triplet(L, n)

    B = symmetric_basis(n)
    Ls = B.T @ L @ B
    if n <= FULL_SVD_MAX_N:
        U, sv, _ = np.linalg.svd(Ls)
        s_sym = float(sv[-1])
        # a degenerate minimum leaves a subspace of maximizers; prefer the one
        # closest to the identity so that e.g. A = -a I yields Sigma = I / sqrt(n)
        Uk = U[:, sv <= sv[-1] * (1 + 1e-10)]
        y = Uk @ (Uk.T @ (B.T @ vec(np.eye(n))))
        if np.linalg.norm(y) < 1e-8:
            y = U[:, -1]
    else:
        s_sym, _, y = _smallest_singular_triplet(Ls, n)
    if abs(s_sym - s_full) > 1e-8 * max(s_full, 1e-300) + 1e-14 * spectral_norm(L):
        log.warning("symmetric restriction gives %.12g vs full %.12g", s_sym, s_full)

    # Ls^-1 amplifies the left singular direction y the most
    Sigma = _unit_psd_direction(unvec(B @ y, n), tol)
    if not is_psd(Sigma, tol=max(tol, 1e-8)):
        Sigma = _cone_power_iteration(L, clip_psd(Sigma), n)
        if not is_psd(Sigma, tol=max(tol, 1e-8)):
            raise NumericalError("could not extract a PSD worst-case noise covariance")
    Sigma = clip_psd(Sigma)
    Sigma /= frobenius_norm(Sigma)
    resp = -unvec(np.linalg.solve(L, vec(Sigma)), n)
    resp = (resp + resp.T) / 2
    gain = frobenius_norm(resp)
    if abs(gain * s_full - 1.0) > 1e-6:
        log.warning("worst-case covariance attains %.9g of |Ahat^-1|", gain * s_full)
    Pi = clip_psd(resp / gain)
    Pi /= frobenius_norm(Pi)
    return WhiteNoiseResult(sdyn_w=s_full, worst_sigma=Sigma, worst_response=Pi)


def _cone_power_iteration(L, Sigma0, n, iters=2000, rtol=1e-13):
    """Power iteration for ``|L^-1|`` that never leaves the PSD cone.

    ``Sigma -> L^-T L^-1 Sigma`` composes two positive maps, so PSD iterates
    stay PSD.
    """
    lu = scipy.linalg.lu_factor(L)
    x = vec(Sigma0) / np.linalg.norm(Sigma0)
    prev = 0.0
    for _ in range(iters):
        y = scipy.linalg.lu_solve(lu, x)
        z = scipy.linalg.lu_solve(lu, y, trans=1)
        val = np.linalg.norm(y)
        x = z / np.linalg.norm(z)
        if abs(val - prev) <= rtol * val:
            break
        prev = val
    return unvec(x, n)


def psd_restricted_norm(A, starts=None, iters=2000) -> float:
    """``sup ||Ahat^-1 Sigma||_F`` over unit PSD ``Sigma``, by cone power iteration.

    Each start (default: the normalized identity) is iterated inside the PSD
    cone; the best attained gain is returned.
    """
    A = as_matrix(A)
    n = A.shape[0]
    L = lift(A).matrix
    if starts is None:
        starts = [np.eye(n) / np.sqrt(n)]
    best = 0.0
    for S0 in starts:
        S = _cone_power_iteration(L, S0, n, iters=iters)
        S = clip_psd(S)
        S /= frobenius_norm(S)
        best = max(best, np.linalg.norm(np.linalg.solve(L, vec(S))))
    return float(best)


def random_psd(n, rng, rank=None) -> np.ndarray:
    """Random PSD matrix of unit Frobenius norm (Wishart-type)."""
    k = n if rank is None else rank
    T = rng.standard_normal((n, k))
    S = T @ T.T
    return S / frobenius_norm(S)


def lifted_spectrum_check(A, tol=1e-8, cond_limit=1e8) -> bool:
    """Do the eigenvalues of the lift equal all pairwise sums ``l_i + l_j``?

    Raises DefectiveMatrixError when A's eigenvector basis has condition number
    above ``cond_limit``; the pairwise-sum description then loses accuracy.
    """
    A = as_matrix(A)
    lam, V = np.linalg.eig(A)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > cond_limit:
        raise DefectiveMatrixError(f"eigenvector condition number {cond:.3e}")
    sums = (lam[:, None] + lam[None, :]).ravel()
    lifted = eigenvalues(lift(A).matrix)
    cost = np.abs(sums[:, None] - lifted[None, :])
    r, c = linear_sum_assignment(cost)
    err = float(cost[r, c].max())
    scale = max(1.0, float(np.max(np.abs(lam))))
    return err <= tol * scale * max(1.0, cond)


def complete_positivity_check(A, samples=50, seed=0, tol=1e-8) -> bool:
    """Worst-case noise covariance is PSD and ``-Ahat^-1`` maps sampled PSD to PSD."""
    A = as_matrix(A)
    res = white_noise_dynamical_stability(A)
    if not is_psd(res.worst_sigma, tol) or not is_psd(res.worst_response, tol):
        return False
    rng = np.random.default_rng(seed)
    op = lift(A)
    n = A.shape[0]
    for _ in range(samples):
        S = random_psd(n, rng, rank=int(rng.integers(1, n + 1)))
        if not is_psd(-op.solve(S), tol):
            return False
    return True
