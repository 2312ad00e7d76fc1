"""Minimal destabilizing perturbations, constant and stochastic.

Internal white noise ``dX = (A dt + sum_k P_k dW^k) X`` acts on covariances
through ``C -> sum_k P_k C P_k^T``; its intensity is the spectral norm of the
lifted matrix ``sum_k kron(P_k, P_k)``.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import optimize

from .errors import DimensionError, InvariantViolation, NumericalError
from .lifted import lift, white_noise_dynamical_stability
from .linalg import DEFAULT_TOL, as_matrix, spectral_abscissa, spectral_norm, vec
from .resolvent import complex_stability_radius, require_stable

log = logging.getLogger(__name__)

__all__ = [
    "PerturbationOperator", "DestabilizerCertificate", "build_perturbation",
    "iid_entry_perturbation", "iid_norm_report", "destabilizing_stochastic_perturbation",
    "stochastic_structural_stability", "destabilizing_harmonic_perturbation",
    "real_dominant_eigenvalue_check", "random_perturbation", "boundary_scale",
    "sampled_abscissae",
]


@dataclass(frozen=True)
class PerturbationOperator:
    generators: Tuple[np.ndarray, ...]
    lifted_matrix: np.ndarray
    op_norm: float

    @property
    def n(self):
        return self.generators[0].shape[0]

    def apply(self, C):
        return sum(P @ C @ P.T for P in self.generators)

    def scaled(self, c):
        """The operator ``c * P``; generators are scaled by ``sqrt(c)``."""
        if c < 0:
            raise ValueError("a completely positive map can only be scaled by c >= 0")
        return build_perturbation([np.sqrt(c) * P for P in self.generators])


def build_perturbation(generators) -> PerturbationOperator:
    gens = tuple(as_matrix(P, name="generator") for P in generators)
    if not gens:
        raise DimensionError("at least one generator is required")
    n = gens[0].shape[0]
    if any(P.shape != (n, n) for P in gens):
        raise DimensionError("generators must all have the same dimension")
    L = sum(np.kron(P, P) for P in gens)
    return PerturbationOperator(gens, L, spectral_norm(L))


def iid_entry_perturbation(n, sigma) -> PerturbationOperator:
    """Independent fluctuations of every entry: generators ``sigma e_i e_j^T``."""
    gens = []
    for i in range(n):
        for j in range(n):
            E = np.zeros((n, n))
            E[i, j] = sigma
            gens.append(E)
    return build_perturbation(gens)


def iid_norm_report(n, sigma) -> dict:
    """Intensity of iid entry noise measured two ways.

    The Frobenius-induced operator norm of ``C -> sigma^2 Tr(C) I`` is
    ``n sigma^2``; summing ``|P_k|^2`` over the ``n^2`` generators gives
    ``n^2 sigma^2``. Both are reported.
    """
    op = iid_entry_perturbation(n, sigma)
    return {
        "op_norm": op.op_norm,
        "n_sigma2": n * sigma ** 2,
        "sum_generator_norms_sq": float(sum(spectral_norm(P) ** 2 for P in op.generators)),
        "n2_sigma2": n * n * sigma ** 2,
    }


@dataclass(frozen=True)
class DestabilizerCertificate:
    """Internal noise that puts the second moments exactly on the stability boundary.

    ``(Ahat + P)(pi) = 0`` with ``residual = |(Ahat + P)(pi)|_F``.
    """
    perturbation: PerturbationOperator
    pi: np.ndarray
    sigma: np.ndarray
    residual: float
    boundary_abscissa: float


def destabilizing_stochastic_perturbation(A, tol=DEFAULT_TOL) -> DestabilizerCertificate:
    """Build ``P = v^-1 <Pi, .> Sigma`` from the worst-case white-noise response.

    With ``Sigma = sum l_i u_i u_i^T`` and ``Pi = sum m_j v_j v_j^T`` the
    generators are ``sqrt(l_i m_j / v) u_i v_j^T`` where ``v = |Ahat^-1|``.
    """
    A = as_matrix(A)
    require_stable(A, tol)
    wn = white_noise_dynamical_stability(A, tol)
    Sigma, Pi = wn.worst_sigma, wn.worst_response
    try:
        lam, U = np.linalg.eigh(Sigma)
        mu, V = np.linalg.eigh(Pi)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"PSD decomposition failed: {exc}") from None
    cut = 1e-14
    lam = np.where(lam > cut * lam.max(), lam, 0.0)
    mu = np.where(mu > cut * mu.max(), mu, 0.0)
    gens = []
    for i in np.flatnonzero(lam):
        for j in np.flatnonzero(mu):
            gens.append(np.sqrt(lam[i] * mu[j] * wn.sdyn_w) * np.outer(U[:, i], V[:, j]))
    P = build_perturbation(gens)
    op = lift(A).matrix + P.lifted_matrix
    residual = float(np.linalg.norm(op @ vec(Pi)))
    return DestabilizerCertificate(perturbation=P, pi=Pi, sigma=Sigma, residual=residual,
                                   boundary_abscissa=spectral_abscissa(op))


def random_perturbation(n, rank, rng) -> PerturbationOperator:
    return build_perturbation([rng.standard_normal((n, n)) for _ in range(rank)])


def sampled_abscissae(A, target_norm, samples, seed=0, ranks=None, batch=256):
    """``alpha(Ahat + P')`` for random ``P'`` rescaled to ``|P'| = target_norm``.

    Generator counts cycle through ``ranks`` (default ``1, 2, n^2``) so that
    low- and full-rank noise structures are both probed.
    """
    A = as_matrix(A)
    n = A.shape[0]
    L = lift(A).matrix
    ranks = ranks or (1, 2, n * n)
    rng = np.random.default_rng(seed)
    out = np.empty(samples)
    for start in range(0, samples, batch):
        mats = []
        for k in range(start, min(start + batch, samples)):
            r = ranks[k % len(ranks)]
            G = rng.standard_normal((r, n, n))
            K = np.einsum("kij,klm->iljm", G, G).reshape(n * n, n * n)
            mats.append(L + K * (target_norm / spectral_norm(K)))
        out[start:start + len(mats)] = np.linalg.eigvals(np.array(mats)).real.max(axis=1)
    return out


def stochastic_structural_stability(A, samples=500, fraction=0.95, seed=0,
                                    tol=DEFAULT_TOL) -> float:
    """Smallest destabilizing internal-noise intensity, equal to ``1 / |Ahat^-1|``.

    With ``samples > 0`` the lower bound is spot-checked: random operators of
    intensity ``fraction`` times the value must all leave ``Ahat + P`` stable,
    otherwise InvariantViolation is raised.
    """
    A = as_matrix(A)
    value = white_noise_dynamical_stability(A, tol).sdyn_w
    if samples:
        rates = sampled_abscissae(A, fraction * value, samples, seed=seed)
        if np.any(rates >= 0):
            raise InvariantViolation(
                f"{int(np.sum(rates >= 0))} sampled perturbations of norm "
                f"{fraction}*{value:.6g} destabilize the second moments")
    return value


def destabilizing_harmonic_perturbation(A, tol=DEFAULT_TOL) -> np.ndarray:
    """Rank-one complex ``P`` of norm ``S_DYN^h(A)`` with ``i omega*`` in ``spect(A + P)``."""
    return complex_stability_radius(A, tol).certificate


def _dominant(eigs, rtol):
    alpha = eigs.real.max()
    scale = max(1.0, np.abs(eigs).max())
    return eigs[eigs.real >= alpha - rtol * scale], alpha


def real_dominant_eigenvalue_check(A, P, epsilons, tol=1e-7):
    """For each ``eps``, is one of the dominant eigenvalues of ``Ahat + eps P`` real?

    Returns ``[(eps, lambda, is_real)]`` where ``lambda`` is the real dominant
    eigenvalue if there is one, else the dominant eigenvalue of largest
    imaginary part. ``is_real`` also requires ``lambda < 0`` for ``eps < 1``.
    """
    A = as_matrix(A)
    L = lift(A).matrix
    K = P.lifted_matrix if isinstance(P, PerturbationOperator) else np.asarray(P)
    out = []
    for eps in epsilons:
        eigs = np.linalg.eigvals(L + eps * K)
        dom, alpha = _dominant(eigs, 1e-9)
        k = int(np.argmin(np.abs(dom.imag)))
        lam = dom[k]
        real = abs(lam.imag) <= tol * max(1.0, abs(lam.real))
        if eps < 1:
            real = real and lam.real < 0
        if not real:
            log.info("eps=%g: dominant eigenvalues %s", eps, dom)
        out.append((float(eps), complex(lam), bool(real)))
    return out


def boundary_scale(A, P) -> float:
    """``t > 0`` with ``alpha(Ahat + t P) = 0`` (monotone in ``t`` for CP ``P``)."""
    L = lift(A).matrix
    K = P.lifted_matrix
    f = lambda t: spectral_abscissa(L + t * K)
    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
        if hi > 1e12:
            raise NumericalError("perturbation direction never destabilizes")
    lo = hi / 2 if hi > 1.0 else 0.0
    return float(optimize.brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))
