"""Harmonic forcing response and constant-perturbation stability radii.

The resonance ``sup_w |(iw - A)^-1|`` is found as ``1 / min_w sigma_min(iw - A)``:
a coarse frequency grid, bounded Brent refinement, then a Hamiltonian
level-set test that either certifies the minimum as global or hands back a
frequency interval where a lower value exists.

The real stability radius uses the level-set formula

    r_R(A) = 1 / sup_w inf_{0 < g <= 1} sigma_2([[Re G, -g Im G], [Im G / g, Re G]]),
    G = (iw - A)^-1,

cross-checked by a multi-start search over real rank-2 perturbations
``D = Y X^+`` that place ``iw`` exactly in the spectrum of ``A + D``.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import MarginallyStableError, UnstableMatrixError
from .linalg import (DEFAULT_TOL, as_matrix, eigenvalues, spectral_abscissa,
                     spectral_norm)

log = logging.getLogger(__name__)

__all__ = [
    "ResonanceResult", "RadiusResult", "require_stable", "resolvent_norm",
    "harmonic_response_curve", "harmonic_dynamical_stability",
    "complex_stability_radius", "real_stability_radius", "level_crossings",
]

# relative disagreement between the two real-radius estimators that gets flagged
REAL_RADIUS_AGREEMENT = 1e-4

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class ResonanceResult:
    """Largest harmonic amplification of ``A`` and where it happens.

    ``(i omega_star - A)^-1 direction_u == value * direction_w``.
    """
    value: float
    omega_star: float
    direction_u: np.ndarray
    direction_w: np.ndarray

    @property
    def sdyn_h(self):
        return 1.0 / self.value


@dataclass(frozen=True)
class RadiusResult:
    radius: float
    certificate: Optional[np.ndarray]
    boundary_frequency: float
    converged: bool = True
    estimates: dict = field(default_factory=dict)


def require_stable(A, tol=DEFAULT_TOL) -> float:
    """Return alpha(A), raising if ``A`` is unstable or marginally stable."""
    alpha = spectral_abscissa(A)
    scale = max(1.0, spectral_norm(A))
    if abs(alpha) <= tol * scale:
        raise MarginallyStableError(
            f"marginally stable: alpha(A)={alpha:.3e} is within tolerance of 0")
    if alpha > 0:
        raise UnstableMatrixError(
            f"measure defined for stable equilibria only (alpha(A)={alpha:.6g})")
    return alpha


def _shifted(A, omegas):
    """Stack of ``i w I - A`` for every ``w`` in ``omegas``."""
    omegas = np.asarray(omegas, dtype=float)
    n = A.shape[0]
    return 1j * omegas[:, None, None] * np.eye(n) - A


def _sigma_min(A, omegas):
    return np.linalg.svd(_shifted(A, omegas), compute_uv=False)[:, -1]


def resolvent_norm(A, omega, tol=DEFAULT_TOL) -> float:
    """Spectral norm of ``(i omega I - A)^-1``."""
    A = as_matrix(A)
    s = np.linalg.svd(_shifted(A, [omega])[0], compute_uv=False)
    if s[-1] <= tol * max(1.0, s[0]):
        raise UnstableMatrixError(f"i*{omega} lies within tolerance of spect(A)")
    return float(1.0 / s[-1])


def harmonic_response_curve(A, omega_grid):
    """``[(w, |(iw - A)^-1|) for w in omega_grid]``."""
    A = as_matrix(A)
    omegas = np.asarray(omega_grid, dtype=float).ravel()
    if omegas.size == 0:
        return []
    smin = _sigma_min(A, omegas)
    return [(float(w), float(1.0 / s)) for w, s in zip(omegas, smin)]


def _frequency_grid(A, extra=()):
    lam = eigenvalues(A)
    rho = float(np.max(np.abs(lam)))
    wmax = 10.0 * (rho + 1.0)
    pts = [np.zeros(1), np.abs(lam.imag), np.linspace(0.0, wmax, 96),
           np.geomspace(wmax * 1e-5, wmax, 48), np.asarray(extra, dtype=float)]
    return np.unique(np.concatenate(pts))


def level_crossings(A, level, rtol=1e-6):
    """Nonnegative ``w`` at which ``level`` is a singular value of ``iw - A``.

    These are the imaginary-axis eigenvalues of the Hamiltonian matrix
    ``[[A, -level I], [level I, -A^T]]``. Near-axis eigenvalues are accepted
    with a loose tolerance; callers verify candidates directly.
    """
    n = A.shape[0]
    I = np.eye(n)
    H = np.block([[A, -level * I], [level * I, -A.T]])
    mu = np.linalg.eigvals(H)
    sel = np.abs(mu.real) <= rtol * max(1.0, np.linalg.norm(H, 1))
    return np.unique(np.abs(mu.imag[sel]))


def _refine_min(fun, pts, vals, i):
    """Bounded Brent around ``pts[i]`` using its neighbours as the bracket."""
    lo = pts[max(i - 1, 0)]
    hi = pts[min(i + 1, len(pts) - 1)]
    best_x, best_f = pts[i], vals[i]
    if hi > lo:
        res = optimize.minimize_scalar(fun, bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-13 * max(1.0, abs(pts[i]))})
        if res.fun < best_f:
            best_x, best_f = float(res.x), float(res.fun)
    return best_x, best_f


def _min_sigma_over_frequency(A, extra=(), max_rounds=50):
    """Global ``min_{w >= 0} sigma_min(iw - A)``; returns ``(w*, value)``."""
    fun = lambda w: float(_sigma_min(A, [w])[0])
    grid = _frequency_grid(A, extra)
    vals = _sigma_min(A, grid)
    best_w, best_f = _refine_min(fun, grid, vals, int(np.argmin(vals)))

    for _ in range(max_rounds):
        cross = level_crossings(A, best_f * (1.0 - 1e-9))
        if cross.size == 0:
            break
        cand = np.unique(np.concatenate([cross, (cross[1:] + cross[:-1]) / 2, [0.0]]))
        cvals = _sigma_min(A, cand)
        j = int(np.argmin(cvals))
        if cvals[j] >= best_f * (1.0 - 1e-12):
            break
        w, f = _refine_min(fun, cand, cvals, j)
        log.debug("level-set round improved sigma_min %.3e -> %.3e at w=%.6g", best_f, f, w)
        best_w, best_f = w, f
    else:
        log.warning("resonance search hit max_rounds=%d", max_rounds)

    f0 = fun(0.0)
    if f0 <= best_f * (1.0 + 1e-13):
        best_w, best_f = 0.0, min(best_f, f0)
    return best_w, best_f


def _phase_fix(u, w):
    k = int(np.argmax(np.abs(w)))
    ph = np.conj(w[k]) / abs(w[k])
    return u * ph, w * ph


def harmonic_dynamical_stability(A, tol=DEFAULT_TOL) -> ResonanceResult:
    """Resonance data of a stable ``A``; ``result.sdyn_h`` is the measure itself.

    Raises UnstableMatrixError for unstable or marginally stable ``A``.
    """
    A = as_matrix(A)
    require_stable(A, tol)
    omega, _ = _min_sigma_over_frequency(A)
    if omega == 0.0:
        U, s, Vt = np.linalg.svd(-A)
        u, w = U[:, -1], Vt[-1]
        if w[np.argmax(np.abs(w))] < 0:
            u, w = -u, -w
        u, w = u.astype(complex), w.astype(complex)
    else:
        U, s, Vh = np.linalg.svd(_shifted(A, [omega])[0])
        u, w = _phase_fix(U[:, -1], Vh[-1].conj())
    return ResonanceResult(value=float(1.0 / s[-1]), omega_star=float(omega),
                           direction_u=u, direction_w=w)


def complex_stability_radius(A, tol=DEFAULT_TOL, resonance=None) -> RadiusResult:
    """Smallest complex perturbation pushing ``A`` onto the imaginary axis.

    The certificate is the rank-one ``P = v^-1 u w^*`` built from the
    resonance, which satisfies ``(A + P) w = i omega* w``. Its spectral norm is
    returned as the radius.
    """
    A = as_matrix(A)
    res = resonance if resonance is not None else harmonic_dynamical_stability(A, tol)
    P = np.outer(res.direction_u, res.direction_w.conj()) / res.value
    if res.omega_star == 0.0:
        P = P.real
    return RadiusResult(radius=spectral_norm(P), certificate=P,
                        boundary_frequency=res.omega_star)


# -- real stability radius ---------------------------------------------------

_GAMMAS = np.geomspace(1e-6, 1.0, 25)


def _real_mu_blocks(G, gammas):
    """sigma_2 of the real block matrices for each (frequency, gamma) pair."""
    g = np.asarray(gammas, dtype=float)[None, :, None, None]
    k, n = G.shape[0], G.shape[1]
    Re = np.broadcast_to(G.real[:, None], (k, g.shape[1], n, n))
    Im = G.imag[:, None]
    top = np.concatenate([Re, -g * Im], axis=-1)
    bot = np.concatenate([Im / g, Re], axis=-1)
    M = np.concatenate([top, bot], axis=-2)
    return np.linalg.svd(M, compute_uv=False)[..., 1]


def _resolvents(A, omegas):
    return np.linalg.inv(_shifted(A, omegas))


def _real_mu(A, omega):
    """``inf_g sigma_2(...)`` at one frequency; quasiconvex in log g."""
    G = _resolvents(A, [omega])
    if not np.any(G.imag):
        return float(_real_mu_blocks(G, [1.0])[0, 0])
    vals = _real_mu_blocks(G, _GAMMAS)[0]
    i = int(np.argmin(vals))
    t = np.log(_GAMMAS)
    lo, hi = t[max(i - 1, 0)], t[min(i + 1, len(t) - 1)]
    f = lambda s: float(_real_mu_blocks(G, [np.exp(s)])[0, 0])
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                   options={"xatol": 1e-10})
    return min(float(vals[i]), float(res.fun))


def _level_set_real_radius(A, extra=()):
    extra = np.asarray(extra, dtype=float)
    grid = _frequency_grid(A, extra)
    coarse = _real_mu_blocks(_resolvents(A, grid), _GAMMAS).min(axis=1)
    # refine the few largest local maxima; the outer function can be multimodal
    interior = np.r_[coarse[0] >= coarse[1:2].max(initial=-np.inf),
                     (coarse[1:-1] >= coarse[:-2]) & (coarse[1:-1] >= coarse[2:]),
                     coarse[-1] >= coarse[-2:-1].max(initial=-np.inf)]
    peaks = np.flatnonzero(interior)
    peaks = peaks[np.argsort(coarse[peaks])[::-1][:4]]
    lam = eigenvalues(A)
    keys = np.r_[np.abs(lam.imag), np.asarray(extra, dtype=float)]
    peaks = np.union1d(peaks, np.searchsorted(grid, keys).clip(0, len(grid) - 1))
    best_w, best_mu = 0.0, -np.inf
    for i in peaks:
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        mu_i = _real_mu(A, grid[i])
        w_i = grid[i]
        if hi > lo:
            res = optimize.minimize_scalar(lambda w: -_real_mu(A, w), bounds=(lo, hi),
                                           method="bounded",
                                           options={"xatol": 1e-10 * max(1.0, grid[i])})
            if -res.fun > mu_i:
                w_i, mu_i = float(res.x), float(-res.fun)
        if mu_i > best_mu:
            best_w, best_mu = float(w_i), mu_i
    return 1.0 / best_mu, best_w


def _rank2_norm(A, omega, X):
    """Norm of the minimal real ``D`` with ``D x = (iw - A) x``, ``x = X[:,0] + i X[:,1]``.

    ``|Y X^+|^2`` is the top eigenvalue of the 2x2 product ``(Y^T Y)(X^T X)^-1``.
    """
    G = X.T @ X
    det_g = G[0, 0] * G[1, 1] - G[0, 1] * G[1, 0]
    if det_g <= 1e-24 * (G[0, 0] + G[1, 1]) ** 2:
        return np.inf
    Y = omega * (X @ _J) - A @ X
    S = Y.T @ Y
    tr = (S[0, 0] * G[1, 1] - 2.0 * S[0, 1] * G[0, 1] + S[1, 1] * G[0, 0]) / det_g
    det = (S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]) / det_g
    return float(np.sqrt(tr / 2 + np.sqrt(max(tr * tr / 4 - det, 0.0))))


def _rank2_perturbation(A, omega, X):
    Y = -A @ X + omega * X @ _J
    return Y @ np.linalg.pinv(X)


def _search_real_radius(A, starts, max_evals):
    n = A.shape[0]

    def obj(theta):
        return _rank2_norm(A, abs(theta[0]), theta[1:].reshape(n, 2))

    best = (np.inf, None)
    for w0, X0 in starts:
        theta = np.r_[w0, X0.ravel()]
        for _ in range(2):  # Nelder-Mead restarts shake off a collapsed simplex
            res = optimize.minimize(obj, theta, method="Nelder-Mead",
                                    options={"maxfev": max_evals, "xatol": 1e-12,
                                             "fatol": 1e-15, "adaptive": True})
            improved = res.fun < obj(theta) * (1 - 1e-13)
            theta = res.x
            if not improved:
                break
        if res.fun < best[0]:
            best = (float(res.fun), theta)
    value, theta = best
    omega = abs(theta[0])
    X = theta[1:].reshape(n, 2)
    return value, omega, _rank2_perturbation(A, omega, X)


def real_stability_radius(A, tol=DEFAULT_TOL, certify=True, n_starts=4, seed=0,
                          max_evals=3000, resonance=None) -> RadiusResult:
    """Smallest real perturbation (spectral norm) making ``A`` unstable.

    Always bounded by ``S_STR^c <= r <= |alpha(A)|``; the upper bound is
    certified by the shift ``-alpha(A) I``. With ``certify`` set, a multi-start
    search over real rank-2 perturbations produces an explicit certificate and
    a second estimate. ``converged`` is False when the level-set value and the
    certified upper bound disagree by more than ``REAL_RADIUS_AGREEMENT``.
    """
    A = as_matrix(A)
    alpha = require_stable(A, tol)
    n = A.shape[0]
    res = resonance if resonance is not None else harmonic_dynamical_stability(A, tol)
    lam = eigenvalues(A)
    r_ls, w_ls = _level_set_real_radius(A, extra=[res.omega_star])

    # certified candidates: uniform shift, and (w = 0) the nearest singular matrix
    cands = [(abs(alpha), 0.0, -alpha * np.eye(n))]
    U, s, Vt = np.linalg.svd(A)
    cands.append((float(s[-1]), 0.0, -s[-1] * np.outer(U[:, -1], Vt[-1])))

    if certify and n >= 2:
        rng = np.random.default_rng(seed)
        starts = []
        k = int(np.argmax(lam.real))
        if abs(lam[k].imag) > 0:
            v = np.linalg.eig(A)[1][:, k]
            starts.append((abs(lam[k].imag), np.c_[v.real, v.imag]))
        w = res.direction_w
        if np.any(w.imag):
            starts.append((res.omega_star, np.c_[w.real, w.imag]))
        Vh = np.linalg.svd(_shifted(A, [w_ls])[0])[2]
        x = Vh[-1].conj()
        if np.any(x.imag):
            starts.append((w_ls, np.c_[x.real, x.imag]))
        while len(starts) < n_starts:
            starts.append((w_ls * (1 + 0.1 * rng.standard_normal()),
                           rng.standard_normal((n, 2))))
        r_s, w_s, D = _search_real_radius(A, starts, max_evals)
        cands.append((spectral_norm(D), w_s, D))

    r_cert, w_cert, cert = min(cands, key=lambda c: c[0])
    radius = min(r_ls, r_cert)
    agree = abs(r_ls - r_cert) <= REAL_RADIUS_AGREEMENT * r_cert
    if certify:
        converged = bool(agree)
    else:
        converged = bool(r_ls <= r_cert * (1 + REAL_RADIUS_AGREEMENT))
    if not converged:
        log.warning("real radius estimators disagree: level-set %.8g vs certified %.8g",
                    r_ls, r_cert)
    return RadiusResult(
        radius=float(radius),
        certificate=cert if certify else None,
        boundary_frequency=float(w_cert if certify else w_ls),
        converged=converged,
        estimates={"level_set": float(r_ls), "level_set_omega": float(w_ls),
                   "certified": float(r_cert), "shift_bound": float(abs(alpha))},
    )
