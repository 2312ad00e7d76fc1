"""Stability reports and the reproducible experiments built on them.

- ``stability_report``: all five measures for one matrix, self-checked
  against the ordering ``S_w <= 2 S_c <= 2 S_Rc <= 2 |alpha|``.
- ``ensemble_experiment``: random stable matrices (Gaussian entries) or
  constructed normal matrices, one row per matrix.
- ``family_study``: the non-normal family ``[[-1, M^2], [-1, -1]]``.
- ``figure1_experiment``: multiplicative noise along a fixed direction at
  several variances.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np

from .destabilizer import (boundary_scale, build_perturbation,
                           destabilizing_stochastic_perturbation)
from .errors import UnstableMatrixError
from .lifted import white_noise_dynamical_stability
from .linalg import (DEFAULT_TOL, as_matrix, is_normal, normality_defect,
                     spectral_abscissa)
from .matrix_io import matrix_to_json
from .resolvent import (complex_stability_radius, harmonic_dynamical_stability,
                        real_stability_radius)
from .stochastic import MultiplicativeNoise, SdeSpec, mean_square_verdict, simulate

log = logging.getLogger(__name__)

FIG1_MATRIX = np.array([[-1.0, 100.0], [-1.0, -1.0]])
FIG1_NOISE = np.array([[-0.07, -0.27], [-0.92, 0.37]])


def family_matrix(M):
    """``[[-1, M^2], [-1, -1]]``, eigenvalues ``-1 +- iM``."""
    return np.array([[-1.0, float(M) ** 2], [-1.0, -1.0]])


@dataclass
class StabilityReport:
    alpha: float
    sdyn_h: Optional[float] = None
    sstr_c: Optional[float] = None
    sstr_real_c: Optional[float] = None
    sdyn_w: Optional[float] = None
    sstr_w: Optional[float] = None
    omega_star: Optional[float] = None
    is_normal: Optional[bool] = None
    real_radius_converged: Optional[bool] = None
    real_radius_estimates: dict = field(default_factory=dict)
    worst_sigma: Optional[np.ndarray] = None
    worst_response: Optional[np.ndarray] = None
    certificates: Optional[dict] = None
    error: Optional[str] = None

    def violations(self, tol=1e-8) -> List[str]:
        """Broken identities and orderings, with slack ``tol * max(1, |alpha|)``."""
        if self.error is not None:
            return []
        eps = tol * max(1.0, abs(self.alpha))
        out = []
        checks = [
            ("sdyn_h == sstr_c", abs(self.sdyn_h - self.sstr_c) <= eps),
            ("sdyn_w == sstr_w", abs(self.sdyn_w - self.sstr_w) <= eps),
            ("sstr_w <= 2 sstr_c", self.sstr_w <= 2 * self.sstr_c + eps),
            ("sstr_c <= sstr_real_c", self.sstr_c <= self.sstr_real_c + eps),
            ("sstr_real_c <= |alpha|", self.sstr_real_c <= abs(self.alpha) + eps),
        ]
        for name, ok in checks:
            if not ok:
                out.append(name)
        if self.real_radius_converged is False:
            out.append("real radius estimators disagree")
        return out

    def to_dict(self):
        if self.error is not None:
            return {"alpha": self.alpha, "error": self.error}
        d = asdict(self)
        for key in ("worst_sigma", "worst_response"):
            if d[key] is not None:
                d[key] = matrix_to_json(d[key])
        return d


def stability_report(A, tol=DEFAULT_TOL, certify_real=True, with_certificates=False,
                     real_starts=4, seed=0) -> StabilityReport:
    A = as_matrix(A)
    alpha = spectral_abscissa(A)
    try:
        res = harmonic_dynamical_stability(A, tol)
    except UnstableMatrixError as exc:
        return StabilityReport(alpha=alpha, error=str(exc))
    crad = complex_stability_radius(A, tol, resonance=res)
    rrad = real_stability_radius(A, tol, certify=certify_real, n_starts=real_starts,
                                 seed=seed, resonance=res)
    wn = white_noise_dynamical_stability(A, tol)
    cert = destabilizing_stochastic_perturbation(A, tol)
    report = StabilityReport(
        alpha=alpha, sdyn_h=res.sdyn_h, sstr_c=crad.radius, sstr_real_c=rrad.radius,
        sdyn_w=wn.sdyn_w, sstr_w=cert.perturbation.op_norm, omega_star=res.omega_star,
        is_normal=is_normal(A, tol=1e-9), real_radius_converged=rrad.converged,
        real_radius_estimates=rrad.estimates, worst_sigma=wn.worst_sigma,
        worst_response=wn.worst_response)
    if with_certificates:
        report.certificates = {
            "harmonic": harmonic_certificate_dict(A, crad),
            "stochastic": stochastic_certificate_dict(A, cert),
        }
        if rrad.certificate is not None:
            report.certificates["real"] = {
                "perturbation": matrix_to_json(rrad.certificate),
                "norm": rrad.estimates["certified"],
                "boundary_frequency": rrad.boundary_frequency,
                "boundary_abscissa": spectral_abscissa(A + rrad.certificate),
            }
    return report


def harmonic_certificate_dict(A, crad):
    P = crad.certificate
    lam = np.linalg.eigvals(A + P)
    k = int(np.argmin(np.abs(lam - 1j * crad.boundary_frequency)))
    return {
        "perturbation": matrix_to_json(P),
        "norm": crad.radius,
        "boundary_frequency": crad.boundary_frequency,
        "boundary_eigenvalue": [float(lam[k].real), float(lam[k].imag)],
        "boundary_abscissa": float(lam.real.max()),
    }


def stochastic_certificate_dict(A, cert):
    return {
        "generators": [matrix_to_json(P) for P in cert.perturbation.generators],
        "op_norm": cert.perturbation.op_norm,
        "pi": matrix_to_json(cert.pi),
        "sigma": matrix_to_json(cert.sigma),
        "residual": cert.residual,
        "boundary_abscissa": cert.boundary_abscissa,
    }


# -- ensembles ---------------------------------------------------------------

@dataclass
class EnsembleConfig:
    count: int
    n: int = 3
    seed: int = 42
    discard_unstable: bool = True
    kind: str = "ginibre"  # or "normal"
    tol: float = DEFAULT_TOL
    certify_real: bool = False


def ginibre_candidate(seed, k, n):
    """Candidate ``k`` of the Gaussian ensemble, drawn from its own stream."""
    return np.random.default_rng([seed, k]).standard_normal((n, n))


def normal_candidate(seed, k, n):
    """Stable normal matrix ``Q D Q^T`` with ``D`` real block-diagonal.

    ``D`` holds 2x2 rotation-scaling blocks ``[[a, b], [-b, a]]`` and real
    scalars, all with negative real part.
    """
    rng = np.random.default_rng([seed, k])
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    Q = Q * np.sign(np.diag(R))
    D = np.zeros((n, n))
    i = 0
    while i < n:
        a = -abs(rng.standard_normal()) - 0.05
        if i + 1 < n and rng.random() < 0.5:
            b = rng.standard_normal()
            D[i:i + 2, i:i + 2] = [[a, b], [-b, a]]
            i += 2
        else:
            D[i, i] = a
            i += 1
    return Q @ D @ Q.T


def ensemble_matrices(config: EnsembleConfig):
    """``[(k, A)]``; candidate ``k`` always comes from stream ``(seed, k)``."""
    draw = normal_candidate if config.kind == "normal" else ginibre_candidate
    out = []
    k = 0
    while len(out) < config.count:
        A = draw(config.seed, k, config.n)
        if not config.discard_unstable or spectral_abscissa(A) < -config.tol * max(1.0, np.linalg.norm(A, 2)):
            out.append((k, A))
        k += 1
    return out


ENSEMBLE_COLUMNS = ["index", "alpha", "sdyn_h", "sstr_c", "sstr_w", "two_sstr_c",
                    "two_sstr_real_c", "two_abs_alpha", "normality_defect",
                    "real_radius_converged"]


def ensemble_row(k, A, tol=DEFAULT_TOL, certify_real=False):
    rep = stability_report(A, tol, certify_real=certify_real, real_starts=4, seed=k)
    if rep.error is not None:
        return {"index": k, "alpha": rep.alpha, "error": rep.error}
    return {
        "index": k, "alpha": rep.alpha, "sdyn_h": rep.sdyn_h, "sstr_c": rep.sstr_c,
        "sstr_w": rep.sstr_w, "two_sstr_c": 2 * rep.sstr_c,
        "two_sstr_real_c": 2 * rep.sstr_real_c, "two_abs_alpha": 2 * abs(rep.alpha),
        "normality_defect": normality_defect(A),
        "real_radius_converged": rep.real_radius_converged,
    }


def summarize_ensemble(rows, slack=1e-6):
    good = [r for r in rows if "error" not in r]
    if not good:
        return {"count": 0}
    frac = lambda pred: float(np.mean([bool(pred(r)) for r in good]))
    return {
        "count": len(good),
        "frac_w_le_2c": frac(lambda r: r["sstr_w"] <= r["two_sstr_c"] + slack),
        "frac_2c_le_2rc": frac(lambda r: r["two_sstr_c"] <= r["two_sstr_real_c"] + slack),
        "frac_2rc_le_2alpha": frac(lambda r: r["two_sstr_real_c"] <= r["two_abs_alpha"] + slack),
        "frac_identity_h_c": frac(lambda r: abs(r["sdyn_h"] - r["sstr_c"]) <= 1e-8),
        "frac_strict_gap": frac(lambda r: r["sstr_w"] < 0.5 * r["two_sstr_c"]),
    }


def ensemble_experiment(config: EnsembleConfig, threads=1):
    """Rows (in index order) and a summary of the inequality fractions."""
    mats = ensemble_matrices(config)
    work = lambda item: ensemble_row(item[0], item[1], config.tol, config.certify_real)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            rows = list(ex.map(work, mats))
    else:
        rows = [work(item) for item in mats]
    return rows, summarize_ensemble(rows)


# -- family and figure 1 -----------------------------------------------------

FAMILY_COLUMNS = ["M", "alpha", "sdyn_h", "omega_star", "sstr_c", "sstr_real_c",
                  "sstr_real_c_level_set", "sdyn_w", "sdyn_h_times_M"]


def family_study(M_values, tol=DEFAULT_TOL, certify_real=True):
    rows = []
    for M in M_values:
        A = family_matrix(M)
        res = harmonic_dynamical_stability(A, tol)
        crad = complex_stability_radius(A, tol, resonance=res)
        rrad = real_stability_radius(A, tol, certify=certify_real, resonance=res)
        rows.append({
            "M": int(M), "alpha": spectral_abscissa(A), "sdyn_h": res.sdyn_h,
            "omega_star": res.omega_star, "sstr_c": crad.radius,
            "sstr_real_c": rrad.radius,
            "sstr_real_c_level_set": rrad.estimates["level_set"],
            "sdyn_w": white_noise_dynamical_stability(A, tol).sdyn_w,
            "sdyn_h_times_M": res.sdyn_h * M,
        })
    return rows


@dataclass
class Figure1Result:
    sigma2: float
    verdict: str
    rate: float
    times: np.ndarray
    trajectory: np.ndarray


def figure1_experiment(sigma2_values, horizon=50.0, dt=5e-4, seed=0, x0=(1.0, 0.0),
                       A=FIG1_MATRIX, P=FIG1_NOISE, tol=DEFAULT_TOL):
    """Second-moment verdict and one seeded trajectory per noise variance.

    Also returns the critical variance at which ``alpha(Ahat + s2 P)`` crosses 0.
    """
    base = build_perturbation([P])
    critical = boundary_scale(A, base)
    results = []
    for s2 in sigma2_values:
        v = mean_square_verdict(A, base.scaled(s2), tol)
        spec = SdeSpec(A=A, noise=MultiplicativeNoise((P,), float(np.sqrt(s2))),
                       dt=dt, horizon=horizon, seed=seed)
        ens = simulate(spec, 1, x0=np.asarray(x0, dtype=float), keep_states=True)
        results.append(Figure1Result(float(s2), v.verdict, v.rate, ens.times, ens.states[0]))
    return results, critical
