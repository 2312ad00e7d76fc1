"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""

import time

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment

from stabkit.destabilizer import (boundary_scale, destabilizing_stochastic_perturbation,
                                  random_perturbation, real_dominant_eigenvalue_check,
                                  sampled_abscissae)
from stabkit.experiments import EnsembleConfig, ensemble_experiment, family_study
from stabkit.lifted import lift, stationary_covariance, white_noise_dynamical_stability
from stabkit.linalg import (min_gain_identity_check, resolvent_distance_identity,
                            spectral_abscissa, spectral_norm, trace_norm)
from stabkit.resolvent import complex_stability_radius, harmonic_dynamical_stability
from stabkit.stochastic import (AdditiveNoise, MultiplicativeNoise, SdeSpec,
                                chebyshev_excursion_bound, divergence_threshold,
                                empirical_excursion_frequency, empirical_moment_rate,
                                empirical_stationary_covariance, scalar_moment_rates,
                                simulate)

from oracles import random_normal, random_stable

FIG1 = np.array([[-1.0, 100.0], [-1.0, -1.0]])
EPSILONS = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


@pytest.fixture
def gate(capsys):
    def report(num, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return report


@pytest.fixture(scope="module")
def stable_500():
    rng = np.random.default_rng(20240501)
    return [random_stable(rng, int(rng.integers(2, 7))) for _ in range(500)]


def test_criterion_01_fig1_value(gate):
    t0 = time.perf_counter()
    s = white_noise_dynamical_stability(FIG1).sdyn_w
    dt = time.perf_counter() - t0
    ok = 0.035 <= s <= 0.045 and dt < 1.0
    assert gate(1, ok, f"S_DYN^w = {s:.6f}, {dt * 1e3:.1f} ms")


def test_criterion_02_harmonic_identity(gate, stable_500):
    t0 = time.perf_counter()
    worst_id = worst_bd = 0.0
    for A in stable_500:
        res = harmonic_dynamical_stability(A)
        rad = complex_stability_radius(A, resonance=res)
        worst_id = max(worst_id, abs(res.sdyn_h - rad.radius))
        worst_bd = max(worst_bd, abs(spectral_abscissa(A + rad.certificate)))
    dt = time.perf_counter() - t0
    ok = worst_id <= 1e-7 and worst_bd <= 1e-7 and dt < 120
    assert gate(2, ok, f"max |S_DYN^h - S_STR^c| = {worst_id:.2e}, "
                       f"max |alpha(A+P)| = {worst_bd:.2e}, {dt:.1f} s")


def test_criterion_03_stochastic_destabilizer(gate, stable_500):
    worst_res = worst_bd = worst_norm = 0.0
    worst_sampled = -np.inf
    for k, A in enumerate(stable_500):
        cert = destabilizing_stochastic_perturbation(A)
        s = white_noise_dynamical_stability(A).sdyn_w
        L = lift(A).matrix
        worst_res = max(worst_res, cert.residual / spectral_norm(L))
        worst_bd = max(worst_bd, abs(cert.boundary_abscissa))
        worst_norm = max(worst_norm, abs(cert.perturbation.op_norm - s))
        rates = sampled_abscissae(A, 0.95 * s, 500, seed=k)
        worst_sampled = max(worst_sampled, float(rates.max()))
    ok = worst_res <= 1e-7 and worst_bd <= 1e-6 and worst_norm <= 1e-8 and worst_sampled < 0
    assert gate(3, ok, f"max residual/|Ahat| = {worst_res:.2e}, max |alpha| = {worst_bd:.2e}, "
                       f"max |op_norm - S_DYN^w| = {worst_norm:.2e}, "
                       f"max alpha over 250000 samples at 0.95 S = {worst_sampled:.3e}")


def test_criterion_04_ordering(gate):
    rows, summary = ensemble_experiment(EnsembleConfig(count=1000, n=3, seed=42), threads=4)
    chain = min(summary[k] for k in ("frac_w_le_2c", "frac_2c_le_2rc", "frac_2rc_le_2alpha"))
    gap = summary["frac_strict_gap"]
    nrows, _ = ensemble_experiment(EnsembleConfig(count=100, kind="normal"))
    eq = max(max(abs(r["sstr_w"] - r["two_sstr_c"]), abs(r["two_sstr_c"] - r["two_sstr_real_c"]),
                 abs(r["two_sstr_real_c"] - r["two_abs_alpha"])) for r in nrows)
    ok = summary["count"] == 1000 and chain == 1.0 and gap >= 0.10 and eq <= 1e-6
    assert gate(4, ok, f"chain holds for {chain:.1%}, strict gap in {gap:.1%}, "
                       f"normal max equality error {eq:.2e}")


def test_criterion_05_family(gate):
    rows = family_study(range(1, 31))
    alphas = [r["alpha"] for r in rows]
    h = [r["sdyn_h"] for r in rows]
    real = [r["sstr_real_c"] for r in rows]
    ok = (all(a == -1.0 for a in alphas) and all(x > y for x, y in zip(h, h[1:]))
          and h[-1] < h[0] / 10 and all(abs(r - 1) <= 1e-3 for r in real))
    assert gate(5, ok, f"S_DYN^h(1) = {h[0]:.4f}, S_DYN^h(30) = {h[-1]:.5f}, "
                       f"max |S_STR^Re(c) - 1| = {max(abs(r - 1) for r in real):.2e}")


def test_criterion_06_stationary_covariance(gate):
    # 200 trajectories x 50 correlation times after burn-in = 10^4 effective samples;
    # entry errors are measured against sqrt(C_ii C_jj)
    t0 = time.perf_counter()
    worst = 0.0
    for k, A in enumerate([-np.eye(2), np.diag([-1.0, -2.0]), FIG1]):
        tau = 1.0 / abs(spectral_abscissa(A))
        spec = SdeSpec(A=A, noise=AdditiveNoise(np.eye(2)), dt=0.02 / spectral_norm(A),
                       horizon=60 * tau, seed=k)
        C = empirical_stationary_covariance(spec, burn_in=10 * tau, m=200)
        ref = stationary_covariance(A, np.eye(2))
        scale = np.sqrt(np.outer(np.diag(ref), np.diag(ref)))
        worst = max(worst, float(np.max(np.abs(C - ref) / scale)))
    dt = time.perf_counter() - t0
    ok = worst <= 0.10 and dt < 60
    assert gate(6, ok, f"max scaled entry error {worst:.3f}, {dt:.1f} s")


def test_criterion_07_moment_law(gate):
    rates = {r.order: r.rate for r in scalar_moment_rates(1.0, 1.0, [2, 3, 4])}
    emp, _, _ = empirical_moment_rate(1.0, 1.0, order=2, m=100_000, seed=7)
    thr = divergence_threshold(1.0, 1.0)
    ok = rates[2] == -1.0 and rates[3] == 0.0 and abs(emp + 1) <= 0.1 and thr == 3.0
    gate(7, ok and rates[4] == 4.0,
         f"formula rates n=2: {rates[2]}, n=3: {rates[3]}, n=4: {rates[4]} (stated +4); "
         f"empirical E X^2 rate {emp:.3f}; threshold n >= {thr:g}")
    assert ok


@pytest.mark.xfail(strict=True, reason="n(-a + p^2 (n-1)/2) at a = p = 1, n = 4 is 2, not 4")
def test_criterion_07_stated_fourth_moment_rate():
    assert scalar_moment_rates(1.0, 1.0, [4])[0].rate == 4.0


def test_criterion_08_dominant_real(gate):
    rng = np.random.default_rng(8)
    pairs = []
    for i in range(200):
        A = random_stable(rng, int(rng.integers(2, 6)))
        if i % 2 == 0:
            P = destabilizing_stochastic_perturbation(A).perturbation
        else:
            n = A.shape[0]
            Q = random_perturbation(n, int(rng.integers(1, n * n + 1)), rng)
            P = Q.scaled(boundary_scale(A, Q))
        pairs.append((A, P))
    bad = 0
    for A, P in pairs:
        bad += sum(not ok for _, _, ok in real_dominant_eigenvalue_check(A, P, EPSILONS))
    ok = bad == 0
    assert gate(8, ok, f"{bad} of {200 * len(EPSILONS)} (pair, eps) cases without a real "
                       "negative dominant eigenvalue")


def test_criterion_09_lemma_and_normal_identities(gate):
    rng = np.random.default_rng(9)
    gain = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 7))
        B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a, b = min_gain_identity_check(B)
        gain = max(gain, abs(a - b))
    ident = 0.0
    for _ in range(200):
        A = random_normal(rng, int(rng.integers(2, 7)))
        z = complex(rng.standard_normal(), 3 * rng.standard_normal())
        norm, inv_dist = resolvent_distance_identity(A, z)
        ident = max(ident, abs(norm / inv_dist - 1))
    spec = 0.0
    for _ in range(200):
        A = rng.standard_normal((int(rng.integers(2, 6)),) * 2)
        lam = np.linalg.eigvals(A)
        sums = (lam[:, None] + lam[None, :]).ravel()
        lifted = np.linalg.eigvals(lift(A).matrix)
        cost = np.abs(sums[:, None] - lifted[None, :])
        r, c = linear_sum_assignment(cost)
        spec = max(spec, cost[r, c].max() / max(1.0, np.abs(lam).max()))
    ok = gain <= 1e-10 and ident <= 1e-9 and spec <= 1e-8
    assert gate(9, ok, f"min-gain {gain:.1e}, normal resolvent {ident:.1e}, "
                       f"lifted spectrum {spec:.1e}")


def test_criterion_10_chebyshev(gate):
    rng = np.random.default_rng(10)
    worst = -np.inf
    m = 2000
    for k in range(50):
        n = int(rng.integers(2, 4))
        A = random_stable(rng, n)
        Q = random_perturbation(n, int(rng.integers(1, 3)), rng)
        P = Q.scaled(rng.uniform(0.2, 0.8) * boundary_scale(A, Q))
        T = rng.standard_normal((n, n))
        C0 = T @ T.T
        t = rng.uniform(0.2, 2.0)
        target = rng.uniform(0.2, 0.9)
        M = lift(A).matrix + P.lifted_matrix
        Ct = (expm(t * M) @ C0.reshape(-1, order="F")).reshape(n, n, order="F")
        delta = np.sqrt(trace_norm(Ct) / target)
        bound = chebyshev_excursion_bound(A, P, C0, delta, t)
        spec = SdeSpec(A=A, noise=MultiplicativeNoise(P.generators),
                       dt=min(1e-2, 0.01 / spectral_norm(A)), horizon=t, seed=k)
        ens = simulate(spec, m, C0=C0, record_times=[t], keep_states=True)
        freq, se = empirical_excursion_frequency(ens, delta)
        worst = max(worst, freq - (bound + 3 * se))
    ok = worst <= 0
    assert gate(10, ok, f"max (frequency - bound - 3 se) over 50 configurations = {worst:.3f}")
