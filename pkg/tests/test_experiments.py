import numpy as np
import pytest

from stabkit.experiments import (EnsembleConfig, StabilityReport, ensemble_experiment,
                                 ensemble_matrices, family_matrix, family_study,
                                 figure1_experiment, ginibre_candidate, normal_candidate,
                                 stability_report, summarize_ensemble)
from stabkit.linalg import is_normal, spectral_abscissa


def test_identity_report():
    r = stability_report(-np.eye(2))
    assert r.alpha == -1.0
    for key, val in [("sdyn_h", 1.0), ("sstr_c", 1.0), ("sstr_real_c", 1.0),
                     ("sdyn_w", 2.0), ("sstr_w", 2.0)]:
        assert getattr(r, key) == pytest.approx(val, abs=1e-9)
    assert r.is_normal and r.violations() == []


def test_fig1_report(fig1):
    r = stability_report(fig1, with_certificates=True)
    assert r.alpha == pytest.approx(-1.0)
    assert 0.035 <= r.sdyn_w <= 0.045
    assert r.sstr_real_c == pytest.approx(1.0, abs=1e-6)
    assert not r.is_normal and r.violations() == []
    assert set(r.certificates) == {"harmonic", "stochastic", "real"}
    d = r.to_dict()
    assert d["worst_sigma"]["n"] == 2


def test_unstable_report():
    r = stability_report(np.diag([0.5, -1.0]))
    assert r.error and r.violations() == []
    assert r.to_dict() == {"alpha": 0.5, "error": r.error}


def test_violations_detected():
    r = StabilityReport(alpha=-1.0, sdyn_h=0.5, sstr_c=0.5, sstr_real_c=0.9, sdyn_w=1.5,
                        sstr_w=1.5, real_radius_converged=True)
    assert r.violations() == ["sstr_w <= 2 sstr_c"]


def test_random_reports_chain(rng):
    for _ in range(5):
        n = 3
        A = rng.standard_normal((n, n)) - 2 * np.eye(n)
        if spectral_abscissa(A) < 0:
            assert stability_report(A).violations() == []


def test_candidate_streams():
    assert np.array_equal(ginibre_candidate(42, 7, 3), ginibre_candidate(42, 7, 3))
    assert not np.array_equal(ginibre_candidate(42, 7, 3), ginibre_candidate(42, 8, 3))
    for k in range(10):
        A = normal_candidate(1, k, 4)
        assert is_normal(A, 1e-12) and spectral_abscissa(A) < 0


def test_ensemble_discards_without_shifting():
    mats = ensemble_matrices(EnsembleConfig(count=5, seed=42))
    for k, A in mats:
        assert np.array_equal(A, ginibre_candidate(42, k, 3))
        assert spectral_abscissa(A) < 0
    assert [k for k, _ in mats] == sorted(k for k, _ in mats)


def test_ensemble_small_and_threaded():
    cfg = EnsembleConfig(count=6, seed=42)
    rows, summary = ensemble_experiment(cfg)
    rows2, _ = ensemble_experiment(cfg, threads=3)
    assert rows == rows2
    assert summary["count"] == 6
    assert summary["frac_w_le_2c"] == 1.0 and summary["frac_identity_h_c"] == 1.0
    assert ensemble_experiment(EnsembleConfig(count=0)) == ([], {"count": 0})


def test_normal_ensemble_equalities():
    rows, summary = ensemble_experiment(EnsembleConfig(count=10, kind="normal"))
    for r in rows:
        assert r["sstr_w"] == pytest.approx(r["two_sstr_c"], abs=1e-6)
        assert r["two_sstr_c"] == pytest.approx(r["two_abs_alpha"], abs=1e-6)
    assert summarize_ensemble([]) == {"count": 0}


def test_family():
    rows = family_study([1, 2, 10, 20], certify_real=False)
    assert all(r["alpha"] == -1.0 for r in rows)
    h = [r["sdyn_h"] for r in rows]
    assert all(a > b for a, b in zip(h, h[1:]))
    assert all(r["sstr_real_c"] == pytest.approx(1.0, abs=1e-3) for r in rows)
    assert all(r["sdyn_h_times_M"] < 2.0 for r in rows)
    assert np.array_equal(family_matrix(3), [[-1.0, 9.0], [-1.0, -1.0]])


def test_figure1_transition():
    results, critical = figure1_experiment([0.004, 0.4], horizon=1.0)
    assert 0.004 < critical < 0.4
    assert [r.verdict for r in results] == ["stable", "unstable"]
    assert results[0].trajectory.shape == (results[0].times.size, 2)
