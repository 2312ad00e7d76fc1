"""Euler-Maruyama simulation of linear SDEs with additive or multiplicative noise.

Both noise types use the Ito convention:

    additive:        x <- x + A x dt + T dW
    multiplicative:  x <- x + A x dt + sigma * sum_k P_k x dW_k

Every trajectory draws from its own counter-based Philox stream keyed by
``(seed, trajectory index)``, so ensembles do not depend on chunking or on
how many trajectories are simulated alongside.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from .destabilizer import PerturbationOperator, build_perturbation
from .errors import DimensionError
from .lifted import lift
from .linalg import (DEFAULT_TOL, as_covariance, as_matrix, expm, spectral_abscissa,
                     spectral_norm, trace_norm, unvec, vec)
from .resolvent import require_stable

log = logging.getLogger(__name__)

DIVERGENCE_LIMIT = 1e150


@dataclass(frozen=True)
class AdditiveNoise:
    T: np.ndarray

    def __post_init__(self):
        T = np.atleast_2d(np.asarray(self.T, dtype=float))
        object.__setattr__(self, "T", T)

    @property
    def sigma(self):
        return self.T @ self.T.T


@dataclass(frozen=True)
class MultiplicativeNoise:
    generators: Tuple[np.ndarray, ...]
    sigma: float = 1.0

    def __post_init__(self):
        gens = tuple(np.atleast_2d(np.asarray(P, dtype=float)) for P in self.generators)
        object.__setattr__(self, "generators", gens)

    def perturbation(self) -> PerturbationOperator:
        """Covariance-level operator of the noise, ``sigma^2 sum_k P_k C P_k^T``."""
        return build_perturbation([self.sigma * P for P in self.generators])


Noise = Union[AdditiveNoise, MultiplicativeNoise]


def default_dt(A):
    return 1e-3 * min(1.0, 1.0 / max(spectral_norm(A), 1e-300))


@dataclass(frozen=True)
class SdeSpec:
    A: np.ndarray
    noise: Noise
    dt: Optional[float] = None
    horizon: float = 10.0
    seed: int = 0

    def __post_init__(self):
        A = as_matrix(self.A, name="A")
        object.__setattr__(self, "A", A)
        n = A.shape[0]
        dt = default_dt(A) if self.dt is None else float(self.dt)
        object.__setattr__(self, "dt", dt)
        if dt <= 0:
            raise ValueError("dt must be positive")
        if self.horizon < dt:
            raise ValueError("horizon must be at least one time step")
        if isinstance(self.noise, AdditiveNoise):
            if self.noise.T.shape[0] != n:
                raise DimensionError(f"T has {self.noise.T.shape[0]} rows, A is {n}x{n}")
        elif isinstance(self.noise, MultiplicativeNoise):
            if any(P.shape != (n, n) for P in self.noise.generators):
                raise DimensionError("noise generators must match A")
        else:
            raise TypeError(f"unknown noise type {type(self.noise).__name__}")
        if spectral_norm(A) * dt >= 0.1:
            warnings.warn(f"|A| dt = {spectral_norm(A) * dt:.3g} >= 0.1; "
                          "Euler-Maruyama may be inaccurate", RuntimeWarning, stacklevel=3)

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def steps(self):
        return int(round(self.horizon / self.dt))

    @classmethod
    def from_dict(cls, d):
        """Build from the JSON layout used by ``stabkit simulate --spec``.

        ``{"A": [[...]], "noise": {"type": "additive", "T": [[...]]}
        | {"type": "multiplicative", "generators": [[[...]]], "sigma": 0.2},
        "dt": 1e-3, "horizon": 10, "seed": 0}``
        """
        noise = d.get("noise", {})
        kind = noise.get("type", "additive")
        if kind == "additive":
            nz = AdditiveNoise(np.array(noise["T"], dtype=float))
        elif kind == "multiplicative":
            nz = MultiplicativeNoise(tuple(np.array(P, dtype=float)
                                           for P in noise["generators"]),
                                     float(noise.get("sigma", 1.0)))
        else:
            raise ValueError(f"unknown noise type {kind!r}")
        return cls(A=np.array(d["A"], dtype=float), noise=nz, dt=d.get("dt"),
                   horizon=float(d.get("horizon", 10.0)), seed=int(d.get("seed", 0)))

    def to_dict(self):
        if isinstance(self.noise, AdditiveNoise):
            noise = {"type": "additive", "T": self.noise.T.tolist()}
        else:
            noise = {"type": "multiplicative",
                     "generators": [P.tolist() for P in self.noise.generators],
                     "sigma": self.noise.sigma}
        return {"A": self.A.tolist(), "noise": noise, "dt": self.dt,
                "horizon": self.horizon, "seed": self.seed}


@dataclass
class TrajectoryEnsemble:
    """Second-moment statistics of ``m`` trajectories on a recorded time grid.

    ``empirical_cov`` is the raw second moment ``E[x x^T]`` (not mean-centered).
    Divergent trajectories are excluded from both moments; ``divergent_count[t]``
    counts trajectories that had diverged by ``times[t]``.
    """
    times: np.ndarray
    empirical_mean: np.ndarray
    empirical_cov: np.ndarray
    divergent: np.ndarray
    divergent_count: np.ndarray
    states: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def m(self):
        return self.divergent.size


def trajectory_rng(seed, index) -> np.random.Generator:
    """Counter-based stream for one trajectory (Philox keyed by seed and index)."""
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _record_steps(steps, record_every, record_times, dt):
    if record_times is not None:
        idx = np.unique(np.clip(np.round(np.asarray(record_times) / dt).astype(int), 0, steps))
    else:
        if record_every is None:
            record_every = max(1, math.ceil(steps / 1000))
        idx = np.unique(np.r_[np.arange(0, steps + 1, record_every), steps])
    return idx


def _psd_sqrt(C):
    w, V = np.linalg.eigh(C)
    return V * np.sqrt(np.clip(w, 0.0, None))


def simulate(spec: SdeSpec, m, x0=None, C0=None, record_every=None, record_times=None,
             keep_states=False, chunk=4096, block=256) -> TrajectoryEnsemble:
    """Run ``m`` Euler-Maruyama trajectories of ``spec``.

    The initial state is the point ``x0`` or, with ``C0``, a draw from
    ``N(0, C0)`` taken from each trajectory's own stream. Default ``x0`` is
    the first unit vector.
    """
    n, dt, steps = spec.n, spec.dt, spec.steps
    if C0 is not None:
        C0 = as_covariance(C0, name="C0")
        root = _psd_sqrt(C0)
    else:
        x0 = np.eye(n)[0] if x0 is None else np.asarray(x0, dtype=float).reshape(n)
    rec = _record_steps(steps, record_every, record_times, dt)
    R = rec.size
    rec_pos = {int(s): i for i, s in enumerate(rec)}

    AT = spec.A.T
    if isinstance(spec.noise, AdditiveNoise):
        TT = spec.noise.T.T
        k = TT.shape[0]
        Pstack = None
    else:
        gens = spec.noise.generators
        k = len(gens)
        # rows k*n: x @ Pstack.T gives every P_k x at once
        Pstack = spec.noise.sigma * np.concatenate(gens, axis=0)
    sqdt = math.sqrt(dt)

    sum_x = np.zeros((R, n))
    sum_xx = np.zeros((R, n, n))
    n_ok = 0
    divergent = np.zeros(m, dtype=bool)
    div_step = np.full(m, steps + 1)
    states = np.empty((m, R, n)) if keep_states else None

    for c0 in range(0, m, chunk):
        c1 = min(c0 + chunk, m)
        gens_rng = [trajectory_rng(spec.seed, i) for i in range(c0, c1)]
        if C0 is not None:
            z = np.stack([g.standard_normal(n) for g in gens_rng])
            x = z @ root.T
        else:
            x = np.tile(x0, (c1 - c0, 1))
        alive = np.ones(c1 - c0, dtype=bool)
        dstep = np.full(c1 - c0, steps + 1)
        buf = np.empty((c1 - c0, R, n))
        if 0 in rec_pos:
            buf[:, rec_pos[0]] = x
        step = 0
        while step < steps:
            b = min(block, steps - step)
            dW = np.stack([g.standard_normal((b, k)) for g in gens_rng], axis=1) * sqdt
            for j in range(b):
                if Pstack is None:
                    x = x + dt * (x @ AT) + dW[j] @ TT
                else:
                    PX = (x @ Pstack.T).reshape(-1, k, n)
                    x = x + dt * (x @ AT) + np.einsum("ck,cki->ci", dW[j], PX)
                step += 1
                bad = ~(np.abs(x) <= DIVERGENCE_LIMIT).all(axis=1)
                if bad.any():
                    newly = bad & alive
                    dstep[newly] = step
                    alive &= ~bad
                    x[bad] = 0.0
                if step in rec_pos:
                    buf[:, rec_pos[step]] = x
        for i, s in enumerate(rec):
            buf[dstep <= s, i] = np.nan
        ok = alive
        xs = buf[ok]
        sum_x += xs.sum(axis=0)
        sum_xx += np.einsum("cti,ctj->tij", xs, xs)
        n_ok += int(ok.sum())
        divergent[c0:c1] = ~alive
        div_step[c0:c1] = dstep
        if keep_states:
            states[c0:c1] = buf

    if divergent.any():
        log.warning("%d of %d trajectories diverged", int(divergent.sum()), m)
    denom = max(n_ok, 1)
    count = np.array([(div_step <= s).sum() for s in rec])
    return TrajectoryEnsemble(times=rec * dt, empirical_mean=sum_x / denom,
                              empirical_cov=sum_xx / denom, divergent=divergent,
                              divergent_count=count, states=states)


def empirical_stationary_covariance(spec: SdeSpec, burn_in, m=1000, sample_every=None,
                                    tol=DEFAULT_TOL) -> np.ndarray:
    """Average of ``x x^T`` over trajectories and recorded times ``t >= burn_in``."""
    if not isinstance(spec.noise, AdditiveNoise):
        raise TypeError("stationary covariance needs additive noise")
    require_stable(spec.A, tol)
    if burn_in >= spec.horizon:
        raise ValueError("burn_in must be shorter than the horizon")
    if sample_every is None:
        sample_every = max(spec.dt, 0.1 / max(abs(spectral_abscissa(spec.A)), 1e-12))
    times = np.arange(burn_in, spec.horizon + spec.dt / 2, sample_every)
    ens = simulate(spec, m, x0=np.zeros(spec.n), record_times=times)
    sel = ens.times >= burn_in - spec.dt / 2
    C = ens.empirical_cov[sel].mean(axis=0)
    return (C + C.T) / 2


@dataclass(frozen=True)
class MeanSquareVerdict:
    verdict: str
    rate: float


def mean_square_verdict(A, perturbation=None, tol=DEFAULT_TOL) -> MeanSquareVerdict:
    """Classify the second-moment dynamics ``C' = (Ahat + P) C`` by ``alpha(Ahat + P)``."""
    A = as_matrix(A)
    M = lift(A).matrix
    if perturbation is not None:
        M = M + perturbation.lifted_matrix
    rate = spectral_abscissa(M)
    scale = max(1.0, spectral_norm(M))
    if rate < -tol * scale:
        verdict = "stable"
    elif abs(rate) <= tol * scale:
        verdict = "boundary"
    else:
        verdict = "unstable"
    return MeanSquareVerdict(verdict, rate)


@dataclass(frozen=True)
class MomentRate:
    order: int
    rate: float
    divergent: bool


def divergence_threshold(a, p) -> float:
    """Smallest moment order that diverges for ``dX = (-a dt + p dW) X``."""
    return math.inf if p == 0 else 2 * a / p ** 2 + 1


def scalar_moment_rates(a, p, orders):
    """Growth rates ``n(-a + p^2 (n - 1) / 2)`` of ``E X^n`` for the scalar SDE."""
    if a <= 0:
        raise ValueError("a must be positive")
    thr = divergence_threshold(a, p)
    return [MomentRate(int(k), k * (-a + p * p * (k - 1) / 2), bool(k >= thr)) for k in orders]


def empirical_moment_rate(a, p, order=2, m=100_000, horizon=1.0, dt=1e-3, seed=0,
                          n_records=21):
    """Fit the exponential rate of the Monte Carlo ``E X^order`` (``X0 = 1``).

    Returns ``(rate, times, moments)``.
    """
    spec = SdeSpec(A=np.array([[-a]]), noise=MultiplicativeNoise((np.array([[p]]),)),
                   dt=dt, horizon=horizon, seed=seed)
    times = np.linspace(0.0, horizon, n_records)
    ens = simulate(spec, m, x0=np.ones(1), record_times=times, keep_states=True)
    X = ens.states[~ens.divergent, :, 0]
    moments = np.mean(X ** order, axis=0)
    rate = np.polyfit(ens.times, np.log(moments), 1)[0]
    return float(rate), ens.times, moments


def chebyshev_excursion_bound(A, perturbation, C0, delta, t) -> float:
    """``delta^-2 |exp(t (Ahat + P)) C0|_Tr``, a bound on ``P(max_i |X_i(t)| >= delta)``."""
    if delta <= 0 or t < 0:
        raise ValueError("need delta > 0 and t >= 0")
    A = as_matrix(A)
    C0 = as_covariance(C0, name="C0")
    M = lift(A).matrix
    if perturbation is not None:
        M = M + perturbation.lifted_matrix
    Ct = unvec(expm(t * M) @ vec(C0), A.shape[0])
    return trace_norm(Ct) / delta ** 2


def empirical_excursion_frequency(ensemble: TrajectoryEnsemble, delta, time_index=-1):
    """``(frequency, standard error)`` of ``max_i |X_i| >= delta`` at one recorded time.

    Divergent trajectories count as excursions.
    """
    if ensemble.states is None:
        raise ValueError("ensemble was simulated without keep_states")
    X = ensemble.states[:, time_index]
    hit = ensemble.divergent | (np.nan_to_num(np.abs(X), nan=np.inf).max(axis=1) >= delta)
    freq = float(hit.mean())
    return freq, math.sqrt(max(freq * (1 - freq), 0.0) / hit.size)


def ensemble_csv_rows(ensemble: TrajectoryEnsemble):
    """Rows ``time, mean_1..n, cov_11..cov_nn, divergent_count`` (cov row-major)."""
    n = ensemble.empirical_mean.shape[1]
    sep = "" if n < 10 else "_"
    header = (["time"] + [f"mean_{i + 1}" for i in range(n)]
              + [f"cov_{i + 1}{sep}{j + 1}" for i in range(n) for j in range(n)]
              + ["divergent_count"])
    rows = []
    for t, mu, C, d in zip(ensemble.times, ensemble.empirical_mean,
                           ensemble.empirical_cov, ensemble.divergent_count):
        rows.append([float(t), *map(float, mu), *map(float, C.ravel()), int(d)])
    return header, rows
