"""``stabkit`` command line.

Exit codes: 0 success, 2 unreadable or invalid input, 3 invariant violation,
4 numerical failure.
"""

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config, load_config
from .destabilizer import destabilizing_stochastic_perturbation
from .errors import (DimensionError, InvariantViolation, MatrixParseError,
                     NumericalError, StabkitError, UnstableMatrixError)
from .experiments import (ENSEMBLE_COLUMNS, FAMILY_COLUMNS, EnsembleConfig,
                          ensemble_experiment, family_study, figure1_experiment,
                          harmonic_certificate_dict, stability_report,
                          stochastic_certificate_dict)
from .matrix_io import load_matrix
from .resolvent import complex_stability_radius, harmonic_response_curve
from .stochastic import SdeSpec, ensemble_csv_rows, simulate

log = logging.getLogger("stabkit")

EXIT_OK, EXIT_PARSE, EXIT_INVARIANT, EXIT_NUMERICAL = 0, 2, 3, 4
ENSEMBLE_SEED = EnsembleConfig.seed


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _emit_text(text, out):
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _emit_json(obj, out):
    _emit_text(json.dumps(obj, indent=2, default=_json_default) + "\n", out)


def _emit_csv(header, rows, out):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    _emit_text(buf.getvalue(), out)


def _require_matrix(args):
    if not args.matrix:
        raise MatrixParseError("--matrix is required")
    return load_matrix(args.matrix)


# -- subcommands -------------------------------------------------------------

def cmd_measures(args, cfg: Config):
    A = _require_matrix(args)
    rep = stability_report(A, cfg.tol, certify_real=cfg.certify_real,
                           with_certificates=args.certificates,
                           real_starts=cfg.real_starts, seed=cfg.seed)
    _emit_json(rep.to_dict(), args.out)
    if rep.error:
        log.warning("%s", rep.error)
        return EXIT_OK
    bad = rep.violations(cfg.chain_tol)
    if bad:
        raise InvariantViolation("report violates: " + "; ".join(bad))
    return EXIT_OK


def cmd_destabilize(args, cfg: Config):
    A = _require_matrix(args)
    if args.mode == "harmonic":
        crad = complex_stability_radius(A, cfg.tol)
        out = {"mode": "harmonic", **harmonic_certificate_dict(A, crad)}
        ok = abs(out["boundary_abscissa"]) <= 1e-7 * max(1.0, np.linalg.norm(A, 2))
    else:
        cert = destabilizing_stochastic_perturbation(A, cfg.tol)
        out = {"mode": "stochastic", **stochastic_certificate_dict(A, cert)}
        ok = cert.residual <= 1e-7 * max(1.0, 2 * np.linalg.norm(A, 2))
    _emit_json(out, args.out)
    if not ok:
        raise InvariantViolation("certificate does not reach the stability boundary")
    return EXIT_OK


def cmd_simulate(args, cfg: Config):
    if not args.spec:
        raise MatrixParseError("--spec is required")
    try:
        d = json.loads(Path(args.spec).read_text())
        if args.seed is not None:
            d["seed"] = args.seed
        elif "seed" not in d:
            d["seed"] = cfg.seed
        if d.get("dt") is None and cfg.dt is not None:
            d["dt"] = cfg.dt
        d.setdefault("horizon", cfg.horizon)
        spec = SdeSpec.from_dict(d)
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise MatrixParseError(f"bad SDE spec {args.spec}: {exc}") from None
    m = args.trajectories if args.trajectories is not None else cfg.trajectories
    ens = simulate(spec, m, record_every=args.record_every)
    header, rows = ensemble_csv_rows(ens)
    _emit_csv(header, rows, args.out)
    return EXIT_OK


def cmd_ensemble(args, cfg: Config):
    # the ensemble has its own default master seed
    seed = cfg.seed if "seed" in cfg.explicit else ENSEMBLE_SEED
    ec = EnsembleConfig(count=args.count, n=args.n, seed=seed, kind=args.kind,
                        tol=cfg.tol, certify_real=args.certify_real)
    rows, summary = ensemble_experiment(ec, threads=cfg.threads)
    body = [[r.get(c, "") for c in ENSEMBLE_COLUMNS] for r in rows]
    _emit_csv(ENSEMBLE_COLUMNS, body, args.out)
    summary = {"kind": args.kind, "seed": seed, **summary}
    text = json.dumps(summary, indent=2) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    else:
        sys.stderr.write(text)
    fracs = [v for k, v in summary.items() if k.startswith("frac_") and k != "frac_strict_gap"]
    if any(f < 1.0 for f in fracs):
        raise InvariantViolation("ordering chain fails on part of the ensemble")
    return EXIT_OK


def cmd_family(args, cfg: Config):
    Ms = args.M or list(range(1, args.M_max + 1))
    if any(M < 1 for M in Ms):
        raise MatrixParseError("M values must be >= 1")
    rows = family_study(Ms, cfg.tol, certify_real=cfg.certify_real)
    _emit_csv(FAMILY_COLUMNS, [[r[c] for c in FAMILY_COLUMNS] for r in rows], args.out)
    return EXIT_OK


def cmd_figure1(args, cfg: Config):
    results, critical = figure1_experiment(args.sigma2, horizon=args.horizon or 50.0,
                                           dt=cfg.dt or 5e-4, seed=cfg.seed)
    outdir = Path(args.out_dir) if args.out_dir else None
    summary = {"critical_sigma2": critical, "runs": []}
    for r in results:
        entry = {"sigma2": r.sigma2, "verdict": r.verdict, "rate": r.rate}
        if outdir is not None:
            outdir.mkdir(parents=True, exist_ok=True)
            path = outdir / f"trajectory_sigma2_{r.sigma2:g}.csv"
            rows = [[float(t), *map(float, x)] for t, x in zip(r.times, r.trajectory)]
            _emit_csv(["time", "x_1", "x_2"], rows, path)
            entry["trajectory_csv"] = str(path)
        summary["runs"].append(entry)
    _emit_json(summary, args.out)
    return EXIT_OK


def cmd_resolvent_curve(args, cfg: Config):
    A = _require_matrix(args)
    if args.points < 1 or args.omega_max < args.omega_min:
        raise MatrixParseError("need points >= 1 and omega-max >= omega-min")
    omegas = np.linspace(args.omega_min, args.omega_max, args.points)
    _emit_csv(["omega", "norm"], harmonic_response_curve(A, omegas), args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--matrix", help="matrix file (CSV or JSON)")
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--tol", type=float)
    common.add_argument("--threads", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="stabkit", description="Stability measures of linear dynamics.")
    p.add_argument("--version", action="version", version=f"stabkit {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("measures", parents=[common], help="all stability measures as JSON")
    s.add_argument("--certificates", action="store_true", help="include destabilizers")
    s.add_argument("--no-certify-real", dest="certify_real", action="store_false", default=None)
    s.set_defaults(func=cmd_measures)

    s = sub.add_parser("destabilize", parents=[common], help="minimal destabilizing perturbation")
    s.add_argument("--mode", choices=["harmonic", "stochastic"], default="stochastic")
    s.set_defaults(func=cmd_destabilize)

    s = sub.add_parser("simulate", parents=[common], help="Euler-Maruyama ensemble statistics")
    s.add_argument("--spec", help="SDE spec JSON")
    s.add_argument("--trajectories", type=int)
    s.add_argument("--record-every", type=int, help="record every k steps")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("ensemble", parents=[common], help="random-matrix ordering experiment")
    s.add_argument("--count", type=int, default=1000)
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--kind", choices=["ginibre", "normal"], default="ginibre")
    s.add_argument("--certify-real", action="store_true",
                   help="also run the rank-2 real-radius search (slow)")
    s.add_argument("--summary", help="write the summary JSON here instead of stderr")
    s.set_defaults(func=cmd_ensemble)

    s = sub.add_parser("family", parents=[common], help="non-normal family study")
    s.add_argument("--M", type=int, nargs="+")
    s.add_argument("--M-max", type=int, default=30)
    s.add_argument("--no-certify-real", dest="certify_real", action="store_false", default=None)
    s.set_defaults(func=cmd_family)

    s = sub.add_parser("figure1", parents=[common], help="noise-variance sweep with trajectories")
    s.add_argument("--sigma2", type=float, nargs="+", default=[0.004, 0.04, 0.4])
    s.add_argument("--horizon", type=float)
    s.add_argument("--dt", type=float)
    s.add_argument("--out-dir", help="directory for per-variance trajectory CSVs")
    s.set_defaults(func=cmd_figure1)

    s = sub.add_parser("resolvent-curve", parents=[common], help="|(i omega - A)^-1| on a grid")
    s.add_argument("--omega-min", type=float, default=0.0)
    s.add_argument("--omega-max", type=float, default=10.0)
    s.add_argument("--points", type=int, default=201)
    s.set_defaults(func=cmd_resolvent_curve)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k, None)
                 for k in ("tol", "seed", "threads", "certify_real", "dt", "horizon")}
    try:
        cfg = load_config(args.config, overrides)
        return args.func(args, cfg)
    except (MatrixParseError, DimensionError, UnstableMatrixError) as exc:
        log.error("%s", exc)
        return EXIT_PARSE
    except InvariantViolation as exc:
        log.error("invariant violation: %s", exc)
        return EXIT_INVARIANT
    except (NumericalError, np.linalg.LinAlgError, StabkitError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
