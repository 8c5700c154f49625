"""Command-line entry point: simulate, fit, predict and histogram.

Exit status is 0 on success, 2 when inputs fail validation and 3 on a
numerical failure (including a fit that does not converge).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import likelihood as lk
from . import mvn
from .config import RunConfig, load_config
from .datafiles import read_cohort, write_cohort
from .histogram import first_visit_histogram
from .model import (
    MISSING,
    PARAMETER_LABELS,
    ConfigurationError,
    validate_identifiability,
)
from .optimizer import SingularMatrixError, fit
from .predict import PredictionError, predict_cohort, roc
from .simulate import SimulationError, export_truth, simulate_cohort

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

_TIME_TOL = 1e-9


class NumericalFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# output helpers


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _num(x: float) -> str:
    return repr(float(x))


def _provenance(cmd: str, cfg: RunConfig) -> dict:
    return {"command": cmd, "config_hash": cfg.hash, "seed": cfg.seed}


def _load_params(cfg: RunConfig, path: str | None):
    if path is None:
        return cfg.params()
    with open(path) as fh:
        report = json.load(fh)
    try:
        values = {row["name"]: row["estimate"] for row in report["parameters"]}
    except (KeyError, TypeError):
        raise ConfigurationError(f"{path}: not a fit report") from None
    values = {k: v for k, v in values.items() if k not in cfg.spec.fixed}
    return cfg.params(values)


def _label(name: str) -> str:
    return PARAMETER_LABELS.get(name, name)


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args, cfg: RunConfig, out: Path) -> int:
    params = cfg.params()
    cohort, truth, summary = simulate_cohort(cfg.spec, params, cfg.design())
    rows = write_cohort(out / "cohort.csv", cfg.spec, cohort)
    export_truth(out / "truth.csv", cfg.spec, truth)
    report = _provenance("simulate", cfg) | {
        "n_subjects": summary.n_subjects,
        "first_visit_rejections": summary.rejected,
        "observations": summary.observations,
        "cohort_rows": rows,
    }
    _write_json(out / "simulation.json", report)
    obs = ", ".join(f"{k}={v}" for k, v in summary.observations.items())
    print(f"subjects={summary.n_subjects} observations: {obs} rejections={summary.rejected}")
    return EXIT_OK


def cmd_fit(args, cfg: RunConfig, out: Path) -> int:
    problems = validate_identifiability(cfg.spec)
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return EXIT_INVALID
    cohort = read_cohort(args.data, cfg.spec)
    init = cfg.params()
    result = fit(cfg.spec, cohort, init, cfg.likelihood_options(args.threads), cfg.optimizer)
    names = cfg.spec.free_names
    table = [
        {
            "name": n,
            "label": _label(n),
            "estimate": result.estimate(n),
            "std_error": result.std_error(n),
        }
        for n in names
    ]
    report = _provenance("fit", cfg) | {
        "n_subjects": len(cohort),
        "converged": result.converged,
        "iterations": result.iterations,
        "loglik": result.loglik,
        "criterion": result.criterion,
        "algorithm": result.algorithm,
        "message": result.message,
        "parameters": table,
        "fixed": dict(sorted(cfg.spec.fixed.items())),
    }
    _write_json(out / "fit_report.json", report)
    _write_csv(
        out / "parameters.csv",
        ["parameter", "label", "estimate", "std_error"],
        [[r["name"], r["label"], _num(r["estimate"]), _num(r["std_error"])] for r in table],
    )
    status = "converged" if result.converged else "did not converge"
    print(f"{status} after {result.iterations} iterations, log-likelihood {result.loglik:.6f}")
    if result.message:
        print(result.message, file=sys.stderr)
    return EXIT_OK if result.converged else EXIT_NUMERICAL


def prediction_targets(cfg: RunConfig, cohort):
    """Split each subject into its prediction history, target time and the
    observed outcome at that time (or None)."""
    rule = cfg.prediction
    histories, targets, outcomes = [], {}, {}
    for s in cohort:
        first = s.visit_times[0]
        in_history = s.visit_times <= first + rule.history_years + _TIME_TOL
        n_hist = int(np.sum(in_history))
        hist = s.__class__(s.id, s.visit_times[:n_hist], s.observations[:, :n_hist], s.covariates)
        if np.any(hist.observations[0] == 1):
            continue
        later = s.visit_times[n_hist:]
        if rule.horizon_years is not None:
            t_next = first + rule.horizon_years
            if t_next <= hist.visit_times[-1]:
                continue
            match = np.flatnonzero(np.abs(later - t_next) <= _TIME_TOL)
            j = n_hist + int(match[0]) if match.size else None
        elif later.size:
            t_next = float(later[0])
            j = n_hist
        else:
            continue
        histories.append(hist)
        targets[s.id] = float(t_next)
        y = int(s.observations[0, j]) if j is not None else MISSING
        outcomes[s.id] = None if y == MISSING else y
    return histories, targets, outcomes


def cmd_predict(args, cfg: RunConfig, out: Path) -> int:
    params = _load_params(cfg, args.params)
    cohort = read_cohort(args.data, cfg.spec)
    histories, targets, outcomes = prediction_targets(cfg, cohort)
    result = predict_cohort(cfg.spec, params, histories, targets,
                            cfg.likelihood_options(args.threads), cfg.prediction.level)
    _write_csv(
        out / "predictions.csv",
        ["subject_id", "t_next", "p", "numerator", "denominator", "outcome"],
        [
            [r.id, _num(r.t_next), _num(r.p), _num(r.numerator), _num(r.denominator),
             "" if outcomes[r.id] is None else outcomes[r.id]]
            for r in result.subjects
        ],
    )
    report = _provenance("predict", cfg) | {
        "n_subjects": result.n_subjects,
        "expected_count": result.expected_count,
        "interval": list(result.interval),
        "level": result.level,
    }
    known = [(r.p, outcomes[r.id]) for r in result.subjects if outcomes[r.id] is not None]
    if known:
        p = np.array([x for x, _ in known])
        y = np.array([o for _, o in known])
        report["n_with_outcome"] = len(known)
        report["observed_count"] = int(y.sum())
        if 0 < y.sum() < y.size:
            curve = roc(p, y)
            report["auc"] = curve.auc
            thresholds = [""] + [_num(t) for t in curve.thresholds]
            _write_csv(
                out / "roc.csv",
                ["fpr", "tpr", "threshold"],
                [[_num(f), _num(t), th] for f, t, th in zip(curve.fpr, curve.tpr, thresholds)],
            )
    _write_json(out / "prediction.json", report)
    lo, hi = result.interval
    print(f"eligible={result.n_subjects} expected={result.expected_count:.2f} "
          f"interval=[{lo:.2f}; {hi:.2f}]")
    return EXIT_OK


def cmd_histogram(args, cfg: RunConfig, out: Path) -> int:
    params = _load_params(cfg, args.params)
    cohort = read_cohort(args.data, cfg.spec)
    rows = []
    for k, test in enumerate(cfg.spec.tests):
        if test.kind != "ordinal":
            continue
        h = first_visit_histogram(cfg.spec, params, cohort, k)
        rows += [[test.name, m, int(o), _num(e)]
                 for m, (o, e) in enumerate(zip(h.observed, h.expected))]
        stat, cells = h.chi_square()
        print(f"{test.name}: n={h.n_subjects} chi-square={stat:.2f} over {cells} pooled cells")
    _write_csv(out / "histogram.csv", ["test", "score", "observed", "expected"], rows)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "histogram": cmd_histogram,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latentdx", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--out-dir", required=True, help="directory for reports and tables")
        p.add_argument("--seed", type=int, help="overrides the configured seed")
        p.add_argument("--threads", type=int, default=1, help="worker processes over subjects")
        if name != "simulate":
            p.add_argument("--data", required=True, help="cohort CSV file")
        if name in ("predict", "histogram"):
            p.add_argument("--params", help="fit_report.json to take parameters from")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigurationError("--seed must be nonnegative")
            cfg.seed = args.seed
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](args, cfg, out)
    except (lk.LikelihoodError, SimulationError, SingularMatrixError, NumericalFailure,
            mvn.FactorizationError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, OSError, PredictionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
