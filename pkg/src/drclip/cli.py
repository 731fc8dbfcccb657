"""Command line front-end.

Two subcommands:

  simulate  -- run the misspecification study grid; writes records.csv,
               metrics.csv, metrics.md, and per-scenario histogram SVGs with
               their binned-count CSVs into the output directory.
  analyze   -- run the multi-outcome two-arm analysis on a CSV table; writes
               ate_results.csv and prints a significance summary.

Exit codes: 0 success, 1 configuration/data error, 2 I/O error.

Config files are flat ``key=value`` text ('#' starts a comment). Recognized
keys (CLI flags override them):

  sample_sizes=100,200,1000    replications=1000     master_seed=20250801
  scenarios=cc,ci,ic,ii        workers=0             inference.alpha=0.05
  inference.bootstrap_b=10000  nuisance.tol=1e-8     nuisance.max_iter=100
  nuisance.eps=1e-6
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import DrclipError
from .harness import (
    PER_ARM_REPORT,
    SCENARIOS,
    SUM_ARMS,
    AnalysisConfig,
    StudyConfig,
    analyze_ate,
    compute_metrics,
    emit_histogram_svg,
    emit_report,
    run_study,
    write_records_csv,
)
from .simgen import CORRECT, INCORRECT, THETA_STAR

_SCENARIO_TOKEN = {
    "cc": (CORRECT, CORRECT),
    "ci": (CORRECT, INCORRECT),
    "ic": (INCORRECT, CORRECT),
    "ii": (INCORRECT, INCORRECT),
}


class ConfigError(Exception):
    pass


def _parse_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _int_list(text):
    try:
        return tuple(int(tok) for tok in str(text).split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated integer list, got {text!r}") from None


def _scenarios(text):
    out = []
    for tok in str(text).split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        if tok not in _SCENARIO_TOKEN:
            raise ConfigError(f"unknown scenario token {tok!r} (use cc, ci, ic, ii)")
        out.append(_SCENARIO_TOKEN[tok])
    if not out:
        raise ConfigError("scenario list is empty")
    return tuple(out)


def _study_config(args) -> StudyConfig:
    raw = _parse_config_file(args.config) if args.config else {}

    def pick(flag, key, default, cast):
        if flag is not None:
            return cast(flag)
        if key in raw:
            try:
                return cast(raw[key])
            except ValueError:
                raise ConfigError(f"config key {key}: cannot parse {raw[key]!r}") from None
        return default

    try:
        return StudyConfig(
            sample_sizes=pick(args.n, "sample_sizes", (100, 200, 1000), _int_list),
            replications=pick(args.reps, "replications", 1000, int),
            scenarios=pick(None, "scenarios", SCENARIOS, _scenarios),
            master_seed=pick(args.seed, "master_seed", 20250801, int),
            bootstrap_b=pick(args.b, "inference.bootstrap_b", 10000, int),
            alpha=pick(args.alpha, "inference.alpha", 0.05, float),
            workers=pick(args.workers, "workers", 0, int),
            nuisance_tol=pick(None, "nuisance.tol", 1e-8, float),
            nuisance_max_iter=pick(None, "nuisance.max_iter", 100, int),
            nuisance_eps=pick(args.eps, "nuisance.eps", 1e-6, float),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _cmd_simulate(args) -> int:
    config = _study_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records = run_study(config)
    write_records_csv(records, out / "records.csv")
    table = compute_metrics(records, THETA_STAR)
    emit_report(table, "csv", out / "metrics.csv")
    emit_report(table, "markdown", out / "metrics.md")
    for sm in table:
        used = [r for r in records
                if (r.n, r.outcome_spec, r.propensity_spec)
                == (sm.n, sm.outcome_spec, sm.propensity_spec) and not r.flagged]
        for est in ("or", "ipw", "dr", "acc"):
            stem = out / f"hist_n{sm.n}_mu_{sm.outcome_spec}_pi_{sm.propensity_spec}_{est}"
            values = [r.estimate(est) for r in used]
            if len(values) >= 2:
                emit_histogram_svg(values, bins=args.bins, reference=THETA_STAR,
                                   svg_path=f"{stem}.svg", csv_path=f"{stem}.csv")
    flagged = sum(1 for r in records if r.flagged)
    print(f"wrote {len(records)} records ({flagged} flagged) to {out}")
    return 0


def _cmd_analyze(args) -> int:
    schema = {
        "covariates": [c for c in args.covariates.split(",") if c],
        "treatment": args.treatment,
    }
    if not schema["covariates"]:
        raise ConfigError("at least one covariate column is required")
    if args.outcomes.strip().lower() == "all":
        import csv as _csv

        with open(args.data, newline="", encoding="utf-8") as fh:
            header = next(_csv.reader(fh))
        used = set(schema["covariates"]) | {schema["treatment"]}
        outcomes = [c for c in header if c not in used]
        if not outcomes:
            raise ConfigError("no outcome columns left after excluding schema columns")
    else:
        outcomes = [c for c in args.outcomes.split(",") if c]
        if not outcomes:
            raise ConfigError("outcome column list is empty")
    try:
        config = AnalysisConfig(alpha=args.alpha, bootstrap_b=args.b, eps=args.eps,
                                seed=args.seed, ate_ci=args.ate_ci)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    results = analyze_ate(args.data, schema, outcomes, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_ate_results(results, out / "ate_results.csv", config)
    n_ok = sum(1 for r in results if not r.error)
    n_sig = {est: sum(1 for r in results if not r.error and r.significant.get(est))
             for est in ("or", "ipw", "dr", "acc")}
    print(f"analyzed {len(results)} outcomes ({len(results) - n_ok} failed)")
    print("significant at alpha={:g} (no multiple-testing correction): "
          "or={or} ipw={ipw} dr={dr} acc={acc}".format(config.alpha, **n_sig))
    return 0


def _write_ate_results(results, path, config) -> None:
    import csv as _csv

    per_arm = config.ate_ci == PER_ARM_REPORT
    header = ["outcome", "n", "error"]
    for est in ("or", "ipw", "dr", "acc"):
        header += [f"{est}_estimate", f"{est}_lo", f"{est}_hi", f"{est}_significant"]
    if per_arm:
        header += ["acc_arm1_lo", "acc_arm1_hi", "acc_arm0_lo", "acc_arm0_hi"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(header)
        for r in results:
            row = [r.outcome, r.n, r.error]
            for est in ("or", "ipw", "dr", "acc"):
                if r.error:
                    row += ["", "", "", ""]
                else:
                    iv = r.intervals[est]
                    row += [repr(r.estimates[est]), repr(iv.lo), repr(iv.hi),
                            int(r.significant[est])]
            if per_arm:
                for arm in ("arm1", "arm0"):
                    iv = r.arm_intervals.get(arm)
                    row += ["" if iv is None else repr(iv.lo),
                            "" if iv is None else repr(iv.hi)]
            writer.writerow(row)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drclip",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the misspecification study grid")
    sim.add_argument("--config", help="flat key=value config file")
    sim.add_argument("--n", help="comma-separated sample sizes (default 100,200,1000)")
    sim.add_argument("--reps", type=int, help="replications per scenario cell (default 1000)")
    sim.add_argument("--seed", type=int, help="master seed (default 20250801)")
    sim.add_argument("--b", type=int, help="bootstrap draws per interval (default 10000)")
    sim.add_argument("--alpha", type=float, help="1 - confidence level (default 0.05)")
    sim.add_argument("--eps", type=float, help="propensity floor (default 1e-6)")
    sim.add_argument("--workers", type=int,
                     help="worker processes; 0 = available parallelism (default)")
    sim.add_argument("--bins", type=int, default=30, help="histogram bins (default 30)")
    sim.add_argument("--out", default="study_out", help="output directory")
    sim.set_defaults(func=_cmd_simulate)

    ana = sub.add_parser("analyze", help="two-arm analysis of a multi-outcome CSV")
    ana.add_argument("--data", required=True, help="input CSV path")
    ana.add_argument("--treatment", required=True, help="treatment column name")
    ana.add_argument("--covariates", required=True,
                     help="comma-separated propensity covariate columns")
    ana.add_argument("--outcomes", required=True,
                     help="comma-separated outcome columns, or 'all'")
    ana.add_argument("--alpha", type=float, default=0.05)
    ana.add_argument("--b", type=int, default=10000, help="bootstrap draws")
    ana.add_argument("--eps", type=float, default=0.01, help="propensity floor")
    ana.add_argument("--seed", type=int, default=0, help="bootstrap seed")
    ana.add_argument("--ate-ci", choices=[SUM_ARMS, PER_ARM_REPORT], default=SUM_ARMS,
                     help="interval for the arm difference: combine independent "
                          "per-arm draws (default) or also report per-arm intervals")
    ana.add_argument("--out", default="ate_out", help="output directory")
    ana.set_defaults(func=_cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DrclipError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
