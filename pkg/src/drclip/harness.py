"""Study harness: runs the misspecification grid, aggregates metrics, writes
reports and figures, and runs the multi-outcome two-arm analysis.

Replications are embarrassingly parallel; every replication derives its own
generator and bootstrap substreams from the master seed, so output is a pure
function of the configuration regardless of worker count.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import inference, nuisance
from .data import load_ate_csv
from .errors import DrclipError, NoData
from .estimators import compute_bundle, estimate_ate
from .inference import (
    Interval,
    WALD,
    acc_interval,
    covariance,
    influence_matrix,
    sample_W,
    wald_interval,
)
from .nuisance import (
    fit_diff_in_means,
    fit_logistic,
    fit_ols,
    hajek_rescale,
    predict_mu,
    predict_pi,
)
from .simgen import (
    CORRECT,
    INCORRECT,
    THETA_STAR,
    ScenarioConfig,
    derive_seed,
    design_for,
    generate,
    spec_code,
)
from .util import norm_ppf

# Scenario order mirrors the report layout: fully correct first, fully
# misspecified last.
SCENARIOS = (
    (CORRECT, CORRECT),
    (CORRECT, INCORRECT),
    (INCORRECT, CORRECT),
    (INCORRECT, INCORRECT),
)

ESTIMATORS = ("or", "ipw", "dr", "acc")

SUM_ARMS = "sum-arms"
PER_ARM_REPORT = "per-arm-report"


@dataclass(frozen=True)
class StudyConfig:
    """Grid definition plus every tunable the replication loop consumes."""

    sample_sizes: tuple = (100, 200, 1000)
    replications: int = 1000
    scenarios: tuple = SCENARIOS
    master_seed: int = 20250801
    bootstrap_b: int = inference.DEFAULT_B
    alpha: float = inference.DEFAULT_ALPHA
    workers: int = 0  # 0 = available parallelism
    nuisance_tol: float = nuisance.DEFAULT_TOL
    nuisance_max_iter: int = nuisance.DEFAULT_MAX_ITER
    nuisance_eps: float = nuisance.SIM_EPS

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if not self.sample_sizes:
            raise ValueError("sample_sizes must be nonempty")
        for pair in self.scenarios:
            spec_code(pair[0])
            spec_code(pair[1])


@dataclass(frozen=True)
class ReplicationRecord:
    """Everything retained from one replication of one scenario cell."""

    n: int
    outcome_spec: str
    propensity_spec: str
    rep: int
    flagged: bool
    error: str
    theta_or: float
    theta_ipw: float
    correction: float
    theta_dr: float
    theta_acc: float
    lambda_hat: float
    interval_or: Interval | None
    interval_ipw: Interval | None
    interval_dr: Interval | None
    interval_acc: Interval | None

    def interval(self, estimator: str) -> Interval | None:
        return getattr(self, f"interval_{estimator}")

    def estimate(self, estimator: str) -> float:
        return getattr(self, f"theta_{estimator}")


def _audit(bundle, theta_star, tol=1e-9):
    """Per-replication safety checks; a violation is a bug, not data noise."""
    lo = min(bundle.theta_or, bundle.theta_ipw)
    hi = max(bundle.theta_or, bundle.theta_ipw)
    if not lo <= bundle.theta_acc <= hi:
        raise AssertionError("clipped estimate escaped the component interval")
    worst = max(abs(bundle.theta_or - theta_star), abs(bundle.theta_ipw - theta_star))
    if abs(bundle.theta_acc - theta_star) > worst + tol:
        raise AssertionError("safety inequality violated")
    lam = bundle.lambda_hat
    combo = lam * bundle.theta_or + (1.0 - lam) * bundle.theta_ipw
    if not 0.0 <= lam <= 1.0 or abs(bundle.theta_acc - combo) > tol:
        raise AssertionError("convex-combination identity violated")


def _replicate(config: StudyConfig, task) -> ReplicationRecord:
    n, ospec, pspec, rep = task
    data_seed = derive_seed(config.master_seed, n, spec_code(ospec), spec_code(pspec), rep, 0)
    boot_seed = derive_seed(config.master_seed, n, spec_code(ospec), spec_code(pspec), rep, 1)
    nan = float("nan")
    try:
        sample = generate(ScenarioConfig(n=n, outcome_spec=ospec,
                                         propensity_spec=pspec, seed=data_seed))
        mu_design, mu_src = design_for(sample, ospec)
        pi_design, pi_src = design_for(sample, pspec)
        expected = {CORRECT: "latent", INCORRECT: "observed"}
        if mu_src != expected[ospec] or pi_src != expected[pspec]:
            raise AssertionError("scenario wiring handed the wrong design matrix")

        labeled = sample.response == 1
        outcome_model = fit_ols(mu_design[labeled], sample.outcome.take(labeled))
        propensity_model = fit_logistic(
            pi_design, sample.response,
            tol=config.nuisance_tol, max_iter=config.nuisance_max_iter,
            eps=config.nuisance_eps,
        )
        mu_hat = predict_mu(outcome_model, mu_design)
        pi_hat = predict_pi(propensity_model, pi_design)

        bundle = compute_bundle(mu_hat, pi_hat, sample.response, sample.outcome)
        _audit(bundle, sample.theta_star)
        infl = influence_matrix(mu_hat, pi_hat, sample.response, sample.outcome, bundle)
        sigma = covariance(infl)
        alpha = config.alpha
        ci_or = wald_interval(bundle.theta_or, infl[:, 0], n, alpha)
        ci_ipw = wald_interval(bundle.theta_ipw, infl[:, 1], n, alpha)
        ci_dr = wald_interval(bundle.theta_dr, infl[:, 0] + infl[:, 1] - infl[:, 2], n, alpha)
        ci_acc = acc_interval(bundle, sigma, config.bootstrap_b, alpha,
                              np.random.default_rng(boot_seed))
        if sample.outcome.masked_reads != 0:
            raise AssertionError("estimation touched a masked outcome cell")
        return ReplicationRecord(
            n=n, outcome_spec=ospec, propensity_spec=pspec, rep=rep,
            flagged=False, error="",
            theta_or=bundle.theta_or, theta_ipw=bundle.theta_ipw,
            correction=bundle.correction, theta_dr=bundle.theta_dr,
            theta_acc=bundle.theta_acc, lambda_hat=bundle.lambda_hat,
            interval_or=ci_or, interval_ipw=ci_ipw,
            interval_dr=ci_dr, interval_acc=ci_acc,
        )
    except DrclipError as exc:
        return ReplicationRecord(
            n=n, outcome_spec=ospec, propensity_spec=pspec, rep=rep,
            flagged=True, error=f"{type(exc).__name__}: {exc}",
            theta_or=nan, theta_ipw=nan, correction=nan,
            theta_dr=nan, theta_acc=nan, lambda_hat=nan,
            interval_or=None, interval_ipw=None,
            interval_dr=None, interval_acc=None,
        )


def run_study(config: StudyConfig) -> list[ReplicationRecord]:
    """Run the full grid; pure function of the config.

    Per-replication errors are recorded on the record, never raised. Records
    come back ordered by (sample size position, scenario position, rep).
    """
    tasks = [
        (n, ospec, pspec, rep)
        for n in config.sample_sizes
        for ospec, pspec in config.scenarios
        for rep in range(config.replications)
    ]
    workers = config.workers
    if workers <= 0:
        import os

        workers = os.cpu_count() or 1
    if workers == 1:
        return [_replicate(config, t) for t in tasks]
    chunk = max(1, len(tasks) // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(partial(_replicate, config), tasks, chunksize=chunk))


@dataclass(frozen=True)
class MetricsRow:
    estimator: str
    bias: float
    rmse: float
    mae: float
    coverage: float
    ci_width: float


@dataclass(frozen=True)
class ScenarioMetrics:
    n: int
    outcome_spec: str
    propensity_spec: str
    n_used: int
    n_flagged: int
    rows: tuple


def compute_metrics(records, theta_star: float) -> list[ScenarioMetrics]:
    """Aggregate per-scenario metrics over non-flagged records.

    bias = mean(est) - theta*, rmse = sqrt(mean((est - theta*)^2)),
    mae = median(|est - theta*|), coverage = fraction of intervals containing
    theta*, ci_width = mean(hi - lo).
    """
    groups: dict = {}
    order = []
    for rec in records:
        key = (rec.n, rec.outcome_spec, rec.propensity_spec)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(rec)
    out = []
    total_used = 0
    for key in order:
        recs = groups[key]
        used = [r for r in recs if not r.flagged]
        if not used:
            out.append(ScenarioMetrics(*key, n_used=0, n_flagged=len(recs), rows=()))
            continue
        total_used += len(used)
        rows = []
        for est in ESTIMATORS:
            values = np.array([r.estimate(est) for r in used])
            err = values - theta_star
            ivs = [r.interval(est) for r in used]
            rows.append(MetricsRow(
                estimator=est,
                bias=float(err.mean()),
                rmse=float(np.sqrt(np.mean(err ** 2))),
                mae=float(np.median(np.abs(err))),
                coverage=float(np.mean([iv.contains(theta_star) for iv in ivs])),
                ci_width=float(np.mean([iv.width for iv in ivs])),
            ))
        out.append(ScenarioMetrics(*key, n_used=len(used),
                                   n_flagged=len(recs) - len(used), rows=tuple(rows)))
    if total_used == 0:
        raise NoData("every replication is flagged; nothing to aggregate")
    return out


_SCENARIO_LABEL = {
    (CORRECT, CORRECT): "Correct mu, Correct pi",
    (CORRECT, INCORRECT): "Correct mu, Incorrect pi",
    (INCORRECT, CORRECT): "Incorrect mu, Correct pi",
    (INCORRECT, INCORRECT): "Incorrect mu, Incorrect pi",
}

_ESTIMATOR_LABEL = {"or": "OR", "ipw": "IPW", "dr": "DR", "acc": "DR+ACC"}


def emit_report(table, fmt: str, path) -> None:
    """Write the metrics table as CSV (full precision) or Markdown (grouped
    by scenario, rounded like the reference layout)."""
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "outcome_spec", "propensity_spec", "estimator",
                             "bias", "rmse", "mae", "coverage", "ci_width",
                             "replications_used", "replications_flagged"])
            for sm in table:
                for row in sm.rows:
                    writer.writerow([
                        sm.n, sm.outcome_spec, sm.propensity_spec, row.estimator,
                        repr(row.bias), repr(row.rmse), repr(row.mae),
                        repr(row.coverage), repr(row.ci_width),
                        sm.n_used, sm.n_flagged,
                    ])
    elif fmt == "markdown":
        buf = io.StringIO()
        buf.write("| n | Scenario | Estimator | Bias | RMSE | MAE | Coverage | CI width |\n")
        buf.write("|---|----------|-----------|------|------|-----|----------|----------|\n")
        for sm in table:
            label = _SCENARIO_LABEL.get((sm.outcome_spec, sm.propensity_spec),
                                        f"{sm.outcome_spec}/{sm.propensity_spec}")
            for i, row in enumerate(sm.rows):
                scen = label if i == 0 else ""
                ncol = str(sm.n) if i == 0 else ""
                buf.write(
                    f"| {ncol} | {scen} | {_ESTIMATOR_LABEL[row.estimator]} "
                    f"| {row.bias:.3f} | {row.rmse:.3f} | {row.mae:.3f} "
                    f"| {row.coverage:.3f} | {row.ci_width:.2f} |\n"
                )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    else:
        raise ValueError(f"format must be 'csv' or 'markdown', got {fmt!r}")


def emit_histogram_svg(values, bins: int, reference: float, svg_path,
                       csv_path=None) -> None:
    """Static SVG histogram with a vertical reference line, plus the binned
    counts as CSV. The SVG contains exactly ``bins`` rect elements."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("need at least 2 values")
    counts, edges = np.histogram(values, bins=bins)

    width, height = 640.0, 420.0
    ml, mr, mt, mb = 60.0, 20.0, 20.0, 40.0
    pw, ph = width - ml - mr, height - mt - mb
    lo_dom = min(edges[0], reference)
    hi_dom = max(edges[-1], reference)
    if hi_dom == lo_dom:
        hi_dom = lo_dom + 1.0
    span = hi_dom - lo_dom

    def sx(v):
        return ml + (v - lo_dom) / span * pw

    max_count = max(int(counts.max()), 1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
    ]
    for i, c in enumerate(counts):
        x0 = sx(edges[i])
        bw = sx(edges[i + 1]) - x0
        h = ph * (c / max_count)
        parts.append(
            f'<rect x="{x0:.2f}" y="{mt + ph - h:.2f}" width="{bw:.2f}" '
            f'height="{h:.2f}" fill="#4878a8" stroke="#ffffff" stroke-width="0.5"/>'
        )
    xr = sx(reference)
    parts.append(
        f'<line x1="{xr:.2f}" y1="{mt:.2f}" x2="{xr:.2f}" y2="{mt + ph:.2f}" '
        'stroke="#c03028" stroke-width="1.5" stroke-dasharray="5,3"/>'
    )
    parts.append(
        f'<line x1="{ml:.2f}" y1="{mt + ph:.2f}" x2="{ml + pw:.2f}" y2="{mt + ph:.2f}" '
        'stroke="#000000" stroke-width="1"/>'
    )
    parts.append(
        f'<line x1="{ml:.2f}" y1="{mt:.2f}" x2="{ml:.2f}" y2="{mt + ph:.2f}" '
        'stroke="#000000" stroke-width="1"/>'
    )
    parts.append(f'<text x="{ml:.2f}" y="{height - 12:.2f}" font-size="12">{lo_dom:.6g}</text>')
    parts.append(
        f'<text x="{ml + pw:.2f}" y="{height - 12:.2f}" font-size="12" '
        f'text-anchor="end">{hi_dom:.6g}</text>'
    )
    parts.append(
        f'<text x="{xr:.2f}" y="{mt - 5:.2f}" font-size="12" fill="#c03028" '
        f'text-anchor="middle">{reference:.6g}</text>'
    )
    parts.append(f'<text x="{ml - 8:.2f}" y="{mt + 10:.2f}" font-size="12" '
                 f'text-anchor="end">{max_count}</text>')
    parts.append(f'<text x="{ml - 8:.2f}" y="{mt + ph:.2f}" font-size="12" '
                 'text-anchor="end">0</text>')
    parts.append("</svg>")
    with open(svg_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")

    if csv_path is None:
        csv_path = str(svg_path)
        csv_path = csv_path[:-4] + ".csv" if csv_path.endswith(".svg") else csv_path + ".csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for i, c in enumerate(counts):
            writer.writerow([repr(float(edges[i])), repr(float(edges[i + 1])), int(c)])


def write_records_csv(records, path) -> None:
    """Raw per-replication dump; floats via repr so reruns are byte-identical."""

    def f(x):
        return "" if x is None else repr(float(x))

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "n", "outcome_spec", "propensity_spec", "rep", "flagged", "error",
            "theta_or", "theta_ipw", "correction", "theta_dr", "theta_acc",
            "lambda_hat", "or_lo", "or_hi", "ipw_lo", "ipw_hi",
            "dr_lo", "dr_hi", "acc_lo", "acc_hi",
        ])
        for r in records:
            ivs = []
            for est in ESTIMATORS:
                iv = r.interval(est)
                ivs += ["" if iv is None else repr(iv.lo), "" if iv is None else repr(iv.hi)]
            writer.writerow([
                r.n, r.outcome_spec, r.propensity_spec, r.rep,
                int(r.flagged), r.error,
                f(r.theta_or), f(r.theta_ipw), f(r.correction),
                f(r.theta_dr), f(r.theta_acc), f(r.lambda_hat), *ivs,
            ])


@dataclass(frozen=True)
class AnalysisConfig:
    """Tunables of the multi-outcome two-arm analysis."""

    alpha: float = inference.DEFAULT_ALPHA
    bootstrap_b: int = inference.DEFAULT_B
    eps: float = nuisance.ATE_EPS
    seed: int = 0
    ate_ci: str = SUM_ARMS
    nuisance_tol: float = nuisance.DEFAULT_TOL
    nuisance_max_iter: int = nuisance.DEFAULT_MAX_ITER

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.ate_ci not in (SUM_ARMS, PER_ARM_REPORT):
            raise ValueError(f"ate_ci must be {SUM_ARMS!r} or {PER_ARM_REPORT!r}")


@dataclass(frozen=True)
class OutcomeResult:
    """Estimates, intervals, and significance flags for one outcome column."""

    outcome: str
    n: int
    error: str = ""
    estimates: dict = field(default_factory=dict)      # estimator -> ATE
    intervals: dict = field(default_factory=dict)      # estimator -> Interval
    significant: dict = field(default_factory=dict)    # estimator -> bool
    arm_intervals: dict = field(default_factory=dict)  # per-arm ACC intervals


def analyze_ate(path, schema, outcome_columns, config: AnalysisConfig) -> list[OutcomeResult]:
    """Per-outcome two-arm analysis of a multi-outcome table.

    One logistic propensity is fitted on the shared covariates and rescaled
    once; each outcome column then gets a difference-in-means outcome model,
    the four estimators, Wald intervals for OR/IPW/DR, and a parametric
    bootstrap interval for the clipped estimator. The default interval for
    the effect difference combines the two per-arm bootstrap draws as
    independent arms; per-arm intervals are reported when requested.
    Per-outcome failures are recorded and the analysis continues.
    """
    datasets = load_ate_csv(path, schema, outcome_columns)
    base = datasets[0]
    a = base.treatment
    n = base.n
    propensity_model = fit_logistic(
        base.covariates, a,
        tol=config.nuisance_tol, max_iter=config.nuisance_max_iter, eps=config.eps,
    )
    pi_tilde = predict_pi(propensity_model, base.covariates)
    pi_hat = hajek_rescale(pi_tilde, a, config.eps)
    z = norm_ppf(1.0 - config.alpha / 2.0)
    root_n = np.sqrt(n)

    results = []
    for k, (name, ds) in enumerate(zip(outcome_columns, datasets)):
        try:
            model = fit_diff_in_means(ds.outcome, ds.treatment)
            est = estimate_ate(ds, model, model, pi_hat)
            mu1_hat = predict_mu(model, ds.covariates, arms=np.ones(n, dtype=np.int64))
            mu0_hat = predict_mu(model, ds.covariates, arms=np.zeros(n, dtype=np.int64))
            infl1 = influence_matrix(mu1_hat, pi_hat, a, ds.outcome, est.arm1)
            infl0 = influence_matrix(mu0_hat, 1.0 - pi_hat, 1 - a, ds.outcome, est.arm0)

            estimates = {"or": est.ate_or, "ipw": est.ate_ipw,
                         "dr": est.ate_dr, "acc": est.ate_acc}
            intervals = {}
            for est_name, col1, col0 in (
                ("or", infl1[:, 0], infl0[:, 0]),
                ("ipw", infl1[:, 1], infl0[:, 1]),
                ("dr", infl1[:, 0] + infl1[:, 1] - infl1[:, 2],
                 infl0[:, 0] + infl0[:, 1] - infl0[:, 2]),
            ):
                var = float(np.mean(col1 ** 2) + np.mean(col0 ** 2))
                half = z * np.sqrt(var / n)
                intervals[est_name] = Interval(
                    lo=estimates[est_name] - half, hi=estimates[est_name] + half,
                    level=1.0 - config.alpha, method=WALD,
                )

            sigma1 = covariance(infl1)
            sigma0 = covariance(infl0)
            rng1 = np.random.default_rng(derive_seed(config.seed, k, 1))
            rng0 = np.random.default_rng(derive_seed(config.seed, k, 0))
            w1 = sample_W(sigma1, config.bootstrap_b, rng1)
            w0 = sample_W(sigma0, config.bootstrap_b, rng0)
            q_lo, q_hi = np.quantile(w1 - w0, [config.alpha / 2.0, 1.0 - config.alpha / 2.0])
            intervals["acc"] = Interval(
                lo=float(est.ate_acc - q_hi / root_n),
                hi=float(est.ate_acc - q_lo / root_n),
                level=1.0 - config.alpha, method=inference.PARAMETRIC_BOOTSTRAP,
            )

            arm_intervals = {}
            if config.ate_ci == PER_ARM_REPORT:
                for arm_name, bundle, sig, rng_seed in (
                    ("arm1", est.arm1, sigma1, derive_seed(config.seed, k, 3)),
                    ("arm0", est.arm0, sigma0, derive_seed(config.seed, k, 2)),
                ):
                    arm_intervals[arm_name] = acc_interval(
                        bundle, sig, config.bootstrap_b, config.alpha,
                        np.random.default_rng(rng_seed),
                    )

            results.append(OutcomeResult(
                outcome=name, n=n,
                estimates=estimates, intervals=intervals,
                significant={e: not intervals[e].contains(0.0) for e in estimates},
                arm_intervals=arm_intervals,
            ))
        except DrclipError as exc:
            results.append(OutcomeResult(outcome=name, n=n,
                                         error=f"{type(exc).__name__}: {exc}"))
    return results
