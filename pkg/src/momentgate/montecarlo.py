"""Replication harness for estimator bias / variance / MSE studies.

Every replication draws its own counter-based seed from (master seed,
cell id, replication id), so reports are bitwise reproducible, replications
can run in any order on any number of threads, and growing ``reps`` extends
a run without disturbing earlier replications.  Failed replications (an
estimator raising) are recorded as NaN and surface in a ``failures`` column;
they are excluded from moment aggregates but never silently dropped.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import dependence as dep
from . import estimators as est
from . import tail_models as tm
from . import theory
from .errors import ArgumentError, MomentgateError

__all__ = [
    "CorrelatedConfig",
    "ExperimentConfig",
    "McReport",
    "run_iid",
    "run_corr",
    "lnS_curve",
    "propagation_check",
    "rep_seed",
]

_COLUMNS = (
    "cell_id", "model", "n", "tau", "tau_assumed", "s", "beta", "match",
    "corrected", "estimator", "k_theta", "k_rho", "reps", "reps_used",
    "failures", "target", "mean", "bias", "relative_bias", "variance",
    "mse", "relative_mse", "se_mean", "cov_theta_rho",
)

_LNS_COLUMNS = (
    "n", "q", "q_over_qc", "mean_lnS", "se_lnS", "predicted_lnS",
    "log_moment",
)

_PROP_COLUMNS = (
    "cell_id", "model", "n", "corrected", "reps_used", "cov_theta_rho",
    "measured_bias", "formula_bias", "bias_rel_discrepancy",
    "measured_var", "formula_var", "var_rel_discrepancy",
)


@dataclass(frozen=True)
class CorrelatedConfig:
    """Grid block for correlated-series experiments."""

    covs: tuple
    kappa: float = 0.08
    alpha: float = 0.01
    beta: float = 1.0
    match_mode: dep.MatchMode = dep.MatchMode.GAUSSIAN_LEVEL
    assumed_taus: tuple | None = None  # tau-misspecification sweep
    s_values: tuple | None = None      # explicit sieve radii sweep

    def __post_init__(self) -> None:
        if len(self.covs) == 0:
            raise ArgumentError("correlated config needs at least one covariance")


@dataclass(frozen=True)
class ExperimentConfig:
    models: tuple
    n_grid: tuple
    k_theta_grid: tuple = (None,)
    k_rho_grid: tuple = (None,)
    reps: int = 500
    seed: int = 0
    correlated: CorrelatedConfig | None = None

    def __post_init__(self) -> None:
        if self.reps < 2:
            raise ArgumentError("reps must be >= 2")
        if not self.models or not self.n_grid:
            raise ArgumentError("model and n grids must be nonempty")
        if not self.k_theta_grid or not self.k_rho_grid:
            raise ArgumentError("k grids must be nonempty")


@dataclass
class McReport:
    """Aggregated per-cell statistics plus retained per-replication values."""

    columns: tuple
    rows: list = field(default_factory=list)
    per_rep: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def to_csv(self, stream) -> None:
        for key in sorted(self.meta):
            stream.write(f"# {key}={self.meta[key]}\n")
        stream.write(",".join(self.columns) + "\n")
        for row in self.rows:
            stream.write(",".join(_fmt(row.get(c)) for c in self.columns) + "\n")

    def to_json(self, stream) -> None:
        json.dump({"meta": self.meta, "columns": list(self.columns),
                   "rows": self.rows}, stream, indent=1, sort_keys=True,
                  allow_nan=True)
        stream.write("\n")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def rep_seed(master: int, cell_id: int, rep_id: int) -> int:
    """Counter-based per-replication seed; independent of execution order."""
    ss = np.random.SeedSequence(entropy=int(master),
                                spawn_key=(int(cell_id), int(rep_id)))
    return int(ss.generate_state(1, np.uint64)[0])


def _pool_size() -> int:
    cap = os.cpu_count() or 1
    env = os.environ.get("MOMENTGATE_THREADS")
    if env:
        try:
            cap = min(cap, max(1, int(env)))
        except ValueError:
            raise ArgumentError(f"MOMENTGATE_THREADS={env!r} is not an integer")
    return cap


def _run_reps(reps: int, worker):
    """Evaluate worker(rep_id) for all reps; results indexed by rep id so the
    aggregation order never depends on scheduling."""
    out = [None] * reps
    workers = min(_pool_size(), reps)
    if workers <= 1:
        for r in range(reps):
            out[r] = worker(r)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for r, res in enumerate(pool.map(worker, range(reps))):
                out[r] = res
    return out


def _aggregate(values: np.ndarray, target: float) -> dict:
    ok = np.isfinite(values)
    kept = values[ok]
    used = int(ok.sum())
    if used == 0:
        return {"reps_used": 0, "failures": len(values), "target": target,
                "mean": math.nan, "bias": math.nan, "relative_bias": math.nan,
                "variance": math.nan, "mse": math.nan, "relative_mse": math.nan,
                "se_mean": math.nan}
    mean = float(kept.mean())
    bias = mean - target
    variance = float(kept.var())  # ddof=0 so mse == bias^2 + variance
    mse = float(np.mean((kept - target) ** 2))
    se = float(kept.std(ddof=1) / math.sqrt(used)) if used > 1 else math.nan
    return {
        "reps_used": used,
        "failures": int(len(values) - used),
        "target": target,
        "mean": mean,
        "bias": bias,
        "relative_bias": bias / target,
        "variance": variance,
        "mse": mse,
        "relative_mse": mse / target ** 2,
        "se_mean": se,
    }


def _cov_pairs(a: np.ndarray, b: np.ndarray) -> float:
    ok = np.isfinite(a) & np.isfinite(b)
    if int(ok.sum()) < 2:
        return math.nan
    return float(np.cov(a[ok], b[ok], ddof=0)[0, 1])


def _emit_cell(report: McReport, cell: dict, theta: np.ndarray,
               rho: np.ndarray, qc: np.ndarray, targets: dict) -> None:
    cov_tr = _cov_pairs(theta, rho)
    for name, vals in (("theta", theta), ("rho", rho), ("qc", qc)):
        row = dict(cell)
        row["estimator"] = name
        row.update(_aggregate(vals, targets[name]))
        row["cov_theta_rho"] = cov_tr
        report.rows.append(row)
    key = (cell["cell_id"], bool(cell.get("corrected")))
    report.per_rep[key] = {
        "cell": dict(cell), "theta": theta, "rho": rho, "qc": qc,
        "targets": dict(targets),
    }


def run_iid(config: ExperimentConfig) -> McReport:
    """Bias/variance/MSE of theta_hat, rho_hat, qc_hat on i.i.d. samples.

    Targets per cell: theta(n), rho_l(y_dagger(n)), qc_approx(n)."""
    report = McReport(columns=_COLUMNS,
                      meta={"kind": "iid", "seed": config.seed,
                            "reps": config.reps})
    grid = itertools.product(config.models, config.n_grid,
                             config.k_theta_grid, config.k_rho_grid)
    for cell_id, (model, n, k_t, k_r) in enumerate(grid):
        kt = est.default_k_theta(n) if k_t is None else int(k_t)
        kr = est.default_k_rho(n) if k_r is None else int(k_r)
        curve = theory.critical_curve(model, n)
        targets = {"theta": curve.theta, "rho": curve.rho_l_at_dagger,
                   "qc": curve.qc_approx}

        def worker(r, model=model, n=n, kt=kt, kr=kr, cell_id=cell_id):
            sample = tm.sample_iid(model, n, rep_seed(config.seed, cell_id, r))
            try:
                e = est.qc_hat(sample, kt, kr)
                return e.theta_hat, e.rho_hat, e.qc_hat
            except MomentgateError:
                return math.nan, math.nan, math.nan

        res = np.asarray(_run_reps(config.reps, worker))
        cell = {"cell_id": cell_id, "model": tm.format_model(model), "n": n,
                "k_theta": kt, "k_rho": kr, "reps": config.reps,
                "corrected": False}
        _emit_cell(report, cell, res[:, 0], res[:, 1], res[:, 2], targets)
    return report


def run_corr(config: ExperimentConfig) -> McReport:
    """Correlated-series study: uncorrected vs sieve-corrected estimators.

    Targets come from the true correlation length: q_c at n* = n/(1+kappa tau),
    theta(n*) and rho_l at the n* frontier.  An ``assumed_taus`` grid feeds the
    corrected estimator a misspecified tau while targets stay at the truth.
    """
    if config.correlated is None:
        raise ArgumentError("run_corr requires the correlated config block")
    cc = config.correlated
    report = McReport(columns=_COLUMNS,
                      meta={"kind": "corr", "seed": config.seed,
                            "reps": config.reps, "kappa": cc.kappa,
                            "alpha": cc.alpha, "beta": cc.beta,
                            "match": cc.match_mode.value})
    assumed_grid = cc.assumed_taus if cc.assumed_taus is not None else (None,)
    s_grid = cc.s_values if cc.s_values is not None else (None,)
    grid = itertools.product(config.models, config.n_grid, cc.covs,
                             assumed_grid, s_grid,
                             config.k_theta_grid, config.k_rho_grid)
    for cell_id, (model, n, cov, tau_assumed, s_val, k_t, k_r) in enumerate(grid):
        tau_true = dep.correlation_length(cov)
        tau_used = tau_true if tau_assumed is None else float(tau_assumed)
        ns_true = dep.n_star(n, tau_true, cc.kappa)
        curve = theory.critical_curve(model, round(ns_true))
        targets = {"theta": curve.theta, "rho": curve.rho_l_at_dagger,
                   "qc": dep.qc_theory_corr(model, n, tau_true, cc.kappa)}
        kt_u = est.default_k_theta(n) if k_t is None else int(k_t)
        kr_u = est.default_k_rho(n) if k_r is None else int(k_r)

        def worker(r, model=model, n=n, cov=cov, tau_used=tau_used,
                   s_val=s_val, k_t=k_t, k_r=k_r, kt_u=kt_u, kr_u=kr_u,
                   cell_id=cell_id):
            try:
                series = dep.synth_series(dep.SeriesSpec(model, cov, n),
                                          rep_seed(config.seed, cell_id, r),
                                          cc.match_mode)
            except MomentgateError:
                return (math.nan,) * 6 + (-1, -1)
            try:
                e = est.qc_hat(series, kt_u, kr_u)
                unc = (e.theta_hat, e.rho_hat, e.qc_hat)
            except MomentgateError:
                unc = (math.nan, math.nan, math.nan)
            try:
                ec = dep.qc_hat_corr(series, k_t, k_r, tau=tau_used,
                                     kappa=cc.kappa, s=s_val, alpha=cc.alpha,
                                     beta=cc.beta)
                cor = (ec.theta_hat, ec.rho_hat, ec.qc_hat,
                       ec.k_theta, ec.k_rho)
            except MomentgateError:
                cor = (math.nan, math.nan, math.nan, -1, -1)
            return unc + cor

        res = _run_reps(config.reps, worker)
        arr = np.asarray([row[:3] + row[3:6] for row in res])
        kt_c = next((row[6] for row in res if row[6] >= 0), -1)
        kr_c = next((row[7] for row in res if row[7] >= 0), -1)
        s_report = s_val if s_val is not None else cc.alpha * tau_used
        base = {"cell_id": cell_id, "model": tm.format_model(model), "n": n,
                "tau": tau_true, "tau_assumed": tau_used, "s": s_report,
                "beta": cc.beta, "match": cc.match_mode.value,
                "reps": config.reps}
        cell_u = dict(base, corrected=False, k_theta=kt_u, k_rho=kr_u)
        _emit_cell(report, cell_u, arr[:, 0], arr[:, 1], arr[:, 2], targets)
        cell_c = dict(base, corrected=True, k_theta=int(kt_c), k_rho=int(kr_c))
        _emit_cell(report, cell_c, arr[:, 3], arr[:, 4], arr[:, 5], targets)
    return report


def lnS_curve(model: tm.TailModel, n_list, q_grid, reps: int,
              seed: int) -> McReport:
    """Mean sample-log-moment curves ln S(n, q) against their predictions.

    S(n, q) = (1/n) sum exp(q Y_i), evaluated by log-sum-exp; the report also
    carries the collapse coordinate q / qc_approx(n).
    """
    q_grid = np.asarray(q_grid, dtype=float)
    if np.any(q_grid <= 0.0):
        raise ArgumentError("q grid must be positive")
    report = McReport(columns=_LNS_COLUMNS,
                      meta={"kind": "lnS", "seed": seed, "reps": reps,
                            "model": tm.format_model(model)})
    for cell_id, n in enumerate(n_list):
        curve = theory.critical_curve(model, n)
        acc = np.zeros(len(q_grid))
        acc2 = np.zeros(len(q_grid))

        def worker(r, n=n, cell_id=cell_id):
            y = tm.sample_iid(model, n, rep_seed(seed, cell_id, r)).values
            return np.array([logsumexp(q * y) for q in q_grid]) - math.log(n)

        for vals in _run_reps(reps, worker):
            acc += vals
            acc2 += vals * vals
        mean = acc / reps
        var = acc2 / reps - mean ** 2
        se = np.sqrt(np.maximum(var, 0.0) / (reps - 1)) if reps > 1 else np.full_like(mean, math.nan)
        for j, q in enumerate(q_grid):
            report.rows.append({
                "n": n, "q": float(q), "q_over_qc": float(q) / curve.qc_approx,
                "mean_lnS": float(mean[j]), "se_lnS": float(se[j]),
                "predicted_lnS": theory.predicted_lnS(model, n, float(q)),
                "log_moment": theory.moment_quadrature(model, float(q)).log_value,
            })
    return report


def propagation_check(report: McReport) -> McReport:
    """Check measured bias/variance of qc_hat = theta_hat * rho_hat against
    the product-moment propagation identities evaluated from the same
    replications (exact algebraic identities up to float roundoff)."""
    out = McReport(columns=_PROP_COLUMNS, meta=dict(report.meta,
                                                    kind="propagation"))
    for (cell_id, corrected), rec in sorted(report.per_rep.items()):
        a = rec["theta"]
        b = rec["rho"]
        ok = np.isfinite(a) & np.isfinite(b)
        a, b = a[ok], b[ok]
        if len(a) < 2:
            continue
        t_th = rec["targets"]["theta"]
        t_rh = rec["targets"]["rho"]
        ma, mb = float(a.mean()), float(b.mean())
        va, vb = float(a.var()), float(b.var())
        c = float(np.cov(a, b, ddof=0)[0, 1])
        c2 = float(np.cov(a * a, b * b, ddof=0)[0, 1])
        prod = a * b
        measured_bias = float(prod.mean()) - t_th * t_rh
        ba, bb = ma - t_th, mb - t_rh
        formula_bias = c + ba * t_rh + bb * t_th + ba * bb
        measured_var = float(prod.var())
        formula_var = (va * vb + c2 - c * c + va * mb * mb + vb * ma * ma
                       - 2.0 * c * ma * mb)
        scale_b = max(abs(measured_bias), 1e-300)
        scale_v = max(abs(measured_var), 1e-300)
        out.rows.append({
            "cell_id": cell_id,
            "model": rec["cell"].get("model"),
            "n": rec["cell"].get("n"),
            "corrected": corrected,
            "reps_used": len(a),
            "cov_theta_rho": c,
            "measured_bias": measured_bias,
            "formula_bias": formula_bias,
            "bias_rel_discrepancy": abs(formula_bias - measured_bias) / scale_b,
            "measured_var": measured_var,
            "formula_var": formula_var,
            "var_rel_discrepancy": abs(formula_var - measured_var) / scale_v,
        })
    return out
