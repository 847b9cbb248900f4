"""Command line interface: theory queries, sampling, synthesis, estimation,
and Monte-Carlo experiment execution.

Exit codes: 0 success; 2 usage/domain error; 3 numerical failure
(convergence, degenerate estimator, embedding); 4 data-format or I/O error.
Every output starts with a reproducibility header (version, resolved
configuration, seed) and contains no timestamps, so identical invocations
produce byte-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys

import numpy as np

from . import __version__
from . import dependence as dep
from . import estimators as est
from . import montecarlo as mc
from . import tail_models as tm
from . import theory
from .errors import (
    ArgumentError,
    DataFormatError,
    DomainError,
    MomentgateError,
)

_THEORY_COLUMNS = ("n", "y_dagger", "theta", "rho_l", "qc_exact", "qc_approx")


def _fmt(v) -> str:
    return mc._fmt(v)


def _seed(args) -> int:
    return 0 if args.seed is None else int(args.seed)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ArgumentError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    return [int(round(x)) for x in _floats(text)]


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w"), True


def _header(stream, seed, config_items) -> None:
    stream.write(f"# version={__version__}\n")
    cfg = " ".join(f"{k}={v}" for k, v in config_items)
    stream.write(f"# config={cfg}\n")
    stream.write(f"# seed={seed}\n")


def _write_rows(stream, columns, rows) -> None:
    stream.write(",".join(columns) + "\n")
    for row in rows:
        stream.write(",".join(_fmt(row.get(c)) for c in columns) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_theory(args) -> int:
    model = tm.parse_model(args.model)
    ns = _floats(args.n)
    rows = []
    for n in ns:
        c = theory.critical_curve(model, n)
        rows.append({"n": c.n, "y_dagger": c.y_dagger, "theta": c.theta,
                     "rho_l": c.rho_l_at_dagger, "qc_exact": c.qc_exact,
                     "qc_approx": c.qc_approx})
    q_rows = []
    if args.q_grid:
        if len(ns) != 1:
            raise ArgumentError("--q-grid needs exactly one --n value")
        n = ns[0]
        ceiling = theory.q_validity_ceiling(model, n, args.eps)
        for q in _floats(args.q_grid):
            if q > ceiling:
                sys.stderr.write(
                    f"warning: q={q:g} exceeds validity ceiling {ceiling:.6g}\n"
                )
            q_rows.append({
                "q": q,
                "predicted_lnS": theory.predicted_lnS(model, n, q),
                "log_moment": theory.moment_quadrature(model, q).log_value,
            })
    cfg = [("command", "theory"), ("model", tm.format_model(model)),
           ("n", args.n)]
    stream, close = _open_out(args.out)
    try:
        if args.format == "json":
            _header(stream, _seed(args), cfg)
            json.dump({"curves": rows, "q_table": q_rows}, stream, indent=1,
                      sort_keys=True)
            stream.write("\n")
        else:
            _header(stream, _seed(args), cfg)
            _write_rows(stream, _THEORY_COLUMNS, rows)
            if q_rows:
                stream.write("# q_table\n")
                _write_rows(stream, ("q", "predicted_lnS", "log_moment"), q_rows)
    finally:
        if close:
            stream.close()
    return 0


def _cmd_sample(args) -> int:
    model = tm.parse_model(args.model)
    sample = tm.sample_iid(model, args.n, _seed(args))
    stream, close = _open_out(args.out)
    try:
        tm.write_sample(stream, sample, model,
                        extra_header={"version": __version__})
    finally:
        if close:
            stream.close()
    return 0


def _cmd_synth(args) -> int:
    model = tm.parse_model(args.model)
    cov = dep.parse_cov(args.cov)
    spec = dep.SeriesSpec(model=model, cov=cov, n=args.n)
    sample = dep.synth_series(spec, _seed(args), dep.MatchMode(args.match))
    stream, close = _open_out(args.out)
    try:
        tm.write_sample(stream, sample, model,
                        extra_header={"cov": dep.format_cov(cov),
                                      "match": args.match,
                                      "version": __version__})
    finally:
        if close:
            stream.close()
    return 0


def _cmd_estimate(args) -> int:
    if args.input == "-":
        values, meta = tm.read_sample(sys.stdin)
    else:
        with open(args.input) as fh:
            values, meta = tm.read_sample(fh)
    if args.log_input:
        if np.any(values <= 0.0):
            raise DataFormatError("--log-input requires strictly positive values")
        values = np.log(values)
    n = len(values)
    sample = tm.Sample(values=values, n=n, seed=int(meta.get("seed", 0)))
    if args.corr:
        if args.tau is None:
            raise ArgumentError("--corr requires --tau")
        e = dep.qc_hat_corr(sample, args.k_theta, args.k_rho, tau=args.tau,
                            kappa=args.kappa, s=args.s, alpha=args.alpha,
                            beta=args.beta)
        extra = {"tau": args.tau, "kappa": args.kappa, "beta": args.beta,
                 "s": args.s if args.s is not None else args.alpha * args.tau,
                 "n_star": dep.n_star(n, args.tau, args.kappa)}
    else:
        e = est.qc_hat(sample, args.k_theta, args.k_rho)
        extra = {}
    payload = {"theta_hat": e.theta_hat, "rho_hat": e.rho_hat,
               "qc_hat": e.qc_hat, "k_theta": e.k_theta, "k_rho": e.k_rho,
               "n": n, **extra}
    stream, close = _open_out(args.out)
    try:
        if args.format == "csv":
            cfg = [("command", "estimate"), ("input", args.input)]
            _header(stream, _seed(args), cfg)
            cols = tuple(payload)
            _write_rows(stream, cols, [payload])
        else:
            json.dump(payload, stream, indent=1, sort_keys=True)
            stream.write("\n")
    finally:
        if close:
            stream.close()
    return 0


def _figure_preset(fig: int, reps: int | None, seed: int):
    """Numbered built-in experiment grids (standard estimator studies)."""
    ln = tm.log_normal()
    lw2 = tm.log_weibull(2.0)
    exp = dep.ExponentialCov

    def cfgi(**kw):
        kw.setdefault("reps", reps or 500)
        kw.setdefault("seed", seed)
        return mc.ExperimentConfig(**kw)

    if fig == 2:
        return ("lnS", {"model": ln, "n_list": (100, 1000, 1000000),
                        "rel_q": np.linspace(0.1, 3.0, 30),
                        "reps": reps or 500, "seed": seed})
    if fig == 3:
        return ("iid", cfgi(models=(lw2,), n_grid=(1000,),
                            k_theta_grid=(1, 2, 4, 8, 16, 28),
                            k_rho_grid=(80,)))
    if fig == 5:
        return ("iid", cfgi(models=(lw2,), n_grid=(1000, 10000, 100000)))
    if fig == 6:
        return ("iid", cfgi(models=(lw2,), n_grid=(1000,),
                            k_theta_grid=(28,),
                            k_rho_grid=(10, 20, 40, 80, 120, 160, 200)))
    if fig == 8:
        return ("iid", cfgi(models=(lw2,), n_grid=(1000, 10000, 100000),
                            k_theta_grid=(None,), k_rho_grid=(None,)))
    if fig == 9:
        return ("propagation", cfgi(models=(lw2,), n_grid=(1000,)))
    if fig in (11, 15):
        return ("corr", cfgi(models=(ln,), n_grid=(65536,),
                             k_theta_grid=(10,), k_rho_grid=(100,),
                             reps=reps or 200,
                             correlated=mc.CorrelatedConfig(
                                 covs=(exp(10.0), exp(50.0), exp(100.0)))))
    if fig == 12:
        return ("corr", cfgi(models=(ln,), n_grid=(65536,),
                             k_theta_grid=(1,), k_rho_grid=(100,),
                             reps=reps or 200,
                             correlated=mc.CorrelatedConfig(
                                 covs=(exp(10.0), exp(50.0), exp(100.0)))))
    if fig == 16:
        return ("corr", cfgi(models=(ln,), n_grid=(65536,),
                             k_theta_grid=(10,), k_rho_grid=(100,),
                             reps=reps or 200,
                             correlated=mc.CorrelatedConfig(
                                 covs=(exp(100.0),),
                                 assumed_taus=(100.0, 200.0, 400.0))))
    raise ArgumentError(f"no preset for figure {fig}")


def _k_grid(text: str | None) -> tuple:
    if text is None or text.strip().lower() in ("", "default"):
        return (None,)
    return tuple(_ints(text))


def _config_experiment(path: str, reps: int | None, seed: int | None):
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise DataFormatError(f"cannot read config file {path!r}")
    if "experiment" not in parser:
        raise DataFormatError("config needs an [experiment] section")
    exp = parser["experiment"]
    kind = exp.get("kind", "iid").strip().lower()
    models = tuple(tm.parse_model(s) for s in exp.get("models", "").split(",")
                   if s.strip())
    if not models:
        raise DataFormatError("config needs experiment.models")
    seed_val = seed if seed is not None else exp.getint("seed", fallback=0)
    reps_val = reps if reps is not None else exp.getint("reps", fallback=500)
    if kind == "lns":
        n_list = tuple(_ints(exp.get("n", "1000")))
        q = _floats(exp.get("q", ""))
        rel_q = _floats(exp.get("q_over_qc", ""))
        if bool(q) == bool(rel_q):
            raise DataFormatError("lnS config needs exactly one of q / q_over_qc")
        return ("lnS", {"model": models[0], "n_list": n_list,
                        "q": q or None, "rel_q": rel_q or None,
                        "reps": reps_val, "seed": seed_val})
    corr = None
    if "correlated" in parser:
        sec = parser["correlated"]
        covs = tuple(dep.parse_cov(s) for s in sec.get("cov", "").split(",")
                     if s.strip())
        if not covs:
            raise DataFormatError("correlated section needs cov")
        assumed = sec.get("assumed_tau", fallback=None)
        s_vals = sec.get("s", fallback=None)
        corr = mc.CorrelatedConfig(
            covs=covs,
            kappa=sec.getfloat("kappa", fallback=0.08),
            alpha=sec.getfloat("alpha", fallback=0.01),
            beta=sec.getfloat("beta", fallback=1.0),
            match_mode=dep.MatchMode(sec.get("match", "gaussian")),
            assumed_taus=tuple(_floats(assumed)) if assumed else None,
            s_values=tuple(_floats(s_vals)) if s_vals else None,
        )
    config = mc.ExperimentConfig(
        models=models,
        n_grid=tuple(_ints(exp.get("n", "1000"))),
        k_theta_grid=_k_grid(exp.get("k_theta", fallback=None)),
        k_rho_grid=_k_grid(exp.get("k_rho", fallback=None)),
        reps=reps_val,
        seed=seed_val,
        correlated=corr,
    )
    if kind == "propagation":
        return ("propagation", config)
    if kind == "corr" or (kind == "iid" and corr is not None):
        return ("corr", config)
    return ("iid", config)


def _cmd_mc(args) -> int:
    if (args.config is None) == (args.figure is None):
        raise ArgumentError("mc needs exactly one of --config / --figure")
    if args.figure is not None:
        kind, payload = _figure_preset(args.figure, args.reps, _seed(args))
        cfg_desc = [("command", "mc"), ("figure", args.figure)]
    else:
        kind, payload = _config_experiment(args.config, args.reps, args.seed)
        cfg_desc = [("command", "mc"), ("config", args.config)]

    if kind == "lnS":
        model = payload["model"]
        rel_q = payload.get("rel_q")
        seed_val = payload["seed"]
        reports = []
        for ci, n in enumerate(payload["n_list"]):
            if rel_q is not None:
                qc = theory.critical_curve(model, n).qc_approx
                grid = np.asarray(rel_q, dtype=float) * qc
            else:
                grid = np.asarray(payload["q"], dtype=float)
            sub_seed = mc.rep_seed(seed_val, ci, 0)
            reports.append(mc.lnS_curve(model, [n], grid, payload["reps"],
                                        sub_seed))
        report = reports[0]
        for extra in reports[1:]:
            report.rows.extend(extra.rows)
        report.meta["seed"] = seed_val
        seed_out = seed_val
    elif kind == "propagation":
        base = mc.run_iid(payload)
        report = mc.propagation_check(base)
        seed_out = payload.seed
    elif kind == "corr":
        report = mc.run_corr(payload)
        seed_out = payload.seed
    else:
        report = mc.run_iid(payload)
        seed_out = payload.seed

    cfg_desc += [("kind", kind)]
    stream, close = _open_out(args.out)
    try:
        if args.format == "json":
            _header(stream, seed_out, cfg_desc)
            report.to_json(stream)
        else:
            _header(stream, seed_out, cfg_desc)
            report.to_csv(stream)
    finally:
        if close:
            stream.close()
    return 0


# ---------------------------------------------------------------------------
# parser / dispatch
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)

    parser = argparse.ArgumentParser(
        prog="momentgate",
        description="Critical moment orders of log-exponential-power-law "
                    "samples: theory, estimation, and Monte-Carlo studies.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory", parents=[common],
                       help="frontier quantities and moment predictions")
    p.add_argument("--model", required=True)
    p.add_argument("--n", required=True,
                   help="comma-separated sample sizes (real, >= 2)")
    p.add_argument("--q-grid", default=None,
                   help="orders for the predicted-lnS table (single n only)")
    p.add_argument("--eps", type=float, default=0.1,
                   help="validity-ceiling exponent slack")
    p.set_defaults(func=_cmd_theory)

    p = sub.add_parser("sample", parents=[common], help="draw an i.i.d. sample")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("synth", parents=[common],
                       help="synthesize a correlated stationary series")
    p.add_argument("--model", required=True)
    p.add_argument("--cov", required=True, help="e.g. exp:tau=100")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--match", choices=("gaussian", "hermite"),
                   default="gaussian")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("estimate", parents=[common],
                       help="estimate theta, rho, and q_c from a sample file")
    p.add_argument("--input", required=True, help="sample file ('-' = stdin)")
    p.add_argument("--k-theta", type=int, default=None)
    p.add_argument("--k-rho", type=int, default=None)
    p.add_argument("--log-input", action="store_true",
                   help="input values are X; take logs first")
    p.add_argument("--corr", action="store_true",
                   help="use the sieve-corrected estimators")
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--kappa", type=float, default=0.08)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--s", type=float, default=None,
                   help="sieve radius override (default alpha*tau)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("mc", parents=[common],
                       help="run a Monte-Carlo experiment")
    p.add_argument("--config", default=None, help="INI experiment file")
    p.add_argument("--figure", type=int, default=None,
                   choices=(2, 3, 5, 6, 8, 9, 11, 12, 15, 16),
                   help="numbered built-in experiment preset")
    p.add_argument("--reps", type=int, default=None)
    p.set_defaults(func=_cmd_mc)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ArgumentError, DomainError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except DataFormatError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 4
    except MomentgateError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 4


if __name__ == "__main__":
    sys.exit(main())
