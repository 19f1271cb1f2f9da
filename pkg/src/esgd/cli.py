"""``esgd`` command line.

Data-level commands (``gen-data``, ``run-gd``, ``run-regpath``, ``margin``,
``risk-eval``) read the data section of a JSON config (n, d, spectrum,
w_star, seed); unspecified keys fall back to the ``figure1`` experiment design. ``exp``
runs a full experiment and exits with status 1 when any asserted check fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .data_model import sample_dataset
from .experiments import EXPERIMENTS, ExperimentConfig, build_instance, run_experiment
from .gd_engine import GDConfig, StoppingRule, default_stepsize, run_gd
from .margin import check_separability, solve_max_margin_dual
from .regpath import build_reg_path, lambda_grid
from .risk_oracle import bayes_risks, make_grid, monte_carlo_risks, population_risks


def _config(args, experiment="figure1") -> ExperimentConfig:
    raw = io.load_config_dict(args.config) if args.config else {}
    raw.setdefault("experiment", experiment)
    cfg = ExperimentConfig.from_dict(raw)
    if args.seed is not None:
        cfg.seed = args.seed
    if getattr(args, "quad_order", None) is not None:
        cfg.oracle["quad_order"] = args.quad_order
    if getattr(args, "mc_budget", None) is not None:
        cfg.oracle["mc_budget"] = args.mc_budget
    for key in ("lam_min", "lam_max", "ratio"):
        v = getattr(args, "lambda_" + key.replace("lam_", ""), None)
        if v is not None:
            cfg.lambdas[key] = v
    if args.out:
        cfg.out_dir = args.out
    return cfg


def _data(args, cfg):
    if getattr(args, "data", None):
        return io.load_dataset(args.data)
    cov, param = build_instance(cfg)
    return sample_dataset(cov, param, cfg.n, cfg.seed)


def _out(args) -> Path:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_rule(text):
    name, _, arg = text.partition(":")
    if name == "cross_head":
        return StoppingRule.cross_head(int(arg))
    if name == "cross_star":
        return StoppingRule.cross_star()
    if name == "fixed_horizon":
        return StoppingRule.fixed_horizon(int(arg))
    if name == "grad_norm":
        return StoppingRule.grad_norm(float(arg))
    raise argparse.ArgumentTypeError(f"unknown stopping rule {text!r}")


def cmd_gen_data(args):
    cfg = _config(args)
    data = _data(args, cfg)
    out = _out(args)
    io.save_dataset(data, out / f"data.{args.format}")
    io.write_json(cfg.to_dict(), out / "config.json")
    print(f"wrote n={data.n} d={data.d} to {out}")
    return 0


def cmd_run_gd(args):
    cfg = _config(args)
    data = _data(args, cfg)
    eta = args.eta if args.eta is not None else default_stepsize(data)[0]
    param = None if args.data else build_instance(cfg)[1]
    rules = [_parse_rule(r) for r in args.rule]
    if param is None and any(r.kind in ("cross_head", "cross_star") for r in rules):
        print("crossing rules need the true parameter; pass --config without --data",
              file=sys.stderr)
        return 2
    trace = run_gd(data, GDConfig(eta, args.max_iters), rules, param)
    io.write_trace(trace, _out(args) / "trace")
    for rid, t in trace.stop_events.items():
        print(f"{rid}: {'unresolved' if t is None else t}")
    return 0


def cmd_run_regpath(args):
    cfg = _config(args)
    data = _data(args, cfg)
    lg = cfg.lambdas
    grid = lambda_grid(lg.get("lam_max", 1e3), lg.get("lam_min", 1e-8), lg.get("ratio", 1.1))
    path = build_reg_path(data, grid, args.tol)
    io.write_path(path, data, _out(args) / "regpath.csv")
    print(f"solved {len(path)} points; largest norm {path[-1].norm:.6g}")
    return 0


def cmd_margin(args):
    cfg = _config(args)
    data = _data(args, cfg)
    rep = check_separability(data)
    print(f"separable: {rep.separable} ({rep.method}) {rep.diagnostic}".rstrip())
    if not rep.separable:
        return 0
    dual = solve_max_margin_dual(data, tol=args.tol)
    io.write_dual(dual, data, _out(args) / "dual.json", args.rank_tol)
    print(f"margin {dual.gamma!r}, {dual.support.size} support vectors")
    return 0


def cmd_risk_eval(args):
    cfg = _config(args)
    cov, param = build_instance(cfg)
    w = param.coeffs if args.w is None else np.loadtxt(args.w, ndmin=1)
    grid = make_grid(cfg.oracle.get("quad_order", 96))
    r = population_risks(w, param.coeffs, cov, grid)
    rb, eb = bayes_risks(param.coeffs, cov, grid)
    res = {"logistic": r.logistic, "zero_one": r.zero_one, "calibration": r.calibration,
           "bayes_logistic": rb, "bayes_zero_one": eb}
    budget = cfg.oracle.get("mc_budget", 0)
    if budget:
        mc = monte_carlo_risks(w, param.coeffs, cov, budget, cfg.seed)
        res["monte_carlo"] = {"estimate": mc.estimate.as_tuple(), "stderr": mc.stderr.as_tuple(),
                              "n_samples": mc.n_samples}
    if args.out:
        io.write_json(res, _out(args) / "risks.json")
    print(json.dumps(io._jsonable(res), indent=2))
    return 0


def cmd_exp(args):
    name = args.name.replace("-", "_")
    cfg = _config(args, name)
    if cfg.experiment != name:
        print(f"config is for {cfg.experiment!r}, not {name!r}", file=sys.stderr)
        return 2
    table = run_experiment(cfg)
    out = Path(cfg.out_dir or f"results/{name}")
    io.write_table(table, out)
    io.write_json(cfg.to_dict(), out / "config.json")
    if args.svg:
        from .svg import experiment_charts
        experiment_charts(table, out)
    for c in table.all_checks():
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} value={c.value} threshold={c.threshold}")
    print(f"results in {out}")
    return 0 if table.passed else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="esgd")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        if data:
            p.add_argument("--data", help="dataset file (.npz or .csv) instead of sampling")

    p = sub.add_parser("gen-data", help="sample a dataset")
    common(p, data=False)
    p.add_argument("--format", choices=("npz", "csv"), default="npz")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("run-gd", help="run gradient descent and write its trace")
    common(p)
    p.add_argument("--eta", type=float)
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--rule", action="append", default=[],
                   help="cross_head:K, cross_star, fixed_horizon:T or grad_norm:EPS")
    p.set_defaults(func=cmd_run_gd)

    p = sub.add_parser("run-regpath", help="solve the l2-regularization path")
    common(p)
    p.add_argument("--tol", type=float, default=1e-10)
    for flag in ("--lambda-min", "--lambda-max", "--lambda-ratio"):
        p.add_argument(flag, type=float)
    p.set_defaults(func=cmd_run_regpath)

    p = sub.add_parser("margin", help="separability and the max-margin dual")
    common(p)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--rank-tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_margin)

    p = sub.add_parser("risk-eval", help="population risks of a parameter vector")
    common(p, data=False)
    p.add_argument("--w", help="text file with the parameter vector (default: w_star)")
    p.add_argument("--quad-order", type=int)
    p.add_argument("--mc-budget", type=int)
    p.set_defaults(func=cmd_risk_eval)

    p = sub.add_parser("exp", help="run an experiment")
    p.add_argument("name", choices=sorted({k.replace("_", "-") for k in EXPERIMENTS}
                                          | set(EXPERIMENTS)))
    common(p, data=False)
    p.add_argument("--svg", action="store_true", help="also write SVG charts")
    p.add_argument("--quad-order", type=int)
    p.add_argument("--mc-budget", type=int)
    for flag in ("--lambda-min", "--lambda-max", "--lambda-ratio"):
        p.add_argument(flag, type=float)
    p.set_defaults(func=cmd_exp)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
