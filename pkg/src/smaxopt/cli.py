"""Command-line harness: instance generation, solver dispatch, sweeps, plots.

Commands
    solve  one (problem, method, eps) job; writes trace.csv and report.json
    gen    synthetic instances (linf-random, linf-interp, svm-separable, svm-noisy)
    sweep  a grid of (eps x method) jobs from a flat key=value spec file
    plot   figures from an emitted trace.csv or summary.csv

Exit codes: 0 converged, 1 input error, 2 solver did not converge (or a sweep
job errored).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .accel import RunConfig, SolverReport, Status, TracePoint, run, run_restarted
from .baselines import agd_run, subgradient_run
from .dataio import load_matrix, load_svmlight, load_vector
from .errors import DimensionMismatch, NotPositiveDefinite, UniformConvexityFalsified
from .generate import write_instance
from .problems import (
    L1SvmProblem,
    L4SvmProblem,
    LinfProblem,
    build_l1svm,
    build_l4svm,
    build_linf,
    svm_q_matrix,
)

METHODS = ("accel", "agd", "subgradient")
PROBLEM_KINDS = ("linf", "l1svm", "l4svm")
GEN_KINDS = ("linf-random", "linf-interp", "svm-separable", "svm-noisy")


def _build_problem(kind: str, args: dict):
    if kind == "linf":
        a = load_matrix(args["matrix"])
        b = load_vector(args["rhs"])
        if args.get("mu"):
            return LinfProblem(a, b, args["mu"])
        return build_linf(a, b, args["eps"])
    points, labels = load_svmlight(args["data"])
    lam = args.get("lam")
    if lam is None:
        raise ValueError(f"{kind} requires --lambda")
    if kind == "l1svm":
        if args.get("mu"):
            return L1SvmProblem(svm_q_matrix(points, labels), lam, args["mu"])
        return build_l1svm(points, labels, lam, args["eps"])
    if args.get("mu"):
        return L4SvmProblem(svm_q_matrix(points, labels), lam, args["mu"],
                            sigma4=args.get("sigma4"))
    return build_l4svm(points, labels, lam, args["eps"], sigma4=args.get("sigma4"))


def _dispatch(problem, method: str, config: RunConfig, trace_sink) -> SolverReport:
    if method == "accel":
        if problem.kind == "l4svm":
            return run_restarted(problem, config, trace_sink=trace_sink)
        return run(problem, config, trace_sink=trace_sink)
    if method == "agd":
        return agd_run(problem, config, trace_sink=trace_sink)
    if method == "subgradient":
        return subgradient_run(problem, config, trace_sink=trace_sink)
    raise ValueError(f"unknown method {method!r}")


def _write_report(path: str, problem, method: str, config: RunConfig,
                  report: SolverReport, seed) -> dict:
    echo = config.echo()
    echo["mu"] = problem.mu
    echo["l3"] = problem.l3
    if hasattr(problem, "lam"):
        echo["lambda"] = problem.lam
    if hasattr(problem, "sigma4"):
        echo["sigma4"] = problem.sigma4
        echo["kappa4"] = problem.kappa4
    if report.epoch_budget is not None:
        echo["epoch_budget"] = report.epoch_budget
        echo["epochs"] = report.epochs
    if method == "agd":
        echo["l1_constant"] = problem.l1_constant
    payload = {
        "problem": problem.kind,
        "method": method,
        "eps": config.eps,
        "mu": problem.mu,
        "l3": problem.l3,
        "iterations": report.iterations,
        "final_f": report.f,
        "final_f_mu": None if np.isnan(report.f_mu) else report.f_mu,
        "status": report.status.value,
        "seed": seed,
        "config_echo": echo,
    }
    if report.failure:
        payload["failure"] = report.failure
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def _solve_job(kind: str, method: str, out_dir: str, args: dict) -> dict:
    """Run one job; returns the report payload. Raises on input errors."""
    problem = _build_problem(kind, args)
    config = RunConfig(
        eps=args["eps"],
        max_iters=args.get("max_iters") or 500,
        theta=args.get("theta") or 2.0,
        inner_tol_factor=args.get("inner_tol") or 1e-8,
        restart_c=args.get("restart_c") or 8.0,
        step0=args.get("step0") or 1.0,
        trace_every=args.get("trace_every") or 1,
    )
    os.makedirs(out_dir, exist_ok=True)
    trace_path = os.path.join(out_dir, "trace.csv")
    with open(trace_path, "w") as fh:
        fh.write(TracePoint.CSV_HEADER + "\n")
        fh.flush()

        def sink(tp: TracePoint) -> None:
            fh.write(tp.csv_row() + "\n")
            fh.flush()  # aborted runs stay analyzable

        report = _dispatch(problem, method, config, sink)
    payload = _write_report(os.path.join(out_dir, "report.json"), problem, method,
                            config, report, args.get("seed"))
    if args.get("plot"):
        from .plots import plot_trace
        plot_trace(trace_path, os.path.join(out_dir, "convergence.png"),
                   title=f"{problem.kind} / {method} / eps={config.eps:g}")
    return payload


_INPUT_ERRORS = (FileNotFoundError, ValueError, DimensionMismatch,
                 NotPositiveDefinite, KeyError)


def _cmd_solve(ns: argparse.Namespace) -> int:
    args = {
        "matrix": ns.matrix, "rhs": ns.rhs, "data": ns.data, "eps": ns.eps,
        "lam": ns.lam, "mu": ns.mu, "sigma4": ns.sigma4, "max_iters": ns.max_iters,
        "theta": ns.theta, "inner_tol": ns.inner_tol, "restart_c": ns.restart_c,
        "step0": ns.step0, "trace_every": ns.trace_every, "seed": ns.seed,
        "plot": ns.plot,
    }
    if ns.problem == "linf" and (not ns.matrix or not ns.rhs):
        print("solve linf requires --matrix and --rhs", file=sys.stderr)
        return 1
    if ns.problem in ("l1svm", "l4svm") and not ns.data:
        print(f"solve {ns.problem} requires --data", file=sys.stderr)
        return 1
    try:
        payload = _solve_job(ns.problem, ns.method, ns.out, args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except UniformConvexityFalsified as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{payload['status']}: f = {payload['final_f']:.10g} "
          f"in {payload['iterations']} iterations -> {ns.out}")
    return 0 if payload["status"] == Status.CONVERGED.value else 2


def _cmd_gen(ns: argparse.Namespace) -> int:
    params = {"m": ns.m, "d": ns.d, "seed": ns.seed, "flip": ns.flip}
    try:
        meta = write_instance(ns.out, ns.kind, **params)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {meta['kind']} instance (m={meta['m']}, d={meta['d']}) to {ns.out}")
    return 0


def parse_sweep_spec(path: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"sweep spec not found: {path}")
    spec: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, val = line.split("=", 1)
            spec[key.strip()] = val.strip()
    return spec


def _sweep_job(payload: dict) -> dict:
    """Top-level worker so process pools can pickle it."""
    kind, method, out_dir, args = (payload["kind"], payload["method"],
                                   payload["out_dir"], payload["args"])
    try:
        report = _solve_job(kind, method, out_dir, args)
        return {"problem": kind, "method": method, "eps": args["eps"],
                "iters": report["iterations"], "final_f": report["final_f"],
                "status": report["status"]}
    except Exception as exc:  # recorded per-row; the sweep carries on
        return {"problem": kind, "method": method, "eps": args["eps"],
                "iters": "", "final_f": "", "status": f"error: {exc}"}


def _cmd_sweep(ns: argparse.Namespace) -> int:
    try:
        spec = parse_sweep_spec(ns.spec)
        jobs = _sweep_plan(spec)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    n_jobs = int(spec.get("jobs", "1"))
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_sweep_job, jobs))
    else:
        rows = [_sweep_job(job) for job in jobs]
    out_dir = spec.get("out", "sweep")
    os.makedirs(out_dir, exist_ok=True)
    summary = os.path.join(out_dir, "summary.csv")
    with open(summary, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["problem", "method", "eps", "iters",
                                                "final_f", "status"])
        writer.writeheader()
        writer.writerows(rows)
    if spec.get("plot", "").lower() in ("1", "true", "yes"):
        from .plots import plot_summary
        plot_summary(summary, os.path.join(out_dir, "summary.png"))
    failed = [r for r in rows if str(r["status"]).startswith("error")]
    print(f"{len(rows)} jobs -> {summary}" +
          (f" ({len(failed)} failed)" if failed else ""))
    return 2 if failed else 0


def _sweep_plan(spec: dict) -> list[dict]:
    problem = spec.get("problem")
    if not problem:
        raise ValueError("sweep spec needs a 'problem' entry")
    out_dir = spec.get("out", "sweep")
    eps_list = [float(tok) for tok in spec.get("eps", "").split(",") if tok.strip()]
    if not eps_list:
        raise ValueError("sweep spec needs a non-empty 'eps' list")
    methods = [tok.strip() for tok in spec.get("methods", "").split(",") if tok.strip()]
    if not methods:
        raise ValueError("sweep spec needs a non-empty 'methods' list")
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")

    args: dict = {"seed": int(spec["seed"]) if "seed" in spec else None}
    for key, cast in (("lambda", float), ("mu", float), ("sigma4", float),
                      ("max_iters", int), ("theta", float), ("inner_tol", float),
                      ("restart_c", float), ("step0", float), ("trace_every", int)):
        if key in spec:
            args["lam" if key == "lambda" else key] = cast(spec[key])
    args["plot"] = spec.get("plot", "").lower() in ("1", "true", "yes")

    if problem in GEN_KINDS:
        inst_dir = os.path.join(out_dir, "instance")
        meta = write_instance(inst_dir, problem,
                              m=int(spec.get("m", "0")) or int(spec.get("d", "0")),
                              d=int(spec.get("d", "0")),
                              seed=int(spec.get("seed", "0")),
                              flip=float(spec.get("flip", "0.1")))
        if problem.startswith("linf"):
            kind = "linf"
            args["matrix"] = os.path.join(inst_dir, meta["matrix"])
            args["rhs"] = os.path.join(inst_dir, meta["rhs"])
        else:
            kind = spec.get("svm", "l1svm")
            args["data"] = os.path.join(inst_dir, meta["data"])
    elif problem in PROBLEM_KINDS:
        kind = problem
        for key in ("matrix", "rhs", "data"):
            if key in spec:
                args[key] = spec[key]
    else:
        raise ValueError(f"unknown problem {problem!r}")

    jobs = []
    for eps in eps_list:
        for method in methods:
            job_args = dict(args)
            job_args["eps"] = eps
            jobs.append({"kind": kind, "method": method,
                         "out_dir": os.path.join(out_dir, f"{kind}_{method}_eps{eps:g}"),
                         "args": job_args})
    return jobs


def _cmd_plot(ns: argparse.Namespace) -> int:
    from .plots import plot_summary, plot_trace
    try:
        with open(ns.csv) as fh:
            header = fh.readline()
        out = ns.out or os.path.splitext(ns.csv)[0] + ".png"
        if header.startswith("problem,"):
            plot_summary(ns.csv, out)
        else:
            plot_trace(ns.csv, out)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smaxopt",
                                     description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run one solver job")
    ps.add_argument("problem", choices=PROBLEM_KINDS)
    ps.add_argument("--matrix", help="regression matrix (.mtx/.mm or delimited text)")
    ps.add_argument("--rhs", help="regression targets, one value per line")
    ps.add_argument("--data", help="svmlight data file")
    ps.add_argument("--eps", type=float, required=True)
    ps.add_argument("--method", choices=METHODS, default="accel")
    ps.add_argument("--out", default="run", help="output directory")
    ps.add_argument("--lambda", dest="lam", type=float, help="SVM regularization weight")
    ps.add_argument("--mu", type=float, help="override the smoothing schedule")
    ps.add_argument("--sigma4", type=float, help="override the l4 convexity modulus")
    ps.add_argument("--max-iters", type=int)
    ps.add_argument("--theta", type=float)
    ps.add_argument("--inner-tol", type=float)
    ps.add_argument("--restart-c", type=float)
    ps.add_argument("--step0", type=float)
    ps.add_argument("--trace-every", type=int)
    ps.add_argument("--seed", type=int, help="instance seed echoed into the report")
    ps.add_argument("--plot", action="store_true", help="render convergence.png")
    ps.set_defaults(func=_cmd_solve)

    pg = sub.add_parser("gen", help="generate a synthetic instance")
    pg.add_argument("kind", choices=GEN_KINDS)
    pg.add_argument("--m", type=int, default=40)
    pg.add_argument("--d", type=int, default=10)
    pg.add_argument("--seed", type=int, required=True)
    pg.add_argument("--flip", type=float, default=0.1)
    pg.add_argument("--out", required=True)
    pg.set_defaults(func=_cmd_gen)

    pw = sub.add_parser("sweep", help="run a grid from a key=value spec file")
    pw.add_argument("spec")
    pw.set_defaults(func=_cmd_sweep)

    pp = sub.add_parser("plot", help="render figures from a trace or summary CSV")
    pp.add_argument("csv")
    pp.add_argument("--out")
    pp.set_defaults(func=_cmd_plot)
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    return ns.func(ns)


if __name__ == "__main__":
    sys.exit(main())
