"""First-order comparators emitting the same trace and report schema.

agd_run: estimate-sequence accelerated gradient with the fixed step 1/L1 on
the smoothed objective, where L1 is the problem's conservative first-order
smoothness constant. Per iteration: a solves a^2 = (A + a)/L1, the probe
point is y = (1 - tau) x + tau v, the step is x+ = y - grad f(y)/L1, and the
envelope accumulates the supporting hyperplane at y. Termination mirrors the
accelerated run: envelope gap <= eps/2.

subgradient_run: plain subgradient descent on the exact non-smooth objective
with diminishing steps step0 / sqrt(k+1), reporting the best value seen.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .accel import EstimateSequence, GapGate, RunConfig, SolverReport, Status, TracePoint
from .linalg import NormMatrix


def agd_run(problem, config: RunConfig, x0: np.ndarray | None = None,
            trace_sink=None) -> SolverReport:
    """Accelerated gradient on the smoothed objective, Euclidean geometry."""
    l1 = problem.l1_constant
    x = np.zeros(problem.dim) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    es = EstimateSequence(x, NormMatrix.identity(problem.dim))
    f_mu_x, g_x = problem.smooth_value_grad(x)
    trace: list[TracePoint] = []
    status = Status.CAP_REACHED
    best_f = problem.exact_value(x)
    best_x = x.copy()
    t0 = time.perf_counter()

    gate = GapGate(0.5 * config.eps)
    for k in range(config.max_iters):
        if float(np.linalg.norm(g_x)) <= config.grad_tol:
            status = Status.CONVERGED
            break
        v = es.minimizer()
        if gate.check(f_mu_x - es.lower_envelope(v)):
            status = Status.CONVERGED
            break
        a = (1.0 + math.sqrt(1.0 + 4.0 * l1 * es.a_total)) / (2.0 * l1)
        tau = a / (es.a_total + a)
        y = (1.0 - tau) * x + tau * v
        f_y, g_y = problem.smooth_value_grad(y)
        x = y - g_y / l1
        es.add(a, f_y, g_y, y)
        f_mu_x, g_x = problem.smooth_value_grad(x)
        f_exact = problem.exact_value(x)
        if f_exact < best_f:
            best_f, best_x = f_exact, x.copy()
        if k % config.trace_every == 0:
            gap_now = f_mu_x - es.lower_envelope(es.minimizer())
            point = TracePoint(
                iteration=k, wall_s=time.perf_counter() - t0, f=f_exact,
                f_mu=f_mu_x, gap_est=gap_now, rho=float("nan"), a=a,
                a_total=es.a_total, inner_iters=1,
            )
            trace.append(point)
            if trace_sink is not None:
                trace_sink(point)

    iterations = k if status is not Status.CAP_REACHED else config.max_iters
    return SolverReport(
        x=x, f=problem.exact_value(x), f_mu=f_mu_x, iterations=iterations,
        status=status, trace=trace, best_f=best_f, best_x=best_x,
    )


def subgradient_run(problem, config: RunConfig, x0: np.ndarray | None = None,
                    trace_sink=None) -> SolverReport:
    """Subgradient descent on the exact objective; best-so-far is the answer."""
    x = np.zeros(problem.dim) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    best_f = problem.exact_value(x)
    best_x = x.copy()
    trace: list[TracePoint] = []
    t0 = time.perf_counter()

    for k in range(config.max_iters):
        g = problem.exact_subgradient(x)
        x = x - (config.step0 / math.sqrt(k + 1.0)) * g
        f = problem.exact_value(x)
        if f < best_f:
            best_f, best_x = f, x.copy()
        if k % config.trace_every == 0:
            point = TracePoint(
                iteration=k, wall_s=time.perf_counter() - t0, f=best_f,
                f_mu=float("nan"), gap_est=float("nan"), rho=float("nan"),
                a=float("nan"), a_total=float("nan"), inner_iters=1,
            )
            trace.append(point)
            if trace_sink is not None:
                trace_sink(point)

    return SolverReport(
        x=best_x, f=best_f, f_mu=float("nan"), iterations=config.max_iters,
        status=Status.CAP_REACHED, trace=trace, best_f=best_f, best_x=best_x,
    )
