"""Third-order accelerated outer loop with displacement-coupled step search.

One iteration, given the estimate-sequence state (x_k, v_k, A_k):

    find rho > 0 with rho/theta <= ||x_{k+1} - y_k||_B^2 <= theta * rho, where
        a = (1 + sqrt(1 + 4 l3 A_k rho)) / (2 l3 rho)
        y_k = (1 - tau) x_k + tau v_k,  tau = a / (A_k + a)
        x_{k+1} = y_k + argmin of the quartic model centered at y_k
    psi_{k+1} = psi_k + a [f(x_{k+1}) + <grad f(x_{k+1}), . - x_{k+1}>]

The coupling search brackets rho and bisects on log rho. Termination uses the
accumulated lower linear envelope: the run stops once
f_mu(x_k) - ell_k(v_k) <= eps / 2, the smoothed half of the accuracy budget.

The restarted variant for uniformly convex problems reruns the loop with a
fixed per-epoch iteration budget ceil(c * kappa4^(1/5)), re-anchoring the
estimate sequence at each epoch's best point.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import InnerSolveFailure, StepSearchFailure
from .linalg import NormMatrix
from .quartic import QuarticModel


class Status(Enum):
    CONVERGED = "Converged"
    CAP_REACHED = "CapReached"
    INNER_FAILURE = "InnerFailure"


class GapGate:
    """Envelope-gap stopping gate robust to estimate-sequence transients.

    The surrogate gap f_mu(x_k) - ell_k(v_k) is only an asymptotically valid
    bound: while the envelope is still learning the geometry it can dip under
    the target before any real progress, and oscillating methods dip again
    mid-run. Both transients are short-lived (the gap rises again as the
    envelope sharpens), so the gate fires only once the gap has stayed at or
    under the target for max(20, k/10) consecutive iterations.
    """

    def __init__(self, target: float):
        self.target = target
        self.iteration = 0
        self.streak = 0

    def check(self, gap: float) -> bool:
        self.iteration += 1
        self.streak = self.streak + 1 if gap <= self.target else 0
        return self.streak >= max(20, self.iteration // 10)


@dataclass
class RunConfig:
    """Knobs of one solver run; every field is echoed into reports."""

    eps: float
    max_iters: int = 500
    theta: float = 2.0  # multiplicative window of the rho search
    inner_tol_factor: float = 1e-8  # inner tol = factor * (1 + ||grad||_{B^-1})
    inner_cap: int = 200
    rho_probe_cap: int = 60
    grad_tol: float = 1e-12  # dual-norm stationarity shortcut
    restart_c: float = 8.0  # per-epoch budget constant for restarted runs
    restart_max_epochs: int = 200
    step0: float = 1.0  # subgradient baseline step scale
    trace_every: int = 1

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")
        if self.theta <= 1.0:
            raise ValueError("theta must exceed 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")

    def echo(self) -> dict:
        return {
            "eps": self.eps,
            "max_iters": self.max_iters,
            "theta": self.theta,
            "inner_tol_factor": self.inner_tol_factor,
            "inner_cap": self.inner_cap,
            "rho_probe_cap": self.rho_probe_cap,
            "grad_tol": self.grad_tol,
            "restart_c": self.restart_c,
            "restart_max_epochs": self.restart_max_epochs,
            "step0": self.step0,
            "trace_every": self.trace_every,
        }


@dataclass
class TracePoint:
    """Per-iteration record; the starred CSV columns are the wire format."""

    iteration: int
    wall_s: float
    f: float
    f_mu: float
    gap_est: float
    rho: float
    a: float
    a_total: float
    inner_iters: int
    # extras kept in memory for audits, not part of the CSV schema
    disp_sq: float = float("nan")
    f_mu_y: float = float("nan")

    CSV_HEADER = "iter,wall_s,f,f_mu,gap_est,rho,a,A,inner_iters"

    def csv_row(self) -> str:
        return (
            f"{self.iteration},{self.wall_s:.6f},{self.f:.17g},{self.f_mu:.17g},"
            f"{self.gap_est:.17g},{self.rho:.17g},{self.a:.17g},{self.a_total:.17g},"
            f"{self.inner_iters}"
        )


@dataclass
class SolverReport:
    x: np.ndarray
    f: float
    f_mu: float
    iterations: int
    status: Status
    trace: list[TracePoint]
    epochs: int = 1
    epoch_budget: int | None = None
    failure: str | None = None
    best_f: float = float("inf")
    best_x: np.ndarray | None = None


class EstimateSequence:
    """psi_k(x) = 1/2 ||x - x0||_B^2 + sum a_i [f(x_i) + <grad f(x_i), x - x_i>].

    Tracks the accumulated linear part (g_acc, c_acc) and A_k; the minimizer
    is v_k = x0 - B^{-1} g_acc and the lower linear envelope at x is
    (g_acc . x + c_acc) / A_k.
    """

    def __init__(self, x0: np.ndarray, norm: NormMatrix):
        self.x0 = x0.copy()
        self.norm = norm
        self.g_acc = np.zeros_like(x0)
        self.c_acc = 0.0
        self.a_total = 0.0

    def minimizer(self) -> np.ndarray:
        return self.x0 - self.norm.solve(self.g_acc)

    def lower_envelope(self, x: np.ndarray) -> float:
        if self.a_total <= 0.0:
            return -math.inf
        return (float(self.g_acc @ x) + self.c_acc) / self.a_total

    def add(self, a: float, f_val: float, grad: np.ndarray, x_at: np.ndarray) -> None:
        self.g_acc = self.g_acc + a * grad
        self.c_acc += a * (f_val - float(grad @ x_at))
        self.a_total += a


def step_a(a_total: float, l3: float, rho: float) -> float:
    """Positive root a = (1 + sqrt(1 + 4 l3 A rho)) / (2 l3 rho).

    Satisfies a^2 = (A + a) / (l3 rho) exactly.
    """
    if l3 <= 0.0 or rho <= 0.0:
        raise ValueError("l3 and rho must be positive")
    if a_total < 0.0:
        raise ValueError("A must be nonnegative")
    return (1.0 + math.sqrt(1.0 + 4.0 * l3 * a_total * rho)) / (2.0 * l3 * rho)


@dataclass
class _Probe:
    rho: float
    a: float
    y: np.ndarray
    x_next: np.ndarray
    oracle_y: object
    disp_sq: float
    inner_iters: int


def _probe_rho(problem, x, v, a_total, rho, config) -> _Probe:
    a = step_a(a_total, problem.l3, rho)
    tau = a / (a_total + a)
    y = (1.0 - tau) * x + tau * v
    oracle = problem.state_at(y)
    tol = config.inner_tol_factor * (1.0 + problem.norm.dual_norm(oracle.grad))
    model = QuarticModel(oracle, problem.norm, problem.l3)
    h, inner = model.minimize(tol, max_iters=config.inner_cap)
    disp = problem.norm.norm(h) ** 2
    return _Probe(rho=rho, a=a, y=y, x_next=y + h, oracle_y=oracle,
                  disp_sq=disp, inner_iters=inner)


def rho_search(problem, x, v, a_total, rho_init, config) -> tuple[_Probe, int]:
    """Find rho in the theta-window of the realized squared displacement.

    The map rho -> disp(rho) is probed starting from rho_init; outside the
    window the bracket (rho too small / too large) is tightened and the next
    trial is the realized displacement itself, falling back to geometric
    bisection once both bracket ends exist. Returns the accepted probe and
    the total inner iterations spent. A zero displacement means the model
    center is stationary and is returned to the caller as-is.
    """
    theta = config.theta
    lo = None  # displacement still above theta * rho (rho too small)
    hi = None  # displacement below rho / theta (rho too large)
    rho = float(np.clip(rho_init, 1e-12, 1e12))
    inner_total = 0
    for _ in range(config.rho_probe_cap):
        probe = _probe_rho(problem, x, v, a_total, rho, config)
        inner_total += probe.inner_iters
        disp = probe.disp_sq
        if disp <= 1e-30 * (1.0 + float(np.dot(probe.y, probe.y))):
            return probe, inner_total  # stationary center
        if rho / theta <= disp <= rho * theta:
            return probe, inner_total
        if disp > rho * theta:
            lo = rho if lo is None else max(lo, rho)
        else:
            hi = rho if hi is None else min(hi, rho)
        if lo is not None and hi is not None:
            rho = math.sqrt(lo * hi)
        else:
            # jump toward the realized displacement, at least a factor 4 move
            rho = max(disp, 4.0 * rho) if hi is None else min(disp, rho / 4.0)
    raise StepSearchFailure(
        f"no rho found in a theta={theta} window after {config.rho_probe_cap} probes "
        f"(bracket: {lo}, {hi}); l3 may be misconfigured",
        bracket=(lo if lo is not None else 0.0, hi if hi is not None else math.inf),
    )


def run(problem, config: RunConfig, x0: np.ndarray | None = None,
        trace_sink=None) -> SolverReport:
    """Accelerated minimization of the smoothed objective to gap eps/2.

    The per-iteration trace carries the exact objective f, the smoothed f_mu,
    the envelope gap estimate, and the accepted (rho, a, A). Status reports
    honestly: Converged (gap or stationarity), CapReached, or InnerFailure
    with the failing subproblem's message.
    """
    x = np.zeros(problem.dim) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    es = EstimateSequence(x, problem.norm)
    oracle = problem.state_at(x)
    f_mu_x = oracle.value
    rho_prev = problem.norm.dual_norm(oracle.grad) ** 2 / problem.l3 ** (2.0 / 3.0)
    trace: list[TracePoint] = []
    status = Status.CAP_REACHED
    failure = None
    best_f = problem.exact_value(x)
    best_x = x.copy()
    t0 = time.perf_counter()

    gate = GapGate(0.5 * config.eps)
    for k in range(config.max_iters):
        if problem.norm.dual_norm(oracle.grad) <= config.grad_tol:
            status = Status.CONVERGED
            break
        v = es.minimizer()
        if gate.check(f_mu_x - es.lower_envelope(v)):
            status = Status.CONVERGED
            break
        try:
            probe, inner_total = rho_search(problem, x, v, es.a_total, rho_prev, config)
        except (InnerSolveFailure, StepSearchFailure) as exc:
            status = Status.INNER_FAILURE
            failure = str(exc)
            break
        if probe.disp_sq <= 1e-30 * (1.0 + float(np.dot(probe.y, probe.y))):
            x = probe.x_next
            oracle = problem.state_at(x)
            f_mu_x = oracle.value
            status = Status.CONVERGED
            break
        oracle = problem.state_at(probe.x_next)
        f_mu_next = oracle.value
        f_mu_y = probe.oracle_y.value
        # model upper bound: the accepted step may not increase the smoothed value
        assert f_mu_next <= f_mu_y + 1e-9 * (1.0 + abs(f_mu_y)), (
            f"monotone step violated: f_mu(x+) = {f_mu_next} > f_mu(y) = {f_mu_y}"
        )
        es.add(probe.a, f_mu_next, oracle.grad, probe.x_next)
        x, f_mu_x, rho_prev = probe.x_next, f_mu_next, probe.rho
        f_exact = problem.exact_value(x)
        if f_exact < best_f:
            best_f, best_x = f_exact, x.copy()
        gap_now = f_mu_x - es.lower_envelope(es.minimizer())
        point = TracePoint(
            iteration=k, wall_s=time.perf_counter() - t0, f=f_exact, f_mu=f_mu_x,
            gap_est=gap_now, rho=probe.rho, a=probe.a, a_total=es.a_total,
            inner_iters=inner_total, disp_sq=probe.disp_sq, f_mu_y=f_mu_y,
        )
        trace.append(point)
        if trace_sink is not None:
            trace_sink(point)

    return SolverReport(
        x=x, f=problem.exact_value(x), f_mu=f_mu_x, iterations=len(trace),
        status=status, trace=trace, failure=failure, best_f=best_f, best_x=best_x,
    )


def epoch_budget(problem, config: RunConfig) -> int:
    """Per-epoch iteration budget ceil(c * kappa4^(1/5)) of the restart scheme."""
    return max(1, math.ceil(config.restart_c * problem.kappa4 ** 0.2))


def run_restarted(problem, config: RunConfig, x0: np.ndarray | None = None,
                  trace_sink=None, rng: np.random.Generator | None = None) -> SolverReport:
    """Restarted accelerated run for order-4 uniformly convex problems.

    Validates the configured sigma4 by sampling first (aborting with a
    diagnostic if falsified), then repeats fixed-budget runs, re-anchoring
    the estimate sequence at each epoch's best point, until the envelope gap
    certifies eps/2 on the smoothed problem.
    """
    problem.validate_sigma4(rng if rng is not None else np.random.default_rng(0))
    budget = epoch_budget(problem, config)
    x = np.zeros(problem.dim) if x0 is None else np.asarray(x0, dtype=np.float64).copy()
    trace: list[TracePoint] = []
    status = Status.CAP_REACHED
    failure = None
    best_f = math.inf
    best_x = x.copy()
    f_mu_x = problem.smooth_value(x)
    epochs = 0
    offset = 0

    while epochs < config.restart_max_epochs and offset < config.max_iters:
        sub_cfg = replace(config, max_iters=min(budget, config.max_iters - offset))
        shifted_sink = None
        if trace_sink is not None:
            def shifted_sink(tp, _off=offset):
                trace_sink(replace(tp, iteration=tp.iteration + _off))
        sub = run(problem, sub_cfg, x0=x, trace_sink=shifted_sink)
        epochs += 1
        for tp in sub.trace:
            trace.append(replace(tp, iteration=tp.iteration + offset))
        offset += sub.iterations
        if sub.best_f < best_f:
            best_f, best_x = sub.best_f, sub.best_x
        improved = sub.f_mu < f_mu_x - 1e-15 * (1.0 + abs(f_mu_x))
        if sub.f_mu <= f_mu_x:
            x, f_mu_x = sub.x, sub.f_mu
        if sub.status is Status.CONVERGED:
            status = Status.CONVERGED
            break
        if sub.status is Status.INNER_FAILURE:
            status = Status.INNER_FAILURE
            failure = sub.failure
            break
        if not improved and sub.iterations > 0:
            break  # stalled epoch; report the cap honestly

    return SolverReport(
        x=x, f=problem.exact_value(x), f_mu=f_mu_x, iterations=offset,
        status=status, trace=trace, epochs=epochs, epoch_budget=budget,
        failure=failure, best_f=best_f, best_x=best_x,
    )
