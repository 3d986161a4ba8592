"""Softmax-smoothed minimization of non-smooth convex objectives.

Replaces max / |.| / hinge kernels with their log-sum-exp smoothings, whose
third derivative is Lipschitz with constant O(1/mu^3), and minimizes the
smoothed objective with a third-order accelerated method whose subproblems
reduce to structured shifted linear solves. Ships l-inf regression, l1-SVM,
and l4-SVM (with uniform-convexity restarts), plus accelerated-gradient and
subgradient baselines and a CLI harness.
"""

__version__ = "0.1.0"

from .accel import (
    EstimateSequence,
    RunConfig,
    SolverReport,
    Status,
    TracePoint,
    run,
    run_restarted,
    step_a,
)
from .baselines import agd_run, subgradient_run
from .linalg import NormMatrix, bnorm, eval_g_lambda, solve_shifted_softmax_hessian, solve_spd
from .problems import (
    L1SvmProblem,
    L4SvmProblem,
    LinfProblem,
    build_l1svm,
    build_l4svm,
    build_linf,
    oracle_eval,
    svm_q_matrix,
)
from .quartic import QuarticModel
from .softmax import (
    SoftmaxState,
    smax_fourth_dir,
    smax_grad,
    smax_hess_apply,
    smax_hess_quad,
    smax_third_form,
    smax_value,
    soft_abs,
    soft_hinge,
    softmax_state,
)

__all__ = [
    "EstimateSequence",
    "L1SvmProblem",
    "L4SvmProblem",
    "LinfProblem",
    "NormMatrix",
    "QuarticModel",
    "RunConfig",
    "SoftmaxState",
    "SolverReport",
    "Status",
    "TracePoint",
    "agd_run",
    "bnorm",
    "build_l1svm",
    "build_l4svm",
    "build_linf",
    "eval_g_lambda",
    "oracle_eval",
    "run",
    "run_restarted",
    "smax_fourth_dir",
    "smax_grad",
    "smax_hess_apply",
    "smax_hess_quad",
    "smax_third_form",
    "smax_value",
    "soft_abs",
    "soft_hinge",
    "softmax_state",
    "solve_shifted_softmax_hessian",
    "solve_spd",
    "step_a",
    "subgradient_run",
    "svm_q_matrix",
]
