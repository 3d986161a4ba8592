"""Concrete smoothed problems: l-inf regression, l1-SVM, l4-SVM.

Each problem bundles the smoothing parameter mu, the third-order smoothness
constant l3, the norm matrix B, and a point oracle exposing value, gradient,
Hessian apply, directional third/fourth forms, and the shifted-Hessian solve
needed by the quartic subproblem.

Builders apply the accuracy-to-smoothing schedules: solving the smoothed
problem to eps/2 solves the exact one to eps when
    l-inf:  mu = eps / (2 log m)   (m counts stacked +/- rows)
    l1-SVM: mu = eps / (4 lam d)
    l4-SVM: mu = eps / 4
"""

from __future__ import annotations

import numpy as np

from . import softmax as sm
from .errors import DimensionMismatch, UniformConvexityFalsified
from .linalg import (
    NormMatrix,
    as_matrix,
    as_vector,
    solve_shifted_softmax_hessian,
    solve_spd,
    top_eigenvalue,
)


class LinfOracle:
    """Point oracle of f_mu(x) = smax_mu(A x - b) at a fixed x."""

    def __init__(self, problem: "LinfProblem", x: np.ndarray):
        self.problem = problem
        self.x = x
        self.state = sm.softmax_state(problem.a @ x - problem.b, problem.mu)
        self._grad = None

    @property
    def value(self) -> float:
        return self.state.value

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            self._grad = self.problem.a.T @ self.state.p
        return self._grad

    def hess_apply(self, h) -> np.ndarray:
        a = self.problem.a
        return a.T @ sm.smax_hess_apply(self.state, a @ h)

    def hess_quad(self, h) -> float:
        return sm.smax_hess_quad(self.state, self.problem.a @ h)

    def third_form(self, h) -> tuple[np.ndarray, float]:
        a = self.problem.a
        ah = a @ h
        vec, scal = sm.smax_third_form(self.state, ah)
        return a.T @ vec, scal

    def fourth_dir(self, h) -> float:
        return sm.smax_fourth_dir(self.state, self.problem.a @ h)

    def shifted_solve(self, lam: float, rhs) -> np.ndarray:
        """Solve (hess f_mu(x) + sqrt(2) lam A^T A) out = rhs, structured route."""
        return solve_shifted_softmax_hessian(
            self.problem.a, self.state.p, self.problem.mu, lam, rhs
        )


class LinfProblem:
    """Smoothed l-inf regression min_x smax_mu(A x - b).

    The +/- stacking A = [At; -At], b = [bt; -bt] turns the row-wise absolute
    values of At x - bt into plain maxima; all log m factors use the stacked
    row count. Third-order smooth with l3 = 15 / mu^3 w.r.t. ||.||_{A^T A}.
    """

    kind = "linf"

    def __init__(self, a_tilde, b_tilde, mu: float):
        a_tilde = as_matrix(a_tilde, "A")
        b_tilde = as_vector(b_tilde, a_tilde.shape[0], "b")
        if mu <= 0.0:
            raise ValueError("mu must be positive")
        self.a_tilde = a_tilde
        self.b_tilde = b_tilde
        self.a = np.vstack([a_tilde, -a_tilde])
        self.b = np.concatenate([b_tilde, -b_tilde])
        self.mu = float(mu)
        self.dim = a_tilde.shape[1]
        self.m_stacked = self.a.shape[0]
        self.norm = NormMatrix.gram(self.a)  # rejects rank-deficient A
        self.l3 = 15.0 / mu**3

    def state_at(self, x) -> LinfOracle:
        x = as_vector(x, self.dim, "x")
        return LinfOracle(self, x)

    def smooth_value(self, x) -> float:
        return sm.smax_value(self.a @ as_vector(x, self.dim, "x") - self.b, self.mu)

    def smooth_grad(self, x) -> np.ndarray:
        return self.state_at(x).grad

    def smooth_value_grad(self, x) -> tuple[float, np.ndarray]:
        state = self.state_at(x)
        return state.value, state.grad

    def exact_value(self, x) -> float:
        x = as_vector(x, self.dim, "x")
        return float(np.max(np.abs(self.a_tilde @ x - self.b_tilde)))

    def exact_subgradient(self, x) -> np.ndarray:
        """Active-row subgradient; lowest index wins ties, zero residual gives 0."""
        x = as_vector(x, self.dim, "x")
        r = self.a_tilde @ x - self.b_tilde
        i = int(np.argmax(np.abs(r)))
        if r[i] == 0.0:
            return np.zeros(self.dim)
        return float(np.sign(r[i])) * self.a_tilde[i]

    @property
    def l1_constant(self) -> float:
        """First-order smoothness bound ||A^T A|| / mu for the AGD baseline."""
        return top_eigenvalue(self.a.T @ self.a) / self.mu


def build_linf(a_tilde, b_tilde, eps: float) -> LinfProblem:
    """l-inf problem with the schedule mu = eps / (2 log m), stacked m."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    a_tilde = as_matrix(a_tilde, "A")
    m_stacked = 2 * a_tilde.shape[0]
    mu = eps / (2.0 * np.log(m_stacked))
    return LinfProblem(a_tilde, b_tilde, mu)


def svm_q_matrix(points, labels) -> np.ndarray:
    """Stack rows b_i * a_i from feature rows a_i and labels b_i in {-1, +1}."""
    points = as_matrix(points, "points")
    labels = as_vector(labels, points.shape[0], "labels")
    if not np.all(np.isin(labels, (-1.0, 1.0))):
        raise ValueError("labels must all be -1 or +1")
    return points * labels[:, None]


class _SvmOracle:
    """Point oracle shared by the SVM variants.

    The smoothed hinge term (1/m) sum_i soft_hinge(1 - (Q x)_i) composes the
    scalar kernel with w = Q x; the regularizer contributes coordinatewise.
    Derivative arrays of both kernels are cached once per point.
    """

    def __init__(self, problem, x: np.ndarray):
        self.problem = problem
        self.x = x
        mu = problem.mu
        self.w = problem.q @ x
        self._margins = 1.0 - self.w
        self.h1 = sm.soft_hinge_d1(self._margins, mu)
        self.h2 = sm.soft_hinge_d2(self._margins, mu)
        self.h3 = sm.soft_hinge_d3(self._margins, mu)
        self.h4 = sm.soft_hinge_d4(self._margins, mu)
        self.r1, self.r2, self.r3, self.r4 = problem._reg_derivs(x)
        self._value = None
        self._grad = None
        self._hess = None

    @property
    def value(self) -> float:
        if self._value is None:
            p = self.problem
            self._value = p._reg_value(self.x) + float(
                np.mean(sm.soft_hinge(self._margins, p.mu))
            )
        return self._value

    @property
    def grad(self) -> np.ndarray:
        if self._grad is None:
            q, m = self.problem.q, self.problem.m
            self._grad = self.r1 + q.T @ (-self.h1) / m
        return self._grad

    def hess_apply(self, h) -> np.ndarray:
        q, m = self.problem.q, self.problem.m
        return self.r2 * h + q.T @ (self.h2 * (q @ h)) / m

    def hess_quad(self, h) -> float:
        qh = self.problem.q @ h
        return float(np.sum(self.r2 * h * h) + np.sum(self.h2 * qh * qh) / self.problem.m)

    def third_form(self, h) -> tuple[np.ndarray, float]:
        q, m = self.problem.q, self.problem.m
        qh = q @ h
        vec = self.r3 * h * h + q.T @ (-self.h3 * qh * qh) / m
        scal = float(np.sum(self.r3 * h**3) - np.sum(self.h3 * qh**3) / m)
        return vec, scal

    def fourth_dir(self, h) -> float:
        qh = self.problem.q @ h
        return float(np.sum(self.r4 * h**4) + np.sum(self.h4 * qh**4) / self.problem.m)

    def hess_matrix(self) -> np.ndarray:
        if self._hess is None:
            q, m = self.problem.q, self.problem.m
            self._hess = np.diag(self.r2) + q.T @ (q * self.h2[:, None]) / m
        return self._hess

    def shifted_solve(self, lam: float, rhs) -> np.ndarray:
        """Dense SPD solve of (hess f_mu(x) + sqrt(2) lam I) out = rhs."""
        shifted = self.hess_matrix() + np.sqrt(2.0) * lam * np.eye(self.problem.dim)
        return solve_spd(shifted, rhs)


class _SvmProblemBase:
    def __init__(self, q, lam: float, mu: float):
        q = as_matrix(q, "Q")
        if lam <= 0.0:
            raise ValueError("lam must be positive")
        if mu <= 0.0:
            raise ValueError("mu must be positive")
        self.q = q
        self.lam = float(lam)
        self.mu = float(mu)
        self.m, self.dim = q.shape
        self.norm = NormMatrix.identity(self.dim)
        self.qq_norm = top_eigenvalue(q.T @ q)

    def state_at(self, x) -> _SvmOracle:
        return _SvmOracle(self, as_vector(x, self.dim, "x"))

    def smooth_value(self, x) -> float:
        return self.state_at(x).value

    def smooth_grad(self, x) -> np.ndarray:
        return self.state_at(x).grad

    def smooth_value_grad(self, x) -> tuple[float, np.ndarray]:
        state = self.state_at(x)
        return state.value, state.grad

    def _hinge_exact(self, x) -> float:
        return float(np.mean(np.maximum(0.0, 1.0 - self.q @ x)))

    def _hinge_subgradient(self, x) -> np.ndarray:
        # Strictly violated margins only: an exact margin of 1 contributes 0.
        active = (1.0 - self.q @ x) > 0.0
        return -self.q[active].sum(axis=0) / self.m


class L1SvmProblem(_SvmProblemBase):
    """Smoothed l1-regularized soft-margin SVM.

    f_mu(x) = lam * sum_i soft_abs(x_i) + (1/m) sum_i soft_hinge(1 - (Qx)_i),
    sandwiched in [f, f + 2 mu lam d]; third-order smooth w.r.t. ||.||_2 with
    l3 = 15 (lam d + ||Q^T Q||^2) / mu^3.
    """

    kind = "l1svm"

    def __init__(self, q, lam: float, mu: float):
        super().__init__(q, lam, mu)
        self.l3 = 15.0 * (self.lam * self.dim + self.qq_norm**2) / mu**3

    def _reg_value(self, x) -> float:
        return self.lam * float(np.sum(sm.soft_abs(x, self.mu)))

    def _reg_derivs(self, x):
        lam, mu = self.lam, self.mu
        return (
            lam * sm.soft_abs_d1(x, mu),
            lam * sm.soft_abs_d2(x, mu),
            lam * sm.soft_abs_d3(x, mu),
            lam * sm.soft_abs_d4(x, mu),
        )

    def exact_value(self, x) -> float:
        x = as_vector(x, self.dim, "x")
        return self.lam * float(np.sum(np.abs(x))) + self._hinge_exact(x)

    def exact_subgradient(self, x) -> np.ndarray:
        """sign(x) (zero at kinks) for the l1 part plus the active hinge sum."""
        x = as_vector(x, self.dim, "x")
        return self.lam * np.sign(x) + self._hinge_subgradient(x)

    @property
    def l1_constant(self) -> float:
        """Conservative first-order bound lam/mu + ||Q^T Q||/(m mu)."""
        return self.lam / self.mu + self.qq_norm / (self.m * self.mu)


class L4SvmProblem(_SvmProblemBase):
    """Soft-margin SVM with quartic regularization lam * ||x||_4^4.

    Only the hinge term is smoothed, so f <= f_mu <= f + mu. The regularizer
    is order-4 uniformly convex, enabling restart-based convergence with
    kappa4 = l3 / sigma4; sigma4 defaults to lam / d and is validated by
    sampling before restarted runs.
    """

    kind = "l4svm"

    def __init__(self, q, lam: float, mu: float, sigma4: float | None = None):
        super().__init__(q, lam, mu)
        self.l3 = 24.0 * self.lam + 15.0 * self.qq_norm**2 / mu**3
        self.sigma4 = self.lam / self.dim if sigma4 is None else float(sigma4)
        if self.sigma4 <= 0.0:
            raise ValueError("sigma4 must be positive")

    @property
    def kappa4(self) -> float:
        return self.l3 / self.sigma4

    def _reg_value(self, x) -> float:
        return self.lam * float(np.sum(x**4))

    def _reg_derivs(self, x):
        lam = self.lam
        return (4.0 * lam * x**3, 12.0 * lam * x**2, 24.0 * lam * x, np.full_like(x, 24.0 * lam))

    def exact_value(self, x) -> float:
        x = as_vector(x, self.dim, "x")
        return self.lam * float(np.sum(x**4)) + self._hinge_exact(x)

    def exact_subgradient(self, x) -> np.ndarray:
        x = as_vector(x, self.dim, "x")
        return 4.0 * self.lam * x**3 + self._hinge_subgradient(x)

    def validate_sigma4(self, rng: np.random.Generator, n_pairs: int = 200,
                        radius: float = 2.0) -> None:
        """Sampled falsification check of the order-4 growth modulus.

        Draws point pairs and checks
            f_mu(y) >= f_mu(x) + <grad f_mu(x), y - x> + (sigma4/4) ||y - x||^4.
        Raises UniformConvexityFalsified with a diagnostic on violation.
        """
        for _ in range(n_pairs):
            x = radius * rng.standard_normal(self.dim)
            y = radius * rng.standard_normal(self.dim)
            fx, gx = self.smooth_value_grad(x)
            lhs = self.smooth_value(y) - fx - float(gx @ (y - x))
            rhs = 0.25 * self.sigma4 * float(np.linalg.norm(y - x)) ** 4
            if lhs + 1e-9 * (1.0 + abs(fx)) < rhs:
                raise UniformConvexityFalsified(
                    f"sigma4 = {self.sigma4:.3e} falsified: growth {lhs:.6e} < "
                    f"required {rhs:.6e} at ||y - x|| = {np.linalg.norm(y - x):.3e}"
                )


def build_l1svm(points, labels, lam: float, eps: float) -> L1SvmProblem:
    """l1-SVM with the schedule mu = eps / (4 lam d)."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    q = svm_q_matrix(points, labels)
    mu = eps / (4.0 * lam * q.shape[1])
    return L1SvmProblem(q, lam, mu)


def build_l4svm(points, labels, lam: float, eps: float,
                sigma4: float | None = None) -> L4SvmProblem:
    """l4-SVM with the schedule mu = eps / 4."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    q = svm_q_matrix(points, labels)
    return L4SvmProblem(q, lam, eps / 4.0, sigma4=sigma4)


def oracle_eval(problem, x, order, h=None):
    """Evaluate one derivative contraction of the smoothed objective.

    order 0 returns f_mu(x); 1 the gradient; "2dir" the quadratic form along
    h; "3dir" the cubic form along h.
    """
    state = problem.state_at(x)
    if order == 0:
        return state.value
    if order == 1:
        return state.grad
    if h is None:
        raise ValueError("directional orders need a direction h")
    if order == "2dir":
        return state.hess_quad(h)
    if order == "3dir":
        return state.third_form(h)[1]
    raise ValueError(f"unknown order {order!r}")
