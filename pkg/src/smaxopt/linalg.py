"""Dense linear algebra kernels.

Covers validated array construction, norms induced by B = I or B = A^T A,
SPD solves, and the structured solve of the shifted softmax Hessian

    (sqrt(2) * lam * A^T A + (1/mu) * (A^T diag(p) A - A^T p p^T A)) h = v,

which reduces to one SPD factorization of M = A^T (diag(p)/mu + sqrt(2) lam I) A
plus a Sherman-Morrison rank-one correction.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite, SingularShiftedHessian

# Cholesky pivots below this fraction of the mean diagonal are treated as
# a definiteness failure rather than silently regularized.
_PIVOT_REL_FLOOR = 1e-14


def as_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Validate and return a finite float64 1-d array."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"{name} has dim {arr.shape[0]}, expected {dim}")
    return arr


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate and return a finite float64 2-d array."""
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def _cho_factor_checked(m: np.ndarray, context: str):
    """Cholesky factorization with an explicit small-pivot rejection."""
    try:
        factor = scipy.linalg.cho_factor(m, lower=True, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"{context}: factorization failed ({exc})") from exc
    n = m.shape[0]
    pivots = np.diag(factor[0]) ** 2
    floor = _PIVOT_REL_FLOOR * np.trace(m) / n
    if np.min(pivots) < floor:
        raise NotPositiveDefinite(
            f"{context}: pivot {np.min(pivots):.3e} below threshold {floor:.3e}"
        )
    return factor


def solve_spd(m, rhs) -> np.ndarray:
    """Solve M x = rhs for symmetric positive definite M.

    Raises NotPositiveDefinite on factorization failure (distinct from the
    DimensionMismatch raised for shape errors).
    """
    m = as_matrix(m, "M")
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"M must be square, got {m.shape}")
    rhs = as_vector(rhs, m.shape[0], "rhs")
    if not np.allclose(m, m.T, rtol=1e-10, atol=1e-12 * max(1.0, np.abs(m).max())):
        raise ValueError("M must be symmetric")
    factor = _cho_factor_checked(m, "solve_spd")
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


class NormMatrix:
    """Norm ||v||_B for B = I (identity) or B = A^T A (gram of a factor A).

    The gram form stores A and works through it: ||v||_B = ||A v||_2, so the
    full B is never assembled for norms. A Cholesky factor of A^T A is taken
    once at construction, which both certifies A^T A > 0 and backs B^{-1}
    solves and dual norms.
    """

    def __init__(self, kind: str, dim: int, factor_matrix: np.ndarray | None = None):
        self.kind = kind
        self.dim = dim
        self._a = factor_matrix
        self._gram = None
        self._chol = None
        if kind == "gram":
            gram = factor_matrix.T @ factor_matrix
            self._gram = gram
            try:
                self._chol = _cho_factor_checked(gram, "NormMatrix.gram")
            except NotPositiveDefinite as exc:
                raise NotPositiveDefinite(
                    f"A^T A is not positive definite (rank(A) < {dim}?): {exc}"
                ) from exc

    @classmethod
    def identity(cls, dim: int) -> "NormMatrix":
        return cls("identity", dim)

    @classmethod
    def gram(cls, a) -> "NormMatrix":
        a = as_matrix(a, "A")
        return cls("gram", a.shape[1], a)

    def norm(self, v) -> float:
        """||v||_B; the identity kind returns the Euclidean norm."""
        v = as_vector(v, self.dim, "v")
        if self.kind == "identity":
            return float(np.linalg.norm(v))
        return float(np.linalg.norm(self._a @ v))

    def apply(self, v) -> np.ndarray:
        """B v."""
        v = as_vector(v, self.dim, "v")
        if self.kind == "identity":
            return v.copy()
        return self._a.T @ (self._a @ v)

    def solve(self, v) -> np.ndarray:
        """B^{-1} v."""
        v = as_vector(v, self.dim, "v")
        if self.kind == "identity":
            return v.copy()
        return scipy.linalg.cho_solve(self._chol, v, check_finite=False)

    def dual_norm(self, g) -> float:
        """||g||_{B^{-1}} = sqrt(g^T B^{-1} g), the dual of ||.||_B."""
        g = as_vector(g, self.dim, "g")
        if self.kind == "identity":
            return float(np.linalg.norm(g))
        val = float(g @ self.solve(g))
        return float(np.sqrt(max(val, 0.0)))


def bnorm(v, b: NormMatrix) -> float:
    """||v||_B as a free function."""
    return b.norm(v)


def _check_simplex(p: np.ndarray) -> None:
    if np.any(p < 0.0) or abs(float(np.sum(p)) - 1.0) > 1e-8:
        raise ValueError("p must lie on the probability simplex")


def solve_shifted_softmax_hessian(a, p, mu: float, lam: float, v) -> np.ndarray:
    """Solve (sqrt(2) lam A^T A + H) h = v for the softmax Hessian H at weights p.

    H = (1/mu) (A^T diag(p) A - A^T p p^T A). The structured route factors
    M = A^T (diag(p)/mu + sqrt(2) lam I) A once and removes the rank-one term
    (1/mu) (A^T p)(A^T p)^T with a Sherman-Morrison correction; the result is
    h = M^{-1}(v + xi * A^T p) with xi = (u^T M^{-1} v / mu) / (1 - u^T M^{-1} u / mu),
    u = A^T p.
    """
    a = as_matrix(a, "A")
    m, d = a.shape
    p = as_vector(p, m, "p")
    _check_simplex(p)
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    if lam < 0.0:
        raise ValueError("lam must be nonnegative")
    v = as_vector(v, d, "v")

    w = p / mu + np.sqrt(2.0) * lam
    big = a.T @ (a * w[:, None])
    try:
        factor = _cho_factor_checked(big, "shifted softmax Hessian")
    except NotPositiveDefinite as exc:
        if lam == 0.0:
            raise SingularShiftedHessian(
                "lam = 0 and the weighted gram matrix is singular"
            ) from exc
        raise
    u = a.T @ p
    y = scipy.linalg.cho_solve(factor, v, check_finite=False)
    t = scipy.linalg.cho_solve(factor, u, check_finite=False)
    denom = 1.0 - float(u @ t) / mu
    if denom <= 1e-14:
        raise SingularShiftedHessian(
            f"Sherman-Morrison denominator {denom:.3e} is not safely positive"
        )
    xi = (float(u @ y) / mu) / denom
    return y + xi * t


def eval_g_lambda(a, p, mu: float, lam: float, c) -> float:
    """Evaluate c^T S^{-1} A^T A S^{-1} c with S = sqrt(2) lam A^T A + H.

    Uses two structured solves: y = S^{-1} c, then z = S^{-1} (A^T A y).
    Nonnegative and non-increasing in lam.
    """
    a = as_matrix(a, "A")
    c = as_vector(c, a.shape[1], "c")
    y = solve_shifted_softmax_hessian(a, p, mu, lam, c)
    w = a.T @ (a @ y)
    z = solve_shifted_softmax_hessian(a, p, mu, lam, w)
    return float(c @ z)


def top_eigenvalue(s, tol: float = 1e-6, max_iters: int = 20000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Deterministic start vector; stops at relative change <= tol.
    """
    s = as_matrix(s, "S")
    n = s.shape[0]
    if s.shape[0] != s.shape[1]:
        raise DimensionMismatch(f"S must be square, got {s.shape}")
    # Ramped start avoids starting orthogonal to the leading eigenvector.
    v = 1.0 + np.arange(n) / max(n, 1)
    v /= np.linalg.norm(v)
    lam_old = 0.0
    for _ in range(max_iters):
        w = s @ v
        lam = float(v @ w)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam - lam_old) <= tol * max(abs(lam), 1e-300):
            return lam
        lam_old = lam
    return lam_old
