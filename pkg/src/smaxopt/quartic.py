"""Quartic-regularized third-order Taylor model and its inner minimizer.

For a center x the model in the displacement h is

    Omega(h) = f(x) + <g, h> + 1/2 D2f[h,h] + 1/6 D3f[h,h,h] + (l3/4) ||h||_B^4.

The regularization coefficient l3/4 comes from the fourth-order term
2 p l3 / (p+1)! at p = 3. Under the l3 certificate the model upper-bounds f,
so any h with Omega(h) <= Omega(0) certifies outer progress f(x+h) <= f(x).
"""

from __future__ import annotations

import numpy as np

from .errors import InnerSolveFailure
from .linalg import NormMatrix

_ARMIJO = 1e-4
_MAX_HALVINGS = 60
# The quartic term's curvature along B h reaches 3 l3 ||h||_B^2 while the
# shifted system carries sqrt(2) lam; lam = 2 l3 ||h||_B^2 keeps the Newton
# map a contraction near the minimizer (sqrt(2) * 2 > 3 - margin for the
# third-order term), where the plain lam = l3 ||h||_B^2 oscillates.
_SHIFT_SAFETY = 2.0


class QuarticModel:
    """Model of one smoothed problem around the point oracle's center."""

    def __init__(self, oracle, norm: NormMatrix, l3: float):
        self.oracle = oracle
        self.norm = norm
        self.l3 = l3
        self.f0 = oracle.value
        self.g0 = oracle.grad

    def value_above_center(self, h) -> float:
        """Omega(h) - f(x); the minimizer works on this cancellation-free form."""
        _, third = self.oracle.third_form(h)
        quad = self.oracle.hess_quad(h)
        reg = 0.25 * self.l3 * self.norm.norm(h) ** 4
        return float(self.g0 @ h) + 0.5 * quad + third / 6.0 + reg

    def value(self, h) -> float:
        return self.f0 + self.value_above_center(h)

    def grad(self, h) -> np.ndarray:
        """Exact model gradient g + D2f h + 1/2 D3f[h,h] + l3 ||h||_B^2 B h."""
        vec3, _ = self.oracle.third_form(h)
        hn2 = self.norm.norm(h) ** 2
        return self.g0 + self.oracle.hess_apply(h) + 0.5 * vec3 + self.l3 * hn2 * self.norm.apply(h)

    def minimize(self, tol: float, max_iters: int = 200) -> tuple[np.ndarray, int]:
        """Minimize the model to dual-norm stationarity ||grad||_{B^-1} <= tol.

        Shifted-Newton iteration: each step solves one paper-structured system
        (D2f + sqrt(2) lam B) step = -grad with lam = l3 ||h||_B^2, refreshed
        per step and floored at the displacement scale implied by the current
        residual so the very first system (h = 0) is never singular. A halving
        Armijo line search on the model value keeps every iterate a descent
        step, which also preserves Omega(h) <= Omega(0).
        """
        h = np.zeros(self.norm.dim)
        val = 0.0  # Omega(h) - f(x); descent keeps it nonpositive
        g = self.grad(h)
        residual = self.norm.dual_norm(g)
        it = 0
        while it < max_iters:
            if residual <= tol:
                return h, it
            it += 1
            lam = _SHIFT_SAFETY * self.l3 * self.norm.norm(h) ** 2
            lam = max(lam, self.l3 ** (1.0 / 3.0) * residual ** (2.0 / 3.0))
            step = self.oracle.shifted_solve(lam, -g)
            # full step first: near stationarity the value decrease is below
            # float resolution, but the optimality residual still contracts
            full = h + step
            g_full = self.grad(full)
            res_full = self.norm.dual_norm(g_full)
            if res_full <= 0.9 * residual:
                h, val = full, self.value_above_center(full)
                g, residual = g_full, res_full
                continue
            slope = float(g @ step)  # < 0: the shifted matrix is SPD
            t = 1.0
            accepted = False
            for _ in range(_MAX_HALVINGS):
                cand = h + t * step
                cand_val = self.value_above_center(cand)
                if cand_val <= val + _ARMIJO * t * slope:
                    accepted = True
                    break
                t *= 0.5
            if accepted:
                h, val = cand, cand_val
                g = self.grad(h)
                residual = self.norm.dual_norm(g)
            elif res_full < residual:
                # value test lost to rounding; any residual decrease still counts
                h, val = full, self.value_above_center(full)
                g, residual = g_full, res_full
            else:
                break  # genuinely stuck; fail below rather than burn the cap
        g = self.grad(h)
        residual = self.norm.dual_norm(g)
        if residual <= tol:
            return h, max_iters
        raise InnerSolveFailure(
            f"model minimization hit the {max_iters}-step cap at residual "
            f"{residual:.3e} (tol {tol:.3e})",
            h=h,
            residual=residual,
        )
