"""Stable softmax calculus up to fourth directional derivatives.

smax_mu(z) = mu * log(sum_i exp(z_i / mu)) is evaluated through a single
shift by max_i z_i, so no exponential is ever formed on a positive argument.
Derivatives are returned as directional contractions built from the softmax
weights p and Hessian applies; dense tensors are never materialized.

The scalar kernels soft_abs and soft_hinge are the m = 2 specializations
smax_mu([c, -c]) and smax_mu([0, c]) used by the smoothed SVM objectives,
with closed-form derivative ladders up to fourth order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DimensionMismatch
from .linalg import as_vector


@dataclass(frozen=True)
class SoftmaxState:
    """Cached stable quantities of smax_mu at one argument z.

    p is the softmax weight vector (the gradient), which lies on the
    probability simplex for every z. value = shift + mu * log_z_shifted
    reproduces mu * log(sum exp(z_i/mu)) without overflow.
    """

    z: np.ndarray
    mu: float
    shift: float
    p: np.ndarray
    log_z_shifted: float

    @property
    def dim(self) -> int:
        return self.z.shape[0]

    @property
    def value(self) -> float:
        return self.shift + self.mu * self.log_z_shifted


def softmax_state(z, mu: float) -> SoftmaxState:
    """Build the cached state; the only place exponentials are taken."""
    z = as_vector(z, name="z")
    if z.shape[0] == 0:
        raise DimensionMismatch("z must be non-empty")
    if mu <= 0.0 or not np.isfinite(mu):
        raise ValueError(f"mu must be positive and finite, got {mu}")
    shift = float(np.max(z))
    w = np.exp((z - shift) / mu)
    total = float(np.sum(w))
    p = w / total
    p.flags.writeable = False
    zz = z.copy()
    zz.flags.writeable = False
    return SoftmaxState(z=zz, mu=mu, shift=shift, p=p, log_z_shifted=float(np.log(total)))


def smax_value(z, mu: float) -> float:
    """mu * log(sum exp(z_i/mu)); sandwiched in [max z, max z + mu log m]."""
    return softmax_state(z, mu).value


def smax_grad(state: SoftmaxState) -> np.ndarray:
    """Gradient of smax_mu: the softmax weights, a point of the simplex."""
    return state.p


def _check_dir(state: SoftmaxState, h) -> np.ndarray:
    h = as_vector(h, name="h")
    if h.shape[0] != state.dim:
        raise DimensionMismatch(f"h has dim {h.shape[0]}, state has dim {state.dim}")
    return h


def smax_hess_apply(state: SoftmaxState, h) -> np.ndarray:
    """Hessian-vector product (1/mu) (p o h - <p,h> p).

    The Hessian (1/mu)(diag(p) - p p^T) is PSD and annihilates constants.
    """
    h = _check_dir(state, h)
    p = state.p
    return (p * h - float(p @ h) * p) / state.mu


def smax_hess_quad(state: SoftmaxState, h) -> float:
    """Quadratic form <h, H h> = (1/mu)(<p, h^2> - <p,h>^2); in [0, ||h||^2/mu]."""
    h = _check_dir(state, h)
    p = state.p
    ph = float(p @ h)
    return (float(p @ (h * h)) - ph * ph) / state.mu


def smax_third_form(state: SoftmaxState, h) -> tuple[np.ndarray, float]:
    """Directional third derivative along h.

    Returns (vec3, scalar3) with
        vec3 = D^3 smax [h, h] = (1/mu)(H[h o h] - 2 <p,h> H[h])
        scalar3 = D^3 smax [h, h, h] = <vec3, h>,
    where H[.] is the Hessian apply. |scalar3| <= 4 ||h||^3 / mu^2.
    """
    h = _check_dir(state, h)
    p = state.p
    ph = float(p @ h)
    vec3 = (smax_hess_apply(state, h * h) - 2.0 * ph * smax_hess_apply(state, h)) / state.mu
    return vec3, float(vec3 @ h)


def smax_third_h2_form(state: SoftmaxState, h) -> tuple[np.ndarray, float]:
    """Mixed third form with one squared slot.

    Returns (vec, scalar) with
        vec = D^3 smax [h^2, h]
            = (1/mu)(H[h^3] - <p, h^2> H[h] - <p, h> H[h^2])
        scalar = D^3 smax [h^2, h, h] = <vec, h>,
    bounded by 5 ||h||^4 / mu^2 in absolute value.
    """
    h = _check_dir(state, h)
    p = state.p
    h2 = h * h
    ph = float(p @ h)
    ph2 = float(p @ h2)
    vec = (
        smax_hess_apply(state, h2 * h)
        - ph2 * smax_hess_apply(state, h)
        - ph * smax_hess_apply(state, h2)
    ) / state.mu
    return vec, float(vec @ h)


def smax_fourth_dir(state: SoftmaxState, h) -> float:
    """Fully contracted fourth derivative D^4 smax [h, h, h, h].

    Assembled as
        (1/mu)(D^3[h^2,h,h] - 2 <p,h> D^3[h,h,h] - 2 (H[h,h])^2)
    and bounded by 15 ||h||^4 / mu^3 in absolute value.
    """
    h = _check_dir(state, h)
    ph = float(state.p @ h)
    _, third_hhh = smax_third_form(state, h)
    _, third_h2hh = smax_third_h2_form(state, h)
    hess_hh = smax_hess_quad(state, h)
    return (third_h2hh - 2.0 * ph * third_hhh - 2.0 * hess_hh * hess_hh) / state.mu


def smax_hess_matrix(state: SoftmaxState) -> np.ndarray:
    """Dense Hessian (1/mu)(diag(p) - p p^T); test and audit use only."""
    p = state.p
    return (np.diag(p) - np.outer(p, p)) / state.mu


def _check_mu(mu: float) -> None:
    if mu <= 0.0 or not np.isfinite(mu):
        raise ValueError(f"mu must be positive and finite, got {mu}")


def soft_abs(c, mu: float):
    """|c| <= soft_abs(c) <= |c| + mu log 2, via |c| + mu log1p(exp(-2|c|/mu))."""
    _check_mu(mu)
    c = np.asarray(c, dtype=np.float64)
    out = np.abs(c) + mu * np.log1p(np.exp(-2.0 * np.abs(c) / mu))
    return float(out) if out.ndim == 0 else out


def soft_abs_d1(c, mu: float):
    _check_mu(mu)
    return np.tanh(np.asarray(c, dtype=np.float64) / mu)


def soft_abs_d2(c, mu: float):
    t = np.tanh(np.asarray(c, dtype=np.float64) / mu)
    return (1.0 - t * t) / mu


def soft_abs_d3(c, mu: float):
    t = np.tanh(np.asarray(c, dtype=np.float64) / mu)
    return -2.0 * t * (1.0 - t * t) / (mu * mu)


def soft_abs_d4(c, mu: float):
    t = np.tanh(np.asarray(c, dtype=np.float64) / mu)
    return (1.0 - t * t) * (6.0 * t * t - 2.0) / (mu * mu * mu)


def soft_hinge(c, mu: float):
    """max(0,c) <= soft_hinge(c) <= max(0,c) + mu, via max(0,c) + mu log1p(exp(-|c|/mu))."""
    _check_mu(mu)
    c = np.asarray(c, dtype=np.float64)
    out = np.maximum(0.0, c) + mu * np.log1p(np.exp(-np.abs(c) / mu))
    return float(out) if out.ndim == 0 else out


def soft_hinge_d1(c, mu: float):
    _check_mu(mu)
    return expit(np.asarray(c, dtype=np.float64) / mu)


def soft_hinge_d2(c, mu: float):
    s = expit(np.asarray(c, dtype=np.float64) / mu)
    return s * (1.0 - s) / mu


def soft_hinge_d3(c, mu: float):
    s = expit(np.asarray(c, dtype=np.float64) / mu)
    return s * (1.0 - s) * (1.0 - 2.0 * s) / (mu * mu)


def soft_hinge_d4(c, mu: float):
    s = expit(np.asarray(c, dtype=np.float64) / mu)
    q = s * (1.0 - s)
    return q * (1.0 - 6.0 * q) / (mu * mu * mu)
