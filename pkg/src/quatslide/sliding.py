"""Tracking errors and sliding variables for position and orientation.

Two orientation conventions are supported:

* local:  ``ω`` is expressed in the end-effector frame,
  ``ω_e = ω - R_eᵀ ω_d`` and ``s_q = ω_e + 2λ sgn(q_e°) q⃗_e``;
* global: ``ω`` is expressed in the inertial frame,
  ``ω_e = ω - ω_d`` and ``s_q = ω_e + 2λ sgn(q_e°) R_d q⃗_e``.

In both cases ``q_e = q_d* ⊗ q``.
"""
from dataclasses import dataclass

import numpy as np

from . import quat as Q
from .errors import DomainError
from .integrate import rk4

LOCAL = "local"
GLOBAL = "global"


@dataclass(frozen=True)
class Gains:
    lam: float
    sigma: float

    def __post_init__(self):
        if not (self.lam > 0 and self.sigma > 0):
            raise DomainError(f"gains must be positive, got lam={self.lam}, sigma={self.sigma}")


@dataclass(frozen=True)
class OrientationError:
    q_e: np.ndarray
    R_e: np.ndarray
    omega_e: np.ndarray


@dataclass(frozen=True)
class SlidingVariables:
    s_p: np.ndarray
    s_q: np.ndarray
    frame: str = LOCAL

    def stacked(self):
        return np.concatenate((self.s_p, self.s_q))


def error_quaternion(q_d, q):
    return Q.hamilton_product(Q.conjugate(q_d), q)


def omega_error_local(omega, omega_d, R_e):
    return omega - R_e.T @ omega_d


def omega_error_global(omega, omega_d):
    return omega - omega_d


def orientation_error(q, q_d, omega, omega_d, frame=LOCAL):
    q_e = error_quaternion(q_d, q)
    R_e = Q.to_rotation_matrix(q_e)
    if frame == LOCAL:
        w_e = omega_error_local(omega, omega_d, R_e)
    else:
        w_e = omega_error_global(omega, omega_d)
    return OrientationError(q_e, R_e, w_e)


def s_q_local(q_e, omega_e, lam):
    return omega_e + 2.0 * lam * Q.sgn_modified(q_e[0]) * q_e[1:]


def s_q_global(q_e, omega_e, R_d, lam):
    return omega_e + 2.0 * lam * Q.sgn_modified(q_e[0]) * (R_d @ q_e[1:])


def s_p(p_e, v_e, sigma):
    return v_e + sigma * p_e


def lemma1_solution(x0, sigma, t):
    """Closed-form solution of ``ẋ = -σ x √(1 - x)`` with ``x(0) = x0``.

    With ``c = (1 - √(1-x0)) / (1 + √(1-x0))``,
    ``x(t) = 4 c e^{-σt} / (1 + c e^{-σt})²``.
    """
    if not 0.0 <= x0 < 1.0:
        raise DomainError(f"x0 must lie in [0, 1), got {x0}")
    if not sigma > 0:
        raise DomainError(f"sigma must be positive, got {sigma}")
    r = np.sqrt(1.0 - x0)
    c = (1.0 - r) / (1.0 + r)
    ce = c * np.exp(-sigma * np.asarray(t, dtype=float))
    return 4.0 * ce / (1.0 + ce) ** 2


def qe_flow_on_manifold(q_e0, lam, dt, T, frame=LOCAL, desired=None):
    """Integrate the error quaternion while its sliding variable is held at zero.

    On the manifold the angular-velocity error is fixed by the sliding
    variable, leaving a closed ODE in ``q_e``.  For ``frame="global"`` the
    kinematics are propagated in the inertial convention using
    ``R_d = R(desired(t))``; ``desired`` defaults to the identity.

    Returns ``(t, q_e)`` with one row per step, including ``t = 0``.
    """
    if not (dt > 0 and T > dt):
        raise DomainError("need dt > 0 and T > dt")
    if frame == LOCAL:
        def f(_t, qe):
            w_e = -2.0 * lam * Q.sgn_modified(qe[0]) * qe[1:]
            return Q.qdot_local(qe, w_e)
    elif frame == GLOBAL:
        desired = desired or (lambda _t: Q.IDENTITY)

        def f(t, qe):
            R_d = Q.to_rotation_matrix(desired(t))
            w_e = -2.0 * lam * Q.sgn_modified(qe[0]) * (R_d @ qe[1:])
            # (0, R_dᵀ ω_e) ⊗ q_e: the inertial-frame error kinematics
            return 0.5 * Q.hamilton_product(np.concatenate(([0.0], R_d.T @ w_e)), qe)
    else:
        raise DomainError(f"unknown frame {frame!r}")

    n = int(round(T / dt))
    ts = dt * np.arange(n + 1)
    out = np.empty((n + 1, 4))
    qe = Q.normalize(q_e0)
    out[0] = qe
    for k in range(n):
        qe = Q.normalize(rk4(f, ts[k], qe, dt))
        out[k + 1] = qe
    return ts, out


def fit_decay_rate(t, y, lo=1e-6, hi=0.5, t_min=0.0):
    """Least-squares exponential rate of ``y(t)`` over ``lo < y < hi``, ``t >= t_min``.

    Returns ``nan`` when fewer than 3 samples fall in the window.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = (y > lo) & (y < hi) & (t >= t_min)
    if mask.sum() < 3:
        return float("nan")
    slope = np.polyfit(t[mask], np.log(y[mask]), 1)[0]
    return float(-slope)
