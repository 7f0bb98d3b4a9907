"""Sliding-variable torque controllers.

``slotine_li_joint`` tracks a joint-space reference.  ``ik_torque`` tracks an
end-effector pose trajectory through the manipulator Jacobian::

    θ̇_r = J⁻¹ [v_d - σ p_e ;  R_eᵀ ω_d - 2λ sgn(q_e°) q⃗_e]
    τ   = H θ̈_r + C θ̇_r + g - K J⁻¹ [s_p ; s_q]

with the global-frame variant swapping in ``ω_d - 2λ sgn(q_e°) R_d q⃗_e`` and a
world-frame Jacobian.  ``TASK_NAIVE`` fixes ``sgn ≡ +1``; it exists only as an
unwinding baseline.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import dynamics as D
from . import quat as Q
from . import sliding as S
from .errors import ConfigError, NumericalDivergence, SingularJacobian

JOINT = "joint"
TASK_LOCAL = "task_local"
TASK_GLOBAL = "task_global"
TASK_NAIVE = "task_naive_nosgn"
MODES = (JOINT, TASK_LOCAL, TASK_GLOBAL, TASK_NAIVE)

COND_ABORT = 1e6


@dataclass(frozen=True)
class ControllerConfig:
    mode: str
    lam: float
    sigma: float
    K: np.ndarray
    cond_abort: float = COND_ABORT

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown controller mode {self.mode!r}; expected one of {MODES}")
        if not (self.lam > 0 and self.sigma > 0):
            raise ConfigError("lambda and sigma must be positive")
        K = np.asarray(self.K, dtype=float)
        if K.shape != (6, 6) or not np.allclose(K, K.T):
            raise ConfigError("K must be a symmetric 6x6 matrix")
        if np.linalg.eigvalsh(K)[0] <= 0:
            raise ConfigError("K must be positive definite")
        object.__setattr__(self, "K", K)

    @property
    def frame(self):
        return S.GLOBAL if self.mode == TASK_GLOBAL else S.LOCAL


def default_gain(model, scale=20.0):
    """``scale · diag(H(0))``: s-dynamics roughly ``scale`` 1/s on every joint."""
    return scale * np.diag(np.diag(D.mass_matrix(model, np.zeros(model.n))))


@dataclass(frozen=True)
class ReferenceVelocity:
    theta_dot_r: np.ndarray
    theta_ddot_r: np.ndarray


@dataclass(frozen=True)
class ControlOutput:
    tau: np.ndarray
    sliding: S.SlidingVariables
    reference: ReferenceVelocity
    q_e: np.ndarray
    p_e: np.ndarray
    condition: float
    identity_residual: float  # max |J(θ̇ - θ̇_r) - [s_p; s_q]|


def theta_ddot_r_numeric(prev, theta_dot_r, dt):
    """Backward difference of the reference velocity; zero on the first step."""
    if prev is None:
        return np.zeros_like(theta_dot_r)
    return (theta_dot_r - prev) / dt


def slotine_li_joint(model, theta, theta_dot, theta_d, theta_dot_d, theta_ddot_d, cfg):
    e = theta - theta_d
    theta_dot_r = theta_dot_d - cfg.lam * e
    theta_ddot_r = theta_ddot_d - cfg.lam * (theta_dot - theta_dot_d)
    s = theta_dot - theta_dot_r
    tau = (D.mass_matrix(model, theta) @ theta_ddot_r
           + D.coriolis_product(model, theta, theta_dot, theta_dot_r)
           + D.gravity_vector(model, theta)
           - cfg.K @ s)
    return tau


def _solve(lu, J, b):
    x = scipy.linalg.lu_solve(lu, b)
    resid = np.max(np.abs(J @ x - b))
    if not resid <= 1e-9 * (1.0 + np.max(np.abs(b))):
        raise SingularJacobian(f"Jacobian solve residual {resid:.3g} too large")
    return x


def _factor(J, cond_abort):
    cond = D.condition_number(J)
    if cond > cond_abort:
        raise SingularJacobian(f"Jacobian condition number {cond:.6g} exceeds {cond_abort:.6g}", cond)
    return scipy.linalg.lu_factor(J, check_finite=True), cond


def _angular_reference(mode, q_e, omega_d_local, omega_d_global, R_e, R_d, lam):
    sgn = 1.0 if mode == TASK_NAIVE else Q.sgn_modified(q_e[0])
    if mode == TASK_GLOBAL:
        return omega_d_global - 2.0 * lam * sgn * (R_d @ q_e[1:])
    return R_e.T @ omega_d_local - 2.0 * lam * sgn * q_e[1:]


def theta_dot_r_task(model, theta, ref, ee, cfg, J=None, lu=None):
    """Task-space reference joint velocity.  Returns ``(θ̇_r, q_e, p_e)``."""
    if J is None:
        J = D.geometric_jacobian(model, theta, frame=cfg.frame)
    if lu is None:
        lu, _ = _factor(J, cfg.cond_abort)
    p_e = ee.p - ref.p_d
    q_e = S.error_quaternion(ref.q_d, ee.q)
    R_e = Q.to_rotation_matrix(q_e)
    R_d = Q.to_rotation_matrix(ref.q_d)
    ang = _angular_reference(cfg.mode, q_e, ref.omega_d_local(), ref.omega_d_global(), R_e, R_d, cfg.lam)
    b = np.concatenate((ref.v_d - cfg.sigma * p_e, ang))
    return _solve(lu, J, b), q_e, p_e


def ik_torque(model, theta, theta_dot, ref, cfg, prev_theta_dot_r, dt, ee=None):
    """Task-space sliding torque.

    ``ee`` defaults to the end-effector state computed from ``(θ, θ̇)``; passing
    it explicitly lets callers choose the sign of ``q``.
    """
    if cfg.mode == JOINT:
        raise ConfigError("ik_torque requires a task-space mode")
    if ee is None:
        ee = D.end_effector_state(model, theta, theta_dot)
    J = D.geometric_jacobian(model, theta, frame=cfg.frame)
    lu, cond = _factor(J, cfg.cond_abort)
    theta_dot_r, q_e, p_e = theta_dot_r_task(model, theta, ref, ee, cfg, J=J, lu=lu)
    theta_ddot_r = theta_ddot_r_numeric(prev_theta_dot_r, theta_dot_r, dt)

    R_e = Q.to_rotation_matrix(q_e)
    s_p = S.s_p(p_e, ee.v - ref.v_d, cfg.sigma)
    if cfg.mode == TASK_GLOBAL:
        R = Q.to_rotation_matrix(ee.q)
        w_e = S.omega_error_global(R @ ee.omega, ref.omega_d_global())
        s_q = S.s_q_global(q_e, w_e, Q.to_rotation_matrix(ref.q_d), cfg.lam)
    else:
        w_e = S.omega_error_local(ee.omega, ref.omega_d_local(), R_e)
        if cfg.mode == TASK_NAIVE:
            s_q = w_e + 2.0 * cfg.lam * q_e[1:]
        else:
            s_q = S.s_q_local(q_e, w_e, cfg.lam)
    sv = S.SlidingVariables(s_p, s_q, cfg.frame)
    stacked = sv.stacked()

    tau = (D.mass_matrix(model, theta) @ theta_ddot_r
           + D.coriolis_product(model, theta, theta_dot, theta_dot_r)
           + D.gravity_vector(model, theta)
           - cfg.K @ scipy.linalg.lu_solve(lu, stacked))
    if not np.all(np.isfinite(tau)):
        raise NumericalDivergence("non-finite torque")
    resid = float(np.max(np.abs(J @ (theta_dot - theta_dot_r) - stacked)))
    return ControlOutput(tau, sv, ReferenceVelocity(theta_dot_r, theta_ddot_r), q_e, p_e, cond, resid)


def unwinding_metrics(t, omega, q, q_d):
    """Rotational path length ``∫‖ω‖dt`` and the cover the trace ended on.

    ``final_sign`` is ``sgn(⟨q(T), q_d(T)⟩)``: ``-1`` means convergence to ``-q_d``.
    """
    t = np.asarray(t, dtype=float)
    speed = np.linalg.norm(np.atleast_2d(omega), axis=1)
    path = float(np.trapezoid(speed, t)) if len(t) > 1 else 0.0
    final_sign = Q.sgn_modified(float(np.dot(q[-1], q_d[-1])))
    return {"path_length": path, "final_sign": int(final_sign)}
