"""Desired end-effector trajectories with analytic derivatives.

Variants
--------
setpoint       constant ``p_d``, ``q_d``.
sinusoid       ``p_d = p0 + A sin(2π f t + φ)`` per axis, plus a constant-rate
               rotation about a fixed axis (rate may be zero).
geodesic_slew  fixed ``p_d``; ``q_d`` turns by ``angle`` about a fixed axis at
               constant rate over ``duration``.

``frame`` selects how the rotation axis and ``ω_d`` are expressed: ``"local"``
(desired-body frame, ``q_d = q0 ⊗ exp``) or ``"global"`` (inertial frame,
``q_d = exp ⊗ q0``).
"""
from dataclasses import dataclass, field

import numpy as np

from . import dynamics as D
from . import quat as Q
from .errors import ConfigError, OutOfRange, UnreachableTrajectory

VARIANTS = ("setpoint", "sinusoid", "geodesic_slew")


@dataclass(frozen=True)
class TaskReference:
    p_d: np.ndarray
    v_d: np.ndarray
    a_d: np.ndarray
    q_d: np.ndarray
    omega_d: np.ndarray
    alpha_d: np.ndarray
    frame: str = "local"

    def omega_d_local(self):
        if self.frame == "local":
            return self.omega_d
        return Q.to_rotation_matrix(self.q_d).T @ self.omega_d

    def omega_d_global(self):
        if self.frame == "global":
            return self.omega_d
        return Q.to_rotation_matrix(self.q_d) @ self.omega_d


def _vec3(x, name):
    a = np.asarray(x, dtype=float).reshape(-1)
    if a.size == 1:
        a = np.repeat(a, 3)
    if a.shape != (3,) or not np.all(np.isfinite(a)):
        raise ConfigError(f"{name} must be a finite 3-vector")
    return a


@dataclass(frozen=True)
class TrajectorySpec:
    variant: str
    duration: float
    p0: np.ndarray
    q0: np.ndarray
    amplitude: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frequency: np.ndarray = field(default_factory=lambda: np.zeros(3))  # Hz
    phase: np.ndarray = field(default_factory=lambda: np.zeros(3))
    axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    rate: float = 0.0  # rad/s, sinusoid variant
    angle: float = 0.0  # rad, geodesic_slew variant
    frame: str = "local"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown trajectory variant {self.variant!r}")
        if self.frame not in ("local", "global"):
            raise ConfigError(f"frame must be 'local' or 'global', got {self.frame!r}")
        if not self.duration > 0:
            raise ConfigError("trajectory duration must be positive")
        s = object.__setattr__
        for name in ("p0", "amplitude", "frequency", "phase", "axis"):
            s(self, name, _vec3(getattr(self, name), name))
        if np.any(self.frequency < 0):
            raise ConfigError("frequencies must be non-negative")
        if not np.linalg.norm(self.axis) > 0:
            raise ConfigError("rotation axis must be non-zero")
        s(self, "axis", self.axis / np.linalg.norm(self.axis))
        s(self, "q0", Q.normalize(self.q0))

    @property
    def angular_rate(self):
        if self.variant == "sinusoid":
            return float(self.rate)
        if self.variant == "geodesic_slew":
            return float(self.angle) / self.duration
        return 0.0


def sample(spec, t):
    """Desired pose, twist and their derivatives at time ``t``."""
    if not -1e-12 <= t <= spec.duration * (1 + 1e-12):
        raise OutOfRange(f"t={t} outside [0, {spec.duration}]")
    zero = np.zeros(3)
    p, v, a = spec.p0.copy(), zero, zero
    if spec.variant == "sinusoid":
        w = 2.0 * np.pi * spec.frequency
        arg = w * t + spec.phase
        p = spec.p0 + spec.amplitude * np.sin(arg)
        v = spec.amplitude * w * np.cos(arg)
        a = -spec.amplitude * w * w * np.sin(arg)
    rate = spec.angular_rate
    rot = Q.from_axis_angle(spec.axis, rate * t)
    if spec.frame == "local":
        q_d = Q.hamilton_product(spec.q0, rot)
    else:
        q_d = Q.hamilton_product(rot, spec.q0)
    return TaskReference(p, v, a, q_d, rate * spec.axis, zero, spec.frame)


def spec_from_dict(doc, duration, anchor_pose=None):
    """Build a :class:`TrajectorySpec` from a scenario ``trajectory`` block.

    ``p0``/``q0`` default to ``anchor_pose``; ``q_offset`` ({axis, angle})
    post-multiplies ``q0`` by a body-frame rotation.
    """
    doc = dict(doc)
    try:
        variant = doc.pop("variant")
        if "p0" in doc:
            p0 = doc.pop("p0")
        elif anchor_pose is not None:
            p0 = anchor_pose[0]
        else:
            raise ConfigError("trajectory needs p0 or an anchor pose")
        if "q0" in doc:
            q0 = doc.pop("q0")
        elif anchor_pose is not None:
            q0 = anchor_pose[1]
        else:
            raise ConfigError("trajectory needs q0 or an anchor pose")
        q0 = Q.normalize(q0)
        off = doc.pop("q_offset", None)
        if off is not None:
            q0 = Q.hamilton_product(q0, Q.from_axis_angle(off["axis"], float(off["angle"])))
        doc.pop("anchor_theta", None)
        known = {"amplitude", "frequency", "phase", "axis", "rate", "angle", "frame"}
        extra = set(doc) - known - {"duration"}
        if extra:
            raise ConfigError(f"unknown trajectory fields: {sorted(extra)}")
        return TrajectorySpec(variant=variant, duration=float(doc.pop("duration", duration)),
                              p0=p0, q0=q0, **doc)
    except KeyError as exc:
        raise ConfigError(f"trajectory block missing {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"invalid trajectory block: {exc}") from exc


def spec_to_dict(spec):
    return {
        "variant": spec.variant, "duration": spec.duration,
        "p0": spec.p0.tolist(), "q0": spec.q0.tolist(),
        "amplitude": spec.amplitude.tolist(), "frequency": spec.frequency.tolist(),
        "phase": spec.phase.tolist(), "axis": spec.axis.tolist(),
        "rate": spec.rate, "angle": spec.angle, "frame": spec.frame,
    }


def pose_error(model, theta, p_d, q_d):
    """Stacked ``[p_d - p; -2 sgn(q_e°) q⃗_e]`` with the orientation part in the flange frame."""
    p, q = D.forward_kinematics(model, theta)
    q_e = Q.hamilton_product(Q.conjugate(q_d), q)
    return np.concatenate((p_d - p, -2.0 * Q.sgn_modified(q_e[0]) * q_e[1:]))


def solve_ik(model, p_d, q_d, theta0, damping=1e-3, tol=1e-10, max_iter=500, max_step=0.3):
    """Damped least-squares IK from ``theta0``.  Returns ``(θ, residual)``."""
    theta = np.array(theta0, dtype=float)
    err = pose_error(model, theta, p_d, q_d)
    for _ in range(max_iter):
        if np.linalg.norm(err) < tol:
            break
        J = D.geometric_jacobian(model, theta)
        step = J.T @ np.linalg.solve(J @ J.T + damping**2 * np.eye(6), err)
        n = np.linalg.norm(step)
        if n > max_step:
            step *= max_step / n
        theta = theta + step
        err = pose_error(model, theta, p_d, q_d)
    return theta, float(np.linalg.norm(err))


@dataclass
class ReachabilityReport:
    times: np.ndarray
    joint_path: np.ndarray
    min_manipulability: float
    max_condition: float
    violations: list  # sample times where cond(J) > cond_abort

    @property
    def ok(self):
        return not self.violations


def reachability_check(model, spec, n_samples=50, theta_seed=None, cond_abort=1e6, tol=1e-6):
    """Follow the trajectory with warm-started IK and report Jacobian conditioning.

    Raises
    ------
    UnreachableTrajectory
        If any sample cannot be matched to within ``tol``.
    """
    theta = np.zeros(model.n) if theta_seed is None else np.array(theta_seed, dtype=float)
    times = np.linspace(0.0, spec.duration, n_samples)
    path = np.empty((n_samples, model.n))
    min_manip, max_cond, bad = np.inf, 0.0, []
    for k, t in enumerate(times):
        ref = sample(spec, t)
        theta, resid = solve_ik(model, ref.p_d, ref.q_d, theta)
        if resid > tol:
            raise UnreachableTrajectory(f"IK residual {resid:.3g} at t={t:.4g}")
        J = D.geometric_jacobian(model, theta)
        cond = D.condition_number(J)
        min_manip = min(min_manip, D.manipulability(J))
        max_cond = max(max_cond, cond)
        if cond > cond_abort:
            bad.append(float(t))
        path[k] = theta
    return ReachabilityReport(times, path, float(min_manip), float(max_cond), bad)


@dataclass(frozen=True)
class JointTrajectory:
    """Joint-space reference ``θ_d = θ0 + A sin(2π f t)`` for the joint-space controller."""

    theta0: np.ndarray
    duration: float
    amplitude: np.ndarray = field(default_factory=lambda: np.zeros(6))
    frequency: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "theta0", np.asarray(self.theta0, dtype=float).reshape(6))
        object.__setattr__(self, "amplitude", np.asarray(self.amplitude, dtype=float).reshape(6))
        if self.frequency < 0 or not self.duration > 0:
            raise ConfigError("joint trajectory needs frequency >= 0 and duration > 0")

    def sample(self, t):
        if not -1e-12 <= t <= self.duration * (1 + 1e-12):
            raise OutOfRange(f"t={t} outside [0, {self.duration}]")
        w = 2.0 * np.pi * self.frequency
        s, c = np.sin(w * t), np.cos(w * t)
        return (self.theta0 + self.amplitude * s,
                self.amplitude * w * c,
                -self.amplitude * w * w * s)
