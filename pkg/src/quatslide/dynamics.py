"""6-R serial manipulator: kinematics, Jacobian and rigid-body dynamics.

The equations of motion are ``H(θ)θ̈ + C(θ,θ̇)θ̇ + g(θ) = τ``.  ``C`` is built
from Christoffel symbols of ``H`` so that ``Ḣ - 2C`` is skew-symmetric.

Jacobian convention: the linear rows give the end-effector velocity in the
world frame; the angular rows give ``ω`` in the end-effector (local) frame by
default.  ``frame="global"`` returns the angular rows in the world frame.
"""
import json
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import _kernels as K
from . import quat as Q
from .errors import ConfigError

N_JOINTS = 6


@dataclass(frozen=True)
class LinkParams:
    a: float
    alpha: float
    d: float
    theta_offset: float
    mass: float
    com: tuple
    inertia: tuple  # 9 entries, row-major

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigError(f"link mass must be positive, got {self.mass}")
        I = np.asarray(self.inertia, dtype=float).reshape(3, 3)
        if not np.allclose(I, I.T, atol=1e-12):
            raise ConfigError("link inertia must be symmetric")
        ev = np.linalg.eigvalsh(I)
        if ev[0] <= 0:
            raise ConfigError("link inertia must be positive definite")
        if ev[0] + ev[1] < ev[2] * (1 - 1e-12):
            raise ConfigError("principal moments violate the triangle inequality")


@dataclass(frozen=True)
class ManipulatorModel:
    links: tuple
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    base_p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    base_q: np.ndarray = field(default_factory=lambda: Q.IDENTITY.copy())

    def __post_init__(self):
        if len(self.links) != N_JOINTS:
            raise ConfigError(f"expected {N_JOINTS} links, got {len(self.links)}")
        s = object.__setattr__
        s(self, "gravity", np.asarray(self.gravity, dtype=float))
        s(self, "base_p", np.asarray(self.base_p, dtype=float))
        s(self, "base_q", Q.normalize(self.base_q))
        s(self, "dh", np.array([[l.a, l.alpha, l.d, l.theta_offset] for l in self.links]))
        s(self, "mass", np.array([l.mass for l in self.links], dtype=float))
        s(self, "com", np.array([l.com for l in self.links], dtype=float))
        s(self, "inertia", np.array([np.reshape(l.inertia, (3, 3)) for l in self.links], dtype=float))
        s(self, "base_R", Q.to_rotation_matrix(self.base_q))

    @property
    def n(self):
        return len(self.links)

    def with_gravity(self, gravity):
        return ManipulatorModel(self.links, gravity, self.base_p, self.base_q)

    def with_base(self, p=None, q=None):
        return ManipulatorModel(self.links, self.gravity,
                                self.base_p if p is None else p,
                                self.base_q if q is None else q)

    # kernel argument bundles
    def _inertial(self):
        return self.dh, self.mass, self.com, self.inertia, self.base_R, self.base_p


@dataclass(frozen=True)
class EndEffectorState:
    p: np.ndarray
    q: np.ndarray
    v: np.ndarray
    omega: np.ndarray  # end-effector frame


def model_from_dict(doc):
    try:
        links = []
        for ld in doc["links"]:
            links.append(LinkParams(
                a=float(ld["a"]), alpha=float(ld["alpha"]), d=float(ld["d"]),
                theta_offset=float(ld.get("theta_offset", 0.0)), mass=float(ld["mass"]),
                com=tuple(float(v) for v in ld["com"]),
                inertia=tuple(float(v) for v in ld["inertia"]),
            ))
        base = doc.get("base_pose", {})
        return ManipulatorModel(
            tuple(links),
            gravity=np.array(doc.get("gravity", [0.0, 0.0, -9.81]), dtype=float),
            base_p=np.array(base.get("p", [0.0, 0.0, 0.0]), dtype=float),
            base_q=np.array(base.get("q", [1.0, 0.0, 0.0, 0.0]), dtype=float),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid model document: {exc}") from exc


def model_to_dict(model):
    return {
        "links": [
            {"a": l.a, "alpha": l.alpha, "d": l.d, "theta_offset": l.theta_offset,
             "mass": l.mass, "com": list(l.com), "inertia": list(l.inertia)}
            for l in model.links
        ],
        "gravity": model.gravity.tolist(),
        "base_pose": {"p": model.base_p.tolist(), "q": model.base_q.tolist()},
    }


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def reference_model():
    """The bundled 6-R reference arm (``data/reference_arm.json``)."""
    text = resources.files("quatslide").joinpath("data/reference_arm.json").read_text()
    return model_from_dict(json.loads(text))


def link_frames(model, theta):
    return K.frames(model.dh, model.base_R, model.base_p, np.asarray(theta, dtype=float))


def forward_kinematics(model, theta):
    """End-effector (flange) position and orientation quaternion."""
    R, o = link_frames(model, theta)
    return o[-1].copy(), Q.from_rotation_matrix(R[-1])


def geometric_jacobian(model, theta, frame="local"):
    R, o = link_frames(model, theta)
    J = K.jacobian_world(R, o)
    if frame == "local":
        J[3:] = R[-1].T @ J[3:]
    return J


def end_effector_state(model, theta, theta_dot, q_prev=None):
    """Pose and twist of the end-effector.

    If ``q_prev`` is given the returned quaternion is sign-aligned with it, so a
    logged trace stays continuous on S³.
    """
    R, o = link_frames(model, theta)
    Jw = K.jacobian_world(R, o)
    twist = Jw @ theta_dot
    q = Q.from_rotation_matrix(R[-1])
    if q_prev is not None and q @ q_prev < 0:
        q = -q
    return EndEffectorState(o[-1].copy(), q, twist[:3], R[-1].T @ twist[3:])


def rnea(model, theta, theta_dot, theta_ddot, gravity=True):
    g = model.gravity if gravity else np.zeros(3)
    dh, m, c, I, Rb, pb = model._inertial()
    return K.rnea(dh, m, c, I, Rb, pb, g, np.asarray(theta, float),
                  np.asarray(theta_dot, float), np.asarray(theta_ddot, float))


def mass_matrix(model, theta):
    return K.crba(*model._inertial(), np.asarray(theta, dtype=float))


def mass_matrix_derivatives(model, theta, h=K.FD_STEP):
    return K.dH_dtheta(*model._inertial(), np.asarray(theta, dtype=float), h)


def coriolis_matrix(model, theta, theta_dot, method="fd", h=K.FD_STEP):
    """Christoffel-form Coriolis matrix.

    ``method="fd"`` differentiates ``H`` by central differences;
    ``method="polar"`` builds each column exactly as ``coriolis_product(θ, θ̇, e_j)``.
    """
    theta_dot = np.asarray(theta_dot, dtype=float)
    if method == "fd":
        return K.christoffel_C(mass_matrix_derivatives(model, theta, h), theta_dot)
    if method == "polar":
        return np.column_stack([coriolis_product(model, theta, theta_dot, e)
                                for e in np.eye(model.n)])
    raise ValueError(f"unknown method {method!r}")


def coriolis_product(model, theta, theta_dot, x):
    """``C(θ, θ̇) x`` for the Christoffel-form ``C``, without forming ``C``.

    The Christoffel symbols define a symmetric bilinear form ``Γ`` with
    ``Γ(θ̇, θ̇) = C(θ, θ̇)θ̇``, the velocity term of inverse dynamics, so by
    polarization ``C(θ, θ̇) x = [c(θ̇ + x) - c(θ̇ - x)] / 4``.
    """
    z = np.zeros(model.n)
    theta_dot = np.asarray(theta_dot, dtype=float)
    return 0.25 * (rnea(model, theta, theta_dot + x, z, gravity=False)
                   - rnea(model, theta, theta_dot - x, z, gravity=False))


def gravity_vector(model, theta):
    z = np.zeros(model.n)
    return rnea(model, theta, z, z)


def forward_dynamics(model, theta, theta_dot, tau, locked=None):
    """Joint accelerations; joints flagged in ``locked`` are held at zero acceleration."""
    theta = np.asarray(theta, dtype=float)
    theta_dot = np.asarray(theta_dot, dtype=float)
    tau = np.asarray(tau, dtype=float)
    dh, m, c, I, Rb, pb = model._inertial()
    if locked is None:
        return K.forward_dynamics(dh, m, c, I, Rb, pb, model.gravity, theta, theta_dot, tau)
    free = ~np.asarray(locked, dtype=bool)
    H = K.crba(dh, m, c, I, Rb, pb, theta)
    bias = K.rnea(dh, m, c, I, Rb, pb, model.gravity, theta, theta_dot, np.zeros(model.n))
    qdd = np.zeros(model.n)
    qdd[free] = np.linalg.solve(H[np.ix_(free, free)], (tau - bias)[free])
    return qdd


def kinetic_energy(model, theta, theta_dot):
    return 0.5 * theta_dot @ mass_matrix(model, theta) @ theta_dot


def potential_energy(model, theta):
    R, o = link_frames(model, theta)
    pe = 0.0
    for i in range(model.n):
        c = o[i + 1] + R[i + 1] @ model.com[i]
        pe -= model.mass[i] * (model.gravity @ c)
    return pe


def manipulability(J):
    return abs(float(np.linalg.det(J)))


def condition_number(J):
    """``σ_max / σ_min``; ``inf`` for a numerically rank-deficient ``J``."""
    s = np.linalg.svd(J, compute_uv=False)
    if s[-1] <= s[0] * len(s) * np.finfo(float).eps:
        return float("inf")
    return float(s[0] / s[-1])
