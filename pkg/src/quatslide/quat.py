"""Unit-quaternion algebra.

Quaternions are plain ``numpy`` arrays of shape ``(4,)`` ordered scalar-first,
``(w, x, y, z)``.  ``q`` and ``-q`` describe the same rotation; every consumer
in this package must treat them as equal.
"""
import math

import numpy as np

from .errors import DegenerateAxis, DegenerateQuaternion

EPS_NORM = 1e-8

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def quat(w, x=0.0, y=0.0, z=0.0):
    return np.array([w, x, y, z], dtype=float)


def hamilton_product(q1, q2):
    """Quaternion product ``q1 ⊗ q2``."""
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + w2 * x1 + y1 * z2 - z1 * y2,
        w1 * y2 + w2 * y1 + z1 * x2 - x1 * z2,
        w1 * z2 + w2 * z1 + x1 * y2 - y1 * x2,
    ])


def conjugate(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def normalize(q):
    """Project ``q`` onto the unit sphere.

    Raises
    ------
    DegenerateQuaternion
        If ``‖q‖ <= EPS_NORM``.
    """
    q = np.asarray(q, dtype=float)
    n = math.sqrt(q @ q)
    if not n > EPS_NORM:
        raise DegenerateQuaternion(f"cannot normalize quaternion with norm {n:g}")
    return q / n


def to_rotation_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def from_rotation_matrix(R):
    """Rotation matrix to unit quaternion (Shepperd's method), ``w >= 0``."""
    R = np.asarray(R, dtype=float)
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    cands = (tr, R[0, 0], R[1, 1], R[2, 2])
    k = int(np.argmax(cands))
    if k == 0:
        s = 2.0 * math.sqrt(1.0 + tr)
        q = [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
    elif k == 1:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        q = [(R[2, 1] - R[1, 2]) / s, 0.25 * s, (R[0, 1] + R[1, 0]) / s, (R[0, 2] + R[2, 0]) / s]
    elif k == 2:
        s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        q = [(R[0, 2] - R[2, 0]) / s, (R[0, 1] + R[1, 0]) / s, 0.25 * s, (R[1, 2] + R[2, 1]) / s]
    else:
        s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        q = [(R[1, 0] - R[0, 1]) / s, (R[0, 2] + R[2, 0]) / s, (R[1, 2] + R[2, 1]) / s, 0.25 * s]
    q = normalize(q)
    return q if q[0] >= 0 else -q


def from_axis_angle(axis, angle):
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if not n > 0:
        raise DegenerateAxis("rotation axis has zero length")
    return np.concatenate(([math.cos(angle / 2)], math.sin(angle / 2) * axis / n))


def rotate(q, v):
    """Rotate vector ``v`` by ``q``, i.e. ``R(q) v``."""
    return to_rotation_matrix(q) @ v


def qdot_local(q, omega):
    """``q̇ = ½ q ⊗ (0, ω)`` for body-frame angular velocity ``ω``."""
    return 0.5 * hamilton_product(q, np.concatenate(([0.0], omega)))


def qdot_global(q, omega_global):
    """``q̇ = ½ (0, ω) ⊗ q`` for inertial-frame angular velocity ``ω``."""
    return 0.5 * hamilton_product(np.concatenate(([0.0], omega_global)), q)


def sgn_modified(x):
    """Sign with ``sgn(0) = +1``; never returns zero."""
    return -1.0 if x < 0 else 1.0


def same_rotation(q1, q2, tol=1e-9):
    """True if ``q1`` and ``q2`` agree up to the double-cover sign."""
    return min(np.max(np.abs(q1 - q2)), np.max(np.abs(q1 + q2))) <= tol
