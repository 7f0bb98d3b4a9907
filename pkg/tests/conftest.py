import numpy as np
import pytest

from quatslide import dynamics as D
from quatslide import quat as Q


@pytest.fixture(scope="session")
def model():
    return D.reference_model()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unit_quat(rng):
    while True:
        v = rng.normal(size=4)
        n = np.linalg.norm(v)
        if n > 1e-3:
            return v / n


def random_config(model, rng, max_cond=1e3):
    """Joint angles away from singularities."""
    while True:
        th = rng.uniform(-np.pi, np.pi, model.n)
        if D.condition_number(D.geometric_jacobian(model, th)) < max_cond:
            return th


def rodrigues(axis, angle):
    """Rotation matrix from the Rodrigues formula; independent of the quaternion code."""
    k = np.asarray(axis, dtype=float)
    k = k / np.linalg.norm(k)
    Kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    return np.eye(3) + np.sin(angle) * Kx + (1 - np.cos(angle)) * Kx @ Kx


def quat_matrix_left(q):
    """4x4 matrix L(q) with q ⊗ p = L(q) p, written out from the component formula."""
    w, x, y, z = q
    return np.array([[w, -x, -y, -z],
                     [x, w, -z, y],
                     [y, z, w, -x],
                     [z, -y, x, w]])
