"""Compiled rigid-body kernels for 6-R serial arms.

Everything is evaluated in world coordinates with the standard (distal) DH
convention: joint ``i`` (1-based) rotates about ``z_{i-1}`` and link ``i``
is rigidly attached to frame ``i``.  Arrays:

    dh       (n, 4)    a, alpha, d, theta_offset
    mass     (n,)
    com      (n, 3)    centre of mass in the link frame
    inertia  (n, 3, 3) inertia about the COM in the link frame
"""
import numpy as np
from numba import njit

FD_STEP = 1e-6


@njit(cache=True)
def cross(a, b):
    out = np.empty(3)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


@njit(cache=True)
def mv(A, x):
    out = np.empty(3)
    for r in range(3):
        out[r] = A[r, 0] * x[0] + A[r, 1] * x[1] + A[r, 2] * x[2]
    return out


@njit(cache=True)
def mm(A, B):
    out = np.empty((3, 3))
    for r in range(3):
        for c in range(3):
            out[r, c] = A[r, 0] * B[0, c] + A[r, 1] * B[1, c] + A[r, 2] * B[2, c]
    return out


@njit(cache=True)
def rotate_inertia(R, I):
    """``R I Rᵀ``."""
    return mm(mm(R, I), R.T)


@njit(cache=True)
def frames(dh, base_R, base_p, theta):
    """World rotation and origin of frames 0..n."""
    n = dh.shape[0]
    R = np.empty((n + 1, 3, 3))
    o = np.empty((n + 1, 3))
    R[0] = base_R
    o[0] = base_p
    for i in range(n):
        a, alpha, d, off = dh[i, 0], dh[i, 1], dh[i, 2], dh[i, 3]
        ct, st = np.cos(theta[i] + off), np.sin(theta[i] + off)
        ca, sa = np.cos(alpha), np.sin(alpha)
        Ri = R[i]
        # columns of Rz(θ) Rx(α)
        x = (ct, st, 0.0)
        y = (-st * ca, ct * ca, sa)
        z = (st * sa, -ct * sa, ca)
        for r in range(3):
            R[i + 1, r, 0] = Ri[r, 0] * x[0] + Ri[r, 1] * x[1]
            R[i + 1, r, 1] = Ri[r, 0] * y[0] + Ri[r, 1] * y[1] + Ri[r, 2] * y[2]
            R[i + 1, r, 2] = Ri[r, 0] * z[0] + Ri[r, 1] * z[1] + Ri[r, 2] * z[2]
            o[i + 1, r] = o[i, r] + Ri[r, 0] * a * ct + Ri[r, 1] * a * st + Ri[r, 2] * d
    return R, o


@njit(cache=True)
def jacobian_world(R, o):
    n = R.shape[0] - 1
    J = np.zeros((6, n))
    pe = o[n]
    for i in range(n):
        z = R[i][:, 2].copy()
        J[0:3, i] = cross(z, pe - o[i])
        J[3:6, i] = z
    return J


@njit(cache=True)
def rnea(dh, mass, com, inertia, base_R, base_p, grav, theta, qd, qdd):
    """Inverse dynamics; ``grav`` is the world gravity vector (zeros to disable)."""
    n = dh.shape[0]
    R, o = frames(dh, base_R, base_p, theta)
    w = np.zeros(3)
    dw = np.zeros(3)
    acc = -grav.copy()
    F = np.empty((n, 3))
    N = np.empty((n, 3))
    c = np.empty((n, 3))
    for i in range(n):
        z = R[i][:, 2].copy()
        w_prev = w.copy()
        w = w_prev + qd[i] * z
        dw = dw + qdd[i] * z + cross(w_prev, qd[i] * z)
        r = o[i + 1] - o[i]
        acc = acc + cross(dw, r) + cross(w, cross(w, r))
        rc = mv(R[i + 1], com[i])
        c[i] = o[i + 1] + rc
        ac = acc + cross(dw, rc) + cross(w, cross(w, rc))
        Iw = rotate_inertia(R[i + 1], inertia[i])
        F[i] = mass[i] * ac
        N[i] = mv(Iw, dw) + cross(w, mv(Iw, w))
    tau = np.empty(n)
    f = np.zeros(3)
    m = np.zeros(3)  # moment about the distal origin o_{i+1}
    for i in range(n - 1, -1, -1):
        # shift child wrench from o_{i+1} to o_i and add this link's wrench
        m = m + cross(o[i + 1] - o[i], f) + N[i] + cross(c[i] - o[i], F[i])
        f = f + F[i]
        tau[i] = m[0] * R[i, 0, 2] + m[1] * R[i, 1, 2] + m[2] * R[i, 2, 2]
    return tau


@njit(cache=True)
def crba(dh, mass, com, inertia, base_R, base_p, theta):
    """Joint-space inertia matrix by composite rigid bodies."""
    n = dh.shape[0]
    R, o = frames(dh, base_R, base_p, theta)
    # composite mass, COM and inertia (about composite COM) of links j..n-1
    Mc = np.zeros(n)
    cc = np.zeros((n, 3))
    Ic = np.zeros((n, 3, 3))
    for j in range(n - 1, -1, -1):
        mj = mass[j]
        cj = o[j + 1] + mv(R[j + 1], com[j])
        Ij = rotate_inertia(R[j + 1], inertia[j])
        if j == n - 1:
            Mc[j] = mj
            cc[j] = cj
            Ic[j] = Ij
        else:
            M = Mc[j + 1] + mj
            cnew = (Mc[j + 1] * cc[j + 1] + mj * cj) / M
            Ic[j] = Ij + _shift(mj, cj - cnew) + Ic[j + 1] + _shift(Mc[j + 1], cc[j + 1] - cnew)
            Mc[j] = M
            cc[j] = cnew
    H = np.zeros((n, n))
    for j in range(n):
        zj = R[j][:, 2].copy()
        f = Mc[j] * cross(zj, cc[j] - o[j])
        nc = mv(Ic[j], zj)  # moment about the composite COM
        for i in range(j + 1):
            zi = R[i][:, 2].copy()
            mi = nc + cross(cc[j] - o[i], f)
            H[i, j] = mi[0] * zi[0] + mi[1] * zi[1] + mi[2] * zi[2]
            H[j, i] = H[i, j]
    return H


@njit(cache=True)
def _shift(m, r):
    """Parallel-axis term ``m (|r|² I - r rᵀ)``."""
    out = np.empty((3, 3))
    for a in range(3):
        for b in range(3):
            out[a, b] = -m * r[a] * r[b]
    rr = r[0] * r[0] + r[1] * r[1] + r[2] * r[2]
    for k in range(3):
        out[k, k] += m * rr
    return out


@njit(cache=True)
def dH_dtheta(dh, mass, com, inertia, base_R, base_p, theta, h):
    """Central-difference ``∂H/∂θ_k`` stacked as ``out[k]``."""
    n = dh.shape[0]
    out = np.empty((n, n, n))
    for k in range(n):
        tp = theta.copy()
        tm = theta.copy()
        tp[k] += h
        tm[k] -= h
        out[k] = (crba(dh, mass, com, inertia, base_R, base_p, tp)
                  - crba(dh, mass, com, inertia, base_R, base_p, tm)) / (2.0 * h)
    return out


@njit(cache=True)
def christoffel_C(dH, qd):
    """``C_kj = Σ_i ½(∂_i H_kj + ∂_j H_ki - ∂_k H_ij) θ̇_i``."""
    n = qd.shape[0]
    C = np.zeros((n, n))
    for k in range(n):
        for j in range(n):
            s = 0.0
            for i in range(n):
                s += 0.5 * (dH[i, k, j] + dH[j, k, i] - dH[k, i, j]) * qd[i]
            C[k, j] = s
    return C


@njit(cache=True)
def forward_dynamics(dh, mass, com, inertia, base_R, base_p, grav, theta, qd, tau):
    n = dh.shape[0]
    H = crba(dh, mass, com, inertia, base_R, base_p, theta)
    bias = rnea(dh, mass, com, inertia, base_R, base_p, grav, theta, qd, np.zeros(n))
    return np.linalg.solve(H, tau - bias)


@njit(cache=True)
def rk4_free(dh, mass, com, inertia, base_R, base_p, grav, theta, qd, tau, dt):
    """Classical RK4 on the unconstrained dynamics with constant ``tau``."""
    a1 = forward_dynamics(dh, mass, com, inertia, base_R, base_p, grav, theta, qd, tau)
    t2 = theta + 0.5 * dt * qd
    v2 = qd + 0.5 * dt * a1
    a2 = forward_dynamics(dh, mass, com, inertia, base_R, base_p, grav, t2, v2, tau)
    t3 = theta + 0.5 * dt * v2
    v3 = qd + 0.5 * dt * a2
    a3 = forward_dynamics(dh, mass, com, inertia, base_R, base_p, grav, t3, v3, tau)
    t4 = theta + dt * v3
    v4 = qd + dt * a3
    a4 = forward_dynamics(dh, mass, com, inertia, base_R, base_p, grav, t4, v4, tau)
    th = theta + (dt / 6.0) * (qd + 2.0 * v2 + 2.0 * v3 + v4)
    om = qd + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    return th, om
