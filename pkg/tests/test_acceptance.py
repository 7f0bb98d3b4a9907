"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Runtimes are measured after a short warm-up run so that one-off JIT compilation
(cached on disk after the first session) is not billed to the criterion.
"""
import csv
import time

import numpy as np
import pytest

from quatslide import cli
from quatslide import control as C
from quatslide import dynamics as D
from quatslide import quat as Q
from quatslide import sim
from quatslide import sliding as S
from quatslide import trajectory as T

from conftest import random_config, random_unit_quat


@pytest.fixture
def report(capsys):
    def _report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number} {title}: {detail}")
        assert ok, detail
    return _report


@pytest.fixture(scope="module")
def warm():
    cfg, _, _ = sim.config_from_dict(cli._demo_doc("tracking"))
    cfg.duration = 0.01
    sim.run(cfg)


def qe_start(x0, axis=(1.0, 2.0, -0.5)):
    axis = np.asarray(axis) / np.linalg.norm(axis)
    return np.concatenate(([np.sqrt(1 - x0)], np.sqrt(x0) * axis))


def test_c1_closed_form_decay(report):
    lam = 2.0
    t0 = time.perf_counter()
    ts, qe = S.qe_flow_on_manifold(qe_start(0.75), lam, 1e-3, 5.0)
    elapsed = time.perf_counter() - t0
    err = np.max(np.abs(np.sum(qe[:, 1:] ** 2, axis=1) - S.lemma1_solution(0.75, 2 * lam, ts)))
    report(1, "closed-form decay match", err <= 1e-4 and elapsed < 1.0,
           f"max |x - x_closed| = {err:.3e} (tol 1e-4), runtime {elapsed:.2f} s (limit 1 s)")


def test_c2_exponential_envelope(report):
    lam = 2.0
    ts, qe = S.qe_flow_on_manifold(qe_start(0.75), lam, 1e-3, 5.0)
    margin = np.max(np.linalg.norm(qe[:, 1:], axis=1) - 2 * np.exp(-lam * ts))
    report(2, "exponential envelope", margin <= 1e-6,
           f"max(|q_vec| - 2 exp(-lam t)) = {margin:.3e} (must be <= 1e-6)")


def test_c3_global_frame_equivalence(report):
    lam = 2.0
    q0 = Q.normalize([0.3, -0.2, 0.9, 0.25])
    axis, rate = np.array([0.2, -1.0, 0.5]), 0.7

    def desired(t):
        return Q.hamilton_product(Q.from_axis_angle(axis, rate * t), q0)

    q_e0 = qe_start(0.6)
    _, loc = S.qe_flow_on_manifold(q_e0, lam, 1e-3, 5.0, frame=S.LOCAL)
    _, glo = S.qe_flow_on_manifold(q_e0, lam, 1e-3, 5.0, frame=S.GLOBAL, desired=desired)
    diff = np.max(np.abs(np.linalg.norm(loc[:, 1:], axis=1) - np.linalg.norm(glo[:, 1:], axis=1)))
    report(3, "global-frame equivalence", diff <= 1e-9,
           f"max pointwise |q_vec| difference = {diff:.3e} (tol 1e-9), rotating q_d")


def test_c4_equator_escape(report):
    details, ok = [], True
    for lam in (0.5, 1.0, 2.0, 5.0):
        dt = 1e-3 / lam
        ts, qe = S.qe_flow_on_manifold(np.array([0.0, 0.6, 0.0, 0.8]), lam, dt, 10.0 / lam)
        above = ts[np.abs(qe[:, 0]) > 0.1]
        t_esc = above[0] if len(above) else np.inf
        final = np.linalg.norm(qe[-1, 1:])
        ok &= bool(t_esc <= 0.2 / lam and final < 1e-3)
        details.append(f"lam={lam}: t_escape*lam={t_esc * lam:.3f} final |q_vec|={final:.1e}")
    report(4, "equator escape", ok, "; ".join(details) + " (need t*lam <= 0.2, converged)")


def test_c5_dynamics_self_consistency(model, report, warm):
    rng = np.random.default_rng(555)
    t0 = time.perf_counter()
    assembly = 0.0
    for _ in range(1000):
        th = rng.uniform(-np.pi, np.pi, 6)
        thd, thdd = rng.normal(size=6), rng.normal(size=6)
        lhs = D.rnea(model, th, thd, thdd)
        rhs = (D.mass_matrix(model, th) @ thdd + D.coriolis_matrix(model, th, thd, method="fd") @ thd
               + D.gravity_vector(model, th))
        assembly = max(assembly, np.max(np.abs(lhs - rhs)))
    skew = 0.0
    h = 1e-6
    for _ in range(1000):
        th, thd, z = rng.uniform(-np.pi, np.pi, 6), rng.normal(size=6), rng.normal(size=6)
        Hdot = (D.mass_matrix(model, th + h * thd) - D.mass_matrix(model, th - h * thd)) / (2 * h)
        N = Hdot - 2 * D.coriolis_matrix(model, th, thd, method="fd")
        skew = max(skew, abs(z @ N @ z) / (z @ z * np.linalg.norm(thd)))
    # free fall from rest; drift relative to the peak kinetic energy (independent of the PE datum)
    th, thd = np.array([0.5, -0.45, 0.6, 0.5, -0.6, 0.8]), np.zeros(6)
    e0 = D.kinetic_energy(model, th, thd) + D.potential_energy(model, th)
    drift, ke_max = 0.0, 0.0
    for _ in range(20_000):
        th, thd = sim.rk4_step(model, th, thd, np.zeros(6), 1e-4)
        ke = D.kinetic_energy(model, th, thd)
        ke_max = max(ke_max, ke)
        drift = max(drift, abs(ke + D.potential_energy(model, th) - e0))
    rel = drift / ke_max
    elapsed = time.perf_counter() - t0
    ok = assembly <= 1e-5 and skew <= 1e-5 and rel <= 1e-5 and elapsed < 30
    report(5, "dynamics self-consistency", ok,
           f"rnea vs H/C/g {assembly:.2e} (1e-5); skew {skew:.2e} (1e-5); "
           f"energy drift {rel:.2e} of peak KE {ke_max:.1f} J (1e-5); runtime {elapsed:.1f} s (30 s)")


def test_c6_tracking_closed_loop(report, warm):
    cfg, _, _ = sim.config_from_dict(cli._demo_doc("tracking"))
    t0 = time.perf_counter()
    res = sim.run(cfg)
    elapsed = time.perf_counter() - t0
    m = res.metrics
    lam, sigma = cfg.controller.lam, cfg.controller.sigma
    ok = (res.error is None and cfg.duration == 6.0
          and m.final_p_err <= 1e-3 and m.final_qvec_err <= 1e-3
          and abs(m.fitted_rate_position - sigma) <= 0.1 * sigma
          and abs(m.fitted_rate_orientation - lam) <= 0.1 * lam
          and m.max_identity_residual <= 1e-9 and elapsed < 10)
    report(6, "tracking closed loop", ok,
           f"|p_e|={m.final_p_err:.2e} m, |q_vec_e|={m.final_qvec_err:.2e} at t=6 s (1e-3); "
           f"rates {m.fitted_rate_position:.3f}/{m.fitted_rate_orientation:.3f} vs {sigma}/{lam} (10%); "
           f"identity {m.max_identity_residual:.1e} (1e-9); runtime {elapsed:.1f} s (10 s)")


def test_c7_unwinding_ab(report, warm):
    t0 = time.perf_counter()
    out = {}
    for name in ("unwinding-local", "unwinding-naive"):
        cfg, _, _ = sim.config_from_dict(cli._demo_doc(name))
        out[name] = sim.run(cfg)
    elapsed = time.perf_counter() - t0
    loc, naive = out["unwinding-local"].metrics, out["unwinding-naive"].metrics
    ok = (loc.path_length < np.pi and loc.final_sign == -1 and naive.path_length > 5.0
          and out["unwinding-local"].error is None and out["unwinding-naive"].error is None
          and elapsed < 10)
    report(7, "unwinding A/B", ok,
           f"sliding: path {loc.path_length:.4f} rad, final_sign {loc.final_sign:+d}; "
           f"naive: path {naive.path_length:.4f} rad; runtime {elapsed:.1f} s (10 s)")


def test_c8_double_cover_invariance(model, report):
    rng = np.random.default_rng(888)
    worst = {}
    for mode in (C.TASK_LOCAL, C.TASK_GLOBAL):
        cfg = C.ControllerConfig(mode, 2.0, 2.0, C.default_gain(model))
        w = 0.0
        for _ in range(1000):
            th, thd = random_config(model, rng), rng.normal(size=6)
            ref = T.TaskReference(rng.normal(scale=0.3, size=3), rng.normal(scale=0.2, size=3), np.zeros(3),
                                  random_unit_quat(rng), rng.normal(scale=0.5, size=3), np.zeros(3),
                                  "global" if mode == C.TASK_GLOBAL else "local")
            ee = D.end_effector_state(model, th, thd)
            flip = D.EndEffectorState(ee.p, -ee.q, ee.v, ee.omega)
            prev = rng.normal(size=6)
            a = C.ik_torque(model, th, thd, ref, cfg, prev, 1e-3, ee=ee).tau
            b = C.ik_torque(model, th, thd, ref, cfg, prev, 1e-3, ee=flip).tau
            w = max(w, np.max(np.abs(a - b)))
        worst[mode] = w
    ok = all(v <= 1e-9 for v in worst.values())
    report(8, "double-cover invariance", ok,
           ", ".join(f"{k}: max |tau(q) - tau(-q)| = {v:.1e}" for k, v in worst.items()) + " (1e-9)")


def test_c9_singularity_abort(tmp_path, report, warm):
    code = cli.main(["demo", "singular", "--out", str(tmp_path), "--no-figures"])
    with open(tmp_path / "trace.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    well_formed = rows[0] == sim.COLUMNS and all(len(r) == len(sim.COLUMNS) for r in rows)
    body = np.array(rows[1:], dtype=float)
    t_end = body[-1, 0]
    abort_row = np.all(np.isnan(body[-1, sim.COL["tau1"]:sim.COL["tau6"] + 1]))
    ok = code == 2 and well_formed and t_end < 8.0 and abort_row
    report(9, "singularity abort", ok,
           f"exit code {code}; {len(rows) - 1} rows, last t={t_end:.3f} s of 8 s, "
           f"cond={body[-1, sim.COL['cond_J']]:.3e}; well-formed={well_formed}, abort record={abort_row}")
