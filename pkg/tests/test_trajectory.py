import numpy as np
import pytest

from quatslide import cli
from quatslide import dynamics as D
from quatslide import quat as Q
from quatslide import sim
from quatslide import trajectory as T
from quatslide.errors import ConfigError, OutOfRange, UnreachableTrajectory

TASK_DEMOS = ["setpoint", "tracking", "global-frame", "unwinding-local", "unwinding-naive"]


def demo_spec(name):
    cfg, _, _ = sim.config_from_dict(cli._demo_doc(name))
    return cfg


def specs_under_test():
    p0, q0 = np.array([0.3, 0.1, 0.4]), Q.normalize([0.2, 0.9, -0.3, 0.1])
    out = [demo_spec(n).trajectory for n in TASK_DEMOS]
    out += [
        T.TrajectorySpec("sinusoid", 4.0, p0, q0, amplitude=[0.05, 0.1, 0.02], frequency=[0.5, 0.2, 1.0],
                         phase=[0.1, 0.2, 0.3], axis=[1, 2, 3], rate=0.7, frame="global"),
        T.TrajectorySpec("geodesic_slew", 3.0, p0, q0, axis=[0, 1, 1], angle=2.5),
        T.TrajectorySpec("geodesic_slew", 3.0, p0, q0, axis=[0, 1, 1], angle=-2.5, frame="global"),
    ]
    return out


def test_setpoint_is_constant():
    p0, q0 = np.array([0.1, 0.2, 0.3]), Q.from_axis_angle([1, 0, 0], 0.4)
    spec = T.TrajectorySpec("setpoint", 2.0, p0, q0)
    for t in (0.0, 0.7, 2.0):
        r = T.sample(spec, t)
        np.testing.assert_array_equal(r.p_d, p0)
        np.testing.assert_allclose(r.q_d, q0, atol=1e-15)
        for v in (r.v_d, r.a_d, r.omega_d, r.alpha_d):
            assert not v.any()


def test_constant_axis_rotation_example():
    spec = T.TrajectorySpec("sinusoid", 5.0, np.zeros(3), Q.IDENTITY, axis=[0, 0, 1], rate=0.5)
    r = T.sample(spec, 2.0)
    np.testing.assert_allclose(r.q_d, Q.from_axis_angle([0, 0, 1], 1.0), atol=1e-15)
    np.testing.assert_allclose(r.omega_d, [0, 0, 0.5])


def test_out_of_range():
    spec = T.TrajectorySpec("setpoint", 2.0, np.zeros(3), Q.IDENTITY)
    with pytest.raises(OutOfRange):
        T.sample(spec, -0.1)
    with pytest.raises(OutOfRange):
        T.sample(spec, 2.1)


def test_spec_validation():
    with pytest.raises(ConfigError):
        T.TrajectorySpec("spline", 1.0, np.zeros(3), Q.IDENTITY)
    with pytest.raises(ConfigError):
        T.TrajectorySpec("setpoint", 0.0, np.zeros(3), Q.IDENTITY)
    with pytest.raises(ConfigError):
        T.TrajectorySpec("sinusoid", 1.0, np.zeros(3), Q.IDENTITY, frequency=[-1, 0, 0])
    with pytest.raises(ConfigError):
        T.spec_from_dict({"variant": "setpoint", "p0": [0, 0, 0], "q0": [1, 0, 0, 0], "wobble": 1}, 1.0)


@pytest.mark.parametrize("spec", specs_under_test(), ids=lambda s: f"{s.variant}-{s.frame}")
def test_fd_consistency(spec):
    rng = np.random.default_rng(3)
    h = 1e-6
    for t in rng.uniform(h, spec.duration - h, 1000):
        r0, r, r1 = T.sample(spec, t - h), T.sample(spec, t), T.sample(spec, t + h)
        fd = (r1.q_d - r.q_d) / h
        if spec.frame == "local":
            analytic = Q.qdot_local(r.q_d, r.omega_d)
        else:
            analytic = Q.qdot_global(r.q_d, r.omega_d)
        assert np.max(np.abs(fd - analytic)) <= 1e-6
        assert np.max(np.abs((r1.p_d - r0.p_d) / (2 * h) - r.v_d)) <= 1e-6
        assert np.max(np.abs((r1.v_d - r0.v_d) / (2 * h) - r.a_d)) <= 1e-6
        assert np.max(np.abs((r1.omega_d - r0.omega_d) / (2 * h) - r.alpha_d)) <= 1e-6


@pytest.mark.parametrize("spec", specs_under_test(), ids=lambda s: f"{s.variant}-{s.frame}")
def test_desired_quaternion_continuous(spec):
    dt = 1e-2
    ts = np.arange(0, spec.duration - dt, dt)
    for t in ts:
        assert T.sample(spec, t).q_d @ T.sample(spec, t + dt).q_d > 0


def test_local_and_global_omega_views():
    spec = T.TrajectorySpec("sinusoid", 2.0, np.zeros(3), Q.normalize([1, 2, 3, 4]), axis=[1, 0, 0], rate=1.0)
    r = T.sample(spec, 0.5)
    np.testing.assert_allclose(r.omega_d_global(), Q.to_rotation_matrix(r.q_d) @ r.omega_d, atol=1e-15)
    np.testing.assert_array_equal(r.omega_d_local(), r.omega_d)


def test_ik_recovers_configuration(model, rng):
    th = np.array([0.4, -0.6, 0.9, 0.3, -0.5, 1.0])
    p, q = D.forward_kinematics(model, th)
    sol, resid = T.solve_ik(model, p, q, th + rng.uniform(-0.1, 0.1, 6))
    assert resid < 1e-10
    p2, q2 = D.forward_kinematics(model, sol)
    np.testing.assert_allclose(p2, p, atol=1e-10)
    assert Q.same_rotation(q2, q, tol=1e-9)


def test_reachability_home_setpoint(model):
    p, q = D.forward_kinematics(model, np.zeros(6))
    rep = T.reachability_check(model, T.TrajectorySpec("setpoint", 1.0, p, q), n_samples=5)
    assert rep.ok
    home = D.condition_number(D.geometric_jacobian(model, np.zeros(6)))
    assert abs(rep.max_condition - home) <= 1e-9 * home


def test_reachability_far_target(model):
    spec = T.TrajectorySpec("setpoint", 1.0, np.array([10.0, 0.0, 0.0]), Q.IDENTITY)
    with pytest.raises(UnreachableTrajectory):
        T.reachability_check(model, spec, n_samples=3)


@pytest.mark.parametrize("name", TASK_DEMOS)
def test_shipped_demos_well_conditioned(name):
    cfg = demo_spec(name)
    rep = T.reachability_check(cfg.model, cfg.trajectory, n_samples=50, theta_seed=cfg.theta0)
    assert rep.ok and rep.max_condition < 1e3


def test_singular_demo_flagged():
    cfg = demo_spec("singular")
    rep = T.reachability_check(cfg.model, cfg.trajectory, n_samples=5, theta_seed=cfg.theta0)
    assert not rep.ok


def test_joint_trajectory_derivatives():
    jt = T.JointTrajectory(np.arange(6.0), 3.0, amplitude=np.full(6, 0.2), frequency=0.5)
    h = 1e-6
    for t in (0.0, 0.4, 2.2):
        th, thd, thdd = jt.sample(t)
        th1, thd1, _ = jt.sample(t + h)
        np.testing.assert_allclose((th1 - th) / h, thd, atol=1e-6)
        np.testing.assert_allclose((thd1 - thd) / h, thdd, atol=1e-5)
    with pytest.raises(OutOfRange):
        jt.sample(3.5)
