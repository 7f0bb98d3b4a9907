"""Fixed-step closed-loop simulation, scenario files and run outputs.

The controller is evaluated once per step and its torque is held constant
while RK4 integrates ``H θ̈ + C θ̇ + g = τ`` over the step.
"""
import csv
import json
import logging
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from . import control as C
from . import dynamics as D
from . import quat as Q
from . import sliding as S
from . import trajectory as T
from .errors import ConfigError, NumericalDivergence, QuatSlideError, SingularJacobian
from .integrate import rk4

log = logging.getLogger(__name__)

DEFAULT_DT = 1e-3
DEFAULT_DURATION = 10.0
DEFAULT_FIT_SKIP = 1.0
FIT_WINDOW = (1e-6, 0.5)

COLUMNS = (
    ["t"]
    + [f"theta{i}" for i in range(1, 7)]
    + [f"theta_dot{i}" for i in range(1, 7)]
    + [f"tau{i}" for i in range(1, 7)]
    + ["p_x", "p_y", "p_z", "pd_x", "pd_y", "pd_z"]
    + ["q_w", "q_x", "q_y", "q_z", "qd_w", "qd_x", "qd_y", "qd_z", "qe_w", "qe_x", "qe_y", "qe_z"]
    + ["sp_x", "sp_y", "sp_z", "sq_x", "sq_y", "sq_z"]
    + ["qvec_e_sq", "cond_J"]
)
COL = {name: i for i, name in enumerate(COLUMNS)}


@dataclass
class SimConfig:
    model: D.ManipulatorModel
    controller: C.ControllerConfig
    trajectory: object  # TrajectorySpec, or JointTrajectory for joint mode
    theta0: np.ndarray
    theta_dot0: np.ndarray
    dt: float = DEFAULT_DT
    duration: float = DEFAULT_DURATION
    log_stride: int = 1
    fit_skip: float = DEFAULT_FIT_SKIP
    name: str = "scenario"

    def __post_init__(self):
        if not 0 < self.dt <= 1e-2:
            raise ConfigError(f"dt must lie in (0, 1e-2], got {self.dt}")
        if not self.duration >= self.dt:
            raise ConfigError("duration must be at least one step")
        if int(self.log_stride) != self.log_stride or self.log_stride < 1:
            raise ConfigError("log_stride must be a positive integer")
        if self.trajectory.duration < self.duration * (1 - 1e-12):
            raise ConfigError("trajectory is shorter than the simulation")
        self.theta0 = np.asarray(self.theta0, dtype=float).reshape(6)
        self.theta_dot0 = np.asarray(self.theta_dot0, dtype=float).reshape(6)


@dataclass
class RunMetrics:
    fitted_rate_position: float
    fitted_rate_orientation: float
    final_p_err: float
    final_qvec_err: float
    path_length: float
    final_sign: int
    aborted: str = None
    max_identity_residual: float = 0.0
    max_quat_norm_err: float = 0.0
    steps: int = 0

    def to_json(self):
        return {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                for k, v in asdict(self).items()}


@dataclass
class SimResult:
    trace: np.ndarray
    metrics: RunMetrics
    error: QuatSlideError = None

    @property
    def exit_code(self):
        return 0 if self.error is None else self.error.exit_code

    def column(self, name):
        return self.trace[:, COL[name]]


def rk4_step(model, theta, theta_dot, tau, dt, locked=None):
    """Advance ``(θ, θ̇)`` one step with zero-order-hold torque."""
    n = model.n
    if locked is None:
        dh, m, c, I, Rb, pb = model._inertial()
        th, om = _kernels.rk4_free(dh, m, c, I, Rb, pb, model.gravity, np.asarray(theta, dtype=float),
                            np.asarray(theta_dot, dtype=float), np.asarray(tau, dtype=float), dt)
        if not (np.all(np.isfinite(th)) and np.all(np.isfinite(om))):
            raise NumericalDivergence("non-finite state after RK4 step")
        return th, om

    def f(_t, y):
        return np.concatenate((y[n:], D.forward_dynamics(model, y[:n], y[n:], tau, locked)))

    y = rk4(f, 0.0, np.concatenate((theta, theta_dot)), dt)
    return y[:n], y[n:]


def _record(t, theta, theta_dot, tau, ee, p_d, q_d, q_e, sv, cond):
    return np.concatenate((
        [t], theta, theta_dot, tau, ee.p, p_d, ee.q, q_d, q_e, sv[:3], sv[3:],
        [q_e[1:] @ q_e[1:], cond],
    ))


def run(cfg):
    """Simulate ``cfg``.  Aborts are reported in the result, not raised."""
    model, ctrl = cfg.model, cfg.controller
    n_steps = int(round(cfg.duration / cfg.dt))
    theta, theta_dot = cfg.theta0.copy(), cfg.theta_dot0.copy()
    joint_mode = ctrl.mode == C.JOINT

    rows = []
    prev_r = None
    q_prev = None
    qd_prev = None
    path = 0.0
    speed_prev = None
    max_resid = 0.0
    max_qnorm = 0.0
    error = None
    last = None

    for k in range(n_steps + 1):
        t = k * cfg.dt
        ee = D.end_effector_state(model, theta, theta_dot, q_prev)
        q_prev = ee.q
        speed = float(np.linalg.norm(ee.omega))
        if speed_prev is not None:
            path += 0.5 * (speed + speed_prev) * cfg.dt
        speed_prev = speed
        max_qnorm = max(max_qnorm, abs(np.linalg.norm(ee.q) - 1.0))
        try:
            if joint_mode:
                th_d, thd_d, thdd_d = cfg.trajectory.sample(t)
                tau = C.slotine_li_joint(model, theta, theta_dot, th_d, thd_d, thdd_d, ctrl)
                p_d, q_d = D.forward_kinematics(model, th_d)
                if qd_prev is not None and q_d @ qd_prev < 0:
                    q_d = -q_d
                s_theta = theta_dot - (thd_d - ctrl.lam * (theta - th_d))
                J = D.geometric_jacobian(model, theta)
                sv = J @ s_theta
                q_e = S.error_quaternion(q_d, ee.q)
                cond = D.condition_number(J)
            else:
                ref = T.sample(cfg.trajectory, t)
                p_d, q_d = ref.p_d, ref.q_d
                out = C.ik_torque(model, theta, theta_dot, ref, ctrl, prev_r, cfg.dt, ee=ee)
                tau, q_e, cond = out.tau, out.q_e, out.condition
                sv = out.sliding.stacked()
                prev_r = out.reference.theta_dot_r
                max_resid = max(max_resid, out.identity_residual)
            qd_prev = q_d
        except (SingularJacobian, NumericalDivergence) as exc:
            error = exc
            if joint_mode:
                p_d, q_d = last[0], last[1]
            else:
                ref = T.sample(cfg.trajectory, t)
                p_d, q_d = ref.p_d, ref.q_d
            q_e = S.error_quaternion(q_d, ee.q)
            nan6 = np.full(6, np.nan)
            cond = getattr(exc, "condition", float("nan"))
            rows.append(_record(t, theta, theta_dot, nan6, ee, p_d, q_d, q_e, nan6, cond))
            log.warning("run %s aborted at t=%.4f: %s", cfg.name, t, exc)
            break
        last = (p_d, q_d)
        if k % cfg.log_stride == 0 or k == n_steps:
            rows.append(_record(t, theta, theta_dot, tau, ee, p_d, q_d, q_e, sv, cond))
        if k == n_steps:
            break
        try:
            theta, theta_dot = rk4_step(model, theta, theta_dot, tau, cfg.dt)
        except NumericalDivergence as exc:
            error = exc
            log.warning("run %s diverged at t=%.4f", cfg.name, t)
            break

    trace = np.array(rows)
    metrics = compute_metrics(trace, cfg, path, error, max_resid, max_qnorm, k)
    return SimResult(trace, metrics, error)


def compute_metrics(trace, cfg, path_length, error, max_resid, max_qnorm, steps):
    ok = np.all(np.isfinite(trace[:, COL["tau1"]:COL["tau6"] + 1]), axis=1)
    tr = trace[ok] if ok.any() else trace
    t = tr[:, COL["t"]]
    p_err = np.linalg.norm(tr[:, COL["p_x"]:COL["p_z"] + 1] - tr[:, COL["pd_x"]:COL["pd_z"] + 1], axis=1)
    qvec = np.sqrt(tr[:, COL["qvec_e_sq"]])
    lo, hi = FIT_WINDOW
    q = tr[-1, COL["q_w"]:COL["q_z"] + 1]
    q_d = tr[-1, COL["qd_w"]:COL["qd_z"] + 1]
    return RunMetrics(
        fitted_rate_position=S.fit_decay_rate(t, p_err, lo, hi, cfg.fit_skip),
        fitted_rate_orientation=S.fit_decay_rate(t, qvec, lo, hi, cfg.fit_skip),
        final_p_err=float(p_err[-1]),
        final_qvec_err=float(qvec[-1]),
        path_length=float(path_length),
        final_sign=int(Q.sgn_modified(float(q @ q_d))),
        aborted=None if error is None else f"{type(error).__name__}: {error}",
        max_identity_residual=float(max_resid),
        max_quat_norm_err=float(max_qnorm),
        steps=int(steps),
    )


# --- scenario files -----------------------------------------------------------

def _load_model(spec, base_dir):
    if spec is None or spec == "reference":
        return D.reference_model(), "reference"
    if isinstance(spec, str):
        path = Path(spec)
        if not path.is_absolute():
            path = Path(base_dir) / path
        try:
            return D.load_model(path), str(path)
        except OSError as exc:
            raise ConfigError(f"cannot read model file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if isinstance(spec, dict):
        return D.model_from_dict(spec), "inline"
    raise ConfigError("model must be 'reference', a file path, or an inline model object")


def _gain(doc, model):
    K = doc.get("K")
    if K is None:
        return C.default_gain(model, float(doc.get("K_scale", 20.0)))
    K = np.asarray(K, dtype=float)
    if K.ndim == 0:
        return float(K) * np.eye(6)
    if K.shape == (6,):
        return np.diag(K)
    return K


SCENARIO_BLOCKS = {"name", "sim", "model", "controller", "trajectory", "initial", "outputs"}


def config_from_dict(doc, base_dir="."):
    """Resolve a scenario document.  Returns ``(SimConfig, resolved_doc, outputs)``."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario must be a JSON object")
    extra = set(doc) - SCENARIO_BLOCKS
    if extra:
        raise ConfigError(f"unknown scenario blocks: {sorted(extra)}")
    for block in ("controller", "trajectory", "initial"):
        if block not in doc:
            raise ConfigError(f"scenario missing '{block}' block")
    try:
        simd = doc.get("sim", {})
        dt = float(simd.get("dt", DEFAULT_DT))
        duration = float(simd.get("duration", DEFAULT_DURATION))
        model, model_src = _load_model(doc.get("model"), base_dir)

        cd = doc["controller"]
        ctrl = C.ControllerConfig(
            mode=cd.get("mode", C.TASK_LOCAL),
            lam=float(cd.get("lambda", 2.0)),
            sigma=float(cd.get("sigma", 2.0)),
            K=_gain(cd, model),
            cond_abort=float(cd.get("cond_abort", C.COND_ABORT)),
        )

        td = doc["trajectory"]
        if ctrl.mode == C.JOINT:
            if td.get("variant") != "joint_sinusoid":
                raise ConfigError("joint mode requires trajectory variant 'joint_sinusoid'")
            traj = T.JointTrajectory(theta0=td["theta0"], duration=float(td.get("duration", duration)),
                                     amplitude=td.get("amplitude", [0.0] * 6),
                                     frequency=float(td.get("frequency", 0.0)))
            traj_doc = {"variant": "joint_sinusoid", "theta0": traj.theta0.tolist(),
                        "duration": traj.duration, "amplitude": traj.amplitude.tolist(),
                        "frequency": traj.frequency}
        else:
            anchor = None
            if "anchor_theta" in td:
                anchor = D.forward_kinematics(model, np.asarray(td["anchor_theta"], dtype=float))
            traj = T.spec_from_dict(td, duration, anchor)
            traj_doc = T.spec_to_dict(traj)

        ini = doc["initial"]
        if "theta" in ini:
            theta0 = np.asarray(ini["theta"], dtype=float)
        elif "pose" in ini:
            seed = np.asarray(ini.get("seed", [0.0] * 6), dtype=float)
            pose = ini["pose"]
            theta0, resid = T.solve_ik(model, np.asarray(pose["p"], float), Q.normalize(pose["q"]), seed)
            if resid > 1e-8:
                raise ConfigError(f"initial pose unreachable (IK residual {resid:.3g})")
        else:
            raise ConfigError("initial block needs 'theta' or 'pose'")
        theta_dot0 = np.asarray(ini.get("theta_dot", [0.0] * 6), dtype=float)
        if theta0.shape != (6,) or theta_dot0.shape != (6,):
            raise ConfigError("initial theta and theta_dot must have 6 entries")

        cfg = SimConfig(
            model=model, controller=ctrl, trajectory=traj, theta0=theta0, theta_dot0=theta_dot0,
            dt=dt, duration=duration, log_stride=int(simd.get("log_stride", 1)),
            fit_skip=float(simd.get("fit_skip", DEFAULT_FIT_SKIP)), name=str(doc.get("name", "scenario")),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario: {type(exc).__name__}: {exc}") from exc

    outputs = dict(doc.get("outputs", {}))
    resolved = {
        "name": cfg.name,
        "sim": {"dt": cfg.dt, "duration": cfg.duration, "log_stride": cfg.log_stride, "fit_skip": cfg.fit_skip},
        "model": {"source": model_src, **D.model_to_dict(model)},
        "controller": {"mode": ctrl.mode, "lambda": ctrl.lam, "sigma": ctrl.sigma,
                       "K": ctrl.K.tolist(), "cond_abort": ctrl.cond_abort},
        "trajectory": traj_doc,
        "initial": {"theta": cfg.theta0.tolist(), "theta_dot": cfg.theta_dot0.tolist()},
        "outputs": {"dir": outputs.get("dir"), "figures": bool(outputs.get("figures", True))},
    }
    return cfg, resolved, outputs


def load_scenario(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(doc, base_dir=path.parent)


def write_trace(path, trace):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COLUMNS)
        for row in trace:
            w.writerow([format(float(x), ".17g") for x in row])


def read_trace(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if tuple(header) != tuple(COLUMNS):
        raise ConfigError(f"{path}: unexpected CSV header")
    return np.atleast_2d(np.loadtxt(path, delimiter=",", skiprows=1))


def write_outputs(result, out_dir, resolved, figures=True):
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    write_trace(out / "trace.csv", result.trace)
    with open(out / "metrics.json", "w") as fh:
        json.dump(result.metrics.to_json(), fh, indent=2)
    with open(out / "scenario.resolved.json", "w") as fh:
        json.dump(resolved, fh, indent=2)
    if figures:
        from .plotting import render_report
        render_report(result.trace, result.metrics, out)
    return out
