"""Report figures rendered from a simulation trace.

Figures are written next to ``trace.csv``; the CSV stays the plotting contract,
so every figure here can be regenerated from it with ``quatslide plot``.
"""
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .sim import COL  # noqa: E402

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 6.4

params = {
    "axes.labelsize": 10,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.figsize": [fig_width, fig_width * golden_mean],
    "figure.dpi": 120,
    "lines.linewidth": 1.2,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _cols(trace, first, last):
    return trace[:, COL[first]:COL[last] + 1]


def _finite(trace):
    return trace[np.all(np.isfinite(trace[:, COL["tau1"]:COL["tau6"] + 1]), axis=1)]


def plot_errors(trace, metrics=None, ax=None):
    """Tracking errors on a log scale, with fitted decay lines when available."""
    ax = ax or plt.gca()
    t = trace[:, COL["t"]]
    pe = np.linalg.norm(_cols(trace, "p_x", "p_z") - _cols(trace, "pd_x", "pd_z"), axis=1)
    qv = np.sqrt(trace[:, COL["qvec_e_sq"]])
    ax.semilogy(t, np.maximum(pe, 1e-16), label=r"$\|p_e\|$ [m]")
    ax.semilogy(t, np.maximum(qv, 1e-16), label=r"$\|\vec q_e\|$")
    if metrics is not None:
        for val, y, style in ((metrics.fitted_rate_position, pe, "C0"),
                              (metrics.fitted_rate_orientation, qv, "C1")):
            if val is not None and np.isfinite(val) and y[0] > 0:
                ax.semilogy(t, y[0] * np.exp(-val * t), "--", color=style, lw=0.8,
                            label=f"fit rate {val:.3f} 1/s")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("error")
    ax.set_ylim(bottom=max(1e-12, ax.get_ylim()[0]))
    ax.legend(loc="upper right")
    return ax


def plot_sliding(trace, ax=None):
    ax = ax or plt.gca()
    tr = _finite(trace)
    t = tr[:, COL["t"]]
    ax.semilogy(t, np.linalg.norm(_cols(tr, "sp_x", "sp_z"), axis=1) + 1e-300, label=r"$\|s_p\|$")
    ax.semilogy(t, np.linalg.norm(_cols(tr, "sq_x", "sq_z"), axis=1) + 1e-300, label=r"$\|s_q\|$")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("sliding variable")
    ax.legend(loc="upper right")
    return ax


def plot_quaternion(trace, ax=None):
    ax = ax or plt.gca()
    t = trace[:, COL["t"]]
    q = _cols(trace, "q_w", "q_z")
    qd = _cols(trace, "qd_w", "qd_z")
    for i, name in enumerate("wxyz"):
        ax.plot(t, q[:, i], color=f"C{i}", label=f"$q_{name}$")
        ax.plot(t, qd[:, i], "--", color=f"C{i}", lw=0.8)
    ax.set_xlabel("t [s]")
    ax.set_ylabel("quaternion (dashed: desired)")
    ax.legend(loc="upper right", ncol=4)
    return ax


def plot_torques(trace, ax=None):
    ax = ax or plt.gca()
    tr = _finite(trace)
    t = tr[:, COL["t"]]
    for i in range(6):
        ax.plot(t, tr[:, COL[f"tau{i + 1}"]], label=rf"$\tau_{i + 1}$")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("torque [N m]")
    ax.legend(loc="upper right", ncol=3)
    return ax


FIGURES = {
    "errors.png": plot_errors,
    "sliding.png": plot_sliding,
    "quaternion.png": plot_quaternion,
    "torques.png": plot_torques,
}


def render_report(trace, metrics, out_dir):
    """Write one PNG per entry of :data:`FIGURES` into ``out_dir``."""
    written = []
    with plt.rc_context(params):
        for name, fn in FIGURES.items():
            fig, ax = plt.subplots()
            if fn is plot_errors:
                fn(trace, metrics, ax=ax)
            else:
                fn(trace, ax=ax)
            fig.tight_layout()
            path = f"{out_dir}/{name}"
            fig.savefig(path)
            plt.close(fig)
            written.append(path)
    return written
