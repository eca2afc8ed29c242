"""Run reports: delimited log export, metrics summary, rendered figures.

The CSV is the data contract: fixed column order, shortest round-trip
float formatting, time column written as exact grid multiples.  Metrics
and figures are derived views; figures are rendered to files next to the
CSV (matplotlib is imported lazily so batch users without a display stack
configured pay nothing).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .engine import ChannelUnderflow, SimLog, decay_rate_estimate


def write_csv(log: SimLog, path) -> Path:
    path = Path(path)
    cols = [log.csv_column(name) for name in log.csv_fields]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(log.csv_fields) + "\n")
        for i in range(log.t.shape[0]):
            cells = []
            for name, col in zip(log.csv_fields, cols):
                cells.append(str(int(col[i])) if name == "sigma" else repr(float(col[i])))
            fh.write(",".join(cells) + "\n")
    return path


def read_csv(path) -> SimLog:
    """Inverse of write_csv.

    The pre-noise input is not a CSV column; it is reconstructed as
    u - n, which is exact whenever noise was disabled.
    """
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != SimLog.csv_fields:
            raise ValueError(f"unexpected CSV header {header}")
        data = np.array([[float(c) for c in line.strip().split(",")]
                         for line in fh if line.strip()])
    col = {name: data[:, i] for i, name in enumerate(SimLog.csv_fields)}
    u = np.column_stack([col["u1"], col["u2"], col["u3"]])
    noise = np.column_stack([col["n1"], col["n2"], col["n3"]])
    return SimLog(
        t=col["t"],
        state=np.column_stack([col["x"], col["y"], col["theta"], col["v1"], col["v2"]]),
        u_cmd=u - noise,
        u=u,
        sigma=col["sigma"].astype(np.int64),
        e1=np.column_stack([col["e1x"], col["e1y"]]),
        e2=col["e2"], e3=col["e3"],
        noise=noise,
        power=col["power"], energy=col["energy"], det=col["detA"],
    )


def sigma_intervals(log: SimLog) -> list[tuple[float, float, int]]:
    """Constant-mode intervals (t_start, t_end, sigma) covering the horizon."""
    out = []
    start = log.t[0]
    cur = int(log.sigma[0])
    for i in range(1, log.t.shape[0]):
        s = int(log.sigma[i])
        if s != cur:
            out.append((float(start), float(log.t[i]), cur))
            start, cur = log.t[i], s
    out.append((float(start), float(log.t[-1]), cur))
    return out


def _auto_decay_estimates(log: SimLog) -> dict:
    """Best-effort log-slope fits; None when a channel has no usable window."""
    horizon = float(log.t[-1])
    est = {}

    def fit(channel, window):
        try:
            return decay_rate_estimate(log, channel, window)
        except (ChannelUnderflow, ValueError):
            return None

    est["e1"] = fit("e1", (0.25 * horizon, 0.75 * horizon))
    for channel, mode in (("e2", 1), ("e3", 0)):
        spans = [iv for iv in sigma_intervals(log) if iv[2] == mode]
        if not spans:
            est[channel] = None
            continue
        t0, t1, _ = max(spans, key=lambda iv: iv[1] - iv[0])
        pad = 0.05 * (t1 - t0)
        est[channel] = fit(channel, (t0 + pad, t1 - pad)) if t1 - t0 >= 1.0 else None
    return est


def metrics_summary(log: SimLog, name: str = "scenario") -> dict:
    e1_norm = np.hypot(log.e1[:, 0], log.e1[:, 1])
    dv2 = np.abs(np.diff(log.state[:, 4]))
    return {
        "name": name,
        "duration": float(log.t[-1]),
        "dt": log.dt,
        "terminal": {
            "e1_norm": float(e1_norm[-1]),
            "e2": float(log.e2[-1]),
            "e3": float(log.e3[-1]),
        },
        "rms_e1_norm": float(np.sqrt(np.mean(e1_norm ** 2))),
        "total_energy": float(log.energy[-1]),
        "max_step_dv2": float(dv2.max()) if dv2.size else 0.0,
        "max_abs_u2": float(np.abs(log.u[:, 1]).max()),
        "decay_estimates": _auto_decay_estimates(log),
        "min_abs_det": float(np.abs(log.det).min()),
    }


def write_metrics(metrics: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(metrics, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


MODE_COLORS = {0: (0.85, 0.85, 0.85, 0.6), 1: (1.0, 0.65, 0.1, 0.25)}


def _shade_modes(ax, log: SimLog):
    for t0, t1, s in sigma_intervals(log):
        ax.axvspan(t0, t1, color=MODE_COLORS[s], linewidth=0)


def render_figures(log: SimLog, out_dir, base: str, reference=None) -> list[Path]:
    """Render the report figures next to the CSV; returns the written paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    # top-down trajectory
    fig, ax = plt.subplots(figsize=(6, 6))
    if reference is not None:
        refxy = np.array([reference.position(t)[0] for t in log.t[::10]])
        ax.plot(refxy[:, 0], refxy[:, 1], "k--", linewidth=1, label="reference")
    ax.plot(log.state[:, 0], log.state[:, 1], color="tab:blue", label="vehicle")
    ax.plot(log.state[0, 0], log.state[0, 1], "go", label="start")
    ax.plot(log.state[-1, 0], log.state[-1, 1], "rs", label="end")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"{base}: top-down path")
    fig.tight_layout()
    p = out_dir / f"{base}_trajectory.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    # output tracking and inputs with mode bands
    fig, axes = plt.subplots(2, 3, figsize=(12, 6), sharex=True)
    e1n = np.hypot(log.e1[:, 0], log.e1[:, 1])
    ax = axes[0, 0]
    ax.plot(log.t, log.state[:, 0], label="x")
    ax.plot(log.t, log.state[:, 1], label="y")
    ax.plot(log.t, log.state[:, 0] + log.e1[:, 0], "k--", linewidth=0.8)
    ax.plot(log.t, log.state[:, 1] + log.e1[:, 1], "k--", linewidth=0.8)
    ax.set_ylabel("position [m]")
    ax.legend(fontsize=8)
    ax = axes[0, 1]
    ax.plot(log.t, log.state[:, 2], label="heading")
    ax.set_ylabel("heading [rad]")
    ax.legend(fontsize=8)
    ax = axes[0, 2]
    ax.semilogy(log.t, np.maximum(e1n, 1e-16))
    ax.set_ylabel("|position error| [m]")
    for ax, col, lab in ((axes[1, 0], log.state[:, 3], "v1 [m/s]"),
                         (axes[1, 1], log.state[:, 4], "v2 [m/s]"),
                         (axes[1, 2], log.u[:, 2], "turn rate [rad/s]")):
        ax.plot(log.t, col)
        ax.set_ylabel(lab)
        ax.set_xlabel("t [s]")
    for ax in axes.flat:
        _shade_modes(ax, log)
    fig.suptitle(f"{base}: outputs and inputs (gray: energy-saving, orange: dexterous)")
    fig.tight_layout()
    p = out_dir / f"{base}_timeseries.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    # energy and power
    fig, ax1 = plt.subplots(figsize=(7, 4))
    ax1.plot(log.t, log.energy, color="tab:red", label="energy")
    ax1.set_xlabel("t [s]")
    ax1.set_ylabel("accumulated energy")
    ax2 = ax1.twinx()
    ax2.plot(log.t, log.power, color="tab:gray", alpha=0.6, label="power")
    ax2.set_ylabel("power")
    _shade_modes(ax1, log)
    fig.suptitle(f"{base}: energy")
    fig.tight_layout()
    p = out_dir / f"{base}_energy.png"
    fig.savefig(p, dpi=130)
    plt.close(fig)
    written.append(p)

    if np.any(log.noise != 0.0):
        fig, ax = plt.subplots(figsize=(7, 4))
        for i, lab in enumerate(("n1", "n2", "n3")):
            ax.plot(log.t, log.noise[:, i], label=lab, linewidth=0.8)
        ax.set_xlabel("t [s]")
        ax.set_ylabel("actuation noise")
        ax.legend(fontsize=8)
        fig.tight_layout()
        p = out_dir / f"{base}_noise.png"
        fig.savefig(p, dpi=130)
        plt.close(fig)
        written.append(p)
    return written
