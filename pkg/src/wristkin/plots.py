"""Matplotlib renderers for the CLI report path.  Imported lazily so the
core stays free of plotting dependencies."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SEGMENT_STYLE = {
    "link": dict(color="tab:blue", lw=2.5),
    "rod": dict(color="tab:orange", lw=2.0),
    "platform": dict(color="tab:green", lw=1.5),
    "axis": dict(color="gray", lw=1.0, ls="--"),
}


def render_scene(scene: dict, path) -> None:
    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(projection="3d")
    pts = scene["points"]
    for seg in scene["segments"]:
        a, b = pts[seg["from"]], pts[seg["to"]]
        ax.plot(*zip(a, b), **SEGMENT_STYLE.get(seg["kind"], {}))
    for name, p in pts.items():
        if not name[-1].isdigit() and name != "O":
            continue
        ax.scatter(*p, s=12, color="k")
        ax.text(*p, f" {name}", fontsize=7)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    ax.set_title(scene["metadata"]["variant"])
    ax.set_box_aspect((1, 1, 1))
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_sweep(wmap, path) -> None:
    """Margin heatmap on the roll slice nearest zero."""
    ny, npi, nr = (wmap.box.yaw_count, wmap.box.pitch_count, wmap.box.roll_count)
    yaw_ax, pitch_ax, roll_ax = wmap.box.axes()
    r_idx = int(np.argmin(np.abs(roll_ax)))
    margin = wmap.margin.reshape(nr, npi, ny)[r_idx]
    fig, ax = plt.subplots(figsize=(7, 4.2))
    im = ax.pcolormesh(np.degrees(yaw_ax), np.degrees(pitch_ax), margin,
                       shading="auto", cmap="viridis")
    fig.colorbar(im, ax=ax, label="min normalized |det|")
    ax.set_xlabel("yaw offset [deg]")
    ax.set_ylabel("pitch [deg]")
    ax.set_title(f"singularity margin, roll = {math.degrees(roll_ax[r_idx]):.1f} deg")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_gait(report, path) -> None:
    """Joint traces and margins over one cycle, one line per vertebra."""
    nv = report.joints.shape[0]
    fig, axes = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    t = report.times
    for kv in range(nv):
        axes[0].plot(t, report.joints[kv, :, 0], lw=1.0)
        axes[0].plot(t, report.joints[kv, :, 1], lw=1.0, ls=":")
        axes[1].plot(t, report.margins[kv], lw=1.0)
    axes[0].set_ylabel("theta1 (solid), theta2 (dotted) [rad]")
    axes[1].set_ylabel("margin")
    axes[1].set_xlabel("time [s]")
    axes[0].set_title(f"{nv}-vertebra gait, {report.samples_per_cycle} samples/cycle")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
