"""Figure rendering for the report path of the CLI.

Figures are written straight to files (Agg backend, nothing interactive)
next to the delimited trace/metrics outputs: trajectory overlays for the
fidelity experiment and a top-down world plot with the driven trails.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
from matplotlib.patches import Circle as CirclePatch
from matplotlib.patches import Polygon as PolygonPatch

from ..world import RectObstacle, WorldState
from .trajectory import TrajectoryLog

_ZONE_ALPHA = 0.35
_COLOR_MAP = {"Red": "tab:red", "Green": "tab:green", "Blue": "tab:blue",
              "Orange": "tab:orange", "Yellow": "gold", "Purple": "purple"}


def save_trajectory_figure(path: str | Path, logs: list[tuple[str, TrajectoryLog]],
                           title: str | None = None) -> Path:
    """Overlay labeled xy paths; the first is drawn dashed as the reference."""
    fig, ax = plt.subplots(figsize=(6, 6))
    for i, (label, log) in enumerate(logs):
        xy = log.xy()
        style = "--" if i == 0 else "-"
        ax.plot(xy[:, 0], xy[:, 1], style, label=label, linewidth=1.4)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.4)
    ax.legend(loc="best")
    if title:
        ax.set_title(title)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def save_trail_figure(path: str | Path, world: WorldState,
                      trails: dict[int, list[tuple[float, float]]] | None = None,
                      title: str | None = None) -> Path:
    """Top-down world plot: walls, obstacles, zones, balls, agents, trails."""
    fig, ax = plt.subplots(figsize=(7, 7))
    for wall in world.walls:
        ax.plot([wall.ax, wall.bx], [wall.ay, wall.by], color="black", linewidth=2)
    for ob in world.obstacles:
        if isinstance(ob, RectObstacle):
            ax.add_patch(PolygonPatch(ob.shape().corners(), closed=True,
                                      facecolor="dimgray", edgecolor="black"))
        else:
            ax.add_patch(CirclePatch((ob.cx, ob.cy), ob.r,
                                     facecolor="dimgray", edgecolor="black"))
    for zone in world.zones:
        ax.add_patch(CirclePatch((zone.cx, zone.cy), zone.r,
                                 facecolor=_COLOR_MAP.get(zone.color, "gray"),
                                 alpha=_ZONE_ALPHA, edgecolor="none"))
    for ball in world.balls:
        ax.add_patch(CirclePatch((ball.x, ball.y), ball.radius,
                                 facecolor=_COLOR_MAP.get(ball.color, "gray"),
                                 edgecolor="black"))
    if trails:
        for agent_id, points in trails.items():
            if len(points) > 1:
                xs, ys = zip(*points)
                ax.plot(xs, ys, linewidth=1.0, alpha=0.8, label=f"agent {agent_id}")
    for agent in world.agents:
        ax.add_patch(CirclePatch((agent.pose.x, agent.pose.y), agent.radius,
                                 facecolor="tab:cyan", edgecolor="black", alpha=0.9))
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.3)
    if trails:
        ax.legend(loc="best")
    if title:
        ax.set_title(title)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
