"""Canonical JSON serialization for specs and worlds.

The same schema backs scenario files, saved worlds, and the bus payloads on
/env/spec. Dumps are canonical (sorted keys, fixed separators) so identical
worlds serialize to identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

from .geometry import Segment
from .kinematics import Pose, SimClock, Twist
from .procgen import AreaSpec, EnvironmentSpec
from .world import (
    Agent, Area, Ball, CircleObstacle, RectObstacle, WorldParams, WorldState, Zone,
)


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# specs

def spec_to_dict(spec: EnvironmentSpec) -> dict:
    return {
        "seed": spec.seed,
        "cell_size": spec.cell_size,
        "areas": [
            {
                "width_cells": a.width_cells,
                "height_cells": a.height_cells,
                "obstacle_count": a.obstacle_count,
                "balls": [[c, n] for c, n in a.balls],
                "zones": [[c, n] for c, n in a.zones],
                "agents": a.agents,
                "entries": list(a.entries),
                "exits": list(a.exits),
            }
            for a in spec.areas
        ],
    }


def spec_from_dict(data: dict) -> EnvironmentSpec:
    areas = tuple(
        AreaSpec(
            width_cells=a["width_cells"],
            height_cells=a["height_cells"],
            obstacle_count=a.get("obstacle_count", 0),
            balls=tuple((c, n) for c, n in a.get("balls", [])),
            zones=tuple((c, n) for c, n in a.get("zones", [])),
            agents=a.get("agents", 0),
            entries=tuple(a.get("entries", [])),
            exits=tuple(a.get("exits", [])),
        )
        for a in data["areas"]
    )
    return EnvironmentSpec(seed=data["seed"], areas=areas,
                           cell_size=data.get("cell_size", 1.0))


# ---------------------------------------------------------------------------
# worlds

def world_to_dict(world: WorldState) -> dict:
    obstacles = []
    for ob in world.obstacles:
        if isinstance(ob, RectObstacle):
            obstacles.append({"kind": "rect", "cx": ob.cx, "cy": ob.cy,
                              "hx": ob.hx, "hy": ob.hy, "rot": ob.rot})
        else:
            obstacles.append({"kind": "circle", "cx": ob.cx, "cy": ob.cy, "r": ob.r})
    return {
        "areas": [{"index": a.index, "x0": a.x0, "y0": a.y0,
                   "cols": a.cols, "rows": a.rows, "cell": a.cell}
                  for a in world.areas],
        "obstacles": obstacles,
        "balls": [{"id": b.id, "color": b.color, "x": b.x, "y": b.y,
                   "carried_by": b.carried_by, "radius": b.radius}
                  for b in world.balls],
        "zones": [{"id": z.id, "color": z.color, "cx": z.cx, "cy": z.cy, "r": z.r}
                  for z in world.zones],
        "agents": [{"id": a.id, "x": a.pose.x, "y": a.pose.y, "theta": a.pose.theta,
                    "linear": a.twist.linear, "angular": a.twist.angular,
                    "radius": a.radius, "area": a.area}
                   for a in world.agents],
        "walls": [[w.ax, w.ay, w.bx, w.by] for w in world.walls],
        "clock": {"tick": world.clock.tick, "dt": world.clock.dt},
        "params": {"v_max": world.params.v_max, "omega_max": world.params.omega_max,
                   "robot_radius": world.params.robot_radius,
                   "catch_radius": world.params.catch_radius},
    }


def world_from_dict(data: dict) -> WorldState:
    obstacles = []
    for ob in data["obstacles"]:
        if ob["kind"] == "rect":
            obstacles.append(RectObstacle(ob["cx"], ob["cy"], ob["hx"], ob["hy"], ob["rot"]))
        else:
            obstacles.append(CircleObstacle(ob["cx"], ob["cy"], ob["r"]))
    params = data.get("params", {})
    return WorldState(
        areas=tuple(Area(a["index"], a["x0"], a["y0"], a["cols"], a["rows"], a["cell"])
                    for a in data["areas"]),
        obstacles=tuple(obstacles),
        balls=tuple(Ball(b["id"], b["color"], b["x"], b["y"], b.get("carried_by"),
                         b.get("radius", 0.1))
                    for b in data["balls"]),
        zones=tuple(Zone(z["id"], z["color"], z["cx"], z["cy"], z["r"])
                    for z in data["zones"]),
        agents=tuple(Agent(a["id"], Pose(a["x"], a["y"], a["theta"]),
                           Twist(a.get("linear", 0.0), a.get("angular", 0.0)),
                           a.get("radius", 0.3), a.get("area", 0))
                     for a in data["agents"]),
        walls=tuple(Segment(*w) for w in data["walls"]),
        clock=SimClock(data["clock"]["tick"], data["clock"]["dt"]),
        params=WorldParams(params.get("v_max", 1.0), params.get("omega_max", 3.141592653589793),
                           params.get("robot_radius", 0.3), params.get("catch_radius", 0.3)),
    )


def serialize_world(world: WorldState) -> str:
    return canonical_dumps(world_to_dict(world))


def serialize_spec(spec: EnvironmentSpec) -> str:
    return canonical_dumps(spec_to_dict(spec))


def save_world(world: WorldState, path: str | Path) -> None:
    Path(path).write_text(serialize_world(world) + "\n", encoding="utf-8")


def load_world(path: str | Path) -> WorldState:
    return world_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_spec(spec: EnvironmentSpec, path: str | Path) -> None:
    Path(path).write_text(serialize_spec(spec) + "\n", encoding="utf-8")


def load_spec(path: str | Path) -> EnvironmentSpec:
    return spec_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
