"""Reference and simulated trajectories for the fidelity experiment.

The reference is an ideal closed pentagon traced at constant speed with
instantaneous 72-degree turns; the simulated path integrates the
oscillatory controller through the fixed-step kinematics. Comparing the
two (or a coarse run against a 100x finer one) frames fidelity as
reference-tracking and refinement error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..kinematics import OscillatorParams, Pose, Twist, integrate_step, oscillatory_omega


@dataclass(frozen=True)
class TrajectoryLog:
    times: tuple[float, ...]
    poses: tuple[Pose, ...]

    def __post_init__(self):
        if len(self.times) != len(self.poses):
            raise ValueError("times and poses must have equal length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    def xy(self) -> np.ndarray:
        return np.array([[p.x, p.y] for p in self.poses], dtype=float)

    def path_length(self) -> float:
        xy = self.xy()
        return float(np.sum(np.hypot(*np.diff(xy, axis=0).T))) if len(xy) > 1 else 0.0

    def to_rows(self):
        for t, p in zip(self.times, self.poses):
            yield (t, p.x, p.y, p.theta)


def generate_pentagon_reference(side: float, v: float = 0.5,
                                dt: float = 0.05) -> TrajectoryLog:
    """Closed pentagon from (0,0,0): five straight legs of `side` meters at
    constant speed v, turning 2*pi/5 instantaneously at each vertex.
    Sampled every dt, with the exact endpoint appended."""
    if side <= 0:
        raise ValueError("side must be > 0")
    if v <= 0 or dt <= 0:
        raise ValueError("v and dt must be > 0")
    headings = [k * math.tau / 5 for k in range(5)]
    vertices = [(0.0, 0.0)]
    for h in headings:
        px, py = vertices[-1]
        vertices.append((px + side * math.cos(h), py + side * math.sin(h)))

    total_time = 5 * side / v

    def pose_at(t: float) -> Pose:
        s = v * t
        k = min(4, int(s / side))
        local = s - k * side
        vx, vy = vertices[k]
        h = headings[k]
        return Pose(vx + local * math.cos(h), vy + local * math.sin(h), h)

    times = []
    poses = []
    n = int(total_time / dt)
    for i in range(n + 1):
        t = i * dt
        times.append(t)
        poses.append(pose_at(t))
    if times[-1] < total_time - 1e-12:
        times.append(total_time)
        poses.append(pose_at(total_time))
    return TrajectoryLog(tuple(times), tuple(poses))


def run_oscillator_trajectory(params: OscillatorParams, v: float, duration: float,
                              dt: float, start: Pose = Pose(0.0, 0.0, 0.0)) -> TrajectoryLog:
    """Integrate the damped-sinusoid angular velocity with constant linear
    speed from the start pose. The command at each step uses the time at the
    step's start; samples include t=0."""
    if duration <= 0:
        raise ValueError("duration must be > 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n = round(duration / dt)
    pose = start
    times = [0.0]
    poses = [pose]
    for k in range(n):
        omega = oscillatory_omega(params, k * dt)
        pose = integrate_step(pose, Twist(v, omega), dt)
        times.append((k + 1) * dt)
        poses.append(pose)
    return TrajectoryLog(tuple(times), tuple(poses))


def refined_endpoint_error(params: OscillatorParams, v: float, duration: float,
                           dt: float, refine: int = 100) -> float:
    """Endpoint distance between a dt run and the same dynamics at dt/refine
    (the ground-truth comparator)."""
    coarse = run_oscillator_trajectory(params, v, duration, dt)
    fine = run_oscillator_trajectory(params, v, duration, dt / refine)
    cx, cy = coarse.poses[-1].x, coarse.poses[-1].y
    fx, fy = fine.poses[-1].x, fine.poses[-1].y
    return math.hypot(cx - fx, cy - fy)
