"""Simulated sensors: 2D LiDAR over analytic ray casts, and odometry with
optional seeded Gaussian noise.

Both are pure reads over a WorldState snapshot. LiDAR sees walls, obstacles,
and loose balls (zones are floor markings and invisible); the scanning
robot's own body and the ball it carries are excluded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import Circle, ray_circle, ray_rect, ray_segment
from .kinematics import Pose, Twist
from .rng import Rng
from .world import RectObstacle, WorldState


@dataclass(frozen=True)
class LidarConfig:
    beam_count: int = 360
    fov: float = 1.5 * math.pi
    max_range: float = 10.0
    mount_offset: float = 0.0  # beam fan is centered on heading + offset

    def __post_init__(self):
        if self.beam_count < 1:
            raise ValueError("beam_count must be >= 1")
        if not 0 < self.fov <= math.tau:
            raise ValueError("fov must be in (0, 2*pi]")
        if self.max_range <= 0:
            raise ValueError("max_range must be > 0")

    @property
    def angle_min(self) -> float:
        return self.mount_offset - self.fov / 2

    @property
    def angle_increment(self) -> float:
        if self.beam_count == 1:
            return 0.0
        return self.fov / (self.beam_count - 1)


@dataclass(frozen=True)
class ScanFrame:
    stamp: float
    angle_min: float
    angle_increment: float
    ranges: tuple[float, ...]

    def to_dict(self) -> dict:
        return {"stamp": self.stamp, "angle_min": self.angle_min,
                "angle_increment": self.angle_increment, "ranges": list(self.ranges)}


@dataclass(frozen=True)
class OdometrySample:
    stamp: float
    pose: Pose
    twist: Twist
    noise_sigma_xy: float = 0.0
    noise_sigma_theta: float = 0.0

    def to_dict(self) -> dict:
        return {"stamp": self.stamp,
                "pose": {"x": self.pose.x, "y": self.pose.y, "theta": self.pose.theta},
                "twist": {"linear": self.twist.linear, "angular": self.twist.angular}}


def _cast_ray(world: WorldState, scanner_id: int, ox: float, oy: float,
              dx: float, dy: float, max_range: float) -> float:
    best = max_range
    for wall in world.walls:
        t = ray_segment(ox, oy, dx, dy, wall)
        if t is not None and t < best:
            best = t
    for ob in world.obstacles:
        if isinstance(ob, RectObstacle):
            t = ray_rect(ox, oy, dx, dy, ob.shape())
        else:
            t = ray_circle(ox, oy, dx, dy, ob.shape())
        if t is not None and t < best:
            best = t
    for ball in world.balls:
        if ball.carried_by == scanner_id:
            continue
        t = ray_circle(ox, oy, dx, dy, Circle(ball.x, ball.y, ball.radius))
        if t is not None and t < best:
            best = t
    return best


def lidar_scan(world: WorldState, agent_id: int,
               config: LidarConfig = LidarConfig()) -> ScanFrame:
    """Cast the beam fan counterclockwise from angle_min; each range is the
    nearest hit, capped at max_range (max_range also means 'no hit')."""
    agent = world.agent(agent_id)
    ox, oy = agent.pose.x, agent.pose.y
    ranges = []
    for i in range(config.beam_count):
        ang = agent.pose.theta + config.angle_min + i * config.angle_increment
        dx, dy = math.cos(ang), math.sin(ang)
        ranges.append(_cast_ray(world, agent_id, ox, oy, dx, dy, config.max_range))
    return ScanFrame(world.clock.t, config.angle_min, config.angle_increment,
                     tuple(ranges))


def sample_odometry(world: WorldState, agent_id: int, sigma_xy: float = 0.0,
                    sigma_theta: float = 0.0, rng: Rng | None = None) -> OdometrySample:
    """Ground-truth pose plus independent zero-mean Gaussian noise in the
    world frame (not integrated). Zero sigmas return the exact pose."""
    if sigma_xy < 0 or sigma_theta < 0:
        raise ValueError("noise sigmas must be >= 0")
    agent = world.agent(agent_id)
    pose = agent.pose
    if sigma_xy > 0 or sigma_theta > 0:
        if rng is None:
            raise ValueError("a seeded Rng is required when noise is enabled")
        nx = rng.gauss(0.0, sigma_xy) if sigma_xy > 0 else 0.0
        ny = rng.gauss(0.0, sigma_xy) if sigma_xy > 0 else 0.0
        nth = rng.gauss(0.0, sigma_theta) if sigma_theta > 0 else 0.0
        pose = Pose(pose.x + nx, pose.y + ny, pose.theta + nth)
    return OdometrySample(world.clock.t, pose, agent.twist, sigma_xy, sigma_theta)
