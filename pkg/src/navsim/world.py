"""World state and the single mutation path, step_world.

WorldState is an immutable value: stepping returns a fresh state plus the
events raised during the step. Snapshots can therefore be handed to the
bridge or UI feed without locks; all mutation flows through step_world and
the pick_up/drop helpers.

Collision model: each agent is a disc. If the disc swept over one step
would touch an obstacle, a wall, or another agent's disc, the agent keeps
its full pre-step pose and a collision event is emitted (stop, no sliding).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .geometry import (
    Circle, Rect, Segment,
    capsule_hits_circle, capsule_hits_rect, capsule_hits_segment,
    dist_point_rect, dist_point_segment, point_in_circle, point_in_rect,
)
from .kinematics import Pose, SimClock, Twist, clamp_twist, integrate_step


@dataclass(frozen=True)
class RectObstacle:
    cx: float
    cy: float
    hx: float
    hy: float
    rot: float = 0.0

    def shape(self) -> Rect:
        return Rect(self.cx, self.cy, self.hx, self.hy, self.rot)


@dataclass(frozen=True)
class CircleObstacle:
    cx: float
    cy: float
    r: float

    def shape(self) -> Circle:
        return Circle(self.cx, self.cy, self.r)


Obstacle = RectObstacle | CircleObstacle


@dataclass(frozen=True)
class Ball:
    id: int
    color: str
    x: float
    y: float
    carried_by: int | None = None
    radius: float = 0.1


@dataclass(frozen=True)
class Zone:
    id: int
    color: str
    cx: float
    cy: float
    r: float = 0.5

    def contains(self, x: float, y: float) -> bool:
        return math.hypot(x - self.cx, y - self.cy) <= self.r


@dataclass(frozen=True)
class Agent:
    id: int
    pose: Pose
    twist: Twist = Twist()
    radius: float = 0.3
    area: int = 0


@dataclass(frozen=True)
class Area:
    """One rectangular room; multi-area worlds line areas up along +x."""
    index: int
    x0: float
    y0: float
    cols: int
    rows: int
    cell: float = 1.0

    @property
    def width(self) -> float:
        return self.cols * self.cell

    @property
    def height(self) -> float:
        return self.rows * self.cell

    def contains(self, x: float, y: float) -> bool:
        return (self.x0 <= x <= self.x0 + self.width
                and self.y0 <= y <= self.y0 + self.height)

    def cell_center(self, c: int, r: int) -> tuple[float, float]:
        return (self.x0 + (c + 0.5) * self.cell, self.y0 + (r + 0.5) * self.cell)


@dataclass(frozen=True)
class WorldParams:
    v_max: float = 1.0
    omega_max: float = math.pi
    robot_radius: float = 0.3
    catch_radius: float = 0.3


@dataclass
class Event:
    kind: str
    agent: int | None = None
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.agent is not None:
            out["agent"] = self.agent
        if self.data:
            out.update(self.data)
        return out


@dataclass(frozen=True)
class WorldState:
    areas: tuple[Area, ...]
    obstacles: tuple[Obstacle, ...] = ()
    balls: tuple[Ball, ...] = ()
    zones: tuple[Zone, ...] = ()
    agents: tuple[Agent, ...] = ()
    walls: tuple[Segment, ...] = ()
    clock: SimClock = SimClock()
    params: WorldParams = WorldParams()

    # -- lookups ------------------------------------------------------------

    def agent(self, agent_id: int) -> Agent:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(f"unknown agent id {agent_id}")

    def ball(self, ball_id: int) -> Ball:
        for b in self.balls:
            if b.id == ball_id:
                return b
        raise KeyError(f"unknown ball id {ball_id}")

    def carried_ball(self, agent_id: int) -> Ball | None:
        for b in self.balls:
            if b.carried_by == agent_id:
                return b
        return None

    def zones_containing(self, x: float, y: float) -> list[Zone]:
        return [z for z in self.zones if z.contains(x, y)]

    def area_of(self, x: float, y: float) -> Area | None:
        for area in self.areas:
            if area.contains(x, y):
                return area
        return None

    def point_in_obstacle(self, x: float, y: float) -> bool:
        for ob in self.obstacles:
            if isinstance(ob, RectObstacle):
                if point_in_rect(ob.shape(), x, y):
                    return True
            elif point_in_circle(ob.shape(), x, y):
                return True
        return False

    # -- functional updates --------------------------------------------------

    def _replace_agent(self, agent: Agent) -> "WorldState":
        agents = tuple(agent if a.id == agent.id else a for a in self.agents)
        return replace(self, agents=agents)

    def _replace_ball(self, ball: Ball) -> "WorldState":
        balls = tuple(ball if b.id == ball.id else b for b in self.balls)
        return replace(self, balls=balls)


def _swept_collision(world: WorldState, agent: Agent, new_pose: Pose,
                     moved_agents: dict[int, Pose]) -> str | None:
    """What the agent's swept disc would hit this step, or None."""
    sweep = Segment(agent.pose.x, agent.pose.y, new_pose.x, new_pose.y)
    r = agent.radius
    for ob in world.obstacles:
        if isinstance(ob, RectObstacle):
            if capsule_hits_rect(sweep, r, ob.shape()):
                return "obstacle"
        elif capsule_hits_circle(sweep, r, ob.shape()):
            return "obstacle"
    for wall in world.walls:
        if capsule_hits_segment(sweep, r, wall):
            return "wall"
    for other in world.agents:
        if other.id == agent.id:
            continue
        pose = moved_agents.get(other.id, other.pose)
        if capsule_hits_circle(sweep, r, Circle(pose.x, pose.y, other.radius)):
            return "agent"
    return None


def step_world(world: WorldState, commands: dict[int, Twist],
               dt: float | None = None) -> tuple[WorldState, list[Event]]:
    """Advance every agent one tick and move carried balls with their agents.

    Agents tick in id order; an agent whose swept disc would hit something
    stays at its pre-step pose (collision event). Commands are clamped to
    the configured limits (clamp event); agents without a command hold
    their previous twist (zero-order hold).
    """
    if dt is None:
        dt = world.clock.dt
    elif dt != world.clock.dt:
        raise ValueError(f"dt {dt} differs from the run's fixed step {world.clock.dt}")
    known = {a.id for a in world.agents}
    for agent_id in commands:
        if agent_id not in known:
            raise KeyError(f"unknown agent id {agent_id}")

    events: list[Event] = []
    moved: dict[int, Pose] = {}
    new_agents: list[Agent] = []
    for agent in sorted(world.agents, key=lambda a: a.id):
        cmd = commands.get(agent.id, agent.twist)
        cmd, clamped = clamp_twist(cmd, world.params.v_max, world.params.omega_max)
        if clamped:
            events.append(Event("clamp", agent.id))
        new_pose = integrate_step(agent.pose, cmd, dt)
        hit = _swept_collision(world, agent, new_pose, moved)
        if hit is not None:
            events.append(Event("collision", agent.id, {"with": hit}))
            new_pose = agent.pose
        was_in = {z.id for z in world.zones_containing(agent.pose.x, agent.pose.y)}
        for zone in world.zones_containing(new_pose.x, new_pose.y):
            if zone.id not in was_in:
                events.append(Event("zone_entry", agent.id,
                                    {"zone": zone.id, "color": zone.color}))
        moved[agent.id] = new_pose
        new_agents.append(replace(agent, pose=new_pose, twist=cmd))

    by_id = {a.id: a for a in new_agents}
    new_balls = []
    for ball in world.balls:
        if ball.carried_by is not None and ball.carried_by in by_id:
            pose = by_id[ball.carried_by].pose
            ball = replace(ball, x=pose.x, y=pose.y)
        new_balls.append(ball)

    next_world = replace(
        world,
        agents=tuple(by_id[a.id] for a in world.agents),
        balls=tuple(new_balls),
        clock=world.clock.advanced(),
    )
    return next_world, events


def pick_up_ball(world: WorldState, agent_id: int, ball_id: int) -> tuple[WorldState, Event]:
    """Attach a ball to an agent. The caller is responsible for proximity."""
    agent = world.agent(agent_id)
    ball = world.ball(ball_id)
    if ball.carried_by is not None:
        raise ValueError(f"ball {ball_id} already carried by agent {ball.carried_by}")
    world = world._replace_ball(replace(ball, carried_by=agent_id,
                                        x=agent.pose.x, y=agent.pose.y))
    return world, Event("pickup", agent_id, {"ball": ball_id, "color": ball.color})


def drop_ball(world: WorldState, agent_id: int) -> tuple[WorldState, Event]:
    """Detach the carried ball at the agent's position."""
    agent = world.agent(agent_id)
    ball = world.carried_ball(agent_id)
    if ball is None:
        raise ValueError(f"agent {agent_id} is not carrying a ball")
    world = world._replace_ball(replace(ball, carried_by=None,
                                        x=agent.pose.x, y=agent.pose.y))
    zones = world.zones_containing(agent.pose.x, agent.pose.y)
    data = {"ball": ball.id, "color": ball.color,
            "in_zone": zones[0].color if zones else None,
            "dropped_outside_zone": not zones}
    return world, Event("drop", agent_id, data)


def clearance_to_static(world: WorldState, x: float, y: float) -> float:
    """Distance from a point to the nearest obstacle or wall (not agents)."""
    best = math.inf
    for ob in world.obstacles:
        if isinstance(ob, RectObstacle):
            d = dist_point_rect(ob.shape(), x, y)
        else:
            d = max(0.0, math.hypot(x - ob.cx, y - ob.cy) - ob.r)
        best = min(best, d)
    for wall in world.walls:
        best = min(best, dist_point_segment(x, y, wall))
    return best
