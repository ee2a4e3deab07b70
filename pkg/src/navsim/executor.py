"""Grounds plan calls into closed-loop motion.

Each primitive is a small state machine evaluated once per tick: it either
returns a Twist (drive), a Mutation (pick up / drop), or nothing (terminal).
A PlanRunner sequences the calls strictly in order, owns the world's
mutation rights, and records one trace entry per tick. Search primitives
localize balls by line of sight within LiDAR range and otherwise sweep
unvisited cells in row-major order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .geometry import Circle, Segment, dist_segment_rect, dist_point_segment, segments_intersect
from .kinematics import Twist
from .lang import Plan, PrimitiveCall
from .pathing import (
    Gains, NoPath, Occupancy, PathPlan, follow_path, heading_error,
    lookahead_point, occupancy_from_world, plan_path,
)
from .sensors import LidarConfig
from .world import (
    Ball, Event, RectObstacle, WorldState, drop_ball, pick_up_ball, step_world,
)

EXPLORING = "exploring"
NAVIGATING = "navigating"
ACTING = "acting"
DONE = "done"
FAILED = "failed"

DEFAULT_STEP_BUDGET = 5000
MAX_REPLANS = 3
STALL_WINDOW = 50   # ticks without progress before a replan
PINNED_TICKS = 5    # frozen ticks (commanded motion, no displacement) before pivoting
PIVOT_EXIT_ERROR = 0.3  # rad; resume pursuit once roughly facing the target


@dataclass
class Mutation:
    kind: str  # "pickup" | "drop"
    ball_id: int | None = None


@dataclass
class ExecutionMemory:
    """Shared across the calls of one plan run."""
    known_balls: dict[str, int] = field(default_factory=dict)
    visited: set[tuple[int, int]] = field(default_factory=set)
    coverage_target: tuple[int, int] | None = None
    occupancy: Occupancy | None = None

    def occ(self, world: WorldState) -> Occupancy:
        if self.occupancy is None:  # obstacles are static for a run
            self.occupancy = occupancy_from_world(world)
        return self.occupancy


@dataclass
class BehaviorState:
    call: PrimitiveCall
    agent_id: int
    memory: ExecutionMemory
    phase: str = EXPLORING
    target: tuple[float, float] | None = None
    step_budget: int = DEFAULT_STEP_BUDGET
    reason: str | None = None
    path: PathPlan | None = None
    replans: int = 0
    best_dist: float = math.inf
    stall_ticks: int = 0
    last_xy: tuple[float, float] | None = None
    pinned_ticks: int = 0
    pivoting: bool = False

    @property
    def terminal(self) -> bool:
        return self.phase in (DONE, FAILED)

    def fail(self, reason: str) -> None:
        self.phase = FAILED
        self.reason = reason


def line_of_sight(world: WorldState, x1: float, y1: float, x2: float, y2: float) -> bool:
    """Is the straight segment clear of obstacles and walls?"""
    seg = Segment(x1, y1, x2, y2)
    for wall in world.walls:
        if segments_intersect(seg, wall):
            return False
    for ob in world.obstacles:
        if isinstance(ob, RectObstacle):
            if dist_segment_rect(seg, ob.shape()) == 0.0:
                return False
        elif dist_point_segment(ob.cx, ob.cy, seg) <= ob.r:
            return False
    return True


def visible_ball(world: WorldState, agent_id: int, color: str,
                 max_range: float) -> Ball | None:
    """First loose ball of the color within LiDAR range and line of sight."""
    agent = world.agent(agent_id)
    for ball in world.balls:
        if ball.color != color or ball.carried_by is not None:
            continue
        if agent.pose.distance_to(ball.x, ball.y) >= max_range:
            continue
        if line_of_sight(world, agent.pose.x, agent.pose.y, ball.x, ball.y):
            return ball
    return None


def _zone_of_color(world: WorldState, color: str):
    for zone in world.zones:
        if zone.color == color:
            return zone
    return None


def _steer(state: BehaviorState, world: WorldState, goal_xy: tuple[float, float],
           final_target: tuple[float, float] | None, gains: Gains) -> Twist | None:
    """Plan (or replan) and follow; None means no route exists.

    Two recoveries stack: a robot pinned against a wall (commanded motion,
    zero displacement) pivots in place until it roughly faces the lookahead
    point -- rotation alone cannot collide -- and a watchdog replans when
    the distance to the path's end stops improving for too long.
    """
    agent = world.agent(state.agent_id)
    occ = state.memory.occ(world)
    if state.path is None:
        try:
            state.path = plan_path(occ, (agent.pose.x, agent.pose.y), goal_xy,
                                   final_target=final_target)
        except NoPath:
            return None
        state.best_dist = math.inf
        state.stall_ticks = 0
    gx, gy = state.path.waypoints[-1]
    dist = agent.pose.distance_to(gx, gy)
    if dist < state.best_dist - 1e-6:
        state.best_dist = dist
        state.stall_ticks = 0
    else:
        state.stall_ticks += 1
        if state.stall_ticks > STALL_WINDOW:
            state.replans += 1
            state.path = None
            state.pivoting = False
            if state.replans > MAX_REPLANS:
                state.fail("stuck: replan limit exceeded")
            return Twist(0.0, 0.0)

    xy = (agent.pose.x, agent.pose.y)
    target = lookahead_point(agent.pose, state.path, gains)
    err = heading_error(agent.pose, target)
    if state.pivoting:
        if abs(err) < PIVOT_EXIT_ERROR:
            state.pivoting = False
        else:
            state.last_xy = xy
            omega = max(-gains.omega_max, min(gains.omega_max, gains.k_theta * err))
            return Twist(0.0, omega)
    twist = follow_path(agent.pose, state.path, gains)
    if xy == state.last_xy and twist.linear > 0.0:
        state.pinned_ticks += 1
        if state.pinned_ticks >= PINNED_TICKS:
            state.pinned_ticks = 0
            state.pivoting = True
            omega = max(-gains.omega_max, min(gains.omega_max, gains.k_theta * err))
            twist = Twist(0.0, omega)
    else:
        state.pinned_ticks = 0
    state.last_xy = xy
    return twist


def _next_coverage_cell(memory: ExecutionMemory, occ: Occupancy) -> tuple[int, int] | None:
    for r in range(occ.rows):
        for c in range(occ.cols):
            if occ.is_free(c, r) and (c, r) not in memory.visited:
                return (c, r)
    return None


def execute_primitive(call: PrimitiveCall, world: WorldState, state: BehaviorState,
                      lidar: LidarConfig = LidarConfig(),
                      gains: Gains = Gains()) -> tuple[Twist | Mutation | None, BehaviorState]:
    """Advance one behavior by one tick. Returns the action to apply this
    tick (a Twist to drive, a Mutation to change the world, or None when the
    behavior is terminal) plus the updated state."""
    if state.terminal:
        return None, state
    agent = world.agent(state.agent_id)
    memory = state.memory

    # completion checks come first so a satisfied goal costs no budget
    if call.name in ("search_ball", "search_zone"):
        if call.name == "search_zone":
            zone = _zone_of_color(world, call.args[0])
            if zone is None:
                state.fail(f"no {call.args[0]} zone in the world")
            else:
                state.target = (zone.cx, zone.cy)
                state.phase = DONE
            return None, state
        color = call.args[0]
        if color in memory.known_balls:  # localized earlier in this run
            known = world.ball(memory.known_balls[color])
            state.target = (known.x, known.y)
            state.phase = DONE
            return None, state
        ball = visible_ball(world, state.agent_id, color, lidar.max_range)
        if ball is not None:
            memory.known_balls[ball.color] = ball.id
            state.target = (ball.x, ball.y)
            state.phase = DONE
            return None, state
    elif call.name == "catch_the_ball":
        color = call.args[0]
        if color not in memory.known_balls:
            state.fail(f"{color} ball was never localized (search_ball first)")
            return None, state
        ball = world.ball(memory.known_balls[color])
        if ball.carried_by == state.agent_id:
            state.phase = DONE
            return None, state
        if ball.carried_by is not None:
            state.fail(f"{color} ball already taken by agent {ball.carried_by}")
            return None, state
        if agent.pose.distance_to(ball.x, ball.y) <= world.params.catch_radius:
            state.phase = DONE
            state.target = (ball.x, ball.y)
            return Mutation("pickup", ball.id), state
    elif call.name == "go_to_zone":
        zone = _zone_of_color(world, call.args[0])
        if zone is None:
            state.fail(f"no {call.args[0]} zone in the world")
            return None, state
        if zone.contains(agent.pose.x, agent.pose.y):
            state.phase = DONE
            return None, state
        state.target = (zone.cx, zone.cy)
    elif call.name == "leave_ball":
        carried = world.carried_ball(state.agent_id)
        if carried is None:
            state.fail("not carrying a ball")
            return None, state
        state.phase = DONE
        return Mutation("drop"), state

    state.step_budget -= 1
    if state.step_budget <= 0:
        state.fail("step budget exhausted")
        return None, state

    if call.name == "search_ball":
        state.phase = EXPLORING
        occ = memory.occ(world)
        memory.visited.add(occ.cell_of(agent.pose.x, agent.pose.y))
        for _ in range(2 * occ.cols * occ.rows + 2):
            if memory.coverage_target is None:
                memory.coverage_target = _next_coverage_cell(memory, occ)
                if memory.coverage_target is None:
                    memory.visited.clear()  # full sweep done; sweep again
                    memory.visited.add(occ.cell_of(agent.pose.x, agent.pose.y))
                    memory.coverage_target = _next_coverage_cell(memory, occ)
                    if memory.coverage_target is None:
                        state.fail("no drivable cells to explore")
                        return None, state
                state.path = None
            cx, cy = occ.center(*memory.coverage_target)
            if agent.pose.distance_to(cx, cy) <= gains.arrival_radius:
                memory.visited.add(memory.coverage_target)
                memory.coverage_target = None
                state.path = None
                continue
            twist = _steer(state, world, (cx, cy), None, gains)
            if state.terminal:
                return None, state
            if twist is None:
                memory.visited.add(memory.coverage_target)  # unreachable; skip it
                memory.coverage_target = None
                continue
            return twist, state
        state.fail("exploration could not reach any unvisited cell")
        return None, state

    if call.name == "catch_the_ball":
        state.phase = NAVIGATING
        ball = world.ball(memory.known_balls[call.args[0]])
        twist = _steer(state, world, (ball.x, ball.y), (ball.x, ball.y), gains)
        if state.terminal:
            return None, state
        if twist is None:
            state.fail("no path to the localized ball")
            return None, state
        return twist, state

    if call.name == "go_to_zone":
        state.phase = NAVIGATING
        twist = _steer(state, world, state.target, state.target, gains)
        if state.terminal:
            return None, state
        if twist is None:
            state.fail(f"no path to the {call.args[0]} zone")
            return None, state
        return twist, state

    raise AssertionError(f"unhandled primitive {call.name}")  # pragma: no cover


@dataclass
class CallResult:
    name: str
    args: tuple[str, ...]
    phase: str
    reason: str | None
    start_tick: int
    end_tick: int

    def to_dict(self) -> dict:
        return {"name": self.name, "args": list(self.args), "phase": self.phase,
                "reason": self.reason, "start_tick": self.start_tick,
                "end_tick": self.end_tick}


@dataclass
class TickRecord:
    tick: int
    t: float
    agents: list[dict]
    call_index: int | None
    call: str | None
    phase: str | None
    events: list[dict]

    def to_dict(self) -> dict:
        return {"tick": self.tick, "t": self.t, "agents": self.agents,
                "call_index": self.call_index, "call": self.call,
                "phase": self.phase, "events": self.events}


@dataclass
class ExecutionTrace:
    records: list[TickRecord] = field(default_factory=list)
    calls: list[CallResult] = field(default_factory=list)
    final_world: WorldState | None = None

    @property
    def ok(self) -> bool:
        return bool(self.calls) and all(c.phase == DONE for c in self.calls)

    def to_jsonl(self) -> str:
        lines = [json.dumps(r.to_dict(), sort_keys=True) for r in self.records]
        return "\n".join(lines) + ("\n" if lines else "")


class PlanRunner:
    """Drives one agent through a plan, one step_world call per tick."""

    def __init__(self, plan: Plan, world: WorldState, agent_id: int | None = None,
                 step_budget: int = DEFAULT_STEP_BUDGET,
                 lidar: LidarConfig = LidarConfig(), gains: Gains | None = None):
        if not world.agents:
            raise ValueError("world has no agents")
        self.plan = plan
        self.agent_id = world.agents[0].id if agent_id is None else agent_id
        world.agent(self.agent_id)  # raises on unknown id
        self.lidar = lidar
        self.gains = gains or Gains(v_max=world.params.v_max,
                                    omega_max=world.params.omega_max)
        self.step_budget = step_budget
        self.memory = ExecutionMemory()
        self.trace = ExecutionTrace()
        self.call_index = 0
        self.state = self._new_state(world)
        self.finished = not plan.calls
        self._rec: tuple = (None, None, None)

    def _new_state(self, world: WorldState) -> BehaviorState | None:
        if self.call_index >= len(self.plan.calls):
            return None
        return BehaviorState(self.plan.calls[self.call_index], self.agent_id,
                             self.memory, step_budget=self.step_budget)

    def call_phases(self) -> list[dict]:
        """Phase of every call in the plan right now (completed calls keep
        their final phase; unreached ones are pending). This is what a UI
        renders as badges, so instantly-completed calls still show up."""
        out = []
        for i, call in enumerate(self.plan.calls):
            if i < len(self.trace.calls):
                result = self.trace.calls[i]
                out.append({"name": result.name, "phase": result.phase})
            elif self.state is not None and i == self.call_index:
                out.append({"name": call.name, "phase": self.state.phase})
            else:
                out.append({"name": call.name, "phase": "pending"})
        return out

    def _finalize_call(self, world: WorldState) -> None:
        state = self.state
        start = self.trace.calls[-1].end_tick if self.trace.calls else 0
        self.trace.calls.append(CallResult(
            state.call.name, state.call.args, state.phase, state.reason,
            start, world.clock.tick))
        if state.phase == FAILED:
            self.finished = True
            self.state = None
            return
        self.call_index += 1
        self.state = self._new_state(world)
        if self.state is None:
            self.finished = True

    def decide(self, world: WorldState) -> Twist | Mutation | None:
        """Evaluate the active call for this tick (cascading through calls
        that complete without acting) and remember what the tick's record
        should describe. The caller applies the action and steps the world."""
        action = None
        while self.state is not None:
            action, self.state = execute_primitive(
                self.state.call, world, self.state, self.lidar, self.gains)
            if action is None and self.state.terminal and self.state.phase == DONE:
                self._finalize_call(world)
                if self.finished:
                    break
                continue  # cascade into the next call within the same tick
            break

        if self.state is not None:
            self._rec = (self.call_index, self.state.call, self.state.phase)
        else:
            last = self.trace.calls[-1] if self.trace.calls else None
            self._rec = ((len(self.trace.calls) - 1, PrimitiveCall(last.name, last.args),
                          last.phase) if last else (None, None, None))
        return action

    def apply_mutation(self, world: WorldState, action: Mutation) -> tuple[WorldState, Event]:
        if action.kind == "pickup":
            return pick_up_ball(world, self.agent_id, action.ball_id)
        return drop_ball(world, self.agent_id)

    def observe(self, world: WorldState, events: list[Event]) -> TickRecord:
        """Post-step bookkeeping: finalize a terminal call and append the
        tick record (call identity captured by decide)."""
        if self.state is not None and self.state.terminal:
            self._finalize_call(world)
        rec_index, rec_call, rec_phase = self._rec
        record = TickRecord(
            tick=world.clock.tick,
            t=world.clock.t,
            agents=[{"id": a.id, "x": a.pose.x, "y": a.pose.y, "theta": a.pose.theta}
                    for a in world.agents],
            call_index=rec_index,
            call=rec_call.name if rec_call else None,
            phase=rec_phase,
            events=[e.to_dict() for e in events],
        )
        self.trace.records.append(record)
        self.trace.final_world = world
        return record

    def tick(self, world: WorldState) -> tuple[WorldState, TickRecord | None]:
        """Standalone driving: decide, apply, step (idle agents get zero
        twists), record. Returns (world, None) once finished."""
        if self.finished:
            return world, None
        action = self.decide(world)
        events: list[Event] = []
        if isinstance(action, Mutation):
            world, ev = self.apply_mutation(world, action)
            events.append(ev)
        commands = {a.id: Twist(0.0, 0.0) for a in world.agents}
        if isinstance(action, Twist):
            commands[self.agent_id] = action
        world, step_events = step_world(world, commands)
        events.extend(step_events)
        record = self.observe(world, events)
        return world, record


def run_plan(plan: Plan, world: WorldState, agent_id: int | None = None,
             step_budget: int = DEFAULT_STEP_BUDGET,
             lidar: LidarConfig = LidarConfig(),
             max_total_ticks: int = 200_000) -> ExecutionTrace:
    """Execute the calls strictly in order, stopping at the first failure."""
    runner = PlanRunner(plan, world, agent_id, step_budget, lidar)
    ticks = 0
    while not runner.finished:
        world, _ = runner.tick(world)
        ticks += 1
        if ticks > max_total_ticks:  # safety net; budgets should fire first
            raise RuntimeError("plan execution exceeded the global tick cap")
    runner.trace.final_world = world
    return runner.trace
