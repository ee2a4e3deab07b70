import json
import math

import pytest

from navsim.executor import (
    DONE, FAILED, BehaviorState, ExecutionMemory, Mutation, PlanRunner,
    execute_primitive, line_of_sight, run_plan, visible_ball,
)
from navsim.geometry import Segment
from navsim.kinematics import Pose, SimClock, Twist
from navsim.lang import PrimitiveCall, parse_plan
from navsim.procgen import generate_environment
from navsim.world import Agent, Area, Ball, RectObstacle, WorldState, Zone

from conftest import fetch_spec

CANONICAL_CALLS = ("search_ball('Orange'); catch_the_ball('Orange'); "
               "search_zone('Green'); go_to_zone('Green'); leave_ball();")


def room(**kwargs) -> WorldState:
    walls = (Segment(0, 0, 10, 0), Segment(10, 0, 10, 10),
             Segment(10, 10, 0, 10), Segment(0, 10, 0, 0))
    defaults = dict(areas=(Area(0, 0.0, 0.0, 10, 10),),
                    agents=(Agent(0, Pose(2.5, 2.5, 0.0)),),
                    walls=walls, clock=SimClock(0, 0.05))
    defaults.update(kwargs)
    return WorldState(**defaults)


def fresh_state(call: PrimitiveCall, agent_id=0, memory=None) -> BehaviorState:
    return BehaviorState(call, agent_id, memory or ExecutionMemory())


class TestVisibility:
    def test_clear_line_of_sight(self):
        world = room()
        assert line_of_sight(world, 1.0, 1.0, 9.0, 9.0)

    def test_obstacle_blocks(self):
        world = room(obstacles=(RectObstacle(5.0, 5.0, 0.5, 0.5),))
        assert not line_of_sight(world, 1.0, 5.0, 9.0, 5.0)
        assert line_of_sight(world, 1.0, 1.0, 9.0, 1.0)

    def test_visible_ball_honors_range(self):
        world = room(balls=(Ball(0, "Orange", 9.5, 2.5),))
        assert visible_ball(world, 0, "Orange", max_range=10.0) is not None
        assert visible_ball(world, 0, "Orange", max_range=5.0) is None


class TestPrimitives:
    def test_leave_ball_without_carrying_fails(self):
        world = room()
        action, state = execute_primitive(PrimitiveCall("leave_ball"), world,
                                          fresh_state(PrimitiveCall("leave_ball")))
        assert action is None
        assert state.phase == FAILED
        assert "not carrying" in state.reason

    def test_leave_ball_drops_when_carrying(self):
        world = room(balls=(Ball(0, "Orange", 2.5, 2.5, carried_by=0),),
                     zones=(Zone(0, "Green", 2.5, 2.5),))
        action, state = execute_primitive(PrimitiveCall("leave_ball"), world,
                                          fresh_state(PrimitiveCall("leave_ball")))
        assert isinstance(action, Mutation) and action.kind == "drop"
        assert state.phase == DONE

    def test_search_zone_known_from_map(self):
        world = room(zones=(Zone(0, "Green", 8.0, 8.0),))
        call = PrimitiveCall("search_zone", ("Green",))
        action, state = execute_primitive(call, world, fresh_state(call))
        assert action is None and state.phase == DONE
        assert state.target == (8.0, 8.0)

    def test_search_missing_zone_fails(self):
        call = PrimitiveCall("search_zone", ("Purple",))
        action, state = execute_primitive(call, room(), fresh_state(call))
        assert state.phase == FAILED

    def test_catch_before_localization_fails(self):
        world = room(balls=(Ball(0, "Orange", 8.0, 8.0),))
        call = PrimitiveCall("catch_the_ball", ("Orange",))
        action, state = execute_primitive(call, world, fresh_state(call))
        assert state.phase == FAILED
        assert "never localized" in state.reason

    def test_search_ball_immediate_when_visible(self):
        world = room(balls=(Ball(0, "Orange", 5.0, 2.5),))
        call = PrimitiveCall("search_ball", ("Orange",))
        memory = ExecutionMemory()
        action, state = execute_primitive(call, world, fresh_state(call, memory=memory))
        assert action is None and state.phase == DONE
        assert memory.known_balls["Orange"] == 0

    def test_catch_within_radius_emits_pickup(self):
        world = room(balls=(Ball(0, "Orange", 2.7, 2.5),))
        memory = ExecutionMemory()
        memory.known_balls["Orange"] = 0
        call = PrimitiveCall("catch_the_ball", ("Orange",))
        action, state = execute_primitive(call, world, fresh_state(call, memory=memory))
        assert isinstance(action, Mutation) and action.kind == "pickup"
        assert state.phase == DONE

    def test_budget_exhaustion_fails(self):
        world = room(balls=(Ball(0, "Orange", 8.0, 8.0),),
                     obstacles=(RectObstacle(5.0, 4.0, 0.6, 0.6),))
        memory = ExecutionMemory()
        memory.known_balls["Orange"] = 0
        call = PrimitiveCall("catch_the_ball", ("Orange",))
        state = fresh_state(call, memory=memory)
        state.step_budget = 3
        for _ in range(4):
            action, state = execute_primitive(call, world, state)
        assert state.phase == FAILED
        assert "budget" in state.reason


class TestRunPlan:
    def test_canonical_plan_full_delivery(self, demo_world):
        trace = run_plan(parse_plan(CANONICAL_CALLS), demo_world)
        assert trace.ok
        assert [c.name for c in trace.calls] == [
            "search_ball", "catch_the_ball", "search_zone", "go_to_zone",
            "leave_ball"]
        assert all(c.phase == DONE for c in trace.calls)
        world = trace.final_world
        ball = world.balls[0]
        zone = next(z for z in world.zones if z.color == "Green")
        assert math.hypot(ball.x - zone.cx, ball.y - zone.cy) <= zone.r
        assert world.clock.tick <= 5000

    def test_single_failed_call_trace(self, demo_world):
        trace = run_plan(parse_plan("leave_ball();"), demo_world)
        assert not trace.ok
        assert len(trace.calls) == 1
        assert trace.calls[0].phase == FAILED

    def test_stops_at_first_failure(self, demo_world):
        trace = run_plan(parse_plan("leave_ball(); search_zone('Green');"),
                         demo_world)
        assert len(trace.calls) == 1  # second call never starts

    def test_walled_off_zone_reports_nopath_on_call_4(self):
        # the green zone sits in a sealed pocket: calls 1-3 succeed, 4 fails
        pocket = (RectObstacle(7.0, 8.45, 1.45, 1.45),
                  RectObstacle(9.55, 8.45, 0.44, 1.45),
                  RectObstacle(8.5, 6.0, 1.49, 0.9))
        world = room(balls=(Ball(0, "Orange", 3.5, 2.5),),
                     zones=(Zone(0, "Green", 8.6, 8.6),),
                     obstacles=pocket)
        trace = run_plan(parse_plan(CANONICAL_CALLS.replace(
            "search_zone('Green'); ", "search_zone('Green'); ")), world)
        phases = [(c.name, c.phase) for c in trace.calls]
        assert phases[:3] == [("search_ball", DONE), ("catch_the_ball", DONE),
                              ("search_zone", DONE)]
        assert trace.calls[3].name == "go_to_zone"
        assert trace.calls[3].phase == FAILED
        assert "no path" in trace.calls[3].reason

    def test_ball_conservation(self, demo_world):
        trace = run_plan(parse_plan(CANONICAL_CALLS), demo_world)
        assert len(trace.final_world.balls) == len(demo_world.balls)
        carried = [b for b in trace.final_world.balls if b.carried_by is not None]
        assert carried == []

    def test_trace_jsonl_schema(self, demo_world):
        trace = run_plan(parse_plan("search_zone('Red'); go_to_zone('Red');"),
                         demo_world)
        lines = trace.to_jsonl().strip().splitlines()
        assert len(lines) == len(trace.records)
        first = json.loads(lines[0])
        assert set(first) == {"tick", "t", "agents", "call_index", "call",
                              "phase", "events"}

    def test_terminal_done_implies_postconditions(self, demo_world):
        # catch done => ball carried at that point; go_to_zone done => agent
        # center inside the zone disc
        trace = run_plan(parse_plan("search_ball('Orange'); "
                                    "catch_the_ball('Orange');"), demo_world)
        assert trace.ok
        world = trace.final_world
        assert world.carried_ball(0) is not None

        trace2 = run_plan(parse_plan("search_zone('Red'); go_to_zone('Red');"),
                          demo_world)
        assert trace2.ok
        world2 = trace2.final_world
        agent = world2.agent(0)
        zone = next(z for z in world2.zones if z.color == "Red")
        assert zone.contains(agent.pose.x, agent.pose.y)

    def test_exploration_finds_hidden_ball(self):
        # ball tucked behind an obstacle: not visible from spawn, the sweep
        # must localize it
        world = room(
            agents=(Agent(0, Pose(1.5, 1.5, 0.0)),),
            balls=(Ball(0, "Orange", 8.5, 8.5),),
            obstacles=(RectObstacle(5.0, 5.0, 0.7, 0.7, 0.2),),
            zones=(Zone(0, "Green", 2.0, 8.0),),
        )
        assert visible_ball(world, 0, "Orange", 6.0) is None
        from navsim.sensors import LidarConfig
        trace = run_plan(parse_plan(CANONICAL_CALLS), world,
                         lidar=LidarConfig(max_range=6.0))
        assert trace.ok, trace.calls

    def test_cross_area_fetch_through_passage(self):
        # the ball sits in the second room; the sweep must drive through the
        # shared-wall gap, and the delivery zone is back in the first room
        from navsim.procgen import AreaSpec, EnvironmentSpec
        from navsim.sensors import LidarConfig
        spec = EnvironmentSpec(seed=33, areas=(
            AreaSpec(6, 6, zones={"Red": 1}, agents=1, exits=(3,)),
            AreaSpec(6, 6, balls={"Blue": 1}, entries=(3,)),
        ))
        world = generate_environment(spec)
        plan = parse_plan("search_ball('Blue'); catch_the_ball('Blue'); "
                          "search_zone('Red'); go_to_zone('Red'); leave_ball();")
        trace = run_plan(plan, world, lidar=LidarConfig(max_range=4.0))
        assert trace.ok, [(c.name, c.phase, c.reason) for c in trace.calls]
        ball = trace.final_world.balls[0]
        zone = trace.final_world.zones[0]
        assert math.hypot(ball.x - zone.cx, ball.y - zone.cy) <= zone.r

    def test_seed_sweep_20_worlds(self):
        for seed in range(20):
            world = generate_environment(fetch_spec(seed=seed))
            trace = run_plan(parse_plan(CANONICAL_CALLS), world)
            assert trace.ok, (seed, [(c.name, c.phase, c.reason)
                                     for c in trace.calls])
            assert trace.final_world.clock.tick <= 5000, seed
            ball = trace.final_world.balls[0]
            zone = next(z for z in trace.final_world.zones if z.color == "Green")
            assert math.hypot(ball.x - zone.cx, ball.y - zone.cy) <= zone.r, seed
