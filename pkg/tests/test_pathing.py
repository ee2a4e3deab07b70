import math

import pytest

from navsim.kinematics import Pose, Twist
from navsim.pathing import (
    Gains, NoPath, Occupancy, PathPlan, bfs_reachable, follow_path,
    occupancy_from_world, plan_path,
)
from navsim.procgen import generate_environment
from navsim.rng import Rng

from conftest import fetch_spec


def random_grid(rng: Rng, cols=12, rows=10, p_block=0.3) -> Occupancy:
    free = [[rng.random() >= p_block for _ in range(cols)] for _ in range(rows)]
    return Occupancy.from_grid(free)


def pick_free(rng: Rng, occ: Occupancy):
    cells = [(c, r) for r in range(occ.rows) for c in range(occ.cols)
             if occ.is_free(c, r)]
    return rng.choice(cells)


class TestPlanPath:
    def test_straight_line_on_empty_grid(self):
        occ = Occupancy.from_grid([[True] * 5 for _ in range(5)])
        plan = plan_path(occ, (0.5, 0.5), (0.5, 4.5))
        assert len(plan.waypoints) == 5
        assert plan.total_length == pytest.approx(4.0)
        assert plan.waypoints[0] == (0.5, 0.5)
        assert plan.waypoints[-1] == (0.5, 4.5)

    def test_enclosed_target_is_no_path(self):
        free = [[True] * 5 for _ in range(5)]
        for c, r in ((3, 3), (3, 4), (4, 3)):
            free[r][c] = False
        occ = Occupancy.from_grid(free)
        free[4][4] = True  # target cell itself is free but walled off
        with pytest.raises(NoPath):
            plan_path(occ, (0.5, 0.5), (4.5, 4.5))

    def test_blocked_goal_cell_is_no_path(self):
        free = [[True] * 3 for _ in range(3)]
        free[2][2] = False
        occ = Occupancy.from_grid(free)
        with pytest.raises(NoPath):
            plan_path(occ, (0.5, 0.5), (2.5, 2.5))

    def test_out_of_bounds_rejected(self):
        occ = Occupancy.from_grid([[True] * 3 for _ in range(3)])
        with pytest.raises(ValueError):
            plan_path(occ, (-1.0, 0.5), (2.5, 2.5))

    def test_final_target_replaces_last_waypoint(self):
        occ = Occupancy.from_grid([[True] * 5 for _ in range(5)])
        plan = plan_path(occ, (0.5, 0.5), (4.5, 0.5), final_target=(4.3, 0.7))
        assert plan.waypoints[-1] == (4.3, 0.7)

    def test_astar_matches_bfs_on_random_solvable_grids(self):
        rng = Rng(7)
        solved = 0
        while solved < 50:
            occ = random_grid(rng)
            start = pick_free(rng, occ)
            goal = pick_free(rng, occ)
            dist = bfs_reachable(occ, start)
            if goal not in dist:
                continue
            plan = plan_path(occ, occ.center(*start), occ.center(*goal))
            assert len(plan.waypoints) - 1 == dist[goal]
            solved += 1

    def test_nopath_agrees_with_bfs_on_unsolvable_grids(self):
        rng = Rng(8)
        unsolvable = 0
        while unsolvable < 50:
            occ = random_grid(rng, p_block=0.45)
            start = pick_free(rng, occ)
            goal = pick_free(rng, occ)
            if goal in bfs_reachable(occ, start):
                continue
            with pytest.raises(NoPath):
                plan_path(occ, occ.center(*start), occ.center(*goal))
            unsolvable += 1

    def test_sealed_edges_respected(self):
        occ = Occupancy.from_grid([[True] * 4 for _ in range(1)])
        occ.sealed = frozenset({((1, 0), (2, 0))})
        with pytest.raises(NoPath):
            plan_path(occ, (0.5, 0.5), (3.5, 0.5))


class TestOccupancyFromWorld:
    def test_obstacle_cells_blocked_with_margin(self, demo_world):
        occ = occupancy_from_world(demo_world)
        for ob in demo_world.obstacles:
            assert not occ.is_free(*occ.cell_of(ob.cx, ob.cy))

    def test_agent_and_target_cells_free(self, demo_world):
        occ = occupancy_from_world(demo_world)
        agent = demo_world.agents[0]
        assert occ.is_free(*occ.cell_of(agent.pose.x, agent.pose.y))
        for ball in demo_world.balls:
            assert occ.is_free(*occ.cell_of(ball.x, ball.y))
        for zone in demo_world.zones:
            assert occ.is_free(*occ.cell_of(zone.cx, zone.cy))

    def test_passage_connects_areas(self):
        from navsim.procgen import AreaSpec, EnvironmentSpec
        spec = EnvironmentSpec(seed=21, areas=(
            AreaSpec(6, 6, agents=1, exits=(3,)),
            AreaSpec(6, 6, zones={"Red": 1}, entries=(3,)),
        ))
        world = generate_environment(spec)
        occ = occupancy_from_world(world)
        agent = world.agents[0]
        zone = world.zones[0]
        reach = bfs_reachable(occ, occ.cell_of(agent.pose.x, agent.pose.y))
        assert occ.cell_of(zone.cx, zone.cy) in reach
        # non-passage boundary rows are sealed
        assert ((5, 0), (6, 0)) in occ.sealed or ((6, 0), (5, 0)) in occ.sealed


class TestFollowPath:
    def test_zero_twist_at_arrival(self):
        plan = PathPlan(((1.0, 1.0),), 0.0)
        twist = follow_path(Pose(1.05, 1.0, 0.3), plan)
        assert twist == Twist(0.0, 0.0)

    def test_waypoint_straight_ahead(self):
        plan = PathPlan(((0.0, 0.0), (3.0, 0.0)), 3.0)
        twist = follow_path(Pose(0.0, 0.0, 0.0), plan)
        assert twist.angular == 0.0
        assert twist.linear == pytest.approx(Gains().v_max)

    def test_waypoint_directly_behind(self):
        gains = Gains()
        plan = PathPlan(((-2.0, 0.0),), 0.0)
        twist = follow_path(Pose(0.0, 0.0, 0.0), plan, gains)
        assert twist.linear == pytest.approx(0.0, abs=1e-12)
        expected_mag = min(gains.k_theta * math.pi, gains.omega_max)
        assert abs(twist.angular) == pytest.approx(expected_mag)
        # sign matches the normalized heading error (pi wraps to -pi)
        from navsim.kinematics import normalize_angle
        err = normalize_angle(math.atan2(0.0, -2.0) - 0.0)
        assert math.copysign(1, twist.angular) == math.copysign(1, err)

    def test_converges_onto_segment(self):
        plan = PathPlan(((0.0, 0.0), (6.0, 0.0)), 6.0)
        pose = Pose(0.0, 0.8, 0.0)
        for _ in range(400):
            twist = follow_path(pose, plan)
            from navsim.kinematics import integrate_step
            pose = integrate_step(pose, twist, 0.05)
        assert pose.distance_to(6.0, 0.0) <= Gains().arrival_radius + 0.05

    def test_empty_plan_rejected(self):
        with pytest.raises(ValueError):
            follow_path(Pose(0, 0, 0), PathPlan((), 0.0))
