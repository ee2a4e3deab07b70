"""Grid path planning and path following.

Occupancy is a world-aligned cell grid: a cell is drivable when no obstacle
footprint, inflated by the robot radius plus a safety margin, touches it.
Adjacent free cells are then connected except across sealed edges (walls
between areas, minus passage gaps). A* runs over that graph; a pure-pursuit
style follower turns the waypoint polyline into twists.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass

from .geometry import Rect, dist_point_rect, dist_segment_rect, rects_overlap
from .kinematics import Pose, Twist, normalize_angle
from .world import CircleObstacle, RectObstacle, WorldState

Cell = tuple[int, int]


class NoPath(Exception):
    def __init__(self, start: Cell, goal: Cell):
        super().__init__(f"no path from cell {start} to cell {goal}")
        self.start = start
        self.goal = goal


@dataclass(frozen=True)
class PathPlan:
    waypoints: tuple[tuple[float, float], ...]
    total_length: float


@dataclass(frozen=True)
class Gains:
    lookahead: float = 0.6
    k_theta: float = 2.0
    v_max: float = 1.0
    omega_max: float = math.pi
    arrival_radius: float = 0.15


@dataclass
class Occupancy:
    """Boolean cell grid with optional sealed edges between adjacent cells."""
    x0: float
    y0: float
    cell: float
    cols: int
    rows: int
    free: list[list[bool]]  # indexed [row][col]
    sealed: frozenset[tuple[Cell, Cell]] = frozenset()

    @classmethod
    def from_grid(cls, free_rows: list[list[bool]], cell: float = 1.0,
                  x0: float = 0.0, y0: float = 0.0) -> "Occupancy":
        rows = len(free_rows)
        cols = len(free_rows[0]) if rows else 0
        return cls(x0, y0, cell, cols, rows, [list(r) for r in free_rows])

    def in_bounds(self, c: int, r: int) -> bool:
        return 0 <= c < self.cols and 0 <= r < self.rows

    def is_free(self, c: int, r: int) -> bool:
        return self.in_bounds(c, r) and self.free[r][c]

    def _edge_open(self, a: Cell, b: Cell) -> bool:
        return (a, b) not in self.sealed and (b, a) not in self.sealed

    def neighbors(self, c: int, r: int):
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nc, nr = c + dc, r + dr
            if self.is_free(nc, nr) and self._edge_open((c, r), (nc, nr)):
                yield (nc, nr)

    def cell_of(self, x: float, y: float) -> Cell:
        c = min(self.cols - 1, max(0, int((x - self.x0) / self.cell)))
        r = min(self.rows - 1, max(0, int((y - self.y0) / self.cell)))
        return (c, r)

    def center(self, c: int, r: int) -> tuple[float, float]:
        return (self.x0 + (c + 0.5) * self.cell, self.y0 + (r + 0.5) * self.cell)

    def contains_point(self, x: float, y: float) -> bool:
        return (self.x0 <= x <= self.x0 + self.cols * self.cell
                and self.y0 <= y <= self.y0 + self.rows * self.cell)


def occupancy_from_world(world: WorldState, inflate: float | None = None) -> Occupancy:
    """Drivability grid for the whole world (areas lined up along +x).

    A cell is blocked when it lies outside every area or an obstacle is
    within `inflate` of the cell square. Area-boundary edges are sealed
    except at passage gaps, which are detected by the absence of a wall
    segment across the shared edge.
    """
    if inflate is None:
        inflate = world.params.robot_radius + 0.2
    cell = world.areas[0].cell
    cols = sum(a.cols for a in world.areas)
    rows = max(a.rows for a in world.areas)
    x0 = min(a.x0 for a in world.areas)
    y0 = min(a.y0 for a in world.areas)

    free = [[False] * cols for _ in range(rows)]
    for r in range(rows):
        for c in range(cols):
            cx, cy = x0 + (c + 0.5) * cell, y0 + (r + 0.5) * cell
            area = world.area_of(cx, cy)
            if area is None:
                continue
            square = Rect(cx, cy, cell / 2, cell / 2, 0.0)
            blocked = False
            for ob in world.obstacles:
                if isinstance(ob, RectObstacle):
                    d = _dist_rect_rect(ob.shape(), square)
                else:
                    d = max(0.0, dist_point_rect(square, ob.cx, ob.cy) - ob.r)
                if d < inflate:
                    blocked = True
                    break
            free[r][c] = not blocked

    sealed: set[tuple[Cell, Cell]] = set()
    col_offset = 0
    for i, area in enumerate(world.areas[:-1]):
        col_offset += area.cols
        boundary_x = x0 + col_offset * cell
        for r in range(rows):
            a, b = (col_offset - 1, r), (col_offset, r)
            if _wall_across(world, boundary_x, y0 + r * cell, y0 + (r + 1) * cell):
                sealed.add((a, b))
    return Occupancy(x0, y0, cell, cols, rows, free, frozenset(sealed))


def _wall_across(world: WorldState, x: float, y1: float, y2: float) -> bool:
    """Does any vertical wall segment cover the midpoint of (y1, y2) at x?"""
    ym = 0.5 * (y1 + y2)
    for w in world.walls:
        if abs(w.ax - x) < 1e-9 and abs(w.bx - x) < 1e-9:
            lo, hi = min(w.ay, w.by), max(w.ay, w.by)
            if lo - 1e-9 <= ym <= hi + 1e-9:
                return True
    return False


def _dist_rect_rect(a: Rect, b: Rect) -> float:
    if rects_overlap(a, b):
        return 0.0
    return min(dist_segment_rect(edge, a) for edge in b.edges())


def bfs_reachable(occ: Occupancy, start: Cell) -> dict[Cell, int]:
    """Cells reachable from start with their hop distance (the A* oracle)."""
    dist = {start: 0}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for nxt in occ.neighbors(*cur):
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def plan_path(occ: Occupancy, start_xy: tuple[float, float],
              goal_xy: tuple[float, float],
              final_target: tuple[float, float] | None = None) -> PathPlan:
    """A* over free cells (4-connected, unit cost, Manhattan heuristic).

    The start cell is treated as drivable even if marked blocked (the robot
    is physically there); a blocked goal cell raises NoPath. Waypoints are
    cell centers; when final_target is given the last waypoint is replaced
    by that exact point (it must lie in the goal cell).
    """
    for x, y in (start_xy, goal_xy):
        if not occ.contains_point(x, y):
            raise ValueError(f"position ({x}, {y}) outside the grid bounds")
    start = occ.cell_of(*start_xy)
    goal = occ.cell_of(*goal_xy)
    if not occ.is_free(*goal):
        raise NoPath(start, goal)

    def h(cell: Cell) -> int:
        return abs(cell[0] - goal[0]) + abs(cell[1] - goal[1])

    counter = 0
    open_heap: list[tuple[int, int, int, Cell]] = [(h(start), 0, counter, start)]
    g_score: dict[Cell, int] = {start: 0}
    came: dict[Cell, Cell] = {}
    closed: set[Cell] = set()
    while open_heap:
        _, g, _, current = heapq.heappop(open_heap)
        if current == goal:
            cells = [current]
            while current in came:
                current = came[current]
                cells.append(current)
            cells.reverse()
            waypoints = [occ.center(*cell) for cell in cells]
            if final_target is not None:
                waypoints[-1] = final_target
            length = sum(math.dist(waypoints[i], waypoints[i + 1])
                         for i in range(len(waypoints) - 1))
            return PathPlan(tuple(waypoints), length)
        if current in closed:
            continue
        closed.add(current)
        neighbors = occ.neighbors(*current) if current != start else _start_neighbors(occ, start)
        for nxt in neighbors:
            tentative = g + 1
            if tentative < g_score.get(nxt, 1 << 30):
                g_score[nxt] = tentative
                came[nxt] = current
                counter += 1
                heapq.heappush(open_heap, (tentative + h(nxt), tentative, counter, nxt))
    raise NoPath(start, goal)


def _start_neighbors(occ: Occupancy, start: Cell):
    """Start-cell neighbors ignoring the start cell's own blocked flag."""
    c, r = start
    for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nc, nr = c + dc, r + dr
        if occ.is_free(nc, nr) and occ._edge_open((c, r), (nc, nr)):
            yield (nc, nr)


# ---------------------------------------------------------------------------
# path following

def _project_arc(waypoints, x: float, y: float) -> float:
    """Arc-length position of the closest point on the polyline."""
    best_d = math.inf
    best_s = 0.0
    s = 0.0
    for i in range(len(waypoints) - 1):
        ax, ay = waypoints[i]
        bx, by = waypoints[i + 1]
        vx, vy = bx - ax, by - ay
        seg_len = math.hypot(vx, vy)
        if seg_len < 1e-12:
            continue
        t = max(0.0, min(1.0, ((x - ax) * vx + (y - ay) * vy) / (seg_len * seg_len)))
        d = math.hypot(x - (ax + t * vx), y - (ay + t * vy))
        if d < best_d - 1e-12:
            best_d = d
            best_s = s + t * seg_len
        s += seg_len
    return best_s


def _point_at_arc(waypoints, s: float) -> tuple[float, float]:
    remaining = max(0.0, s)
    for i in range(len(waypoints) - 1):
        ax, ay = waypoints[i]
        bx, by = waypoints[i + 1]
        seg_len = math.hypot(bx - ax, by - ay)
        if remaining <= seg_len or i == len(waypoints) - 2:
            if seg_len < 1e-12:
                return (bx, by)
            t = min(1.0, remaining / seg_len)
            return (ax + t * (bx - ax), ay + t * (by - ay))
        remaining -= seg_len
    return waypoints[-1]


def lookahead_point(pose: Pose, plan: PathPlan,
                    gains: Gains = Gains()) -> tuple[float, float]:
    """The steering target: `lookahead` meters past the robot's projection
    onto the waypoint polyline (clamped to the final waypoint)."""
    if not plan.waypoints:
        raise ValueError("empty path plan")
    if len(plan.waypoints) == 1:
        return plan.waypoints[0]
    s = _project_arc(plan.waypoints, pose.x, pose.y)
    return _point_at_arc(plan.waypoints, s + gains.lookahead)


def heading_error(pose: Pose, target: tuple[float, float]) -> float:
    return normalize_angle(math.atan2(target[1] - pose.y, target[0] - pose.x)
                           - pose.theta)


def follow_path(pose: Pose, plan: PathPlan, gains: Gains = Gains()) -> Twist:
    """Steer toward the point `lookahead` meters ahead along the path.

    omega = k_theta * heading_error (clamped); v = v_max * max(0, cos(err)),
    so the robot pivots in place when the target is behind it. Returns a
    zero twist within arrival_radius of the final waypoint.
    """
    if not plan.waypoints:
        raise ValueError("empty path plan")
    gx, gy = plan.waypoints[-1]
    if pose.distance_to(gx, gy) <= gains.arrival_radius:
        return Twist(0.0, 0.0)
    target = lookahead_point(pose, plan, gains)
    err = heading_error(pose, target)
    omega = max(-gains.omega_max, min(gains.omega_max, gains.k_theta * err))
    v = gains.v_max * max(0.0, math.cos(err))
    return Twist(v, omega)
