"""Seeded procedural world generation.

Two stages, mirroring a grid-first design: partition_grid lays the plan out
on discrete cells (one cell per object), then generate_environment
instantiates continuous geometry (jittered positions, sampled obstacle
shapes) and rejects layouts that fail overlap or reachability checks.
Everything is a pure function of the spec: the same seed always yields the
same world, attempt by attempt.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .colors import PALETTE, canonical_color
from .geometry import (
    Circle, Rect, Segment, circles_overlap, rect_circle_overlap, rects_overlap,
)
from .kinematics import Pose, SimClock
from .rng import Rng, derive_seed
from .world import (
    Agent, Area, Ball, CircleObstacle, RectObstacle, WorldParams, WorldState, Zone,
    clearance_to_static,
)

FREE = "free"
OBSTACLE = "obstacle"
BALL = "ball"
ZONE = "zone"
AGENT = "agent"
ENTRY = "entry"
EXIT = "exit"

OBSTACLE_SIDE_RANGE = (0.4, 1.5)  # meters, rectangles' sides and circles' diameters
ZONE_RADIUS = 0.5
BALL_RADIUS = 0.1
JITTER_FRACTION = 0.25  # of cell size, per axis
NAV_MARGIN = 0.2        # extra inflation beyond the robot radius for drivability
MAX_SHAPE_ROLLS = 40    # continuous re-rolls per object before the attempt fails


class InvalidSpec(ValueError):
    pass


class InfeasiblePlacement(RuntimeError):
    def __init__(self, attempts: int):
        super().__init__(f"no feasible placement found in {attempts} attempts")
        self.attempts = attempts


def _color_counts(value) -> tuple[tuple[str, int], ...]:
    pairs = value.items() if hasattr(value, "items") else value
    return tuple((str(c), int(n)) for c, n in pairs)


@dataclass(frozen=True)
class AreaSpec:
    width_cells: int
    height_cells: int
    obstacle_count: int = 0
    balls: tuple[tuple[str, int], ...] = ()
    zones: tuple[tuple[str, int], ...] = ()
    agents: int = 0
    entries: tuple[int, ...] = ()  # rows on the west boundary shared with the previous area
    exits: tuple[int, ...] = ()    # rows on the east boundary shared with the next area

    def __post_init__(self):
        object.__setattr__(self, "balls", _color_counts(self.balls))
        object.__setattr__(self, "zones", _color_counts(self.zones))
        object.__setattr__(self, "entries", tuple(int(r) for r in self.entries))
        object.__setattr__(self, "exits", tuple(int(r) for r in self.exits))

    @property
    def cell_count(self) -> int:
        return self.width_cells * self.height_cells

    @property
    def item_total(self) -> int:
        return (self.obstacle_count + self.agents
                + sum(n for _, n in self.balls) + sum(n for _, n in self.zones))


@dataclass(frozen=True)
class EnvironmentSpec:
    seed: int
    areas: tuple[AreaSpec, ...]
    cell_size: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "areas", tuple(self.areas))


def validate_spec(spec: EnvironmentSpec) -> None:
    if not spec.areas:
        raise InvalidSpec("spec has no areas")
    if not (0 <= spec.seed < 2 ** 64):
        raise InvalidSpec("seed must be an unsigned 64-bit integer")
    if spec.cell_size <= 0:
        raise InvalidSpec("cell_size must be > 0")
    for i, area in enumerate(spec.areas):
        if area.width_cells < 3 or area.height_cells < 3:
            raise InvalidSpec(f"area {i}: width and height must be >= 3 cells")
        if area.obstacle_count < 0 or area.agents < 0:
            raise InvalidSpec(f"area {i}: negative counts")
        for color, n in area.balls + area.zones:
            if canonical_color(color) != color:
                raise InvalidSpec(f"area {i}: color {color!r} not in palette {PALETTE}")
            if n < 0:
                raise InvalidSpec(f"area {i}: negative count for {color}")
        if area.item_total > area.cell_count // 2:
            raise InvalidSpec(
                f"area {i}: {area.item_total} items exceed 50% of {area.cell_count} cells")
        if i == 0 and area.entries:
            raise InvalidSpec("area 0 cannot have entries (no western neighbor)")
        if i == len(spec.areas) - 1 and area.exits:
            raise InvalidSpec(f"area {i} cannot have exits (no eastern neighbor)")
        if i > 0:
            prev = spec.areas[i - 1]
            if sorted(prev.exits) != sorted(area.entries):
                raise InvalidSpec(
                    f"areas {i - 1}/{i}: exits {prev.exits} do not match entries {area.entries}")
            shared = min(prev.height_cells, area.height_cells)
            for r in prev.exits:
                if not 0 <= r < shared:
                    raise InvalidSpec(
                        f"areas {i - 1}/{i}: passage row {r} is not on the shared boundary")
        if len(set(area.entries)) != len(area.entries) or len(set(area.exits)) != len(area.exits):
            raise InvalidSpec(f"area {i}: duplicate passage rows")


@dataclass
class AreaGrid:
    index: int
    cols: int
    rows: int
    kinds: dict[tuple[int, int], str] = field(default_factory=dict)
    labels: dict[tuple[int, int], str] = field(default_factory=dict)
    # placement order matters downstream: descriptions list items in
    # declaration order, so instantiation must not re-sort these
    obstacle_cells: list[tuple[int, int]] = field(default_factory=list)
    ball_cells: list[tuple[tuple[int, int], str]] = field(default_factory=list)
    zone_cells: list[tuple[tuple[int, int], str]] = field(default_factory=list)
    agent_cells: list[tuple[int, int]] = field(default_factory=list)

    def kind(self, c: int, r: int) -> str:
        return self.kinds.get((c, r), FREE)

    def cells_of(self, kind: str) -> list[tuple[int, int]]:
        return sorted(c for c, k in self.kinds.items() if k == kind)


@dataclass
class GridLayout:
    areas: list[AreaGrid]
    passages: list[tuple[int, int, int]]  # (west area index, east area index, row)
    cell_size: float = 1.0


@dataclass
class ConnectivityReport:
    ok: bool
    witnesses: dict[tuple[int, tuple[int, int], tuple[int, int]], tuple[tuple[int, int], ...]]
    failures: list[str]

    def __bool__(self) -> bool:
        return self.ok


def _adjacent_to_any(cell: tuple[int, int], others: set[tuple[int, int]]) -> bool:
    c, r = cell
    return any((c + dc, r + dr) in others
               for dc in (-1, 0, 1) for dr in (-1, 0, 1))


def partition_grid(spec: EnvironmentSpec, attempt: int = 0) -> GridLayout:
    """Assign every declared object a distinct cell. Deterministic in
    (spec, attempt)."""
    validate_spec(spec)
    rng = Rng(derive_seed(spec.seed, 1, attempt))
    grids: list[AreaGrid] = []
    passages: list[tuple[int, int, int]] = []
    for i, area in enumerate(spec.areas):
        grid = AreaGrid(i, area.width_cells, area.height_cells)
        for r in area.entries:
            grid.kinds[(0, r)] = ENTRY
        for r in area.exits:
            grid.kinds[(area.width_cells - 1, r)] = EXIT
            passages.append((i, i + 1, r))
        candidates = [(c, r) for r in range(area.height_cells)
                      for c in range(area.width_cells)
                      if (c, r) not in grid.kinds]

        def take() -> tuple[int, int]:
            return candidates.pop(rng.randrange(len(candidates)))

        for color, n in area.balls:
            for _ in range(n):
                cell = take()
                grid.kinds[cell] = BALL
                grid.labels[cell] = color
                grid.ball_cells.append((cell, color))
        for color, n in area.zones:
            for _ in range(n):
                cell = take()
                grid.kinds[cell] = ZONE
                grid.labels[cell] = color
                grid.zone_cells.append((cell, color))
        for _ in range(area.agents):
            cell = take()
            grid.kinds[cell] = AGENT
            grid.agent_cells.append(cell)

        # obstacles go last, keeping away from placements and passages when
        # possible: their continuous footprints may spill past the cell, and
        # a spill against a target cell would make the world undrivable
        keep_clear = set(grid.kinds)
        for _ in range(area.obstacle_count):
            roomy = [i for i, cand in enumerate(candidates)
                     if not _adjacent_to_any(cand, keep_clear)]
            if roomy:
                cell = candidates.pop(roomy[rng.randrange(len(roomy))])
            else:
                cell = take()
            grid.kinds[cell] = OBSTACLE
            grid.obstacle_cells.append(cell)
        grids.append(grid)
    return GridLayout(grids, passages, spec.cell_size)


def _bfs_grid(grid: AreaGrid, start: tuple[int, int]) -> dict[tuple[int, int], tuple[int, int] | None]:
    """Parents map of a 4-neighbor BFS over non-obstacle cells of one area."""
    parents: dict[tuple[int, int], tuple[int, int] | None] = {start: None}
    queue = deque([start])
    while queue:
        c, r = queue.popleft()
        for dc, dr in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nxt = (c + dc, r + dr)
            if not (0 <= nxt[0] < grid.cols and 0 <= nxt[1] < grid.rows):
                continue
            if nxt in parents or grid.kind(*nxt) == OBSTACLE:
                continue
            parents[nxt] = (c, r)
            queue.append(nxt)
    return parents


def _path_from(parents, cell) -> tuple[tuple[int, int], ...]:
    path = []
    while cell is not None:
        path.append(cell)
        cell = parents[cell]
    return tuple(reversed(path))


def check_connectivity(layout: GridLayout) -> ConnectivityReport:
    """True iff every agent cell reaches every ball, zone, and passage cell
    in its own area over non-obstacle cells (4-neighbor BFS)."""
    witnesses = {}
    failures = []
    for grid in layout.areas:
        targets = (grid.cells_of(BALL) + grid.cells_of(ZONE)
                   + grid.cells_of(ENTRY) + grid.cells_of(EXIT))
        for agent_cell in grid.cells_of(AGENT):
            parents = _bfs_grid(grid, agent_cell)
            for target in targets:
                if target in parents:
                    witnesses[(grid.index, agent_cell, target)] = _path_from(parents, target)
                else:
                    failures.append(
                        f"area {grid.index}: {grid.kind(*target)} at {target} "
                        f"unreachable from agent at {agent_cell}")
    return ConnectivityReport(not failures, witnesses, failures)


# ---------------------------------------------------------------------------
# continuous instantiation

def _area_origin(spec: EnvironmentSpec, index: int) -> tuple[float, float]:
    x0 = sum(a.width_cells for a in spec.areas[:index]) * spec.cell_size
    return (x0, 0.0)


def _build_walls(spec: EnvironmentSpec) -> tuple[Segment, ...]:
    cell = spec.cell_size
    walls: list[Segment] = []
    for i, area in enumerate(spec.areas):
        x0, y0 = _area_origin(spec, i)
        w, h = area.width_cells * cell, area.height_cells * cell
        walls.append(Segment(x0, y0, x0 + w, y0))          # south
        walls.append(Segment(x0, y0 + h, x0 + w, y0 + h))  # north
        if i == 0:
            walls.append(Segment(x0, y0, x0, y0 + h))      # west outer
        if i == len(spec.areas) - 1:
            walls.append(Segment(x0 + w, y0, x0 + w, y0 + h))  # east outer
        if i > 0:
            prev = spec.areas[i - 1]
            shared = min(prev.height_cells, area.height_cells) * cell
            gaps = sorted(r * cell for r in area.entries)
            y = 0.0
            for g in gaps:
                if g > y:
                    walls.append(Segment(x0, y, x0, g))
                y = g + cell
            if shared > y:
                walls.append(Segment(x0, y, x0, shared))
            # boundary above the shorter area belongs to whichever is taller
            taller = max(prev.height_cells, area.height_cells) * cell
            if taller > shared:
                walls.append(Segment(x0, shared, x0, taller))
    return tuple(walls)


def _jittered_center(area: Area, cell: tuple[int, int], rng: Rng,
                     jitter: float) -> tuple[float, float]:
    cx, cy = area.cell_center(*cell)
    return (cx + rng.uniform(-jitter, jitter), cy + rng.uniform(-jitter, jitter))


def _footprint_overlaps(shape, placed: list) -> bool:
    for other in placed:
        if isinstance(shape, Rect) and isinstance(other, Rect):
            if rects_overlap(shape, other):
                return True
        elif isinstance(shape, Rect):
            if rect_circle_overlap(shape, other):
                return True
        elif isinstance(other, Rect):
            if rect_circle_overlap(other, shape):
                return True
        elif circles_overlap(shape, other):
            return True
    return False


def _inside_area(shape, area: Area) -> bool:
    x1, y1 = area.x0, area.y0
    x2, y2 = area.x0 + area.width, area.y0 + area.height
    if isinstance(shape, Rect):
        return all(x1 <= px <= x2 and y1 <= py <= y2 for px, py in shape.corners())
    return (x1 <= shape.cx - shape.r and shape.cx + shape.r <= x2
            and y1 <= shape.cy - shape.r and shape.cy + shape.r <= y2)


def _too_close_to_cell(shape, area: Area, cell_idx: tuple[int, int],
                       clearance: float) -> bool:
    cx, cy = area.cell_center(*cell_idx)
    half = area.cell / 2
    square = Rect(cx, cy, half, half, 0.0)
    if isinstance(shape, Rect):
        if rects_overlap(shape, square):
            return True
        return min(_seg_rect_dist(edge, shape) for edge in square.edges()) < clearance
    from .geometry import dist_point_rect
    return dist_point_rect(square, shape.cx, shape.cy) - shape.r < clearance


def _seg_rect_dist(seg: Segment, rect: Rect) -> float:
    from .geometry import dist_segment_rect
    return dist_segment_rect(seg, rect)


def _instantiate(layout: GridLayout, spec: EnvironmentSpec, rng: Rng) -> WorldState | None:
    cell = spec.cell_size
    jitter = JITTER_FRACTION * cell
    params = WorldParams()
    areas = tuple(
        Area(i, *_area_origin(spec, i), spec.areas[i].width_cells,
             spec.areas[i].height_cells, cell)
        for i in range(len(spec.areas)))
    walls = _build_walls(spec)
    clearance = params.robot_radius + NAV_MARGIN

    placed: list = []  # all placed footprints, for pairwise overlap rejection
    obstacles: list = []
    balls: list[Ball] = []
    zones: list[Zone] = []
    agents: list[Agent] = []

    for grid, area in zip(layout.areas, areas):
        # cells the navigation grid must keep drivable: every placement or
        # passage cell. An obstacle whose inflated footprint touches one
        # would strand a target, so those rolls are rejected up front.
        reserved = ([c for c, _ in grid.ball_cells] + [c for c, _ in grid.zone_cells]
                    + grid.agent_cells + grid.cells_of(ENTRY) + grid.cells_of(EXIT))
        for cell_idx in grid.obstacle_cells:
            for roll in range(MAX_SHAPE_ROLLS):
                x, y = _jittered_center(area, cell_idx, rng, jitter)
                lo, hi = OBSTACLE_SIDE_RANGE
                if roll >= MAX_SHAPE_ROLLS // 2:
                    hi = (lo + hi) / 2  # persistent misfits: try smaller shapes
                if rng.random() < 0.5:
                    shape = Rect(x, y, rng.uniform(lo, hi) / 2,
                                 rng.uniform(lo, hi) / 2, rng.uniform(0.0, math.pi))
                else:
                    shape = Circle(x, y, rng.uniform(lo, hi) / 2)
                if (_inside_area(shape, area)
                        and not _footprint_overlaps(shape, placed)
                        and not any(_too_close_to_cell(shape, area, rc, clearance)
                                    for rc in reserved)):
                    break
            else:
                return None
            placed.append(shape)
            if isinstance(shape, Rect):
                obstacles.append(RectObstacle(shape.cx, shape.cy, shape.hx, shape.hy, shape.rot))
            else:
                obstacles.append(CircleObstacle(shape.cx, shape.cy, shape.r))

        for cell_idx, color in grid.ball_cells:
            for _ in range(MAX_SHAPE_ROLLS):
                x, y = _jittered_center(area, cell_idx, rng, jitter)
                shape = Circle(x, y, BALL_RADIUS)
                if _inside_area(shape, area) and not _footprint_overlaps(shape, placed):
                    break
            else:
                return None
            placed.append(shape)
            balls.append(Ball(len(balls), color, x, y))

        for cell_idx, color in grid.zone_cells:
            for _ in range(MAX_SHAPE_ROLLS):
                x, y = _jittered_center(area, cell_idx, rng, jitter)
                shape = Circle(x, y, ZONE_RADIUS)
                if _inside_area(shape, area) and not _footprint_overlaps(shape, placed):
                    break
            else:
                return None
            placed.append(shape)
            zones.append(Zone(len(zones), color, x, y, ZONE_RADIUS))

        for cell_idx in grid.agent_cells:
            for _ in range(MAX_SHAPE_ROLLS):
                x, y = _jittered_center(area, cell_idx, rng, jitter)
                shape = Circle(x, y, params.robot_radius)
                if _inside_area(shape, area) and not _footprint_overlaps(shape, placed):
                    break
            else:
                return None
            placed.append(shape)
            heading = rng.uniform(-math.pi, math.pi)
            agents.append(Agent(len(agents), Pose(x, y, heading),
                                radius=params.robot_radius, area=area.index))

    world = WorldState(areas=areas, obstacles=tuple(obstacles), balls=tuple(balls),
                       zones=tuple(zones), agents=tuple(agents), walls=walls,
                       clock=SimClock(0, 0.05), params=params)
    for agent in agents:
        if clearance_to_static(world, agent.pose.x, agent.pose.y) < agent.radius + 0.05:
            return None
    return world


def _drivable(world: WorldState, layout: GridLayout) -> bool:
    """Reject worlds where instantiated footprints (which may spill past
    their cell) choke off a driving route the grid plan promised."""
    from .pathing import bfs_reachable, occupancy_from_world
    occ = occupancy_from_world(world)
    for agent in world.agents:
        start = occ.cell_of(agent.pose.x, agent.pose.y)
        if not occ.is_free(*start):
            return False
        reached = bfs_reachable(occ, start)
        area = world.areas[agent.area]
        targets = [(b.x, b.y) for b in world.balls if area.contains(b.x, b.y)]
        targets += [(z.cx, z.cy) for z in world.zones if area.contains(z.cx, z.cy)]
        grid = layout.areas[agent.area]
        for c, r in grid.cells_of(ENTRY) + grid.cells_of(EXIT):
            targets.append(area.cell_center(c, r))
        for x, y in targets:
            if occ.cell_of(x, y) not in reached:
                return False
    return True


def generate_environment(spec: EnvironmentSpec, max_attempts: int = 100) -> WorldState:
    """Instantiate a world satisfying the spec exactly, or raise
    InfeasiblePlacement after max_attempts rejection rounds."""
    validate_spec(spec)
    for attempt in range(max_attempts):
        layout = partition_grid(spec, attempt=attempt)
        if not check_connectivity(layout).ok:
            continue
        world = _instantiate(layout, spec, Rng(derive_seed(spec.seed, 2, attempt)))
        if world is None:
            continue
        if not _drivable(world, layout):
            continue
        return world
    raise InfeasiblePlacement(max_attempts)
