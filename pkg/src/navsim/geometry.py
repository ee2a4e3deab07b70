"""2D geometric primitives: distances, overlap tests, and ray casts.

Everything works on plain floats; shapes are tiny frozen dataclasses.
Rectangles are oriented (center, half-extents, rotation); circles and
segments are what they say. These routines back collision resolution,
LiDAR ray casting, and placement overlap checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

_EPS = 1e-12


@dataclass(frozen=True)
class Segment:
    ax: float
    ay: float
    bx: float
    by: float


@dataclass(frozen=True)
class Rect:
    """Oriented rectangle: center, half-extents along its local axes, rotation (rad)."""
    cx: float
    cy: float
    hx: float
    hy: float
    rot: float = 0.0

    def corners(self) -> list[tuple[float, float]]:
        c, s = math.cos(self.rot), math.sin(self.rot)
        out = []
        for sx, sy in ((1, 1), (-1, 1), (-1, -1), (1, -1)):
            lx, ly = sx * self.hx, sy * self.hy
            out.append((self.cx + c * lx - s * ly, self.cy + s * lx + c * ly))
        return out

    def edges(self) -> list[Segment]:
        pts = self.corners()
        return [Segment(*pts[i], *pts[(i + 1) % 4]) for i in range(4)]

    def to_local(self, x: float, y: float) -> tuple[float, float]:
        c, s = math.cos(self.rot), math.sin(self.rot)
        dx, dy = x - self.cx, y - self.cy
        return (c * dx + s * dy, -s * dx + c * dy)


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float


# ---------------------------------------------------------------------------
# point queries

def point_in_rect(rect: Rect, x: float, y: float) -> bool:
    lx, ly = rect.to_local(x, y)
    return abs(lx) <= rect.hx + _EPS and abs(ly) <= rect.hy + _EPS


def point_in_circle(circle: Circle, x: float, y: float) -> bool:
    return math.hypot(x - circle.cx, y - circle.cy) <= circle.r + _EPS


def dist_point_rect(rect: Rect, x: float, y: float) -> float:
    """Distance from a point to the rectangle (0 inside)."""
    lx, ly = rect.to_local(x, y)
    dx = max(abs(lx) - rect.hx, 0.0)
    dy = max(abs(ly) - rect.hy, 0.0)
    return math.hypot(dx, dy)


def dist_point_segment(px: float, py: float, seg: Segment) -> float:
    vx, vy = seg.bx - seg.ax, seg.by - seg.ay
    wx, wy = px - seg.ax, py - seg.ay
    vv = vx * vx + vy * vy
    t = 0.0 if vv < _EPS else max(0.0, min(1.0, (wx * vx + wy * vy) / vv))
    return math.hypot(px - (seg.ax + t * vx), py - (seg.ay + t * vy))


# ---------------------------------------------------------------------------
# segment queries

def segments_intersect(a: Segment, b: Segment) -> bool:
    def orient(ox, oy, px, py, qx, qy):
        v = (px - ox) * (qy - oy) - (py - oy) * (qx - ox)
        if v > _EPS:
            return 1
        if v < -_EPS:
            return -1
        return 0

    def on_seg(ox, oy, px, py, qx, qy):
        return (min(ox, px) - _EPS <= qx <= max(ox, px) + _EPS
                and min(oy, py) - _EPS <= qy <= max(oy, py) + _EPS)

    d1 = orient(a.ax, a.ay, a.bx, a.by, b.ax, b.ay)
    d2 = orient(a.ax, a.ay, a.bx, a.by, b.bx, b.by)
    d3 = orient(b.ax, b.ay, b.bx, b.by, a.ax, a.ay)
    d4 = orient(b.ax, b.ay, b.bx, b.by, a.bx, a.by)
    if d1 != d2 and d3 != d4:
        return True
    if d1 == 0 and on_seg(a.ax, a.ay, a.bx, a.by, b.ax, b.ay):
        return True
    if d2 == 0 and on_seg(a.ax, a.ay, a.bx, a.by, b.bx, b.by):
        return True
    if d3 == 0 and on_seg(b.ax, b.ay, b.bx, b.by, a.ax, a.ay):
        return True
    if d4 == 0 and on_seg(b.ax, b.ay, b.bx, b.by, a.bx, a.by):
        return True
    return False


def dist_segment_segment(a: Segment, b: Segment) -> float:
    if segments_intersect(a, b):
        return 0.0
    return min(
        dist_point_segment(a.ax, a.ay, b),
        dist_point_segment(a.bx, a.by, b),
        dist_point_segment(b.ax, b.ay, a),
        dist_point_segment(b.bx, b.by, a),
    )


def dist_segment_rect(seg: Segment, rect: Rect) -> float:
    """Distance from a segment to an oriented rectangle (0 if touching or inside)."""
    if point_in_rect(rect, seg.ax, seg.ay) or point_in_rect(rect, seg.bx, seg.by):
        return 0.0
    return min(dist_segment_segment(seg, edge) for edge in rect.edges())


def dist_segment_circle(seg: Segment, circle: Circle) -> float:
    return max(0.0, dist_point_segment(circle.cx, circle.cy, seg) - circle.r)


# ---------------------------------------------------------------------------
# overlap tests (used at placement time)

def rects_overlap(a: Rect, b: Rect) -> bool:
    """Separating-axis test over both rectangles' axes."""
    for rect in (a, b):
        c, s = math.cos(rect.rot), math.sin(rect.rot)
        for ax, ay in ((c, s), (-s, c)):
            mins: list[float] = []
            maxs: list[float] = []
            for shape in (a, b):
                proj = [px * ax + py * ay for px, py in shape.corners()]
                mins.append(min(proj))
                maxs.append(max(proj))
            if mins[0] > maxs[1] + _EPS or mins[1] > maxs[0] + _EPS:
                return False
    return True


def rect_circle_overlap(rect: Rect, circle: Circle) -> bool:
    return dist_point_rect(rect, circle.cx, circle.cy) <= circle.r + _EPS


def circles_overlap(a: Circle, b: Circle) -> bool:
    return math.hypot(a.cx - b.cx, a.cy - b.cy) <= a.r + b.r + _EPS


# ---------------------------------------------------------------------------
# ray casts: all return the smallest hit parameter t >= 0 along the unit-less
# ray p(t) = origin + t * dir, or None when the ray misses.

def ray_segment(ox: float, oy: float, dx: float, dy: float, seg: Segment) -> float | None:
    ex, ey = seg.bx - seg.ax, seg.by - seg.ay
    denom = dx * ey - dy * ex
    if abs(denom) < _EPS:
        return None  # parallel (collinear overlap treated as miss)
    sx, sy = seg.ax - ox, seg.ay - oy
    t = (sx * ey - sy * ex) / denom
    u = (sx * dy - sy * dx) / denom
    if t >= 0.0 and -_EPS <= u <= 1.0 + _EPS:
        return t
    return None


def ray_circle(ox: float, oy: float, dx: float, dy: float, circle: Circle) -> float | None:
    fx, fy = ox - circle.cx, oy - circle.cy
    a = dx * dx + dy * dy
    b = 2.0 * (fx * dx + fy * dy)
    c = fx * fx + fy * fy - circle.r * circle.r
    disc = b * b - 4.0 * a * c
    if disc < 0.0 or a < _EPS:
        return None
    root = math.sqrt(disc)
    t1 = (-b - root) / (2.0 * a)
    t2 = (-b + root) / (2.0 * a)
    if t1 >= 0.0:
        return t1
    if t2 >= 0.0:
        return 0.0  # origin inside the circle
    return None


def ray_rect(ox: float, oy: float, dx: float, dy: float, rect: Rect) -> float | None:
    """Slab test in the rectangle's local frame."""
    c, s = math.cos(rect.rot), math.sin(rect.rot)
    lox = c * (ox - rect.cx) + s * (oy - rect.cy)
    loy = -s * (ox - rect.cx) + c * (oy - rect.cy)
    ldx = c * dx + s * dy
    ldy = -s * dx + c * dy
    tmin, tmax = -math.inf, math.inf
    for o, d, h in ((lox, ldx, rect.hx), (loy, ldy, rect.hy)):
        if abs(d) < _EPS:
            if abs(o) > h:
                return None
            continue
        t1, t2 = (-h - o) / d, (h - o) / d
        if t1 > t2:
            t1, t2 = t2, t1
        tmin, tmax = max(tmin, t1), min(tmax, t2)
        if tmin > tmax:
            return None
    if tmax < 0.0:
        return None
    return max(tmin, 0.0)


# ---------------------------------------------------------------------------
# swept-disc (capsule) tests: does a disc of radius r sweeping along seg hit?

def capsule_hits_segment(seg: Segment, r: float, wall: Segment) -> bool:
    return dist_segment_segment(seg, wall) <= r


def capsule_hits_rect(seg: Segment, r: float, rect: Rect) -> bool:
    return dist_segment_rect(seg, rect) <= r


def capsule_hits_circle(seg: Segment, r: float, circle: Circle) -> bool:
    return dist_point_segment(circle.cx, circle.cy, seg) <= r + circle.r
