"""The textual interface: environment descriptions (planner input) and the
plan-call grammar (planner output).

Grammar (EBNF, also in the README):

    plan  = call { ";" call } [ ";" ] ;
    call  = ident "(" [ arg ] ")" ;
    arg   = quote color quote ;
    ident = letter { letter | digit | "_" } ;

Whitespace and newlines between tokens are insignificant. Quotes may be
single, double, typographic, or backticks, mixed freely within a pair —
planner output quoting is unreliable. The parser is strict about
everything else and total: any input yields a Plan or a typed error with
a position, never a crash.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .colors import PALETTE, canonical_color
from .world import WorldState

PRIMITIVES = {
    "search_ball": 1,
    "catch_the_ball": 1,
    "search_zone": 1,
    "go_to_zone": 1,
    "leave_ball": 0,
}

_QUOTES = "'\"`‘’“”"
_BALL_PRIMITIVES = ("search_ball", "catch_the_ball")
_ZONE_PRIMITIVES = ("search_zone", "go_to_zone")


class PlanError(ValueError):
    """Base of all plan-grammar errors. `offset` is the character position;
    `byte_offset` the UTF-8 byte position."""

    def __init__(self, message: str, text: str = "", offset: int = 0):
        super().__init__(message)
        self.offset = offset
        self.byte_offset = len(text[:offset].encode("utf-8"))


class PlanSyntaxError(PlanError):
    pass


class EmptyPlan(PlanError):
    pass


class UnknownPrimitive(PlanError):
    def __init__(self, name: str, text: str, offset: int):
        super().__init__(f"unknown primitive {name!r}", text, offset)
        self.name = name


class ArityMismatch(PlanError):
    def __init__(self, name: str, expected: int, got: int, text: str, offset: int):
        super().__init__(f"{name} takes {expected} argument(s), got {got}", text, offset)
        self.name = name


class UnknownColor(PlanError):
    def __init__(self, token: str, text: str = "", offset: int = 0):
        super().__init__(f"unknown color {token!r} (palette: {', '.join(PALETTE)})",
                         text, offset)
        self.token = token


@dataclass(frozen=True)
class PrimitiveCall:
    name: str
    args: tuple[str, ...] = ()

    def render(self) -> str:
        return f"{self.name}({', '.join(repr(a) for a in self.args)})"


@dataclass(frozen=True)
class Plan:
    calls: tuple[PrimitiveCall, ...]
    source_text: str = field(default="", compare=False)

    def render(self) -> str:
        """Canonical serialization: single quotes, '; ' separators, trailing ';'."""
        return "; ".join(c.render() for c in self.calls) + ";"


def parse_plan(text: str) -> Plan:
    """Parse the strict call-list grammar; see the module docstring."""
    calls: list[PrimitiveCall] = []
    i, n = 0, len(text)

    def skip_ws(j: int) -> int:
        while j < n and text[j].isspace():
            j += 1
        return j

    i = skip_ws(i)
    while i < n:
        start = i
        if not (text[i].isalpha() or text[i] == "_"):
            raise PlanSyntaxError(f"expected a primitive name at offset {i}", text, i)
        j = i
        while j < n and (text[j].isalnum() or text[j] == "_"):
            j += 1
        name = text[i:j]
        if name not in PRIMITIVES:
            raise UnknownPrimitive(name, text, start)
        i = skip_ws(j)
        if i >= n or text[i] != "(":
            raise PlanSyntaxError(f"expected '(' after {name} at offset {i}", text, i)
        i = skip_ws(i + 1)
        args: list[str] = []
        if i < n and text[i] in _QUOTES:
            i += 1
            arg_start = i
            while i < n and text[i] not in _QUOTES:
                i += 1
            if i >= n:
                raise PlanSyntaxError("unterminated quoted argument", text, arg_start)
            token = text[arg_start:i].strip()
            color = canonical_color(token)
            if color is None:
                raise UnknownColor(token, text, arg_start)
            args.append(color)
            i = skip_ws(i + 1)
        if i >= n or text[i] != ")":
            raise PlanSyntaxError(f"expected ')' at offset {i}", text, i)
        i = skip_ws(i + 1)
        expected = PRIMITIVES[name]
        if len(args) != expected:
            raise ArityMismatch(name, expected, len(args), text, start)
        calls.append(PrimitiveCall(name, tuple(args)))
        if i < n:
            if text[i] != ";":
                raise PlanSyntaxError(f"expected ';' between calls at offset {i}", text, i)
            i = skip_ws(i + 1)
    if not calls:
        raise EmptyPlan("plan contains no calls", text, 0)
    return Plan(tuple(calls), text)


def render_plan(plan: Plan) -> str:
    return plan.render()


# ---------------------------------------------------------------------------
# environment descriptions

@dataclass(frozen=True)
class AreaDescription:
    """Structured form of one area sentence; renders and parses losslessly."""
    area_index: int  # 1-based, as displayed
    items: tuple[tuple[int, str, str], ...]  # (count, color, kind in {Ball, Zone})
    obstacle_count: int

    def render(self) -> str:
        parts = []
        for count, color, kind in self.items:
            plural = "s" if count != 1 else ""
            parts.append(f"{count} {color} {kind}{plural}")
        parts.append(f"{self.obstacle_count} obstacles")
        return f"Area {self.area_index} has {', '.join(parts)}."


def parse_area_description(text: str) -> AreaDescription:
    """Inverse of AreaDescription.render, for round-trip checks."""
    body = text.strip()
    if not body.startswith("Area ") or not body.endswith("."):
        raise ValueError(f"not an area description: {text!r}")
    head, _, rest = body[:-1].partition(" has ")
    index = int(head.removeprefix("Area "))
    parts = [p.strip() for p in rest.split(",")]
    if not parts or not parts[-1].endswith("obstacles"):
        raise ValueError(f"missing obstacle tally in {text!r}")
    obstacle_count = int(parts[-1].removesuffix("obstacles").strip())
    items = []
    for part in parts[:-1]:
        count_s, color, kind = part.split(" ")
        items.append((int(count_s), color, kind.rstrip("s") if int(count_s) != 1 else kind))
    return AreaDescription(index, tuple(items), obstacle_count)


def describe_area(world: WorldState, area_index: int) -> AreaDescription:
    """Tally one area's contents in stored (declaration) order."""
    area = world.areas[area_index]
    items: list[tuple[int, str, str]] = []
    seen: dict[tuple[str, str], int] = {}
    for ball in world.balls:
        if ball.carried_by is not None or not area.contains(ball.x, ball.y):
            continue
        key = (ball.color, "Ball")
        if key in seen:
            idx = seen[key]
            items[idx] = (items[idx][0] + 1, ball.color, "Ball")
        else:
            seen[key] = len(items)
            items.append((1, ball.color, "Ball"))
    for zone in world.zones:
        if not area.contains(zone.cx, zone.cy):
            continue
        key = (zone.color, "Zone")
        if key in seen:
            idx = seen[key]
            items[idx] = (items[idx][0] + 1, zone.color, "Zone")
        else:
            seen[key] = len(items)
            items.append((1, zone.color, "Zone"))
    obstacle_count = sum(
        1 for ob in world.obstacles if area.contains(ob.cx, ob.cy))
    return AreaDescription(area_index + 1, tuple(items), obstacle_count)


def render_area_description(world: WorldState, area_index: int) -> str:
    """One sentence: 'Area {i} has {items...}, {k} obstacles.'"""
    return describe_area(world, area_index).render()


def render_world_description(world: WorldState) -> str:
    """The full planner input line: prefixed, one sentence per area."""
    sentences = [render_area_description(world, i) for i in range(len(world.areas))]
    return "Received areas information: " + " ".join(sentences)


# ---------------------------------------------------------------------------
# plan validation against a world

@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[str, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.errors


def validate_plan(plan: Plan, world: WorldState) -> ValidationReport:
    """Existence failures are errors; sequencing oddities are warnings.
    Never raises."""
    errors: list[str] = []
    warnings: list[str] = []
    ball_colors = {b.color for b in world.balls}
    zone_colors = {z.color for z in world.zones}
    searched_balls: set[str] = set()
    caught = False
    went_to_zone = False
    for idx, call in enumerate(plan.calls):
        where = f"call {idx + 1} ({call.name})"
        if call.name in _BALL_PRIMITIVES:
            color = call.args[0]
            if color not in ball_colors:
                errors.append(f"{where}: no {color} ball in the world")
            if call.name == "search_ball":
                searched_balls.add(color)
            elif color not in searched_balls:
                warnings.append(f"{where}: catch without a preceding search_ball({color!r})")
            if call.name == "catch_the_ball":
                caught = True
        elif call.name in _ZONE_PRIMITIVES:
            color = call.args[0]
            if color not in zone_colors:
                errors.append(f"{where}: no {color} zone in the world")
            if call.name == "go_to_zone":
                went_to_zone = True
        elif call.name == "leave_ball":
            if not caught:
                warnings.append(f"{where}: leave_ball without a preceding catch_the_ball")
            if not went_to_zone:
                warnings.append(f"{where}: leave_ball without a preceding go_to_zone")
    return ValidationReport(tuple(errors), tuple(warnings))
