"""Turns an environment description plus an operator command into a plan.

Three routes share one output type: a deterministic rule-based stub (the
offline oracle), a recorded-transcript replay, and a live HTTP
chat-completion endpoint. The whole package tests offline; network access
is strictly optional and auth tokens never touch logs or traces.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass

from .colors import PALETTE, canonical_color
from .lang import Plan, UnknownColor, ValidationReport, parse_plan, validate_plan
from .world import WorldState

CAPABILITY_LIST = (
    "You control a mobile robot with exactly five primitive behaviors:\n"
    "  search_ball(color)    - explore until a ball of that color is located\n"
    "  catch_the_ball(color) - drive to the located ball and pick it up\n"
    "  search_zone(color)    - locate the colored floor zone\n"
    "  go_to_zone(color)     - drive into the colored floor zone\n"
    "  leave_ball()          - release the carried ball at the current spot\n"
    f"Colors must come from: {', '.join(PALETTE)}."
)

OUTPUT_FORMAT_INSTRUCTION = (
    "Answer with your reasoning, then a one-sentence response, and finish\n"
    "with a single final line containing only the calls to execute,\n"
    "semicolon-separated, e.g.: search_ball('Red'); leave_ball();"
)

_CORRECTIVE_SUFFIX = (
    "\nYour previous answer contained no valid call list. Reply again and end "
    "with one line of semicolon-separated primitive calls only."
)


class PlannerError(RuntimeError):
    pass


class NoCallsFound(PlannerError):
    pass


class PlannerTimeout(PlannerError):
    pass


class PlannerHTTPError(PlannerError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"endpoint returned HTTP {status}: {detail[:200]}")
        self.status = status


class ValidationFailed(PlannerError):
    def __init__(self, report: ValidationReport):
        super().__init__("plan failed validation: " + "; ".join(report.errors))
        self.report = report


class CommandParseError(PlannerError):
    pass


@dataclass(frozen=True)
class PromptContext:
    description: str
    command: str
    capability_list: str = CAPABILITY_LIST


@dataclass(frozen=True)
class PlannerResponse:
    reasoning: str
    answer: str
    call_text: str
    plan: Plan


@dataclass(frozen=True)
class LLMEndpointConfig:
    url: str
    model: str
    token_env: str = "LLM_API_TOKEN"
    timeout: float = 30.0


def build_prompt(ctx: PromptContext) -> str:
    """Three sections: environment description, capabilities, output format.
    Deterministic; the description appears verbatim."""
    if not ctx.command.strip():
        raise ValueError("command must be non-empty")
    description = ctx.description if ctx.description.strip() else "(no areas reported)"
    return (
        "## Environment\n"
        f"{description}\n\n"
        "## Capabilities\n"
        f"{ctx.capability_list}\n\n"
        "## Task\n"
        f"{ctx.command.strip()}\n\n"
        f"{OUTPUT_FORMAT_INSTRUCTION}\n"
    )


_CALL_RE = r"[A-Za-z_][A-Za-z0-9_]*\s*\(\s*(?:['\"`‘’“”][^'\"`‘’“”()]*['\"`‘’“”]\s*)?\)"
_CALL_LIST_RE = re.compile(rf"{_CALL_RE}(?:\s*;\s*{_CALL_RE})*\s*;?")


def extract_calls(raw_text: str) -> str:
    """Return the last maximal call-list substring (LLM chatter around it is
    ignored); parse_plan stays strict on the result."""
    matches = list(_CALL_LIST_RE.finditer(raw_text))
    if not matches:
        raise NoCallsFound("no call list found in the text")
    return matches[-1].group(0).strip()


def parse_fetch_command(text: str) -> tuple[str, str]:
    """Tiny stub-command pattern: the first color word names the ball, the
    second names the zone."""
    found = []
    for word in re.findall(r"[A-Za-z]+", text):
        color = canonical_color(word)
        if color is not None:
            found.append(color)
        if len(found) == 2:
            return (found[0], found[1])
    raise CommandParseError(
        f"expected two colors (<ball> ... <zone>) in {text!r}, found {found}")


def stub_plan(world: WorldState, command: tuple[str, str]) -> PlannerResponse:
    """Deterministic oracle: the canonical five-call fetch-and-deliver plan."""
    ball_color, zone_color = command
    ball_color = canonical_color(ball_color) or ball_color
    zone_color = canonical_color(zone_color) or zone_color
    if ball_color not in {b.color for b in world.balls}:
        raise UnknownColor(ball_color)
    if zone_color not in {z.color for z in world.zones}:
        raise UnknownColor(zone_color)
    reasoning = "\n".join([
        f"1. search_ball(\"{ball_color}\") to find the {ball_color} Ball.",
        f"2. catch_the_ball(\"{ball_color}\") to pick up the {ball_color} Ball.",
        f"3. search_zone(\"{zone_color}\") to find the {zone_color} Zone.",
        f"4. go_to_zone(\"{zone_color}\") to move towards the {zone_color} Zone.",
        f"5. leave_ball() to leave the {ball_color} Ball in the {zone_color} Zone.",
    ])
    answer = (f"I will search for and catch the {ball_color} Ball, then find and "
              f"go to the {zone_color} Zone to leave the ball there.")
    call_text = (f"search_ball('{ball_color}'); catch_the_ball('{ball_color}'); "
                 f"search_zone('{zone_color}'); go_to_zone('{zone_color}'); leave_ball();")
    plan = parse_plan(call_text)
    report = validate_plan(plan, world)
    if not report.ok:
        raise ValidationFailed(report)
    return PlannerResponse(reasoning, answer, call_text, plan)


# ---------------------------------------------------------------------------
# LLM endpoint client

def _requests_transport(url: str, payload: dict, headers: dict,
                        timeout: float) -> tuple[int, str]:
    import requests
    try:
        resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
    except requests.Timeout as exc:
        raise PlannerTimeout(f"no response within {timeout}s") from exc
    except requests.RequestException as exc:
        raise PlannerHTTPError(0, str(exc)) from exc
    return resp.status_code, resp.text


def _completion_text(body: str) -> str:
    try:
        data = json.loads(body)
        return data["choices"][0]["message"]["content"]
    except (json.JSONDecodeError, KeyError, IndexError, TypeError) as exc:
        raise PlannerHTTPError(0, f"unexpected response shape: {body[:200]}") from exc


def interpret_response(raw_text: str, world: WorldState) -> PlannerResponse:
    """Split a raw completion into reasoning / answer / call list and parse
    plus validate the plan. Raises NoCallsFound or ValidationFailed."""
    call_text = extract_calls(raw_text)
    plan = parse_plan(call_text)
    report = validate_plan(plan, world)
    if not report.ok:
        raise ValidationFailed(report)
    cut = raw_text.rfind(call_text)
    reasoning = raw_text[:cut].strip()
    answer_match = re.search(r"Response:\s*[\"“]?(.+?)[\"”]?\s*$",
                             reasoning, re.MULTILINE)
    answer = answer_match.group(1).strip() if answer_match else ""
    return PlannerResponse(reasoning, answer, call_text, plan)


def llm_plan(ctx: PromptContext, endpoint: LLMEndpointConfig, world: WorldState,
             transport=None) -> PlannerResponse:
    """POST a chat-completion request and interpret the reply. Retries once
    with a corrective suffix when no call list is found, then fails loudly."""
    transport = transport or _requests_transport
    token = os.environ.get(endpoint.token_env, "")
    headers = {"Content-Type": "application/json"}
    if token:
        headers["Authorization"] = f"Bearer {token}"
    prompt = build_prompt(ctx)
    for attempt in range(2):
        payload = {
            "model": endpoint.model,
            "messages": [{"role": "user",
                          "content": prompt if attempt == 0 else prompt + _CORRECTIVE_SUFFIX}],
        }
        status, body = transport(endpoint.url, payload, headers, endpoint.timeout)
        if status != 200:
            raise PlannerHTTPError(status, body)
        text = _completion_text(body)
        try:
            return interpret_response(text, world)
        except NoCallsFound:
            if attempt == 1:
                raise
    raise NoCallsFound("unreachable")  # pragma: no cover
