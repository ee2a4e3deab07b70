"""Scenario configuration and the batch runner.

A scenario is one JSON file: environment (inline spec or a saved world
file), timing, one controller mode per agent, sensor settings, output
paths, bridge and planner options. Every key can be overridden from the
command line by its dotted name. Replays are exact: the same config always
produces byte-identical trace files.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

from ..executor import Mutation, PlanRunner
from ..kinematics import OscillatorParams, SimClock, Twist, oscillatory_omega
from ..lang import PlanError, parse_plan, render_world_description, validate_plan
from ..planner import (
    CommandParseError, LLMEndpointConfig, PlannerError, PromptContext, llm_plan,
    parse_fetch_command, stub_plan,
)
from ..procgen import InfeasiblePlacement, InvalidSpec, generate_environment
from ..sensors import LidarConfig
from ..serialize import load_world, save_world, spec_from_dict
from ..world import step_world

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_GENERATION = 2
EXIT_PLAN = 3
EXIT_TIMEOUT = 4


class ConfigError(ValueError):
    pass


@dataclass
class AgentConfig:
    mode: str = "external"  # external | plan | oscillator
    v: float = 0.5
    oscillator: OscillatorParams | None = None
    plan_text: str | None = None
    command: str | None = None


@dataclass
class OutputsConfig:
    trace: str | None = None
    metrics: str | None = None
    plot: str | None = None
    world: str | None = None


@dataclass
class BridgeConfig:
    enabled: bool = False
    host: str = "127.0.0.1"
    port: int = 9090
    static_dir: str | None = None
    scan_every: int = 5
    world_every: int = 10


@dataclass
class PlannerConfig:
    mode: str = "stub"  # stub | llm | none
    url: str = ""
    model: str = ""
    token_env: str = "LLM_API_TOKEN"
    timeout: float = 30.0

    def endpoint(self) -> LLMEndpointConfig:
        return LLMEndpointConfig(self.url, self.model, self.token_env, self.timeout)


@dataclass
class ScenarioConfig:
    environment: dict
    dt: float = 0.05
    duration_s: float | None = None
    duration_ticks: int | None = None
    agents: list[AgentConfig] = field(default_factory=list)
    lidar: LidarConfig = field(default_factory=LidarConfig)
    outputs: OutputsConfig = field(default_factory=OutputsConfig)
    bridge: BridgeConfig = field(default_factory=BridgeConfig)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    step_budget: int = 5000
    max_wall_seconds: float | None = None


@dataclass
class ExitReport:
    code: int
    message: str
    data: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.code == EXIT_OK


def _dataclass_from(cls, data: dict, what: str):
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"bad {what} section: {exc}") from None


def scenario_from_dict(data: dict) -> ScenarioConfig:
    if "environment" not in data:
        raise ConfigError("scenario needs an 'environment' section")
    agents = []
    for entry in data.get("agents", []):
        entry = dict(entry)
        osc = entry.pop("oscillator", None)
        agent = _dataclass_from(AgentConfig, entry, "agent")
        if osc is not None:
            agent.oscillator = OscillatorParams(**osc)
        if agent.mode not in ("external", "plan", "oscillator"):
            raise ConfigError(f"unknown agent mode {agent.mode!r}")
        if agent.mode == "oscillator" and agent.oscillator is None:
            raise ConfigError("oscillator mode needs an 'oscillator' parameter block")
        if agent.mode == "plan" and not (agent.plan_text or agent.command):
            raise ConfigError("plan mode needs 'plan_text' or 'command'")
        agents.append(agent)
    config = ScenarioConfig(
        environment=data["environment"],
        dt=data.get("dt", 0.05),
        duration_s=data.get("duration_s"),
        duration_ticks=data.get("duration_ticks"),
        agents=agents,
        lidar=_dataclass_from(LidarConfig, data.get("lidar", {}), "lidar"),
        outputs=_dataclass_from(OutputsConfig, data.get("outputs", {}), "outputs"),
        bridge=_dataclass_from(BridgeConfig, data.get("bridge", {}), "bridge"),
        planner=_dataclass_from(PlannerConfig, data.get("planner", {}), "planner"),
        step_budget=data.get("step_budget", 5000),
        max_wall_seconds=data.get("max_wall_seconds"),
    )
    if config.dt <= 0:
        raise ConfigError("dt must be > 0")
    if config.planner.mode not in ("stub", "llm", "none"):
        raise ConfigError(f"unknown planner mode {config.planner.mode!r}")
    return config


def apply_overrides(data: dict, overrides: dict[str, str]) -> dict:
    """Set dotted keys ('bridge.port', 'agents.0.v') to JSON-parsed values."""
    for dotted, raw in overrides.items():
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = dotted.split(".")
        for part in parts[:-1]:
            key = int(part) if isinstance(node, list) else part
            try:
                node = node[key]
            except (KeyError, IndexError, TypeError):
                if isinstance(node, dict):
                    node[key] = {}
                    node = node[key]
                else:
                    raise ConfigError(f"cannot override {dotted!r}") from None
        last = int(parts[-1]) if isinstance(node, list) else parts[-1]
        node[last] = value
    return data


def load_scenario(path: str | Path, overrides: dict[str, str] | None = None) -> ScenarioConfig:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if overrides:
        data = apply_overrides(data, overrides)
    return scenario_from_dict(data)


# ---------------------------------------------------------------------------
# world + controller assembly

def build_world(config: ScenarioConfig):
    env = config.environment
    if "world_file" in env:
        world = load_world(env["world_file"])
    else:
        world = generate_environment(spec_from_dict(env))
    return replace(world, clock=SimClock(0, config.dt))


def _plan_for_agent(agent_cfg: AgentConfig, world, config: ScenarioConfig):
    if agent_cfg.plan_text:
        plan = parse_plan(agent_cfg.plan_text)
    else:
        if config.planner.mode == "stub":
            response = stub_plan(world, parse_fetch_command(agent_cfg.command))
        elif config.planner.mode == "llm":
            ctx = PromptContext(render_world_description(world), agent_cfg.command)
            response = llm_plan(ctx, config.planner.endpoint(), world)
        else:
            raise ConfigError("agent has a natural command but planner mode is 'none'")
        plan = response.plan
    report = validate_plan(plan, world)
    if not report.ok:
        raise PlanError("plan invalid: " + "; ".join(report.errors))
    return plan


def build_runners(config: ScenarioConfig, world) -> tuple[dict[int, PlanRunner],
                                                          dict[int, AgentConfig]]:
    """Instantiate the configured controllers: plan runners and oscillator
    configs, keyed by agent id. Raises the planner/config errors run_scenario
    maps to EXIT_PLAN."""
    runners: dict[int, PlanRunner] = {}
    oscillators: dict[int, AgentConfig] = {}
    for idx, agent_cfg in enumerate(config.agents):
        agent_id = world.agents[idx].id
        if agent_cfg.mode == "plan":
            plan = _plan_for_agent(agent_cfg, world, config)
            runners[agent_id] = PlanRunner(plan, world, agent_id,
                                           step_budget=config.step_budget,
                                           lidar=config.lidar)
        elif agent_cfg.mode == "oscillator":
            oscillators[agent_id] = agent_cfg
    return runners, oscillators


def _trace_record(world, runners: dict[int, PlanRunner], events: list) -> dict:
    record = {
        "tick": world.clock.tick,
        "t": world.clock.t,
        "agents": [{"id": a.id, "x": a.pose.x, "y": a.pose.y, "theta": a.pose.theta}
                   for a in world.agents],
        "events": [e.to_dict() for e in events],
    }
    plans = {}
    for agent_id, runner in runners.items():
        idx, call, phase = runner._rec
        if call is not None:
            plans[str(agent_id)] = {"call_index": idx, "call": call.name,
                                    "phase": phase,
                                    "calls": runner.call_phases()}
    if plans:
        record["plans"] = plans
    return record


def _duration_ticks(config: ScenarioConfig, runners: dict) -> int | None:
    if config.duration_ticks is not None:
        return config.duration_ticks
    if config.duration_s is not None:
        return round(config.duration_s / config.dt)
    if runners:
        return None  # run until every plan finishes
    raise ConfigError("scenario needs a duration or a plan agent")


def _run_sync(config: ScenarioConfig, world, runners, oscillators,
              total_ticks) -> tuple[object, list[dict], bool]:
    """The batch loop: returns (final world, per-tick records, timed_out)."""
    records: list[dict] = [_trace_record(world, {}, [])]
    started = time.monotonic()
    tick = 0
    timed_out = False
    while True:
        if total_ticks is not None and tick >= total_ticks:
            break
        if total_ticks is None and runners and all(r.finished for r in runners.values()):
            break
        if (config.max_wall_seconds is not None
                and time.monotonic() - started > config.max_wall_seconds):
            timed_out = True
            break

        commands: dict[int, Twist] = {a.id: Twist(0.0, 0.0) for a in world.agents}
        events = []
        decided: list[PlanRunner] = []
        for agent_id, runner in runners.items():
            if runner.finished:
                continue
            action = runner.decide(world)
            decided.append(runner)
            if isinstance(action, Mutation):
                world, ev = runner.apply_mutation(world, action)
                events.append(ev)
            elif isinstance(action, Twist):
                commands[agent_id] = action
        t = world.clock.t
        for agent_id, agent_cfg in oscillators.items():
            omega = oscillatory_omega(agent_cfg.oscillator, t)
            commands[agent_id] = Twist(agent_cfg.v, omega)

        world, step_events = step_world(world, commands)
        events.extend(step_events)
        for runner in decided:
            runner.observe(world, events)
        records.append(_trace_record(world, runners, events))
        tick += 1
        if total_ticks is None and tick > 10 * config.step_budget:
            break  # budgets should have fired; reported as plan failure
    return world, records, timed_out


def _run_with_bridge(config: ScenarioConfig, world, runners,
                     total_ticks) -> tuple[object, list[dict], bool]:
    """Same contract as _run_sync, but stepping inside an asyncio loop with
    the bridge server up, so external clients can watch or drive agents."""
    import asyncio

    from ..bridge import BridgeServer, Broker, SimSession

    async def main() -> tuple[object, list[dict], bool]:
        broker = Broker()
        session = SimSession(world, config, broker, realtime=False,
                             runners=runners)
        records: list[dict] = [_trace_record(world, {}, [])]
        session.record_sink = records
        server = BridgeServer(broker, config.bridge.host, config.bridge.port)
        await server.start()
        timed_out = False
        try:
            run = session.run(duration_ticks=total_ticks,
                              until_runners_finish=total_ticks is None)
            if config.max_wall_seconds is not None:
                try:
                    await asyncio.wait_for(run, config.max_wall_seconds)
                except asyncio.TimeoutError:
                    timed_out = True
            else:
                await run
        finally:
            await server.stop()
        return session.world, records, timed_out

    return asyncio.run(main())


def run_scenario(config: ScenarioConfig) -> ExitReport:
    """Build the world, drive every configured controller for the duration
    (serving the bridge alongside when enabled), and write the
    trace/metrics/figure outputs. Never raises for scenario failures; the
    report carries a distinct exit code per failure class."""
    try:
        world = build_world(config)
    except (InvalidSpec, InfeasiblePlacement, FileNotFoundError, KeyError) as exc:
        return ExitReport(EXIT_GENERATION, f"environment generation failed: {exc}")
    if len(config.agents) > len(world.agents):
        return ExitReport(EXIT_CONFIG,
                          f"{len(config.agents)} agent configs for "
                          f"{len(world.agents)} agents")

    try:
        runners, oscillators = build_runners(config, world)
        total_ticks = _duration_ticks(config, runners)
    except (PlanError, PlannerError, CommandParseError, ConfigError) as exc:
        code = EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_PLAN
        return ExitReport(code, f"planning failed: {exc}")

    if config.bridge.enabled:
        world, records, timed_out = _run_with_bridge(config, world, runners,
                                                     total_ticks)
    else:
        world, records, timed_out = _run_sync(config, world, runners,
                                              oscillators, total_ticks)

    # -- outputs ---------------------------------------------------------------
    if config.outputs.trace:
        Path(config.outputs.trace).parent.mkdir(parents=True, exist_ok=True)
        lines = [json.dumps(r, sort_keys=True) for r in records]
        Path(config.outputs.trace).write_text("\n".join(lines) + "\n",
                                              encoding="utf-8")
    if config.outputs.world:
        save_world(world, config.outputs.world)

    failed_calls = []
    stats: dict[str, object] = {"ticks": len(records) - 1,
                                "sim_time": world.clock.t}
    for agent_id, runner in runners.items():
        for i, result in enumerate(runner.trace.calls):
            stats[f"agent{agent_id}.call{i}.{result.name}"] = result.phase
            if result.phase != "done":
                failed_calls.append((agent_id, result))
        stats[f"agent{agent_id}.calls_done"] = sum(
            1 for c in runner.trace.calls if c.phase == "done")
    if config.outputs.metrics:
        Path(config.outputs.metrics).parent.mkdir(parents=True, exist_ok=True)
        with open(config.outputs.metrics, "w", encoding="utf-8") as fh:
            for key, value in stats.items():
                fh.write(f"{key}={value}\n")
    if config.outputs.plot:
        from .report import save_trail_figure
        trail: dict[int, list[tuple[float, float]]] = {}
        for record in records:
            for agent in record["agents"]:
                trail.setdefault(agent["id"], []).append((agent["x"], agent["y"]))
        save_trail_figure(config.outputs.plot, world, trail)

    if timed_out:
        return ExitReport(EXIT_TIMEOUT, "wall-clock limit exceeded", stats)
    if failed_calls:
        agent_id, result = failed_calls[0]
        return ExitReport(EXIT_PLAN,
                          f"agent {agent_id}: {result.name} {result.phase}"
                          f" ({result.reason})", stats)
    incomplete = [r for r in runners.values() if not r.finished]
    if incomplete:
        return ExitReport(EXIT_PLAN, "plan did not finish within the duration", stats)
    return ExitReport(EXIT_OK, "scenario completed", stats)
