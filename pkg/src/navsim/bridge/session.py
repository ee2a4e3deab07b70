"""Live simulation session behind the bridge.

One asyncio task owns the world and steps it on the fixed tick (paced to
wall time in realtime mode, flat out otherwise). Client commands reach it
only through broker taps on the inbound topics; snapshots flow out as
publishes from the internal "sim" client. Velocity commands are sampled
zero-order-hold at each tick, so network jitter never changes kinematics.
"""

from __future__ import annotations

import asyncio
from dataclasses import replace

from ..executor import Mutation, PlanRunner
from ..kinematics import SimClock, Twist, oscillatory_omega
from ..lang import PlanError, parse_plan, render_world_description, validate_plan
from ..planner import (
    CommandParseError, PlannerError, PromptContext, llm_plan, parse_fetch_command,
    stub_plan,
)
from ..procgen import InfeasiblePlacement, InvalidSpec, generate_environment
from ..sensors import lidar_scan, sample_odometry
from ..serialize import spec_from_dict, spec_to_dict, world_to_dict
from ..world import step_world
from .broker import Broker
from .protocol import BusMessage

SIM_CLIENT = "sim"


class SimSession:
    """Publishes the world on the standard topics and executes plans."""

    def __init__(self, world, config, broker: Broker, realtime: bool = True,
                 runners: dict[int, PlanRunner] | None = None):
        self.world = world
        self.config = config
        self.broker = broker
        self.realtime = realtime
        self.zoh: dict[int, Twist] = {a.id: Twist(0.0, 0.0) for a in world.agents}
        self.runners: dict[int, PlanRunner] = dict(runners or {})
        self.oscillators: dict[int, object] = {}
        self.tick_count = 0
        self.record_sink: list[dict] | None = None  # batch runs collect here
        self._stop = asyncio.Event()

        for idx, agent_cfg in enumerate(config.agents):
            if idx >= len(world.agents):
                break
            if agent_cfg.mode == "oscillator":
                self.oscillators[world.agents[idx].id] = agent_cfg

        broker.connect(SIM_CLIENT)
        for topic in ("/areas_description", "/env/spec", "/env/world"):
            broker.set_latched(topic)
        self._advertise_all()
        broker.add_tap("/plan", self._on_plan)
        broker.add_tap("/command", self._on_command)
        broker.add_tap("/env/regenerate", self._on_regenerate)
        for agent in world.agents:
            broker.add_tap(f"/agent{agent.id}/cmd_vel", self._on_cmd_vel)
        self._publish_environment()

    # -- topic wiring -----------------------------------------------------------

    def _advertise_all(self) -> None:
        adv = [("/areas_description", "string"), ("/env/spec", "env_spec"),
               ("/env/world", "world"), ("/trace", "trace")]
        for agent in self.world.agents:
            adv.append((f"/agent{agent.id}/odom", "odom"))
            adv.append((f"/agent{agent.id}/scan", "scan"))
        for topic, type_ in adv:
            self.broker.dispatch(SIM_CLIENT, BusMessage("advertise", topic, type_))

    def _publish(self, topic: str, type_: str, msg) -> None:
        self.broker.dispatch(SIM_CLIENT, BusMessage("publish", topic, type_, msg))

    def _publish_environment(self) -> None:
        self._publish("/areas_description", "string",
                      {"data": render_world_description(self.world)})
        if "world_file" not in self.config.environment:
            self._publish("/env/spec", "env_spec",
                          spec_to_dict(spec_from_dict(self.config.environment)))
        self._publish("/env/world", "world", world_to_dict(self.world))

    def _publish_trace_event(self, event: dict) -> None:
        self._publish("/trace", "trace", event)

    # -- inbound taps -------------------------------------------------------------

    @staticmethod
    def _payload(frame: BusMessage) -> dict:
        return frame.msg if isinstance(frame.msg, dict) else {}

    def _on_cmd_vel(self, sender: str, frame: BusMessage) -> None:
        agent_id = int(frame.topic.split("/")[1].removeprefix("agent"))
        msg = self._payload(frame)
        try:
            twist = Twist(float(msg.get("linear", 0.0)),
                          float(msg.get("angular", 0.0)))
        except (TypeError, ValueError) as exc:
            self.broker.send_status(sender, "error", "bad_twist", str(exc),
                                    frame.topic, frame.id)
            return
        if agent_id in self.zoh:
            self.zoh[agent_id] = twist

    def _install_plan(self, sender: str, plan, agent_id: int, frame_id) -> None:
        report = validate_plan(plan, self.world)
        if not report.ok:
            self.broker.send_status(sender, "error", "plan_invalid",
                                    "; ".join(report.errors), "/plan", frame_id)
            return
        for warning in report.warnings:
            self.broker.send_status(sender, "warning", "plan_warning", warning,
                                    "/plan", frame_id)
        self.runners[agent_id] = PlanRunner(plan, self.world, agent_id,
                                            step_budget=self.config.step_budget,
                                            lidar=self.config.lidar)
        self._publish_trace_event({"event": "plan_accepted", "agent": agent_id,
                                   "calls": [{"name": c.name, "args": list(c.args)}
                                             for c in plan.calls]})

    def _on_plan(self, sender: str, frame: BusMessage) -> None:
        msg = self._payload(frame)
        text = str(msg.get("data", ""))
        agent_id = int(msg.get("agent", self.world.agents[0].id))
        try:
            plan = parse_plan(text)
        except PlanError as exc:
            self.broker.send_status(sender, "error", "plan_error", str(exc),
                                    "/plan", frame.id)
            return
        self._install_plan(sender, plan, agent_id, frame.id)

    def _on_command(self, sender: str, frame: BusMessage) -> None:
        msg = self._payload(frame)
        text = str(msg.get("data", ""))
        agent_id = int(msg.get("agent", self.world.agents[0].id))
        mode = self.config.planner.mode
        if mode == "none":
            self.broker.send_status(sender, "error", "planner_disabled",
                                    "planner mode is 'none'", "/command", frame.id)
            return
        if mode == "stub":
            try:
                response = stub_plan(self.world, parse_fetch_command(text))
            except (PlannerError, CommandParseError, ValueError) as exc:
                self.broker.send_status(sender, "error", "planner_error", str(exc),
                                        "/command", frame.id)
                return
            self._announce_response(agent_id, response)
            self._install_plan(sender, response.plan, agent_id, frame.id)
        else:
            asyncio.get_running_loop().create_task(
                self._llm_command(sender, text, agent_id, frame.id))

    async def _llm_command(self, sender: str, text: str, agent_id: int, frame_id) -> None:
        ctx = PromptContext(render_world_description(self.world), text)
        try:
            response = await asyncio.to_thread(
                llm_plan, ctx, self.config.planner.endpoint(), self.world)
        except PlannerError as exc:
            self.broker.send_status(sender, "error", "planner_error", str(exc),
                                    "/command", frame_id)
            self._publish_trace_event({"event": "planner_failed", "agent": agent_id,
                                       "detail": str(exc)})
            return
        self._announce_response(agent_id, response)
        self._install_plan(sender, response.plan, agent_id, frame_id)

    def _announce_response(self, agent_id: int, response) -> None:
        self._publish_trace_event({"event": "planner_response", "agent": agent_id,
                                   "reasoning": response.reasoning,
                                   "answer": response.answer,
                                   "calls": response.call_text})

    def _on_regenerate(self, sender: str, frame: BusMessage) -> None:
        try:
            spec = spec_from_dict(self._payload(frame))
            world = generate_environment(spec)
        except (InvalidSpec, InfeasiblePlacement, KeyError, TypeError) as exc:
            self.broker.send_status(sender, "error", "regenerate_failed", str(exc),
                                    "/env/regenerate", frame.id)
            return
        self.world = replace(world, clock=SimClock(0, self.config.dt))
        self.runners.clear()
        self.zoh = {a.id: Twist(0.0, 0.0) for a in self.world.agents}
        self.config.environment = spec_to_dict(spec)
        self.tick_count = 0
        self._advertise_all()
        for agent in self.world.agents:
            self.broker.add_tap(f"/agent{agent.id}/cmd_vel", self._on_cmd_vel)
        self._publish_environment()
        self._publish_trace_event({"event": "regenerated", "seed": spec.seed})

    # -- stepping ------------------------------------------------------------------

    def step_once(self) -> None:
        world = self.world
        commands = dict(self.zoh)
        events = []
        decided: list[PlanRunner] = []
        ball_state_changed = False
        for agent_id, runner in list(self.runners.items()):
            if runner.finished:
                continue
            action = runner.decide(world)
            decided.append(runner)
            if isinstance(action, Mutation):
                world, ev = runner.apply_mutation(world, action)
                events.append(ev)
                ball_state_changed = True
            elif isinstance(action, Twist):
                commands[agent_id] = action
            else:
                commands[agent_id] = Twist(0.0, 0.0)
        t = world.clock.t
        for agent_id, agent_cfg in self.oscillators.items():
            commands[agent_id] = Twist(agent_cfg.v,
                                       oscillatory_omega(agent_cfg.oscillator, t))
        world, step_events = step_world(world, commands)
        events.extend(step_events)
        for runner in decided:
            runner.observe(world, events)
        self.world = world
        self.tick_count += 1

        for agent in world.agents:
            self._publish(f"/agent{agent.id}/odom", "odom",
                          sample_odometry(world, agent.id).to_dict())
            if self.tick_count % self.config.bridge.scan_every == 0:
                self._publish(f"/agent{agent.id}/scan", "scan",
                              lidar_scan(world, agent.id, self.config.lidar).to_dict())
        record = {"tick": world.clock.tick, "t": world.clock.t,
                  "agents": [{"id": a.id, "x": a.pose.x, "y": a.pose.y,
                              "theta": a.pose.theta} for a in world.agents],
                  "events": [e.to_dict() for e in events]}
        plans = {}
        for agent_id, runner in self.runners.items():
            idx, call, phase = runner._rec
            if call is not None:
                plans[str(agent_id)] = {"call_index": idx, "call": call.name,
                                        "phase": phase,
                                        "calls": runner.call_phases()}
        if plans:
            record["plans"] = plans
        if self.record_sink is not None:
            self.record_sink.append(record)
        self._publish_trace_event({"event": "tick", **record})
        if ball_state_changed or self.tick_count % self.config.bridge.world_every == 0:
            self._publish("/env/world", "world", world_to_dict(self.world))

    async def run(self, duration_ticks: int | None = None,
                  until_runners_finish: bool = False) -> None:
        """Tick until stopped (or for duration_ticks, or until every
        installed plan runner finishes). Realtime mode paces ticks against
        the wall clock with drift correction."""
        loop = asyncio.get_running_loop()
        next_deadline = loop.time()
        while not self._stop.is_set():
            if duration_ticks is not None and self.tick_count >= duration_ticks:
                break
            if (until_runners_finish and self.runners
                    and all(r.finished for r in self.runners.values())):
                break
            self.step_once()
            if self.realtime:
                next_deadline += self.config.dt
                delay = next_deadline - loop.time()
                if delay > 0:
                    await asyncio.sleep(delay)
                else:
                    next_deadline = loop.time()  # fell behind; don't burst
            elif self.tick_count % 50 == 0:
                await asyncio.sleep(0)

    def stop(self) -> None:
        self._stop.set()
