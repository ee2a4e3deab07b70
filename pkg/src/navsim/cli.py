"""Command-line surface.

Subcommands: run, gen, pentagon, describe, plan, serve. Any scenario key
can be overridden with --<dotted.name> <value> (values parsed as JSON when
possible), e.g. `navsim run cfg.json --environment.seed 9 --bridge.port 0`.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

from .harness import (
    EXIT_CONFIG, EXIT_GENERATION, EXIT_PLAN, build_world,
    generate_pentagon_reference, load_scenario, run_scenario,
)
from .harness.scenario import ConfigError
from .lang import PlanError, render_world_description, validate_plan, parse_plan
from .planner import (
    CommandParseError, PlannerError, PromptContext, llm_plan, parse_fetch_command,
    stub_plan,
)
from .procgen import InfeasiblePlacement, InvalidSpec, generate_environment
from .serialize import load_spec, load_world, save_world


def _collect_overrides(unknown: list[str]) -> dict[str, str]:
    overrides: dict[str, str] = {}
    i = 0
    while i < len(unknown):
        token = unknown[i]
        if not token.startswith("--") or len(token) <= 2:
            raise ConfigError(f"unrecognized argument {token!r}")
        key = token[2:]
        if "=" in key:
            key, _, value = key.partition("=")
        else:
            i += 1
            if i >= len(unknown):
                raise ConfigError(f"missing value for override {token!r}")
            value = unknown[i]
        overrides[key] = value
        i += 1
    return overrides


def _cmd_run(args, overrides) -> int:
    try:
        config = load_scenario(args.config, overrides)
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = run_scenario(config)
    print(report.message)
    for key, value in report.data.items():
        print(f"  {key}={value}")
    return report.code


def _cmd_gen(args, overrides) -> int:
    try:
        spec = load_spec(args.spec)
        if args.seed is not None:
            from dataclasses import replace
            spec = replace(spec, seed=args.seed)
        world = generate_environment(spec)
    except (InvalidSpec, InfeasiblePlacement, FileNotFoundError,
            json.JSONDecodeError, KeyError) as exc:
        print(f"generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    save_world(world, args.out)
    print(f"wrote {args.out} ({len(world.obstacles)} obstacles, "
          f"{len(world.balls)} balls, {len(world.zones)} zones, "
          f"{len(world.agents)} agents)")
    if args.plot:
        from .harness.report import save_trail_figure
        save_trail_figure(args.plot, world)
        print(f"wrote {args.plot}")
    return 0


def _cmd_pentagon(args, overrides) -> int:
    log = generate_pentagon_reference(args.side, args.v, args.dt)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with out.open("w", encoding="utf-8") as fh:
            fh.write("t,x,y,theta\n")
            for t, x, y, theta in log.to_rows():
                fh.write(f"{t!r},{x!r},{y!r},{theta!r}\n")
        print(f"wrote {args.out} ({len(log)} samples)")
    else:
        print(f"pentagon: side={args.side} perimeter={5 * args.side} "
              f"samples={len(log)}")
    if args.plot:
        from .harness.report import save_trajectory_figure
        save_trajectory_figure(args.plot, [("reference", log)],
                               title="pentagon reference")
        print(f"wrote {args.plot}")
    return 0


def _cmd_describe(args, overrides) -> int:
    try:
        world = load_world(args.world)
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"cannot load world: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(render_world_description(world))
    return 0


def _cmd_plan(args, overrides) -> int:
    try:
        world = load_world(args.world)
    except (FileNotFoundError, json.JSONDecodeError, KeyError) as exc:
        print(f"cannot load world: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.llm:
            from .planner import LLMEndpointConfig
            endpoint = LLMEndpointConfig(args.url, args.model, args.token_env,
                                         args.timeout)
            response = llm_plan(PromptContext(render_world_description(world),
                                              args.command), endpoint, world)
        else:
            response = stub_plan(world, parse_fetch_command(args.command))
    except (PlannerError, CommandParseError, PlanError, ValueError) as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLAN
    print("Reasoning:")
    print(response.reasoning)
    print(f"Response: \"{response.answer}\"")
    print(f"Tasks to be executed: {response.call_text}")
    report = validate_plan(response.plan, world)
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    return 0


def _cmd_serve(args, overrides) -> int:
    try:
        config = load_scenario(args.config, overrides)
    except (ConfigError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.port is not None:
        config.bridge.port = args.port
    if args.host:
        config.bridge.host = args.host
    if args.static_dir:
        config.bridge.static_dir = args.static_dir
    config.bridge.enabled = True
    try:
        world = build_world(config)
    except (InvalidSpec, InfeasiblePlacement, FileNotFoundError, KeyError) as exc:
        print(f"environment generation failed: {exc}", file=sys.stderr)
        return EXIT_GENERATION

    try:
        from .harness.scenario import build_runners
        runners, _ = build_runners(config, world)
    except Exception as exc:
        print(f"planning failed: {exc}", file=sys.stderr)
        return EXIT_PLAN

    async def main_async():
        from .bridge import BridgeServer, Broker, SimSession
        broker = Broker()
        session = SimSession(world, config, broker, realtime=not args.fast,
                             runners=runners)
        server = BridgeServer(broker, config.bridge.host, config.bridge.port,
                              static_dir=config.bridge.static_dir)
        await server.start()
        print(f"bridge listening on {config.bridge.host}:{server.bound_port} "
              f"(NDJSON + WebSocket; static={config.bridge.static_dir or 'off'})",
              flush=True)
        ticks = config.duration_ticks
        if ticks is None and config.duration_s is not None:
            ticks = round(config.duration_s / config.dt)
        try:
            await session.run(duration_ticks=ticks)
        finally:
            await server.stop()

    try:
        asyncio.run(main_async())
    except KeyboardInterrupt:
        print("stopped")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="navsim",
                                     description="deterministic 2D robot-navigation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("gen", help="generate a world from a spec file")
    p.add_argument("spec")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--plot", default=None, help="also render a top-down PNG")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("pentagon", help="generate the pentagon reference trajectory")
    p.add_argument("--side", type=float, required=True)
    p.add_argument("--v", type=float, default=0.5)
    p.add_argument("--dt", type=float, default=0.05)
    p.add_argument("--out", default=None, help="CSV output path")
    p.add_argument("--plot", default=None, help="figure output path")
    p.set_defaults(func=_cmd_pentagon)

    p = sub.add_parser("describe", help="print a world's textual description")
    p.add_argument("world")
    p.set_defaults(func=_cmd_describe)

    p = sub.add_parser("plan", help="plan a command against a world file")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--stub", action="store_true", default=True)
    group.add_argument("--llm", action="store_true")
    p.add_argument("command")
    p.add_argument("world")
    p.add_argument("--url", default="")
    p.add_argument("--model", default="")
    p.add_argument("--token-env", default="LLM_API_TOKEN")
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("serve", help="serve the bridge (and console) for a scenario")
    p.add_argument("config")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--static-dir", default=None)
    p.add_argument("--fast", action="store_true",
                   help="step as fast as possible instead of wall-clock pacing")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args, unknown = parser.parse_known_args(argv)
    try:
        overrides = _collect_overrides(unknown)
    except ConfigError as exc:
        parser.error(str(exc))
    return args.func(args, overrides)


if __name__ == "__main__":
    sys.exit(main())
