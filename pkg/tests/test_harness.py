import json
import math
from pathlib import Path

import numpy as np
import pytest

from navsim.cli import main as cli_main
from navsim.harness import (
    EXIT_GENERATION, EXIT_OK, EXIT_PLAN, compute_path_error,
    generate_pentagon_reference, refined_endpoint_error,
    run_oscillator_trajectory, run_scenario, scenario_from_dict,
)
from navsim.harness.metrics import (
    DegenerateLog, nearest_distances, nearest_distances_bruteforce,
    resample_by_arclength,
)
from navsim.harness.scenario import apply_overrides, load_scenario
from navsim.kinematics import OscillatorParams, normalize_angle
from navsim.rng import Rng
from navsim.serialize import save_spec, save_world, spec_to_dict

from conftest import fetch_spec


class TestPentagonReference:
    def test_total_path_length_exact(self):
        log = generate_pentagon_reference(side=2.0, v=0.5, dt=0.05)
        assert log.path_length() == pytest.approx(10.0, abs=1e-12)

    def test_closure(self):
        log = generate_pentagon_reference(side=3.0, v=1.0, dt=0.05)
        xy = log.xy()
        assert float(np.hypot(*(xy[-1] - xy[0]))) < 1e-9

    def test_vertex_turns_sum_to_full_circle(self):
        log = generate_pentagon_reference(side=1.0, v=0.5, dt=0.01)
        headings = []
        for pose in log.poses:
            if not headings or headings[-1] != pose.theta:
                headings.append(pose.theta)
        turns = [normalize_angle(b - a) for a, b in zip(headings, headings[1:])]
        assert len(turns) == 4  # four in-path turns; the fifth closes the loop
        assert all(t == pytest.approx(math.tau / 5, abs=1e-12) for t in turns)
        assert sum(turns) + math.tau / 5 == pytest.approx(math.tau, abs=1e-9)

    def test_constant_speed_sampling(self):
        log = generate_pentagon_reference(side=2.0, v=0.5, dt=0.05)
        xy = log.xy()
        steps = np.hypot(*np.diff(xy[:5], axis=0).T)
        assert np.allclose(steps, 0.5 * 0.05, atol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError):
            generate_pentagon_reference(side=0.0)


class TestOscillatorTrajectory:
    def test_zero_oscillation_is_straight_line(self):
        params = OscillatorParams(amplitude=0.0, damping=0.0, onset=0.0,
                                  period=1.0, bias=0.0)
        log = run_oscillator_trajectory(params, v=0.8, duration=5.0, dt=0.05)
        assert log.poses[-1].x == pytest.approx(4.0, abs=1e-9)
        assert log.poses[-1].y == 0.0
        assert len(log) == 101

    def test_refinement_shrinks_endpoint_error(self):
        params = OscillatorParams(amplitude=1.0, damping=0.2, onset=0.5,
                                  period=3.0, bias=0.1)
        coarse = refined_endpoint_error(params, v=0.5, duration=6.0, dt=0.1)
        halved = refined_endpoint_error(params, v=0.5, duration=6.0, dt=0.05)
        assert halved < coarse

    def test_heavy_damping_approaches_bias_circle(self):
        # with the sinusoid damped away almost instantly, the path is the
        # constant-curvature arc of radius v/bias
        params = OscillatorParams(amplitude=1.0, damping=60.0, onset=0.0,
                                  period=2.0, bias=0.5)
        v, duration, dt = 0.5, 4.0, 0.005
        log = run_oscillator_trajectory(params, v, duration, dt)
        radius = v / params.bias
        angle = params.bias * duration
        expected = (radius * math.sin(angle), radius * (1 - math.cos(angle)))
        end = log.poses[-1]
        assert math.hypot(end.x - expected[0], end.y - expected[1]) < 0.05

    def test_sample_count(self):
        params = OscillatorParams(1.0, 0.1, 0.0, 4.0, 0.0)
        log = run_oscillator_trajectory(params, 0.5, 10.0, 0.05)
        assert len(log) == round(10.0 / 0.05) + 1


class TestPathErrorMetrics:
    def test_identical_logs_zero(self):
        log = generate_pentagon_reference(2.0, 0.5, 0.05)
        m = compute_path_error(log, log)
        assert (m.rmse, m.max_dev, m.endpoint) == (0.0, 0.0, 0.0)
        assert (m.nearest_rmse, m.nearest_max) == (0.0, 0.0)

    def test_constant_offset_reports_offset(self):
        log = generate_pentagon_reference(2.0, 0.5, 0.05)
        shifted = log.xy() + np.array([0.0, 0.1])
        m = compute_path_error(log.xy(), shifted)
        assert m.rmse == pytest.approx(0.1, abs=1e-6)
        assert m.max_dev == pytest.approx(0.1, abs=1e-6)
        assert m.endpoint == pytest.approx(0.1, abs=1e-12)

    def test_nearest_point_oracle_agreement(self):
        rng = Rng(77)
        nprng = np.random.default_rng(77)
        for _ in range(100):
            a = nprng.normal(scale=0.5, size=(rng.randrange(30) + 3, 2)).cumsum(axis=0)
            b = nprng.normal(scale=0.5, size=(rng.randrange(30) + 3, 2)).cumsum(axis=0)
            pa = resample_by_arclength(a, 200)
            pb = resample_by_arclength(b, 180)
            fast_ab = nearest_distances(pa, pb)
            slow_ab = nearest_distances_bruteforce(pa, pb)
            assert np.max(np.abs(fast_ab - slow_ab)) < 1e-9

    def test_symmetric_variant_is_symmetric(self):
        nprng = np.random.default_rng(3)
        a = nprng.normal(size=(25, 2)).cumsum(axis=0)
        b = nprng.normal(size=(40, 2)).cumsum(axis=0)
        ab = compute_path_error(a, b)
        ba = compute_path_error(b, a)
        assert ab.nearest_rmse == pytest.approx(ba.nearest_rmse, abs=1e-12)
        assert ab.nearest_max == pytest.approx(ba.nearest_max, abs=1e-12)
        assert ab.rmse == pytest.approx(ba.rmse, abs=1e-12)

    def test_degenerate_log_rejected(self):
        with pytest.raises(DegenerateLog):
            compute_path_error(np.array([[0.0, 0.0]]), np.array([[1.0, 1.0]]))


def oscillator_config(tmp_path: Path, seed=3) -> dict:
    return {
        "environment": spec_to_dict(fetch_spec(seed=seed)),
        "dt": 0.05,
        "duration_s": 10.0,
        "agents": [{"mode": "oscillator", "v": 0.3,
                    "oscillator": {"amplitude": 0.8, "damping": 0.1,
                                   "onset": 0.0, "period": 4.0, "bias": 0.0}}],
        "outputs": {"trace": str(tmp_path / "trace.jsonl"),
                    "metrics": str(tmp_path / "metrics.txt")},
    }


class TestRunScenario:
    def test_oscillator_trace_sample_count(self, tmp_path):
        config = scenario_from_dict(oscillator_config(tmp_path))
        report = run_scenario(config)
        assert report.code == EXIT_OK
        lines = (tmp_path / "trace.jsonl").read_text().strip().splitlines()
        assert len(lines) == round(10.0 / 0.05) + 1
        record = json.loads(lines[5])
        assert set(record) >= {"tick", "t", "agents", "events"}

    def test_replay_is_byte_identical(self, tmp_path):
        config = scenario_from_dict(oscillator_config(tmp_path))
        run_scenario(config)
        first = (tmp_path / "trace.jsonl").read_bytes()
        run_scenario(scenario_from_dict(oscillator_config(tmp_path)))
        assert (tmp_path / "trace.jsonl").read_bytes() == first

    def test_invalid_spec_exit_code_and_no_partial_files(self, tmp_path):
        config = scenario_from_dict({
            "environment": {"seed": 1, "areas": []},
            "duration_s": 1.0,
            "agents": [],
            "outputs": {"trace": str(tmp_path / "t.jsonl")},
        })
        report = run_scenario(config)
        assert report.code == EXIT_GENERATION
        assert not (tmp_path / "t.jsonl").exists()

    def test_plan_mode_delivers_ball(self, tmp_path):
        config = scenario_from_dict({
            "environment": spec_to_dict(fetch_spec(seed=7)),
            "agents": [{"mode": "plan",
                        "command": "bring the orange ball to the green zone"}],
            "planner": {"mode": "stub"},
            "outputs": {"trace": str(tmp_path / "trace.jsonl"),
                        "metrics": str(tmp_path / "metrics.txt")},
        })
        report = run_scenario(config)
        assert report.code == EXIT_OK, report.message
        trace = (tmp_path / "trace.jsonl").read_text().strip().splitlines()
        drops = [e for line in trace for e in json.loads(line)["events"]
                 if e.get("kind") == "drop"]
        assert drops and drops[-1]["in_zone"] == "Green"
        metrics = (tmp_path / "metrics.txt").read_text()
        assert "agent0.calls_done=5" in metrics

    def test_plan_failure_exit_code(self, tmp_path):
        config = scenario_from_dict({
            "environment": spec_to_dict(fetch_spec(seed=7)),
            "agents": [{"mode": "plan", "plan_text": "leave_ball();"}],
        })
        report = run_scenario(config)
        assert report.code == EXIT_PLAN

    def test_unknown_plan_color_is_plan_failure(self, tmp_path):
        config = scenario_from_dict({
            "environment": spec_to_dict(fetch_spec(seed=7)),
            "agents": [{"mode": "plan", "plan_text": "search_ball('Purple');"}],
        })
        report = run_scenario(config)
        assert report.code == EXIT_PLAN

    def test_plot_output_written(self, tmp_path):
        data = oscillator_config(tmp_path)
        data["outputs"]["plot"] = str(tmp_path / "fig.png")
        data["duration_s"] = 2.0
        report = run_scenario(scenario_from_dict(data))
        assert report.code == EXIT_OK
        assert (tmp_path / "fig.png").stat().st_size > 1000

    def test_dotted_overrides(self, tmp_path):
        data = oscillator_config(tmp_path)
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(data))
        config = load_scenario(path, {"environment.seed": "9",
                                      "agents.0.v": "0.7",
                                      "duration_s": "1.0"})
        assert config.environment["seed"] == 9
        assert config.agents[0].v == 0.7
        assert config.duration_s == 1.0

    def test_apply_overrides_rejects_bad_path(self):
        with pytest.raises(Exception):
            apply_overrides({"a": [1]}, {"a.5.b": "1"})


class TestCli:
    def test_gen_and_describe(self, tmp_path, capsys):
        spec_path = tmp_path / "spec.json"
        save_spec(fetch_spec(seed=7), spec_path)
        world_path = tmp_path / "world.json"
        assert cli_main(["gen", str(spec_path), "--out", str(world_path)]) == 0
        assert world_path.exists()
        assert cli_main(["describe", str(world_path)]) == 0
        out = capsys.readouterr().out
        assert ("Area 1 has 1 Orange Ball, 1 Red Zone, 1 Green Zone, "
                "5 obstacles." in out)

    def test_gen_seed_override(self, tmp_path):
        spec_path = tmp_path / "spec.json"
        save_spec(fetch_spec(seed=7), spec_path)
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        cli_main(["gen", str(spec_path), "--out", str(a)])
        cli_main(["gen", str(spec_path), "--seed", "8", "--out", str(b)])
        assert a.read_text() != b.read_text()

    def test_pentagon_csv_and_plot(self, tmp_path, capsys):
        out = tmp_path / "pentagon.csv"
        fig = tmp_path / "pentagon.png"
        code = cli_main(["pentagon", "--side", "2.0", "--v", "0.5",
                         "--dt", "0.05", "--out", str(out), "--plot", str(fig)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,x,y,theta"
        assert len(lines) == 402  # header + samples for 20 s at dt=0.05
        assert fig.stat().st_size > 1000

    def test_plan_stub_prints_calls(self, tmp_path, capsys):
        from navsim.procgen import generate_environment
        world_path = tmp_path / "world.json"
        save_world(generate_environment(fetch_spec(seed=7)), world_path)
        code = cli_main(["plan", "--stub",
                         "put the orange ball in the green zone", str(world_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "Tasks to be executed: search_ball('Orange');" in out

    def test_run_with_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(oscillator_config(tmp_path)))
        code = cli_main(["run", str(cfg), "--duration_s", "1.0"])
        assert code == 0
        lines = (tmp_path / "trace.jsonl").read_text().strip().splitlines()
        assert len(lines) == 21

    def test_run_missing_config(self, capsys):
        assert cli_main(["run", "/nonexistent/cfg.json"]) == 1

    def test_plan_llm_unreachable_endpoint_exits_plan_failure(self, tmp_path, capsys):
        from navsim.procgen import generate_environment
        world_path = tmp_path / "world.json"
        save_world(generate_environment(fetch_spec(seed=7)), world_path)
        code = cli_main(["plan", "--llm", "orange to green", str(world_path),
                         "--url", "http://127.0.0.1:9/v1/chat/completions",
                         "--model", "m", "--timeout", "2"])
        assert code == EXIT_PLAN
        assert "planning failed" in capsys.readouterr().err
