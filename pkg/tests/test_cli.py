import json
import os

import numpy as np
import pytest

from poolsim.cli import main
from poolsim.config import ConfigError, parse_config
from poolsim.trajectory import read_trajectory_csv


class TestParseConfig:
    def test_minimal_box_document_gets_reference_defaults(self):
        cfg = parse_config("command: simulate-box\n")
        assert cfg.parameters["dt"] == 0.01
        assert cfg.parameters["box_side"] == 800.0
        assert cfg.parameters["horizon"] == 100.0
        assert cfg.parameters["lambda"] == 1.0
        assert cfg.parameters["kinematics"] == "random-walk"
        assert cfg.replicas == 1

    def test_negative_lambda_error_cites_bound(self):
        with pytest.raises(ConfigError) as err:
            parse_config({"command": "simulate-box", "parameters": {"lambda": -1}})
        msg = "\n".join(err.value.errors)
        assert "lambda" in msg and ">= 0" in msg

    def test_exact_lambda_bound_cited(self):
        with pytest.raises(ConfigError) as err:
            parse_config({"command": "simulate-exact",
                          "parameters": {"lambda": -1, "horizon": 5}})
        msg = "\n".join(err.value.errors)
        assert "lambda" in msg and "> 0" in msg

    def test_two_unknown_keys_both_reported(self):
        with pytest.raises(ConfigError) as err:
            parse_config({
                "command": "simulate-box",
                "parameters": {"lambdaa": 1.0, "dtt": 0.1},
            })
        msg = "\n".join(err.value.errors)
        assert "lambdaa" in msg and "dtt" in msg

    def test_all_errors_collected_not_just_first(self):
        with pytest.raises(ConfigError) as err:
            parse_config({
                "command": "simulate-exact",
                "parameters": {"lambda": -1},
                "replicas": 0,
                "bogus": 1,
            })
        assert len(err.value.errors) >= 3

    def test_missing_required_parameter(self):
        with pytest.raises(ConfigError, match="horizon"):
            parse_config({"command": "simulate-exact", "parameters": {"lambda": 1.0}})

    def test_command_mismatch(self):
        with pytest.raises(ConfigError, match="does not match"):
            parse_config({"command": "simulate-box"}, command="branching")

    def test_yaml_and_json_both_accepted(self):
        y = parse_config("command: simulate-box\nparameters: {dt: 0.5, horizon: 2.0}\n")
        j = parse_config('{"command": "simulate-box", "parameters": {"dt": 0.5, "horizon": 2.0}}')
        assert y == j

    def test_estimator_name_validated(self):
        with pytest.raises(ConfigError, match="estimator"):
            parse_config({"command": "estimate", "parameters": {"estimator": "magic"}})


def _write(path, text):
    path.write_text(text)
    return str(path)


class TestCliEndToEnd:
    def test_usage_error_exit_2(self, tmp_path, capsys):
        cfg = _write(tmp_path / "bad.yaml", "command: simulate-box\nparameters: {lambda: -1}\n")
        assert main(["simulate-box", "--config", cfg, "--output-dir", str(tmp_path / "o")]) == 2
        assert "lambda" in capsys.readouterr().err

    def test_missing_config_file_exit_2(self, tmp_path):
        assert main(["simulate-box", "--config", str(tmp_path / "nope.yaml")]) == 2

    def test_small_box_ensemble_artifacts(self, tmp_path):
        cfg = _write(
            tmp_path / "box.yaml",
            "command: simulate-box\n"
            "parameters: {lambda: 1.0, box_side: 20.0, dt: 0.05, horizon: 2.0}\n"
            "replicas: 3\nmaster_seed: 11\n",
        )
        out = tmp_path / "out"
        assert main(["simulate-box", "--config", cfg, "--output-dir", str(out)]) == 0
        names = sorted(os.listdir(out))
        for expected in ["manifest.json", "quantiles.csv", "quantiles.png",
                        "reports.json", "traj_000.csv", "traj_000.jsonl",
                        "traj_002.csv", "trajectories.png"]:
            assert expected in names
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["replicas"] == 3
        assert "workers" not in manifest
        traj = read_trajectory_csv(out / "traj_000.csv")
        assert traj.events[0].time == 0.0

    def test_worker_count_does_not_change_artifact_bytes(self, tmp_path):
        text = (
            "command: simulate-box\n"
            "parameters: {lambda: 1.0, box_side: 20.0, dt: 0.05, horizon: 2.0}\n"
            "replicas: 2\nmaster_seed: 5\n"
        )
        cfg = _write(tmp_path / "box.yaml", text)
        out1, out8 = tmp_path / "w1", tmp_path / "w8"
        assert main(["simulate-box", "--config", cfg, "--output-dir", str(out1),
                     "--workers", "1"]) == 0
        assert main(["simulate-box", "--config", cfg, "--output-dir", str(out8),
                     "--workers", "8"]) == 0
        files1 = sorted(os.listdir(out1))
        assert files1 == sorted(os.listdir(out8))
        for name in files1:
            assert (out1 / name).read_bytes() == (out8 / name).read_bytes(), name

    def test_estimate_command_writes_single_json_report(self, tmp_path):
        cfg = _write(
            tmp_path / "est.yaml",
            "command: estimate\n"
            "parameters: {estimator: exp-lln, n: 1000000}\n"
            "master_seed: 3\n",
        )
        out = tmp_path / "est-out"
        assert main(["estimate", "--config", cfg, "--output-dir", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["name"] == "exp_lln_check"
        assert report["verdict"] in ("pass", "inconclusive")

    def test_estimate_fail_verdict_exit_1(self, tmp_path):
        # an impossible band forces a fail verdict through the refill
        # threshold: probe in the vacuum at t=0
        cfg = _write(
            tmp_path / "est.yaml",
            "command: estimate\n"
            "parameters: {estimator: refill, lambda: 1.0, R: 5.0, t: 0.0,"
            " probe: [0.0, 1.0], replicas: 200}\n",
        )
        out = tmp_path / "fail-out"
        assert main(["estimate", "--config", cfg, "--output-dir", str(out)]) == 1

    def test_branching_command_tables(self, tmp_path):
        cfg = _write(
            tmp_path / "br.yaml",
            "command: branching\n"
            "parameters: {lambdas: [0.5, 1.0, 1.5], progeny_samples: 2000}\n",
        )
        out = tmp_path / "br-out"
        assert main(["branching", "--config", cfg, "--output-dir", str(out)]) == 0
        lines = (out / "extinction.csv").read_text().splitlines()
        assert lines[0] == "lambda,q,p0,bound"
        rows = [line.split(",") for line in lines[1:]]
        assert float(rows[0][1]) == 1.0  # subcritical q
        assert abs(float(rows[2][1]) - 0.417188) < 1e-5
        assert (out / "progeny_hist.csv").exists()
        assert (out / "extinction.png").exists()

    def test_analyze_quantiles_roundtrip(self, tmp_path):
        box_cfg = _write(
            tmp_path / "box.yaml",
            "command: simulate-box\n"
            "parameters: {lambda: 1.0, box_side: 20.0, dt: 0.05, horizon: 2.0}\n"
            "replicas: 2\nmaster_seed: 8\n",
        )
        sim_out = tmp_path / "sim"
        assert main(["simulate-box", "--config", box_cfg, "--output-dir", str(sim_out)]) == 0
        an_cfg = _write(
            tmp_path / "an.yaml",
            f"command: analyze\nparameters: {{analysis: quantiles, inputs: [{sim_out}]}}\n",
        )
        an_out = tmp_path / "an"
        assert main(["analyze", "--config", an_cfg, "--output-dir", str(an_out)]) == 0
        header = (an_out / "quantiles.csv").read_text().splitlines()[0]
        assert header == "time,q10,q50,q90,min,max"

    def test_analyze_audit_exit_codes(self, tmp_path):
        box_cfg = _write(
            tmp_path / "box.yaml",
            "command: simulate-box\n"
            "parameters: {lambda: 0.5, box_side: 16.0, dt: 0.05, horizon: 1.0}\n"
            "replicas: 1\nmaster_seed: 9\n",
        )
        sim_out = tmp_path / "sim"
        assert main(["simulate-box", "--config", box_cfg, "--output-dir", str(sim_out)]) == 0
        an_cfg = _write(
            tmp_path / "audit.yaml",
            f"command: analyze\nparameters: {{analysis: audit, inputs: [{sim_out}]}}\n",
        )
        assert main(["analyze", "--config", an_cfg, "--output-dir", str(tmp_path / "a1")]) == 0
        # corrupt one mass cell and re-audit
        path = sim_out / "traj_000.csv"
        lines = path.read_text().splitlines()
        if len(lines) > 2:
            parts = lines[-1].split(",")
            parts[2] = str(int(parts[2]) + 1)
            lines[-1] = ",".join(parts)
            path.write_text("\n".join(lines) + "\n")
            assert main(["analyze", "--config", an_cfg,
                         "--output-dir", str(tmp_path / "a2")]) == 1

    def test_output_root_env_var(self, tmp_path, monkeypatch):
        monkeypatch.setenv("POOLSIM_OUTPUT_ROOT", str(tmp_path / "root"))
        cfg = _write(
            tmp_path / "box.yaml",
            "command: simulate-box\n"
            "parameters: {lambda: 0.0, box_side: 10.0, dt: 0.1, horizon: 0.5}\n",
        )
        assert main(["simulate-box", "--config", cfg]) == 0
        assert (tmp_path / "root" / "simulate-box" / "manifest.json").exists()


class TestEstimateBatchAndPositional:
    def test_positional_estimator_name(self, tmp_path):
        cfg = _write(tmp_path / "e.yaml",
                     "command: estimate\nparameters: {n: 1000000}\nmaster_seed: 3\n")
        out = tmp_path / "o"
        assert main(["estimate", "exp-lln", "--config", cfg, "--output-dir", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["name"] == "exp_lln_check"

    def test_positional_mismatch_is_config_error(self, tmp_path):
        cfg = _write(tmp_path / "e.yaml",
                     "command: estimate\nparameters: {estimator: hitting}\n")
        assert main(["estimate", "exp-lln", "--config", cfg,
                     "--output-dir", str(tmp_path / "o")]) == 2

    def test_batch_mode_emits_summary_csv(self, tmp_path):
        cfg = _write(
            tmp_path / "b.yaml",
            "command: estimate\n"
            "parameters:\n"
            "  batch:\n"
            "    - {estimator: exp-lln, n: 1000000}\n"
            "    - {estimator: hitting, x_radius: 5.0, k: 50.0, replicas: 5000}\n"
            "master_seed: 4\n",
        )
        out = tmp_path / "o"
        code = main(["estimate", "--config", cfg, "--output-dir", str(out)])
        assert code in (0, 1)
        lines = (out / "summary.csv").read_text().splitlines()
        assert lines[0] == "name,estimate,ci_low,ci_high,n_samples,verdict"
        assert len(lines) == 3
        reports = json.loads((out / "reports.json").read_text())
        assert [r["name"] for r in reports] == ["exp_lln_check", "hitting_prob_estimate"]

    def test_batch_validation_reports_item_errors(self, tmp_path):
        from poolsim.config import ConfigError, parse_config

        with pytest.raises(ConfigError, match=r"batch\[1\]"):
            parse_config({"command": "estimate",
                          "parameters": {"batch": [{"estimator": "exp-lln", "n": 10},
                                                   {"estimator": "nope"}]}})

    def test_analyze_positional_name(self, tmp_path):
        box_cfg = _write(
            tmp_path / "box.yaml",
            "command: simulate-box\n"
            "parameters: {lambda: 0.5, box_side: 16.0, dt: 0.05, horizon: 1.0}\n"
            "replicas: 1\nmaster_seed: 9\n",
        )
        sim_out = tmp_path / "sim"
        assert main(["simulate-box", "--config", box_cfg, "--output-dir", str(sim_out)]) == 0
        an_cfg = _write(tmp_path / "an.yaml",
                        f"command: analyze\nparameters: {{inputs: [{sim_out}]}}\n")
        assert main(["analyze", "audit", "--config", an_cfg,
                     "--output-dir", str(tmp_path / "a")]) == 0
