import json
from pathlib import Path

import pytest

from kirchlab.cli import main
from kirchlab.config import ConfigError, canonical_text, parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def small_doc(scenario="simulate", **over):
    doc = {
        "scenario": scenario,
        "data": {
            "builder": "random-decay",
            "M": 16,
            "lambda_max": 8.0,
            "seed": 0,
            "rescale": {"target": 0.03, "s": 0.0},
        },
        "nonlinearity": {"name": "model", "A": 1.0},
        "integrator": {"method": "rotation", "dt": 1e-3, "T": 0.05, "stride": 10},
    }
    doc.update(over)
    return doc


def write_cfg(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


class TestConfigValidation:
    def test_all_errors_accumulated_with_key_paths(self):
        doc = {
            "scenario": "fly",
            "integrator": {"dt": -1.0, "method": "euler", "T": 1.0},
            "s_list": [-0.5],
            "bogus": 1,
        }
        with pytest.raises(ConfigError) as exc:
            parse_config(json.dumps(doc))
        text = "\n".join(exc.value.errors)
        assert "integrator.dt" in text
        assert "integrator.method" in text
        assert "scenario" in text
        assert "s_list" in text
        assert "bogus" in text
        assert len(exc.value.errors) >= 5

    def test_nested_unknown_key_path(self):
        doc = small_doc()
        doc["data"]["typo_key"] = 3
        with pytest.raises(ConfigError, match="data.typo_key"):
            parse_config(json.dumps(doc))

    def test_invalid_json_is_config_error(self):
        with pytest.raises(ConfigError, match="invalid JSON"):
            parse_config("{not json")

    def test_two_mode_shape_errors(self):
        doc = {
            "scenario": "simulate",
            "data": {
                "builder": "two-mode",
                "lambda1": 1.0,
                "lambda2": 1.0,
                "c_plus": [[1.0, 0.0]],
                "c_minus": [[0.0, 0.0], [0.0, 0.0]],
            },
        }
        with pytest.raises(ConfigError) as exc:
            parse_config(json.dumps(doc))
        text = "\n".join(exc.value.errors)
        assert "data.lambda2" in text
        assert "data.c_plus" in text

    def test_canonical_text_round_trips(self):
        cfg = parse_config(json.dumps(small_doc("sweep", epsilons=[0.1, 0.01])))
        assert parse_config(canonical_text(cfg)) == cfg

    def test_defaults_filled_in(self):
        cfg = parse_config(json.dumps({"scenario": "simulate"}))
        assert cfg.data["M"] == 64
        assert cfg.nonlinearity == {"name": "model", "A": 1.0}
        assert cfg.integrator["method"] == "rotation"
        assert cfg.s_list == (0.25,)


class TestExitCodes:
    def test_simulate_success(self, tmp_path):
        cfg = write_cfg(tmp_path, small_doc())
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out)]) == 0
        run = json.loads((out / "run.json").read_text())
        assert run["pass"] is True
        assert run["scenario"] == "simulate"
        assert run["gate"]["violated"] is False
        assert (out / "trajectory.csv").exists()

    def test_bad_config_file_exit_one(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text('{"scenario": "nope"}')
        assert main(["--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
        assert "config error" in capsys.readouterr().err

    def test_runtime_error_exit_one_writes_error_json(self, tmp_path):
        doc = small_doc("truncation")
        doc["params"] = {"cutoffs": [8.0, 4.0, 2.0]}
        cfg = write_cfg(tmp_path, doc)
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out)]) == 1
        err = json.loads((out / "error.json").read_text())
        assert "increasing" in err["error"]

    def test_gate_violation_refused_then_allowed(self, tmp_path):
        doc = small_doc()
        del doc["data"]["rescale"]  # raw decaying data sits above the gate
        out1 = tmp_path / "o1"
        assert main(["--config", str(write_cfg(tmp_path, doc)), "--out", str(out1)]) == 1
        err = json.loads((out1 / "error.json").read_text())
        assert "gate" in err["error"]

        doc["allow_gate_violation"] = True
        out2 = tmp_path / "o2"
        assert main(["--config", str(write_cfg(tmp_path, doc, "b.json")), "--out", str(out2)]) == 0
        run = json.loads((out2 / "run.json").read_text())
        assert run["gate"]["violated"] is True

    def test_failing_suite_exit_two_with_verdict(self, tmp_path):
        # zero-horizon linearized run degenerates the finite-difference
        # ratio, so the suite must fail but still write its verdict
        doc = small_doc("linearized")
        doc["integrator"]["T"] = 0.0
        cfg = write_cfg(tmp_path, doc)
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out)]) == 2
        verdict = json.loads((out / "linearized.json").read_text())
        assert verdict["pass"] is False
        assert json.loads((out / "run.json").read_text())["pass"] is False


class TestScenarioOutputs:
    def test_time_zero_single_row(self, tmp_path):
        doc = small_doc()
        doc["integrator"]["T"] = 0.0
        out = tmp_path / "out"
        assert main(["--config", str(write_cfg(tmp_path, doc)), "--out", str(out)]) == 0
        lines = (out / "trajectory.csv").read_text().strip().splitlines()
        assert len(lines) == 2  # header plus the initial sample

    def test_format_json_and_plots(self, tmp_path):
        cfg = write_cfg(tmp_path, small_doc())
        out = tmp_path / "out"
        rc = main(["--config", str(cfg), "--out", str(out), "--format", "json", "--plots"])
        assert rc == 0
        assert (out / "trajectory.json").exists()
        assert (out / "trajectory.svg").exists()
        assert not (out / "trajectory.csv").exists()
        doc = json.loads((out / "trajectory.json").read_text())
        assert isinstance(doc, list) and "hamiltonian" in doc[0]

    def test_subcommand_overrides_config_scenario(self, tmp_path):
        cfg = write_cfg(tmp_path, small_doc("simulate"))
        out = tmp_path / "out"
        assert main(["--config", str(cfg), "--out", str(out), "energies"]) == 0
        assert (out / "energies.csv").exists()
        assert not (out / "trajectory.csv").exists()

    def test_seed_override_changes_trajectory(self, tmp_path):
        cfg = write_cfg(tmp_path, small_doc())
        o1, o2 = tmp_path / "a", tmp_path / "b"
        assert main(["--config", str(cfg), "--out", str(o1)]) == 0
        assert main(["--config", str(cfg), "--out", str(o2), "--seed", "5"]) == 0
        assert (o1 / "trajectory.csv").read_bytes() != (o2 / "trajectory.csv").read_bytes()

    def test_obstruction_verdict(self, tmp_path):
        doc = small_doc("obstruction")
        doc["params"] = {"x": 1.0, "y": 1.0, "sigma": 0.0}
        out = tmp_path / "out"
        assert main(["--config", str(write_cfg(tmp_path, doc)), "--out", str(out)]) == 0
        cert = json.loads((out / "obstruction.json").read_text())
        assert cert["feasible"] is False
        assert cert["residual"] > 0
        assert cert["lstsq_residual"] > 0.5

    def test_verify_scenario_reduced_samples(self, tmp_path):
        doc = small_doc("verify")
        doc["data"]["M"] = 32
        doc["params"] = {
            "kernel_samples": 2000,
            "obstruction_samples": 10,
            "comparability_states": 5,
        }
        out = tmp_path / "out"
        assert main(["--config", str(write_cfg(tmp_path, doc)), "--out", str(out)]) == 0
        verdicts = json.loads((out / "verify.json").read_text())["verdicts"]
        names = {v["suite"] for v in verdicts}
        assert {
            "kernel-bounds",
            "obstruction-infeasibility",
            "comparability",
            "second-order-identity",
            "correction-function-bounds",
        } <= names
        assert all(v["pass"] for v in verdicts)


class TestReproducibility:
    @staticmethod
    def sweep_doc():
        doc = small_doc("sweep")
        doc["epsilons"] = [0.05, 0.02, 0.008]
        doc["params"] = {"s": 0.25, "fd_stride": 10}
        return doc

    def test_byte_identical_across_threads_and_reruns(self, tmp_path):
        cfg = write_cfg(tmp_path, self.sweep_doc())
        blobs = []
        for tag, threads in (("t1", 1), ("t4", 4), ("t8", 8), ("t1b", 1)):
            out = tmp_path / tag
            rc = main(["--config", str(cfg), "--out", str(out), "--threads", str(threads)])
            assert rc == 0
            blobs.append(
                (out / "sweep.csv").read_bytes() + (out / "sweep_fit.json").read_bytes()
            )
        assert all(b == blobs[0] for b in blobs[1:])


class TestShippedConfigs:
    @pytest.mark.parametrize("name", ["simulate", "verify", "sweep",
                                      "resonance_two_mode", "truncation"])
    def test_parses(self, name):
        parse_config((CONFIGS / f"{name}.json").read_text())

    def test_truncation_config_runs_clean(self, tmp_path):
        out = tmp_path / "out"
        rc = main(["--config", str(CONFIGS / "truncation.json"), "--out", str(out)])
        assert rc == 0
        summary = json.loads((out / "truncation_summary.json").read_text())
        assert summary["decreasing"] is True
