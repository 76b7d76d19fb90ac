"""End-to-end command-line runs through main(argv) in process."""

import json
import math

import numpy as np
import pytest

from qgd import closed_form_report, parse_scenario
from qgd.cli import main

ROTATION = [[0.7, 0.0], [0.0, 0.7]]


def squeeze_scenario():
    return {
        "modes": 2,
        "channels": [{"gamma": 1.0, "name": "two_mode_squeeze", "r": 0.5}],
        "solver": {"method": "ode"},
        "times": {"start": 0.0, "stop": 2.0, "count": 5},
        "diagnostics": ["nu", "ppt", "entropy", "coherent_info"],
    }


def rotation_mc_scenario():
    return {
        "modes": 1,
        "initial": {"covariance": [[1.2, 0.0], [0.0, 0.45]]},
        "channels": [{"gamma": 1.0, "generator": ROTATION}],
        "solver": {"method": "mc", "trajectories": 200, "seed": 7},
        "times": [0.0, 0.5, 1.0],
    }


def collision_scenario():
    return {
        "modes": 1,
        "initial": {"covariance": [[1.2, 0.0], [0.0, 0.45]]},
        "channels": [{"gamma": 1.0, "generator": ROTATION}],
        "solver": {"method": "mc", "trajectories": 100, "seed": 3,
                   "dt": 0.1, "steps": 5},
    }


def oracle_scenario():
    return {
        "modes": 1,
        "initial": {"mean": [0.4, -0.2]},
        "channels": [
            {"gamma": 0.6, "generator": [[0.9, 0.0], [0.0, 0.9]]},
            {"gamma": 0.4, "generator": [[0.3, 0.0], [0.0, 0.3]]},
        ],
        "solver": {"method": "ode"},
        "times": [0.0, 1.0],
        "oracle": {"cutoff": 14},
    }


def write_config(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def read_table(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, {
        name: [row[k] for row in rows] for k, name in enumerate(header)
    }


class TestValidate:
    def test_valid_scenario(self, tmp_path, capsys):
        config = write_config(tmp_path, squeeze_scenario())
        assert main(["validate", "--config", config]) == 0
        out = capsys.readouterr().out
        assert "valid" in out and "2 modes" in out and "ode" in out

    def test_invalid_scenario(self, tmp_path, capsys):
        data = squeeze_scenario()
        del data["times"]
        config = write_config(tmp_path, data)
        assert main(["validate", "--config", config]) == 2
        err = capsys.readouterr().err
        assert err.startswith("qgd: error: ScenarioError:")
        assert "\n" not in err.strip()

    def test_quiet_suppresses_output(self, tmp_path, capsys):
        config = write_config(tmp_path, squeeze_scenario())
        assert main(["validate", "--config", config, "--quiet"]) == 0
        assert capsys.readouterr().out == ""


class TestEvolve:
    def test_writes_table_and_summary(self, tmp_path):
        config = write_config(tmp_path, squeeze_scenario())
        out = tmp_path / "run"
        assert main(["evolve", "--config", config, "--out", str(out)]) == 0
        header, columns = read_table(out / "states.csv")
        expected = ["t"]
        expected += [f"V_{i}_{j}" for i in range(1, 5) for j in range(i, 5)]
        expected += [f"xi_{k}" for k in range(1, 5)]
        expected += ["nu_1", "nu_2"]
        expected += ["nu_tilde_min", "entangled", "S_total", "S_reduced", "I_C"]
        assert header == expected
        assert [float(t) for t in columns["t"]] == [0.0, 0.5, 1.0, 1.5, 2.0]
        summary = json.loads((out / "summary.json").read_text())
        assert summary["rows"] == 5
        assert summary["solver"]["method"] == "ode"
        assert summary["scenario"] == parse_scenario(squeeze_scenario()).to_dict()
        assert "states.csv" in summary["outputs"]

    def test_table_tracks_the_closed_form(self, tmp_path):
        config = write_config(tmp_path, squeeze_scenario())
        out = tmp_path / "run"
        main(["evolve", "--config", config, "--out", str(out)])
        _, columns = read_table(out / "states.csv")
        report = closed_form_report(0.5, 2.0)
        assert float(columns["nu_tilde_min"][-1]) == pytest.approx(
            report.min_ppt_symplectic_eigenvalue, rel=1e-6
        )
        assert float(columns["I_C"][-1]) == pytest.approx(
            report.coherent_information, rel=1e-6
        )
        assert columns["entangled"] == ["0", "1", "1", "1", "1"]
        rate = 2.0 * math.sinh(0.5) ** 2
        assert float(columns["nu_1"][-1]) == pytest.approx(
            0.5 * math.exp(rate * 2.0), rel=1e-6
        )

    def test_rerun_is_byte_identical(self, tmp_path):
        config = write_config(tmp_path, squeeze_scenario())
        first = tmp_path / "a"
        second = tmp_path / "b"
        main(["evolve", "--config", config, "--out", str(first)])
        main(["evolve", "--config", config, "--out", str(second)])
        assert (first / "states.csv").read_bytes() == (
            second / "states.csv"
        ).read_bytes()

    def test_no_diagnostics_means_no_extra_columns(self, tmp_path):
        data = {
            "modes": 1,
            "channels": [{"gamma": 1.0, "generator": ROTATION}],
            "solver": {"method": "ode"},
            "times": [0.0, 1.0],
        }
        config = write_config(tmp_path, data)
        out = tmp_path / "run"
        main(["evolve", "--config", config, "--out", str(out)])
        header, _ = read_table(out / "states.csv")
        assert header == ["t", "V_1_1", "V_1_2", "V_2_2", "xi_1", "xi_2", "nu_1"]

    def test_seed_override_is_recorded_as_ignored(self, tmp_path):
        config = write_config(tmp_path, squeeze_scenario())
        out = tmp_path / "run"
        main(["evolve", "--config", config, "--out", str(out), "--seed", "5"])
        summary = json.loads((out / "summary.json").read_text())
        assert any("ignored" in w for w in summary["warnings"])

    def test_mc_scenario_is_redirected_to_sample(self, tmp_path, capsys):
        config = write_config(tmp_path, rotation_mc_scenario())
        out = tmp_path / "run"
        code = main(["evolve", "--config", config, "--out", str(out)])
        assert code == 2
        assert "use the sample subcommand" in capsys.readouterr().err

    def test_bad_term_cap_environment_value(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("QGD_MAX_TERMS", "many")
        data = squeeze_scenario()
        data["solver"] = {"method": "series"}
        config = write_config(tmp_path, data)
        out = tmp_path / "run"
        assert main(["evolve", "--config", config, "--out", str(out)]) == 2
        assert "QGD_MAX_TERMS" in capsys.readouterr().err

    def test_plot_renders_figures(self, tmp_path):
        config = write_config(tmp_path, squeeze_scenario())
        out = tmp_path / "run"
        main(["evolve", "--config", config, "--out", str(out), "--plot"])
        assert (out / "states.png").exists()
        assert (out / "entanglement.png").exists()
        summary = json.loads((out / "summary.json").read_text())
        assert "states.png" in summary["outputs"]
        assert "entanglement.png" in summary["outputs"]


class TestSample:
    def test_summary_carries_sampling_statistics(self, tmp_path):
        config = write_config(tmp_path, rotation_mc_scenario())
        out = tmp_path / "run"
        assert main(["sample", "--config", config, "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        block = summary["sampling"]
        assert block["n_samples"] == 200
        assert block["n_divergent"] == 0
        assert sum(block["jump_count_histogram"].values()) == 200
        assert all(key.isdigit() for key in block["jump_count_histogram"])
        assert summary["solver"]["variant"] == "jump"
        assert summary["solver"]["seed"] == 7

    def test_rerun_is_byte_identical(self, tmp_path):
        config = write_config(tmp_path, rotation_mc_scenario())
        first = tmp_path / "a"
        second = tmp_path / "b"
        main(["sample", "--config", config, "--out", str(first)])
        main(["sample", "--config", config, "--out", str(second)])
        assert (first / "states.csv").read_bytes() == (
            second / "states.csv"
        ).read_bytes()

    def test_seed_override_changes_the_rows(self, tmp_path):
        config = write_config(tmp_path, rotation_mc_scenario())
        base = tmp_path / "a"
        other = tmp_path / "b"
        main(["sample", "--config", config, "--out", str(base)])
        main(["sample", "--config", config, "--out", str(other), "--seed", "11"])
        assert (base / "states.csv").read_bytes() != (
            other / "states.csv"
        ).read_bytes()
        summary = json.loads((other / "summary.json").read_text())
        assert summary["solver"]["seed"] == 11

    def test_deterministic_scenario_is_redirected_to_evolve(self, tmp_path, capsys):
        config = write_config(tmp_path, squeeze_scenario())
        out = tmp_path / "run"
        assert main(["sample", "--config", config, "--out", str(out)]) == 2
        assert "use the evolve subcommand" in capsys.readouterr().err

    def test_collision_rows_sit_on_the_step_grid(self, tmp_path):
        config = write_config(tmp_path, collision_scenario())
        out = tmp_path / "run"
        assert main(["sample", "--config", config, "--out", str(out)]) == 0
        _, columns = read_table(out / "states.csv")
        times = [float(t) for t in columns["t"]]
        np.testing.assert_allclose(times, 0.1 * np.arange(6), atol=1e-15)
        assert float(columns["V_1_1"][0]) == pytest.approx(1.2, rel=1e-13)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["solver"]["variant"] == "collision"
        assert "sampling" not in summary

    def test_plot_renders_the_ensemble_figure(self, tmp_path):
        config = write_config(tmp_path, rotation_mc_scenario())
        out = tmp_path / "run"
        main(["sample", "--config", config, "--out", str(out), "--plot"])
        assert (out / "states.png").exists()
        assert (out / "ensemble.png").exists()


class TestEntangle:
    def test_columns_match_the_log_space_report(self, tmp_path):
        config = write_config(tmp_path, squeeze_scenario())
        out = tmp_path / "run"
        assert main(["entangle", "--config", config, "--out", str(out)]) == 0
        _, columns = read_table(out / "states.csv")
        report = closed_form_report(0.5, 1.0)
        row = [float(t) for t in columns["t"]].index(1.0)
        assert float(columns["nu_tilde_min"][row]) == pytest.approx(
            report.min_ppt_symplectic_eigenvalue, rel=1e-14
        )
        assert float(columns["S_total"][row]) == pytest.approx(
            report.entropy_total, rel=1e-14
        )
        assert float(columns["I_C"][row]) == pytest.approx(
            report.coherent_information, rel=1e-12
        )
        assert columns["entangled"][0] == "0"
        assert columns["entangled"][row] == "1"
        rate = 2.0 * math.sinh(0.5) ** 2
        assert float(columns["nu_1"][row]) == pytest.approx(
            0.5 * math.exp(rate), rel=1e-14
        )
        summary = json.loads((out / "summary.json").read_text())
        assert summary["solver"] == {"method": "closed_form", "r": 0.5}

    def test_diagnostic_subset_limits_the_columns(self, tmp_path):
        data = squeeze_scenario()
        data["diagnostics"] = ["ppt"]
        config = write_config(tmp_path, data)
        out = tmp_path / "run"
        main(["entangle", "--config", config, "--out", str(out)])
        header, _ = read_table(out / "states.csv")
        assert "nu_tilde_min" in header and "entangled" in header
        assert "S_total" not in header and "I_C" not in header

    def test_needs_the_squeeze_channel(self, tmp_path, capsys):
        data = {
            "modes": 1,
            "channels": [{"gamma": 1.0, "generator": ROTATION}],
            "solver": {"method": "ode"},
            "times": [0.0, 1.0],
        }
        config = write_config(tmp_path, data)
        out = tmp_path / "run"
        assert main(["entangle", "--config", config, "--out", str(out)]) == 2
        assert "two-mode" in capsys.readouterr().err


class TestOracle:
    def test_passing_report(self, tmp_path, capsys):
        config = write_config(tmp_path, oracle_scenario())
        out = tmp_path / "run"
        assert main(["oracle", "--config", config, "--out", str(out)]) == 0
        assert "pass: all residuals" in capsys.readouterr().out
        payload = json.loads((out / "oracle.json").read_text())
        assert payload["passed"] is True
        assert payload["failures"] == []
        assert set(payload["residuals"]) == {
            "moments_vs_symplectic",
            "spectral_vs_integrator",
            "controlled_unitary",
            "collision_step",
        }
        assert set(payload["thresholds"]) == set(payload["residuals"]) | {"leakage"}
        assert payload["settings"]["cutoff"] == 14
        assert payload["collision"]["ratio_bounds"] == [3.0, 5.0]

    def test_leaky_truncation_fails_loudly(self, tmp_path, capsys):
        data = squeeze_scenario()
        data["oracle"] = {"cutoff": 20}
        config = write_config(tmp_path, data)
        out = tmp_path / "run"
        assert main(["oracle", "--config", config, "--out", str(out)]) == 3
        err = capsys.readouterr().err
        assert err.startswith("qgd: error: LeakageError:")
        assert not (out / "oracle.json").exists()

    def test_threshold_violation_names_the_residual(
        self, tmp_path, capsys, monkeypatch
    ):
        report = {
            "residuals": {"moments_vs_symplectic": 0.5},
            "collision": {"richardson_ratio": None},
            "leakage": 0.0,
            "failures": ["moments_vs_symplectic"],
            "passed": False,
        }
        monkeypatch.setattr("qgd.cli.oracle_report", lambda scenario: report)
        config = write_config(tmp_path, oracle_scenario())
        out = tmp_path / "run"
        assert main(["oracle", "--config", config, "--out", str(out)]) == 3
        err = capsys.readouterr().err
        assert "ResidualExceeded: moments_vs_symplectic = 0.5" in err
        assert (out / "oracle.json").exists()

    def test_non_vacuum_initial_state_is_rejected(self, tmp_path, capsys):
        data = oracle_scenario()
        data["initial"]["covariance"] = [[1.2, 0.0], [0.0, 0.45]]
        config = write_config(tmp_path, data)
        out = tmp_path / "run"
        assert main(["oracle", "--config", config, "--out", str(out)]) == 2
        assert "vacuum" in capsys.readouterr().err

    def test_plot_renders_the_residual_chart(self, tmp_path):
        config = write_config(tmp_path, oracle_scenario())
        out = tmp_path / "run"
        main(["oracle", "--config", config, "--out", str(out), "--plot"])
        assert (out / "oracle.png").exists()
