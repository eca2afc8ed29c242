import json

import pytest

from dualmode.cli import main
from dualmode.report import read_csv


@pytest.fixture()
def tiny_config(tmp_path):
    doc = {
        "name": "tiny",
        "reference": {"kind": "circle", "radius": 8.0, "omega": 0.15},
        "schedule": [[0.0, 1], [0.2, 0]],
        "initial_state": [0.0, -4.0, 0.0, 0.5, 0.0],
        "dt": 0.001,
        "duration": 0.4,
    }
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(doc))
    return path


class TestSimulate:
    def test_writes_csv_metrics_and_figures(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["simulate", str(tiny_config), "--output-dir", str(out)])
        assert code == 0
        log = read_csv(out / "tiny.csv")
        assert log.t.shape[0] == 401
        metrics = json.loads((out / "tiny_metrics.json").read_text())
        assert "total_energy" in metrics and "max_step_dv2" in metrics
        pngs = sorted(p.name for p in out.glob("*.png"))
        assert "tiny_trajectory.png" in pngs and "tiny_timeseries.png" in pngs

    def test_no_figures_flag(self, tiny_config, tmp_path):
        out = tmp_path / "nofigs"
        assert main(["simulate", str(tiny_config), "--output-dir", str(out), "--no-figures"]) == 0
        assert list(out.glob("*.png")) == []
        assert (out / "tiny.csv").exists()

    def test_env_var_output_dir(self, tiny_config, tmp_path, monkeypatch):
        target = tmp_path / "envout"
        monkeypatch.setenv("DUALMODE_OUTPUT_DIR", str(target))
        assert main(["simulate", str(tiny_config), "--no-figures"]) == 0
        assert (target / "tiny.csv").exists()

    def test_invalid_config_exits_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"plant\": \"segway\"}")
        assert main(["simulate", str(bad), "--output-dir", str(tmp_path)]) == 1
        assert "config error" in capsys.readouterr().err

    def test_missing_config_exits_one(self, tmp_path, capsys):
        assert main(["simulate", "no_such_scenario", "--output-dir", str(tmp_path)]) == 1

    def test_singular_scenario_exits_two(self, tmp_path, capsys):
        # sagittal speed formally nonzero (passes load-time validation) but far
        # below the runtime determinant guard for the energy-saving mode
        doc = {
            "name": "singular",
            "reference": {"kind": "circle", "radius": 8.0, "omega": 0.15},
            "schedule": [[0.0, 0]],
            "initial_state": [0.0, -8.0, 0.0, 1e-9, 0.0],
            "dt": 0.001,
            "duration": 1.0,
        }
        path = tmp_path / "singular.json"
        path.write_text(json.dumps(doc))
        code = main(["simulate", str(path), "--output-dir", str(tmp_path)])
        assert code == 2
        err = capsys.readouterr().err
        assert "singularity abort" in err and "t=" in err


class TestBundledScenario:
    def test_sim1_heading_converges_inside_dexterous_windows(self, tmp_path):
        # the heading target is enforced only while the mode is dexterous:
        # |e2| must shrink across each orange window of the bundled scenario
        out = tmp_path / "sim1"
        assert main(["simulate", "sim1_circle", "--output-dir", str(out), "--no-figures"]) == 0
        log = read_csv(out / "sim1_circle.csv")
        for t0, t1 in ((8.0, 11.0), (25.0, 28.0)):
            i0, i1 = round(t0 / 1e-3), round(t1 / 1e-3)
            assert abs(log.e2[i1]) < 0.15 * abs(log.e2[i0])


class TestServeValidation:
    def test_invalid_config_exits_one(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("not json at all")
        assert main(["serve", str(bad), "--port", "0"]) == 1

    def test_naive_config_rejected(self, tmp_path, capsys):
        doc = {
            "name": "naive",
            "controller": "naive-pair",
            "reference": {"kind": "line"},
            "schedule": [[0.0, 1]],
            "initial_state": [3.0, 6.0, 0.0, 0.5, 0.0],
            "dt": 0.001,
            "duration": 1.0,
        }
        path = tmp_path / "naive.json"
        path.write_text(json.dumps(doc))
        assert main(["serve", str(path), "--port", "0"]) == 1
        assert "unified" in capsys.readouterr().err
