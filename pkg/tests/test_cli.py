import json

import numpy as np
import pytest

from gsloc.cli import main


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def small_scene(tmp_path_factory):
    """A small simulated campaign on disk: scene.json, tensor.csv, map.csv, online files."""
    out = tmp_path_factory.mktemp("campaign")
    scene = {
        "aps": [[0.0, 0.0], [12.0, 3.0], [6.0, 9.0], [2.0, 7.0], [10.0, 8.0]],
        "tx_power_dbm": -35.0,
        "grid_rows": 4,
        "grid_cols": 5,
        "spacing_ft": 3.0,
        "seed": 7,
    }
    (out / "scene.json").write_text(json.dumps(scene))
    code = run(["--out-dir", out, "simulate", "--scene", out / "scene.json",
                "--samples", 5, "--test-points", 2])
    assert code == 0
    return out


def test_help_exits_zero(capsys):
    assert run(["--help"]) == 0
    assert "simulate" in capsys.readouterr().out


def test_missing_required_flag_is_usage_error(capsys):
    assert run(["localize", "--online", "x.csv"]) == 1
    assert "ERROR 1:" in capsys.readouterr().err


def test_unknown_flag_rejected(capsys):
    assert run(["simulate", "--walls", "3"]) == 1


def test_missing_file_is_data_error(capsys):
    code = run(["localize", "--map", "nope.csv", "--online", "nope2.csv"])
    assert code == 2
    assert "ERROR 2:" in capsys.readouterr().err


def test_simulate_writes_campaign(small_scene):
    assert (small_scene / "tensor.csv").exists()
    assert (small_scene / "map.csv").exists()
    assert (small_scene / "online_0000.csv").exists()
    assert (small_scene / "online_0001.csv").exists()


def test_localize_from_tensor_csv(small_scene, capsys):
    code = run(["localize", "--map", small_scene / "tensor.csv",
                "--online", small_scene / "online_0000.csv",
                "--num-aps", 4, "--k", 3])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert set(payload) >= {"position", "detected_outlier_aps", "diagnostics", "error_ft"}
    assert len(payload["position"]) == 2


def test_localize_plain_map_needs_tensor_for_fisher(small_scene, capsys):
    code = run(["localize", "--map", small_scene / "map.csv",
                "--online", small_scene / "online_0000.csv"])
    assert code == 2
    assert "tensor" in capsys.readouterr().err


def test_localize_cs_strongest_works_on_plain_map(small_scene, capsys):
    code = run(["localize", "--map", small_scene / "map.csv",
                "--online", small_scene / "online_0000.csv",
                "--mode", "cs", "--ap-select", "strongest", "--num-aps", 4])
    assert code == 0
    json.loads(capsys.readouterr().out)


def test_localize_mgs_reports_outliers(small_scene, tmp_path, capsys):
    code = run(["--out-dir", tmp_path, "localize",
                "--map", small_scene / "tensor.csv",
                "--online", small_scene / "online_0001.csv",
                "--mode", "mgs", "--num-aps", 5, "--k", 3,
                "--out", tmp_path / "result.json"])
    assert code == 0
    payload = json.loads((tmp_path / "result.json").read_text())
    assert "detected_outlier_aps" in payload
    assert "grouping" in payload


def test_interpolate_roundtrip_and_re_report(small_scene, tmp_path, capsys):
    code = run(["interpolate", "--map", small_scene / "map.csv",
                "--plan", "random:10:3", "--lambda1", "0.05",
                "--truth", small_scene / "map.csv",
                "--out", tmp_path / "dense.csv"])
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["plan"]["num_selected"] == 10
    assert payload["re_dbm"] >= 0.0
    assert (tmp_path / "dense.csv").exists()


def test_interpolate_bad_plan_spec(capsys, small_scene, tmp_path):
    code = run(["interpolate", "--map", small_scene / "map.csv",
                "--plan", "sobol:4", "--out", tmp_path / "x.csv"])
    assert code == 1


def test_evaluate_writes_report(small_scene, tmp_path):
    code = run(["--seed", 3, "--out-dir", tmp_path, "evaluate",
                "--scene", small_scene / "scene.json",
                "--num-aps", 4, "--k", 3, "--samples", 4, "--test-points", 3])
    assert code == 0
    report = json.loads((tmp_path / "report_gs.json").read_text())
    assert report["num_points"] == 3
    lines = (tmp_path / "errors_gs.csv").read_text().splitlines()
    assert lines[0].startswith("index,truth_x_ft")
    assert len(lines) == 4


def test_sweep_runs_config(small_scene, tmp_path, capsys):
    config = {
        "seed": 1,
        "samples_per_rp": 4,
        "test_points": 2,
        "scene": json.loads((small_scene / "scene.json").read_text()),
        "localizer": {"num_aps": 4, "k": 3},
        "sweeps": {"groups": [2, 3]},
    }
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(json.dumps(config))
    code = run(["--out-dir", tmp_path / "out", "sweep", "--config", cfg_path])
    assert code == 0
    assert (tmp_path / "out" / "sweep_groups.csv").exists()


def test_threads_one_rerun_is_byte_identical(small_scene, tmp_path):
    for sub in ("a", "b"):
        code = run(["--seed", 5, "--threads", 1, "--out-dir", tmp_path / sub,
                    "evaluate", "--scene", small_scene / "scene.json",
                    "--num-aps", 4, "--k", 3, "--samples", 4, "--test-points", 2])
        assert code == 0
    for name in ("errors_gs.csv", "report_gs.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_inputs_are_never_mutated(small_scene, tmp_path):
    before = (small_scene / "map.csv").read_bytes()
    run(["interpolate", "--map", small_scene / "map.csv", "--plan", "periodic:2",
         "--lambda1", "0.1", "--out", tmp_path / "d.csv"])
    assert (small_scene / "map.csv").read_bytes() == before
