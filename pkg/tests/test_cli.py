import json
import os
from pathlib import Path

import pytest

from credsets.cli import cli_main
from credsets.experiments import load_config
from credsets.sequence_model import lacunary_signal, write_signal_csv

CONFIG = {
    "truth": {"generator": "polynomial", "beta": 1.0},
    "prior": {"gamma": 1.0},
    "n": 100,
    "alpha": 0.05,
    "norm": "ellipsoid",
    "draws": 300,
    "replications": 6,
    "master_seed": 42,
}


def write_config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return path


def outputs(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.name != "manifest.json"}


def test_coverage_rerun_byte_identical(tmp_path):
    cfg = write_config(tmp_path, CONFIG)
    assert cli_main(["coverage", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    assert cli_main(["coverage", "--config", str(cfg), "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    a, b = outputs(tmp_path / "a"), outputs(tmp_path / "b")
    assert set(a) == {"replications.csv", "summary.json"}
    assert a == b
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["master_seed"] == 42
    assert len(manifest["replication_seeds"]["replication_seeds"]) == 6
    assert {"library_version", "wall_time_seconds", "config"} <= set(manifest)


def test_seed_override_changes_output(tmp_path):
    cfg = write_config(tmp_path, CONFIG)
    cli_main(["coverage", "--config", str(cfg), "--out", str(tmp_path / "a")])
    cli_main(["coverage", "--config", str(cfg), "--out", str(tmp_path / "b"), "--seed", "43"])
    assert outputs(tmp_path / "a") != outputs(tmp_path / "b")


def test_missing_alpha_exit_1(tmp_path, capsys):
    cfg = write_config(tmp_path, {k: v for k, v in CONFIG.items() if k != "alpha"})
    assert cli_main(["coverage", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert "alpha" in capsys.readouterr().err


@pytest.mark.parametrize(
    "argv",
    [["frobnicate"], [], ["coverage"], ["coverage", "--config", "does-not-exist.json"]],
)
def test_usage_errors_exit_1(argv):
    assert cli_main(argv) == 1


def test_malformed_json_exit_1(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli_main(["coverage", "--config", str(path)]) == 1


@pytest.mark.skipif(os.geteuid() == 0, reason="root can write anywhere")
def test_unwritable_directory_exit_2_chmod(tmp_path):
    locked = tmp_path / "locked"
    locked.mkdir()
    locked.chmod(0o500)
    cfg = write_config(tmp_path, CONFIG)
    assert cli_main(["coverage", "--config", str(cfg), "--out", str(locked / "sub")]) == 2


def test_unwritable_directory_exit_2(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cfg = write_config(tmp_path, CONFIG)
    assert cli_main(["coverage", "--config", str(cfg), "--out", str(blocker / "sub")]) == 2


def test_check_class_lacunary(tmp_path, capsys):
    write_signal_csv(lacunary_signal(2, 300), tmp_path / "sig.csv")
    params = write_config(tmp_path, {"condition": "polished_tail", "L0": 10, "rho": 2, "N0": 2}, "p.json")
    code = cli_main(
        ["check-class", "--signal", str(tmp_path / "sig.csv"), "--params", str(params), "--out", str(tmp_path / "v")]
    )
    assert code == 0
    verdict = json.loads(capsys.readouterr().out)
    assert verdict["pass"] is False
    assert verdict["first_violation_N"] == 5
    assert verdict["checked_range"] == [2, 150]
    assert json.loads((tmp_path / "v" / "verdict.json").read_text()) == verdict


def test_check_class_bad_params_exit_1(tmp_path):
    write_signal_csv(lacunary_signal(2, 30), tmp_path / "sig.csv")
    params = write_config(tmp_path, {"condition": "polished_tail", "L0": -1}, "p.json")
    assert cli_main(["check-class", "--signal", str(tmp_path / "sig.csv"), "--params", str(params)]) == 1


def test_check_class_from_config(tmp_path, capsys):
    write_signal_csv(lacunary_signal(2, 64), tmp_path / "sig.csv")
    cfg = write_config(tmp_path, {"signal": "sig.csv", "params": {"condition": "tail_bound", "beta": 1.0}})
    assert cli_main(["check-class", "--config", str(cfg)]) == 0
    assert json.loads(capsys.readouterr().out)["pass"] is True


def test_figure1_with_plot(tmp_path):
    data = {
        "truth": {"generator": "polynomial", "beta": 1.0},
        "prior": {"gamma": 1.0},
        "alpha": 0.05,
        "master_seed": 1,
        "n": 100,
        "draws": 500,
        "subsample": 50,
    }
    cfg = write_config(tmp_path, data)
    assert cli_main(["figure1", "--config", str(cfg), "--out", str(tmp_path / "f"), "--plot"]) == 0
    names = {p.name for p in (tmp_path / "f").iterdir()}
    assert {"truth_mean.csv", "draws_subsample.csv", "accept_flags.csv", "summary.json", "manifest.json"} <= names
    pngs = [n for n in names if n.endswith(".png")]
    assert pngs
    assert (tmp_path / "f" / pngs[0]).read_bytes()[:4] == b"\x89PNG"


@pytest.mark.parametrize("kind", ["freedman", "scaling", "bvm"])
def test_other_experiments_run_with_plot(tmp_path, kind):
    data = {
        "truth": {"generator": "polynomial", "beta": 1.0},
        "prior": {"gamma": 1.0},
        "n_grid": [50, 100, 200],
        "alpha": 0.05,
        "norm": "ellipsoid",
        "draws": 100,
        "replications": 3,
        "master_seed": 2,
    }
    if kind == "freedman":
        data.pop("norm")
        data.pop("alpha")
    if kind == "bvm":
        data.pop("alpha")
    cfg = write_config(tmp_path, data)
    assert cli_main([kind, "--config", str(cfg), "--out", str(tmp_path / kind), "--plot"]) == 0
    names = {p.name for p in (tmp_path / kind).iterdir()}
    assert {"replications.csv", "summary.json", "manifest.json"} <= names
    assert any(n.endswith(".png") for n in names)


CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.mark.parametrize(
    "name, kind",
    [
        ("coverage", "coverage"),
        ("coverage_eb", "coverage"),
        ("freedman", "freedman"),
        ("freedman_k1", "freedman"),
        ("scaling", "scaling"),
        ("bvm", "bvm"),
        ("figure1", "figure1"),
    ],
)
def test_shipped_configs_validate(name, kind):
    assert load_config(CONFIG_DIR / f"{name}.json", kind).kind == kind


def test_shipped_check_class_config(capsys):
    assert cli_main(["check-class", "--config", str(CONFIG_DIR / "check_class_witness.json")]) == 0
    assert json.loads(capsys.readouterr().out)["pass"] is True
