import json
from pathlib import Path

import numpy as np
import pytest

import spadesim.cli as cli
from spadesim.cli import FIGURES, ConfigError, ExperimentConfig, main
from spadesim.psf import NonConvergence


def write_config(tmp_path, body, name="run.ini"):
    path = tmp_path / name
    path.write_text(body)
    return str(path)


BASIC = """
[experiment]
figure = InfoCurves
seed = 7

[psf]
kind = gaussian
sigma = 1.0

[grid]
min = 0.0
max = 4.0
points = 9
"""


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------

def test_defaults_without_file():
    cfg = ExperimentConfig()
    assert cfg.figure == "all"
    assert cfg.grid_points == 121
    assert cfg.budgets == (20, 100, 500)


def test_parse_basic_file(tmp_path):
    cfg = ExperimentConfig.from_file(write_config(tmp_path, BASIC))
    assert cfg.figure == "InfoCurves"
    assert cfg.seed == 7
    assert cfg.grid_points == 9


def test_unknown_section_rejected(tmp_path):
    path = write_config(tmp_path, BASIC + "\n[telescope]\nmirrors = 2\n")
    with pytest.raises(ConfigError, match="telescope"):
        ExperimentConfig.from_file(path)


def test_unknown_key_rejected(tmp_path):
    path = write_config(tmp_path, BASIC + "\n[output]\nfolder = x\n")
    with pytest.raises(ConfigError, match="output.folder"):
        ExperimentConfig.from_file(path)


def test_bad_value_names_the_field(tmp_path):
    path = write_config(tmp_path, "[grid]\npoints = eleven\n")
    with pytest.raises(ConfigError, match="grid.points"):
        ExperimentConfig.from_file(path)


def test_bad_figure_named(tmp_path):
    path = write_config(tmp_path, "[experiment]\nfigure = InfoCurvez\n")
    with pytest.raises(ConfigError, match="figure"):
        ExperimentConfig.from_file(path)


def test_validation_catches_bad_grid():
    with pytest.raises(ConfigError, match="grid"):
        ExperimentConfig(grid_min=3.0, grid_max=1.0)
    with pytest.raises(ConfigError, match="points"):
        ExperimentConfig(grid_points=1)


def test_log_scale_needs_positive_min():
    with pytest.raises(ConfigError):
        ExperimentConfig(grid_scale="log", grid_min=0.0)


def test_tabulated_requires_path():
    with pytest.raises(ConfigError, match="psf.path"):
        ExperimentConfig(psf_kind="tabulated")


# ---------------------------------------------------------------------------
# running figures
# ---------------------------------------------------------------------------

def run_main(args):
    return main(args)


def test_info_curves_end_to_end(tmp_path):
    cfgfile = write_config(tmp_path, BASIC)
    out = tmp_path / "results"
    rc = run_main(["run", "--config", cfgfile, "--out", str(out)])
    assert rc == 0

    files = sorted(p.name for p in out.glob("*.csv"))
    assert files == ["info_curves_j11_direct.csv", "info_curves_j22_direct.csv",
                     "info_curves_k11.csv", "info_curves_k22.csv"]

    k22 = (out / "info_curves_k22.csv").read_text().splitlines()
    comments = [ln for ln in k22 if ln.startswith("#")]
    assert any("normalization" in ln for ln in comments)
    rows = [ln for ln in k22 if not ln.startswith("#")][1:]
    assert len(rows) == 9
    # normalized quantum separation information is identically 1
    assert all(float(r.split(",")[1]) == 1.0 for r in rows)
    assert all(r.split(",")[2] == "ok" for r in rows)

    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 7
    assert "info_curves_k22.csv" in manifest["files"]


def test_seed_and_trials_overrides(tmp_path):
    cfgfile = write_config(tmp_path, BASIC)
    out = tmp_path / "results"
    rc = run_main(["run", "--config", cfgfile, "--figure", "McBinary",
                   "--out", str(out), "--seed", "99", "--trials", "40"])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 99
    assert manifest["config"]["trials"] == 40
    sidecars = list(out.glob("mc_binary_L*.csv.json"))
    assert len(sidecars) == 3
    blob = json.loads(sidecars[0].read_text())
    assert blob["seed"] == 99 and blob["trials"] == 40


def test_reruns_are_byte_identical(tmp_path):
    cfgfile = write_config(tmp_path, BASIC)
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_main(["run", "--config", cfgfile, "--figure", "McHg",
                     "--out", str(a), "--trials", "60"]) == 0
    assert run_main(["run", "--config", cfgfile, "--figure", "McHg",
                     "--out", str(b), "--trials", "60"]) == 0
    for pa in sorted(a.glob("*.csv")):
        pb = b / pa.name
        assert pa.read_bytes() == pb.read_bytes(), pa.name


def test_config_error_exit_code(tmp_path, capsys):
    cfgfile = write_config(tmp_path, "[experiment]\nfigure = NoSuchFigure\n")
    rc = run_main(["run", "--config", cfgfile])
    assert rc == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_code(tmp_path, capsys):
    rc = run_main(["run", "--config", str(tmp_path / "absent.ini")])
    assert rc == 2


def test_psf_figure_mismatch_is_config_error(tmp_path, capsys):
    cfgfile = write_config(tmp_path, BASIC)
    rc = run_main(["run", "--config", cfgfile, "--figure", "SincComparison",
                   "--out", str(tmp_path / "x")])
    assert rc == 2
    err = capsys.readouterr().err
    assert "SincComparison" in err


def test_sinc_figure_with_sinc_psf(tmp_path):
    body = """
[experiment]
figure = SincComparison

[psf]
kind = sinc
width = 1.0

[grid]
points = 7
max = 3.0
"""
    cfgfile = write_config(tmp_path, body)
    out = tmp_path / "sinc"
    assert run_main(["run", "--config", cfgfile, "--out", str(out)]) == 0
    names = {p.name for p in out.glob("*.csv")}
    assert "sinc_comparison_j22_direct.csv" in names
    assert "sinc_comparison_k22.csv" in names


def test_all_skips_incompatible_figures(tmp_path):
    cfg = ExperimentConfig(figure="all", psf_kind="gaussian")
    figures = cli._figure_list(cfg)
    assert "SincComparison" not in figures
    assert "InfoCurves" in figures
    sinc_cfg = ExperimentConfig(figure="all", psf_kind="sinc")
    sinc_figures = cli._figure_list(sinc_cfg)
    assert "SincComparison" in sinc_figures
    assert "McHg" not in sinc_figures


def test_dead_curve_exit_code(tmp_path, monkeypatch, capsys):
    # every point of a curve failing numerically must surface as status 3,
    # with the failure flagged per-row in the file
    def explode(model):
        raise NonConvergence("synthetic stall")

    monkeypatch.setattr(cli, "direct_imaging_fisher", explode)
    cfgfile = write_config(tmp_path, BASIC)
    out = tmp_path / "dead"
    rc = run_main(["run", "--config", cfgfile, "--out", str(out)])
    assert rc == 3
    rows = [ln for ln in (out / "info_curves_j22_direct.csv").read_text().splitlines()
            if not ln.startswith("#")][1:]
    assert all("failed: NonConvergence" in r for r in rows)
    assert all(r.split(",")[1] == "nan" for r in rows)
    # the quantum curves never call the patched routine and stay healthy
    k22_rows = [ln for ln in (out / "info_curves_k22.csv").read_text().splitlines()
                if not ln.startswith("#")][1:]
    assert all(r.split(",")[2] == "ok" for r in k22_rows)


def test_figure_registry_complete():
    assert set(FIGURES) == set(cli._RUNNERS)
    assert len(FIGURES) == 10
