"""Tests for configs, experiment runners, CLI, and suite plumbing."""

import json
from pathlib import Path

import numpy as np
import pytest

from anisostable.cli import main as cli_main
from anisostable.config import ConfigError, load_config
from anisostable.experiments import run_experiment, run_full_suite

DENSITY_TOML = """
experiment = "density"
seed = 7

[problem]
d = 1
alphas = [1.0]

[numerics]
t = 1.0
grid_extent = 200.0
grid_points = 4001
"""

MARTINGALE_TOML = """
experiment = "martingale"
seed = 11

[problem]
d = 2
alphas = [0.9, 1.4]
x0 = [0.0, 0.0]

[problem.field]
kind = "constant"
coeffs = [1.0, 0.8]

[numerics]
T = 1.0
dt = 0.00390625
npaths = 400
grid_points = 81
"""

UNIQUENESS_TOML = """
experiment = "uniqueness"
seed = 5

[problem]
d = 2
alphas = [0.9, 1.5]
x0 = [0.0, 0.0]

[problem.field]
kind = "sine"
base = [1.0, 1.2]
amplitude = [0.3, 0.25]

[numerics]
T = 2.0
levels = [2, 3, 4]
reference_level = 7
coarse_level = 5
lambdas = [2.0, 4.0]
npaths = 400
"""

TRANSIENCE_D3_TOML = """
experiment = "transience"
seed = 1

[problem]
d = 3
alphas = [1.0, 1.0, 1.0]
"""

TRANSIENCE_D1_TOML = """
experiment = "transience"
seed = 1

[problem]
d = 1
alphas = [1.5]
"""


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- config validation ------------------------------------------------------------

def test_config_roundtrip(tmp_path):
    cfg = load_config(_write(tmp_path, "d.toml", DENSITY_TOML))
    assert cfg.experiment == "density"
    assert cfg.seed == 7
    assert cfg.alphas().d == 1


def test_config_unknown_key_named(tmp_path):
    bad = DENSITY_TOML + "\n[extra]\nfoo = 1\n"
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, "bad.toml", bad))
    assert "extra" in str(exc.value)


def test_config_unknown_numeric_key(tmp_path):
    bad = DENSITY_TOML.replace("t = 1.0", "t = 1.0\nbogus_knob = 3")
    with pytest.raises(ConfigError) as exc:
        load_config(_write(tmp_path, "bad2.toml", bad))
    assert exc.value.key == "bogus_knob"


def test_config_alpha_range(tmp_path):
    bad = DENSITY_TOML.replace("alphas = [1.0]", "alphas = [2.0]")
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, "bad3.toml", bad))


# --- runners ------------------------------------------------------------------------

def test_density_runner(tmp_path):
    cfg = load_config(_write(tmp_path, "d.toml", DENSITY_TOML))
    rep = run_experiment(cfg, tmp_path / "out")
    assert not rep.hard_fail
    assert (tmp_path / "out" / "d_density.csv").exists()
    assert (tmp_path / "out" / "d_report.json").exists()


def test_density_runner_reproducible(tmp_path):
    cfg = load_config(_write(tmp_path, "d.toml", DENSITY_TOML))
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "d_density.csv").read_bytes()
    b = (tmp_path / "b" / "d_density.csv").read_bytes()
    assert a == b


def test_transience_runner_both_regimes(tmp_path):
    cfg3 = load_config(_write(tmp_path, "t3.toml", TRANSIENCE_D3_TOML))
    rep3 = run_experiment(cfg3, tmp_path / "out")
    assert not rep3.hard_fail
    cfg1 = load_config(_write(tmp_path, "t1.toml", TRANSIENCE_D1_TOML))
    rep1 = run_experiment(cfg1, tmp_path / "out")
    assert not rep1.hard_fail
    data = json.loads((tmp_path / "out" / "t1_transience.json").read_text())
    assert data["diverging"] is True


def test_martingale_runner_smoke(tmp_path):
    cfg = load_config(_write(tmp_path, "m.toml", MARTINGALE_TOML))
    rep = run_experiment(cfg, tmp_path / "out")
    assert not rep.hard_fail
    names = {v.name for v in rep.verdicts}
    assert any(n.startswith("residual") for n in names)
    assert any(n.startswith("negative_control") for n in names)
    controls = [v for v in rep.verdicts if v.name.startswith("negative_control")]
    assert all(v.passed for v in controls)


def test_uniqueness_runner_smoke(tmp_path):
    cfg = load_config(_write(tmp_path, "u.toml", UNIQUENESS_TOML))
    rep = run_experiment(cfg, tmp_path / "out")
    assert not rep.hard_fail
    assert (tmp_path / "out" / "u_fingerprints.csv").exists()


# --- CLI and suite --------------------------------------------------------------------

def test_cli_density(tmp_path, capsys):
    p = _write(tmp_path, "d.toml", DENSITY_TOML)
    code = cli_main(["density", "--config", str(p), "--out", str(tmp_path / "o")])
    assert code == 0
    out = capsys.readouterr().out
    assert "PASS" in out


def test_cli_subcommand_mismatch(tmp_path, capsys):
    p = _write(tmp_path, "d.toml", DENSITY_TOML)
    code = cli_main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")])
    assert code == 2


def test_cli_schema_error_exit_code(tmp_path):
    p = _write(tmp_path, "bad.toml", DENSITY_TOML + "\nunknown_top = 1\n")
    code = cli_main(["density", "--config", str(p), "--out", str(tmp_path / "o")])
    assert code == 2


def test_suite_empty_dir(tmp_path):
    code, bundle = run_full_suite(tmp_path / "cfgs_empty", tmp_path / "out")
    assert code == 0
    assert bundle["experiments"] == []


def test_suite_isolation_and_exit_codes(tmp_path):
    cfgs = tmp_path / "cfgs"
    cfgs.mkdir()
    (cfgs / "ok.toml").write_text(DENSITY_TOML)
    (cfgs / "broken.toml").write_text(DENSITY_TOML + "\nmystery = true\n")
    code, bundle = run_full_suite(cfgs, tmp_path / "out")
    assert code == 2
    statuses = {e["config"].split("/")[-1]: e["status"]
                for e in bundle["experiments"]}
    assert statuses["ok.toml"] == "ok"
    assert statuses["broken.toml"] == "config_error"
    assert "mystery" in bundle["experiments"][0]["report"].get("error", "") or \
           "mystery" in bundle["experiments"][1]["report"].get("error", "")


def test_suite_seed_reproducibility(tmp_path):
    cfgs = tmp_path / "cfgs"
    cfgs.mkdir()
    (cfgs / "d.toml").write_text(DENSITY_TOML)
    run_full_suite(cfgs, tmp_path / "r1")
    run_full_suite(cfgs, tmp_path / "r2")
    a = (tmp_path / "r1" / "d_density.csv").read_bytes()
    b = (tmp_path / "r2" / "d_density.csv").read_bytes()
    assert a == b
