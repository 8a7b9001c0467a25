import csv
import json

import numpy as np
import pytest

from hpsscatter.cli import main, read_raster
from hpsscatter.config import RunConfig, load_config
from hpsscatter.errors import ConfigError


def _rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_defaults_and_overrides(tmp_path):
    cfg = load_config(None, {"kappa": 12.5, "seed": 4})
    assert cfg.kappa == 12.5 and cfg.Ng == 14 and cfg.Nc == 16
    assert cfg.schema_version == 1


def test_yaml_and_json_configs(tmp_path):
    (tmp_path / "a.yaml").write_text("schema_version: 1\npotential: bump2\nkappa: 9\n")
    (tmp_path / "b.json").write_text(json.dumps({"potential": "lens", "levels": 2}))
    assert load_config(tmp_path / "a.yaml").potential == "bump2"
    assert load_config(tmp_path / "b.json").levels == 2


@pytest.mark.parametrize("body", [
    {"schema_version": 2},
    {"kappa": -1},
    {"directions": [[1, 1]]},
    {"Nc": 15},
    {"colour": "red"},
    {"levels_list": [4, 3]},
])
def test_invalid_configs(tmp_path, body):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(body))
    with pytest.raises(ConfigError):
        load_config(p)
    assert main(["solve", "--config", str(p), "--out", str(tmp_path / "o")]) == 2


def test_random_bumps_needs_seed():
    with pytest.raises(ConfigError):
        RunConfig(potential="random_bumps").make_potential()
    assert RunConfig(potential="random_bumps", seed=3).make_potential().params["seed"] == 3


def test_large_gate(tmp_path):
    assert main(["solve", "--levels", "7", "--out", str(tmp_path)]) == 2


def test_resonance_exit_code(tmp_path, capsys):
    code = main(["solve", "--potential", "zero", "--kappa", str(np.pi * np.sqrt(2)),
                 "--levels", "1", "--out", str(tmp_path)])
    assert code == 3
    assert "leaf boxes" in capsys.readouterr().err


def test_solve_outputs_and_determinism(tmp_path):
    cfg = {"potential": "bump1", "kappa": 20, "levels": 2,
           "directions": [[1, 0], [0, 1]], "probes": [[0.5, 0], [1, 0.5]],
           "grid": {"bounds": [-1, 1, -1, 1], "nx": 16, "ny": 12}}
    p = tmp_path / "run.json"
    p.write_text(json.dumps(cfg))
    for out in ("a", "b"):
        assert main(["solve", "--config", str(p), "--out", str(tmp_path / out)]) == 0
    a, b = tmp_path / "a", tmp_path / "b"
    assert (a / "probes.csv").read_bytes() == (b / "probes.csv").read_bytes()
    rows = _rows(a / "probes.csv")
    assert len(rows) == 4
    assert float(rows[0]["abs_err"]) < 1e-3
    meta = json.loads((a / "solve_meta.json").read_text())
    assert meta["N"] == 3721 and meta["n"] == 640 and len(meta["T_apply"]) == 2
    assert meta["config"]["Ng"] == 14
    r = read_raster(a / "grid_1.bin")
    assert r["u"].shape == (12, 16) and r["bounds"] == (-1.0, 1.0, -1.0, 1.0)
    grid = _rows(a / "grid_1.csv")
    assert len(grid) == 16 * 12
    k = 5
    assert float(grid[k]["re_u"]) == r["u"].ravel()[k].real


def test_zero_potential_solve_reports_small_field(tmp_path):
    assert main(["solve", "--potential", "zero", "--kappa", "20", "--levels", "3",
                 "--out", str(tmp_path)]) == 0
    for row in _rows(tmp_path / "boundary_0.csv"):
        assert abs(complex(float(row["re_us"]), float(row["im_us"]))) <= 1e-8


def test_reference_command(tmp_path):
    assert main(["reference", "--potential", "bump1", "--kappa", "40", "--out", str(tmp_path)]) == 0
    ph = _rows(tmp_path / "phases.csv")
    assert len(ph) == 31
    assert main(["reference", "--potential", "lens", "--out", str(tmp_path)]) == 2


def test_convergence_command(tmp_path):
    assert main(["convergence", "--potential", "bump1", "--kappa", "20", "--levels", "1", "2",
                 "--out", str(tmp_path)]) == 0
    rows = _rows(tmp_path / "convergence.csv")
    assert [int(r["M"]) for r in rows] == [1] * 3 + [2] * 3
    assert int(rows[3]["N"]) == 3721


def test_spectrum_command(tmp_path):
    assert main(["spectrum", "--potential", "bump1", "--kappa", "20", "--levels", "2",
                 "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "spectrum_meta.json").read_text())
    assert meta["max_abs_A"] <= 2
    assert meta["max_abs_unregularized"] > 1e3


def test_timing_command(tmp_path):
    assert main(["timing", "--potential", "bump1", "--kappa", "20", "--levels", "1", "2",
                 "--out", str(tmp_path)]) == 0
    meta = json.loads((tmp_path / "timing_meta.json").read_text())
    assert "build_exponent" in meta
