import json
import os

import pytest

from wgf3d.cli import EXIT_CODES, run
from wgf3d.config import ConfigError, RunConfig, load_config


def _write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_defaults_validate(tmp_path):
    cfg = load_config(_write(tmp_path, "[run]\nkind = solve-type2\n"))
    assert isinstance(cfg, RunConfig) and cfg.window.alpha == 0.5 and cfg.solver.tol == 1e-8


def test_values_are_typed(tmp_path):
    cfg = load_config(_write(tmp_path, "[run]\nkind = solve-type1\n[excitation]\nkind = plane\n"
                                       "direction = 0, 0.6, 0.8  # comment\n[solver]\nwindowed = no\nmax_iter = 50\n"))
    assert cfg.excitation.direction == (0.0, 0.6, 0.8)
    assert cfg.solver.windowed is False and cfg.solver.max_iter == 50


@pytest.mark.parametrize("text", [
    "[run]\nkind = explode\n",
    "[nonsense]\nx = 1\n",
    "[run]\nkind = toy\ncolour = red\n",
    "[solver]\ntol = small\n",
    "[materials]\nn_core = 1.0\nn_clad = 1.2\n",
    "[window]\nalpha = 1.5\n",
    "[run]\nkind = solve-type2\n[geometry]\nshape = sphere\n",
    "[excitation]\ndirection = 0 1\n",
    "not an ini file",
])
def test_malformed_configs(tmp_path, text):
    with pytest.raises(ConfigError):
        load_config(_write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.ini"))


def test_cli_config_error_leaves_no_output(tmp_path, capsys):
    out = tmp_path / "out"
    code = run(["toy", "--config", _write(tmp_path, "[bogus]\n"), "--out", str(out)])
    assert code == EXIT_CODES["config"] == 2
    assert not out.exists()
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["category"] == "config"


def test_cli_domain_error(tmp_path, capsys):
    out = tmp_path / "out"
    cfg = _write(tmp_path, "[run]\nkind = mesh\n[geometry]\nshape = sphere\n")
    assert run(["mesh", "--config", cfg, "--out", str(out)]) == EXIT_CODES["domain"]
    assert not out.exists()


def test_cli_toy_is_deterministic(tmp_path):
    cfg = _write(tmp_path, "[run]\nkind = toy\n[toy]\nA_count = 6\nA_max = 200\nkz_over_k0 = 0.1 0.5\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}"
        assert run(["toy", "--config", cfg, "--out", str(out), "--threads", "1"]) == 0
        outs.append({f: (out / f).read_bytes() for f in sorted(os.listdir(out))})
    assert outs[0] == outs[1]
    assert set(outs[0]) == {"summary.json", "toy_kz0.1.csv", "toy_kz0.5.csv"}
    summary = json.loads(outs[0]["summary.json"])
    assert summary["command"] == "toy" and "wall_time" not in json.dumps(summary)


def test_cli_modes_and_mesh(tmp_path):
    out = tmp_path / "modes"
    assert run(["modes", "--config", _write(tmp_path, "[run]\nkind = modes\n"), "--out", str(out)]) == 0
    lines = (out / "modes.csv").read_text().splitlines()
    assert lines[0].startswith("m_az,family,kz,n_eff") and len(lines) == 2
    out = tmp_path / "mesh"
    cfg = _write(tmp_path, "[run]\nkind = mesh\n[geometry]\nshape = guide\n[discretization]\ndegree = 6\n", "m.ini")
    assert run(["mesh", "--config", cfg, "--out", str(out), "--timing"]) == 0
    s = json.loads((out / "summary.json").read_text())
    assert s["result"]["nodes"] == len((out / "mesh.csv").read_text().splitlines()) - 1
    assert "wall_time" in s


def test_cli_solve_and_fields_sphere(tmp_path):
    cfg = _write(tmp_path, "[run]\nkind = solve-type1\n[geometry]\nshape = sphere\nradius = 0.5\n"
                           "[discretization]\ndegree = 6\n[excitation]\nkind = plane\n"
                           "[fields]\nstart = 0 0 -1.5\nstop = 0 0 1.5\npoints = 7\n")
    out = tmp_path / "f"
    assert run(["fields", "--config", cfg, "--out", str(out)]) == 0
    s = json.loads((out / "summary.json").read_text())
    assert s["result"]["solver"]["converged"] and s["result"]["points"] == 7
    assert len((out / "fields.csv").read_text().splitlines()) == 8
    out = tmp_path / "s"
    assert run(["solve", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "densities.npz").exists()
