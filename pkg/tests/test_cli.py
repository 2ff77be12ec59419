import json

import numpy as np
import pytest

from capsphere import ConfigError
from capsphere.cli import main, parse_config

BASE_CONFIG = {
    "d": 2,
    "s": 0.0,
    "sources": [
        {"position": [0.0, 0.0, 1.0], "charge": 0.25},
        {"position": [0.9539392014169457, 0.0, -0.3], "charge": 0.25},
    ],
}


def write_config(tmp_path, extra=None, **overrides):
    payload = {**BASE_CONFIG, **(extra or {}), **overrides}
    path = tmp_path / "config.json"
    path.write_text(json.dumps(payload))
    return str(path)


# ----------------------------------------------------------------------
# config parsing
# ----------------------------------------------------------------------

def test_parse_config_defaults():
    cfg = parse_config(dict(BASE_CONFIG))
    assert cfg.spec.m == 2
    assert cfg.optimize["n_points"] == 500
    assert cfg.verify["samples"] == 10 ** 6
    assert cfg.kelvin["pole_index"] is None


def test_parse_config_rejects_unknown_fields():
    with pytest.raises(ConfigError):
        parse_config({**BASE_CONFIG, "bogus": 1})
    with pytest.raises(ConfigError):
        parse_config({**BASE_CONFIG, "optimize": {"n_pts": 10}})
    with pytest.raises(ConfigError):
        parse_config({**BASE_CONFIG,
                      "sources": [{"position": [0, 0, 1], "charge": 1,
                                   "label": "x"}]})


def test_parse_config_rejects_bad_sources():
    with pytest.raises(ConfigError):
        parse_config({**BASE_CONFIG, "sources": [{"charge": 1.0}]})
    with pytest.raises(ConfigError):
        parse_config({**BASE_CONFIG,
                      "sources": [{"position": [0, 0, 0, 1], "charge": 1.0}]})
    with pytest.raises(ConfigError):
        parse_config({**BASE_CONFIG,
                      "sources": [{"position": [0, 0, 1], "charge": -0.5}]})


def test_parse_config_renormalizes_with_warning(capsys):
    payload = {**BASE_CONFIG,
               "sources": [{"position": [0.0, 0.0, 1.00001], "charge": 0.2}]}
    cfg = parse_config(payload)
    assert np.linalg.norm(cfg.spec.sources[0].position) == pytest.approx(1.0)
    assert "renormalizing" in capsys.readouterr().err


# ----------------------------------------------------------------------
# solve
# ----------------------------------------------------------------------

def test_solve_writes_artifacts(tmp_path):
    out = tmp_path / "out"
    code = main(["solve", "--config", write_config(tmp_path),
                 "--out", str(out)])
    assert code == 0
    result = json.loads((out / "result.json").read_text())
    assert result["solution"]["c_norm"] == 1.5
    assert result["solution"]["feasible"] is True
    assert result["solution"]["f_q"] == pytest.approx(-0.31181882484747464)
    profile = (out / "density_profile.csv").read_text().splitlines()
    assert profile[0].startswith("# capsphere csv v1:")
    assert profile[1] == "cap_index,theta,height,weighted_potential"


def test_solve_floats_round_trip(tmp_path):
    out = tmp_path / "out"
    main(["solve", "--config", write_config(tmp_path), "--out", str(out)])
    lines = (out / "density_profile.csv").read_text().splitlines()[2:]
    for cell in lines[5].split(","):
        assert float(cell) == float(repr(float(cell)))


def test_solve_preset_equals_config(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["solve", "--figure", "1-left", "--out", str(out1)]) == 0
    assert main(["solve", "--config", write_config(tmp_path),
                 "--out", str(out2)]) == 0
    r1 = json.loads((out1 / "result.json").read_text())
    r2 = json.loads((out2 / "result.json").read_text())
    assert r1["solution"] == r2["solution"]


def test_solve_infeasible_exit_code(tmp_path):
    out = tmp_path / "out"
    code = main(["solve", "--figure", "4", "--out", str(out)])
    assert code == 2
    result = json.loads((out / "result.json").read_text())
    assert result["solution"]["feasible"] is False
    assert result["solution"]["diagnostics"]["violations"]


def test_solve_malformed_json_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"d": 2, nonsense')
    assert main(["solve", "--config", str(bad), "--out",
                 str(tmp_path / "o")]) == 1


def test_solve_missing_file_exit_code(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "o")]) == 1


def test_solve_config_from_stdin(tmp_path, monkeypatch):
    import io
    monkeypatch.setattr("sys.stdin", io.StringIO(json.dumps(BASE_CONFIG)))
    out = tmp_path / "out"
    assert main(["solve", "--config", "-", "--out", str(out)]) == 0


def test_unsupported_kernel_is_config_error(tmp_path):
    out = tmp_path / "out"
    code = main(["solve", "--config", write_config(tmp_path, s=0.7),
                 "--out", str(out)])
    assert code == 1


# ----------------------------------------------------------------------
# optimize
# ----------------------------------------------------------------------

def optimize_args(tmp_path, out, **kw):
    cfg = write_config(
        tmp_path, extra={"optimize": {"n_points": 26, "restarts": 1,
                                      "seed": 0, **kw}})
    return ["optimize", "--config", cfg, "--out", str(out)]


def test_optimize_artifacts_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(optimize_args(tmp_path, out1)) == 0
    assert main(optimize_args(tmp_path, out2)) == 0
    csv1 = (out1 / "points.csv").read_text()
    assert csv1 == (out2 / "points.csv").read_text()  # byte-identical
    lines = csv1.splitlines()
    assert lines[0].startswith("# capsphere csv v1:")
    assert lines[1] == "x,y,z,chord_to_src_1,chord_to_src_2"
    assert len(lines) == 2 + 26
    result = json.loads((out1 / "result.json").read_text())
    assert result["converged"] is True
    assert result["cap_exclusion"]["passed"] is True


def test_optimize_flag_overrides(tmp_path):
    out = tmp_path / "out"
    assert main(["optimize", "--config", write_config(tmp_path),
                 "--out", str(out), "-N", "8", "--restarts", "1",
                 "--seed", "5"]) == 0
    result = json.loads((out / "result.json").read_text())
    assert result["n_points"] == 8
    assert result["seed"] == 5


def test_optimize_respects_re_seed(tmp_path, monkeypatch):
    out = tmp_path / "out"
    monkeypatch.setenv("RE_SEED", "123")
    assert main(optimize_args(tmp_path, out)) == 0
    result = json.loads((out / "result.json").read_text())
    assert result["seed"] == 123
    monkeypatch.setenv("RE_SEED", "not-a-number")
    assert main(optimize_args(tmp_path, tmp_path / "c")) == 1


def test_optimize_field_free(tmp_path):
    cfg = tmp_path / "ff.json"
    cfg.write_text(json.dumps({
        "d": 2, "s": 0.0, "sources": [],
        "optimize": {"n_points": 2, "restarts": 2, "seed": 0}}))
    out = tmp_path / "out"
    assert main(["optimize", "--config", str(cfg), "--out", str(out)]) == 0
    data = np.genfromtxt(out / "points.csv", delimiter=",", names=True,
                         skip_header=1)
    pts = np.column_stack([data["x"], data["y"], data["z"]])
    assert pts @ pts.T == pytest.approx(
        np.array([[1.0, -1.0], [-1.0, 1.0]]), abs=1e-6)


# ----------------------------------------------------------------------
# verify
# ----------------------------------------------------------------------

def test_verify_round_trip_with_points(tmp_path):
    out_opt = tmp_path / "opt"
    main(optimize_args(tmp_path, out_opt))
    cfg = write_config(tmp_path, extra={
        "verify": {"samples": 50000, "grid": 20, "seed": 1,
                   "windows": 4, "window_radius": 0.25}})
    out = tmp_path / "ver"
    code = main(["verify", "--config", cfg,
                 "--points", str(out_opt / "points.csv"), "--out", str(out)])
    assert code == 0
    result = json.loads((out / "result.json").read_text())
    assert result["feasible"] is True
    names = [r["name"] for r in result["reports"]]
    assert names == ["variational", "cap_exclusion", "empirical_density"]
    assert all(r["passed"] for r in result["reports"])


def test_verify_infeasible_without_points(tmp_path):
    out = tmp_path / "out"
    code = main(["verify", "--figure", "4", "--out", str(out)])
    assert code == 2
    result = json.loads((out / "result.json").read_text())
    assert result["feasible"] is False
    assert result["reports"] == []


# ----------------------------------------------------------------------
# kelvin and influence
# ----------------------------------------------------------------------

def test_kelvin_artifacts(tmp_path):
    out = tmp_path / "out"
    code = main(["kelvin", "--config", write_config(tmp_path),
                 "--out", str(out)])
    assert code == 0
    result = json.loads((out / "result.json").read_text())
    assert result["outer_radius"] == pytest.approx(np.sqrt(5.0))
    assert result["pole_index"] == 1
    assert result["density_check"]["passed"] is True
    assert len(result["excluded_discs"]) == 1


def test_kelvin_pole_index_flag(tmp_path):
    out = tmp_path / "out"
    code = main(["kelvin", "--config", write_config(tmp_path),
                 "--pole-index", "0", "--out", str(out)])
    assert code == 0
    result = json.loads((out / "result.json").read_text())
    assert result["pole_index"] == 0


def test_kelvin_infeasible_exit_code(tmp_path):
    assert main(["kelvin", "--figure", "4",
                 "--out", str(tmp_path / "out")]) == 2


def test_influence_coulomb(tmp_path):
    out = tmp_path / "out"
    code = main(["influence", "--figure", "3-left", "--out", str(out)])
    assert code == 0
    result = json.loads((out / "result.json").read_text())
    assert result["s"] == 1.0
    assert result["reduced_charges"] == [pytest.approx(0.2)] * 2
    assert len(result["caps"]) == 2


def test_influence_unsupported_s(tmp_path):
    cfg = write_config(tmp_path, s=0.5)
    assert main(["influence", "--config", cfg,
                 "--out", str(tmp_path / "out")]) == 1


def test_solve_requires_config_or_figure(tmp_path):
    assert main(["solve", "--out", str(tmp_path / "o")]) == 1
