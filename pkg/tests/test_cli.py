import json
from pathlib import Path

import pytest

from ncvem import cli
from ncvem.config import SCHEMA, ProblemConfig
from ncvem.errors import ConfigError, SolverError
from ncvem.mesh import write_poly2
from ncvem.meshgen import builtin_mesh

SINSIN = {
    "u": "sin(pi*x)*sin(pi*y)",
    "ux": "pi*cos(pi*x)*sin(pi*y)",
    "uy": "pi*sin(pi*x)*cos(pi*y)",
}


def make_config(tmp_path, name="c.json", **over):
    cfg = {
        "schema": SCHEMA,
        "k": 2,
        "coefficients": {"K11": "1", "K12": "0", "K22": "1"},
        "data": {"f": "0", "g": "x^2 - y^2"},
        "manufactured": {"u": "x^2 - y^2", "ux": "2*x", "uy": "-2*y"},
        "mesh": {"family": "distorted-quad", "n": 4},
    }
    cfg.update(over)
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_solve_reproduction(tmp_path, capsys):
    cfg = make_config(tmp_path)
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "out")]) == 0
    err = json.loads((tmp_path / "out" / "errors.json").read_text())
    assert err["err_h1"] <= 1e-9 and err["err_l2"] <= 1e-9
    sol = json.loads((tmp_path / "out" / "solution.json").read_text())
    assert sol["residual"] <= 1e-10
    assert sol["diagnostics"]["coercivity_min_eig"] > 0
    assert sol["diagnostics"]["warnings"] == []


def test_solve_with_mesh_file(tmp_path):
    mesh = tmp_path / "m.poly2"
    write_poly2(builtin_mesh("polygonal-dual", 3), mesh)
    cfg = make_config(tmp_path, mesh={"file": "m.poly2"})
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert cli.main(["solve", "--config", str(cfg), "--mesh", str(mesh), "--out", str(tmp_path / "o")]) == 0


def test_missing_mesh_exit_2(tmp_path, capsys):
    cfg = make_config(tmp_path, mesh={"file": "absent.poly2"})
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "absent.poly2" in capsys.readouterr().err


def test_non_polynomial_coefficient_exit_1(tmp_path, monkeypatch):
    called = []
    monkeypatch.setattr(cli, "solve_problem", lambda *a, **k: called.append(1))
    cfg = make_config(tmp_path, coefficients={"c": "exp(x)"})
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1
    assert not called


@pytest.mark.parametrize(
    "raw",
    ["{not json", json.dumps({"k": 1}), json.dumps({"schema": SCHEMA, "k": 0}), json.dumps({"schema": SCHEMA, "bogus": 1}),
     json.dumps({"schema": SCHEMA, "data": {"f": "x +"}}), json.dumps({"schema": SCHEMA, "coefficients": {"K21": "1"}})],
)
def test_bad_configs_exit_1(tmp_path, raw):
    path = tmp_path / "c.json"
    path.write_text(raw)
    assert cli.main(["solve", "--config", str(path), "--out", str(tmp_path / "o")]) == 1


def test_indefinite_K_exit_1(tmp_path):
    cfg = make_config(tmp_path, coefficients={"K11": "x - 0.5"})
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 1


def test_solver_error_exit_3(tmp_path, monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise SolverError("factorization failed")

    monkeypatch.setattr(cli, "solve_problem", boom)
    cfg = make_config(tmp_path)
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3
    assert "dominance diagnostic" in capsys.readouterr().err


def test_convection_dominated_warning_block(tmp_path):
    cfg = make_config(
        tmp_path,
        coefficients={"beta1": "1000*x", "beta2": "1000*y", "c": "1"},
        bounds={"check_c0": False},
        data={"f": "1", "g": "0"},
    )
    del_manufactured = json.loads(cfg.read_text())
    del del_manufactured["manufactured"]
    cfg.write_text(json.dumps(del_manufactured))
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    diag = json.loads((tmp_path / "o" / "solution.json").read_text())["diagnostics"]
    assert diag["warnings"]


def test_convergence_deterministic(tmp_path, capsys):
    cfg = make_config(
        tmp_path, k=1,
        coefficients={"beta1": "1", "beta2": "1", "c": "1"},
        data={"f": "2*pi^2*sin(pi*x)*sin(pi*y) + pi*cos(pi*x)*sin(pi*y) + pi*sin(pi*x)*cos(pi*y) + sin(pi*x)*sin(pi*y)", "g": "0"},
        manufactured=SINSIN,
        mesh={"family": "quad", "n": 4},
    )
    outs = []
    for d in ("a", "b"):
        assert cli.main(["convergence", "--config", str(cfg), "--levels", "3", "--out", str(tmp_path / d)]) == 0
        outs.append((tmp_path / d / "convergence.csv").read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].decode().splitlines()[0] == "h,ndof,err_l2,err_h1,rate_l2,rate_h1"
    data = json.loads((tmp_path / "a" / "convergence.json").read_text())
    assert len(data["rows"]) == 3


def test_convergence_needs_levels_and_manufactured(tmp_path):
    cfg = make_config(tmp_path)
    assert cli.main(["convergence", "--config", str(cfg), "--levels", "2", "--out", str(tmp_path / "o")]) == 1
    raw = json.loads(cfg.read_text())
    del raw["manufactured"]
    cfg.write_text(json.dumps(raw))
    assert cli.main(["convergence", "--config", str(cfg), "--levels", "3", "--out", str(tmp_path / "o")]) == 1


def test_validate_mesh(tmp_path, capsys):
    good = tmp_path / "good.poly2"
    write_poly2(builtin_mesh("distorted-quad", 4), good)
    assert cli.main(["validate-mesh", str(good), "--rho", "0.1"]) == 0
    assert "pass" in capsys.readouterr().out
    sliver = tmp_path / "sliver.poly2"
    sliver.write_text("poly2 4 1\n0 0\n1 0\n1 0.001\n0 0.001\n4 0 1 2 3\n")
    assert cli.main(["validate-mesh", str(sliver)]) == 2
    assert cli.main(["validate-mesh", str(tmp_path / "none.poly2")]) == 2
    assert cli.main(["validate-mesh", str(good), "--rho", "1.5"]) == 1


def test_project_dump(tmp_path, capsys):
    cfg = make_config(tmp_path, mesh={"family": "polygonal-dual", "n": 4})
    assert cli.main(["project", "--config", str(cfg), "--cell", "7"]) == 0
    dump = json.loads(capsys.readouterr().out)
    assert dump["cell"] == 7 and set(dump) >= {"D", "G", "E", "F"}
    assert cli.main(["project", "--config", str(cfg), "--cell", "10000"]) == 1


def test_config_object_api(tmp_path):
    cfg = ProblemConfig.load(make_config(tmp_path))
    assert cfg.k == 2 and cfg.coefficient_field().K11.degree == 0
    with pytest.raises(ConfigError):
        ProblemConfig(k=1, coefficients={**cfg.coefficients, "beta1": "1/x"})


def test_shipped_config_solves(tmp_path):
    cfg = Path(__file__).resolve().parents[1] / "configs" / "cdr_quad_k1.json"
    assert cli.main(["solve", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    err = json.loads((tmp_path / "errors.json").read_text())
    assert err["err_h1"] < 0.5
