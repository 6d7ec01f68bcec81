"""Command-line driver: ``ncvem {solve, convergence, validate-mesh, project}``.

Exit codes: 0 success, 1 configuration error, 2 mesh error, 3 solver error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .config import ProblemConfig
from .errors import ConfigError, MeshError, SolverError
from .forms import dominance_diagnostic
from .mesh import read_poly2, validate_mesh
from .meshgen import FAMILIES
from .postproc import broken_error, convergence_study, jump_diagnostic
from .projectors import build_element_projectors
from .system import broken_h1_gram, coercivity_diagnostic, solve_problem

log = logging.getLogger("ncvem")

EXIT_CONFIG, EXIT_MESH, EXIT_SOLVER = 1, 2, 3


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load(args):
    cfg = ProblemConfig.load(args.config)
    return cfg, cfg.coefficient_field()


def cmd_solve(args) -> int:
    cfg, coeffs = _load(args)
    mesh = cfg.load_mesh(args.mesh)
    bounds = coeffs.validate(mesh)
    report = validate_mesh(mesh, cfg.rho)
    with warnings.catch_warnings(record=True):
        warnings.simplefilter("always")
        dominance = dominance_diagnostic(mesh, coeffs)
    diag = {"mesh": report.to_dict(), "coefficients": bounds, "dominance": dominance, "warnings": list(dominance["warnings"])}
    if not report.ok:
        diag["warnings"].append(f"mesh fails the shape-regularity checks at rho={cfg.rho:g}")
    try:
        disc, system, sol = solve_problem(mesh, cfg.k, coeffs, cfg.f_func, cfg.g_func, cfg.data_degree)
    except SolverError as exc:
        raise SolverError(f"{exc}\ndominance diagnostic: {json.dumps(dominance)}") from exc
    if cfg.coercivity:
        alpha = coercivity_diagnostic(system, broken_h1_gram(disc))
        diag["coercivity_min_eig"] = alpha
        if not alpha > 0:
            diag["warnings"].append(f"coercivity floor {alpha:.3g} is not positive")
    diag["jump"] = jump_diagnostic(disc, sol.values)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "solution.json", sol.to_dict(diag))
    print(f"solved: {sol.stats['n_dofs']} dofs, residual {sol.residual:.3e}")
    if cfg.manufactured is not None:
        mp = cfg.manufactured_problem()
        err = broken_error(disc, sol.values, mp.u, (mp.ux, mp.uy), cfg.data_degree)
        _write_json(out / "errors.json", err.to_dict())
        print(f"err_l2={err.err_l2:.6e} err_h1={err.err_h1:.6e}")
    for w in diag["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_convergence(args) -> int:
    cfg, _ = _load(args)
    family = args.family or cfg.mesh.family
    if family is None:
        raise ConfigError("convergence needs a built-in mesh family (--family or mesh.family)")
    if args.levels < 3:
        raise ConfigError("convergence needs --levels >= 3")
    ns = [cfg.mesh.n * 2 ** i for i in range(args.levels)]
    table = convergence_study(cfg.manufactured_problem(), family, ns, cfg.k, cfg.data_degree, coercivity=cfg.coercivity)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "convergence.csv").write_text(table.to_csv(), encoding="utf-8")
    (out / "convergence.json").write_text(table.to_json() + "\n", encoding="utf-8")
    sys.stdout.write(table.to_csv())
    return 0


def cmd_validate_mesh(args) -> int:
    if not 0 < args.rho < 1:
        raise ConfigError(f"--rho must lie in (0, 1), got {args.rho}")
    mesh = read_poly2(args.path)
    report = validate_mesh(mesh, args.rho)
    print(report.summary())
    return 0 if report.ok else EXIT_MESH


def cmd_project(args) -> int:
    cfg, _ = _load(args)
    mesh = cfg.load_mesh(args.mesh)
    if not 0 <= args.cell < mesh.n_cells:
        raise ConfigError(f"cell {args.cell} out of range [0, {mesh.n_cells})")
    P = build_element_projectors(mesh, args.cell, cfg.k)
    dump = {
        "cell": args.cell,
        "k": cfg.k,
        "center": P.center.tolist(),
        "h": P.h,
        "area": P.area,
        "edges": mesh.cell_edges[args.cell].tolist(),
        **{name: getattr(P, name).tolist() for name in ("D", "G", "E", "F")},
    }
    print(json.dumps(dump, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncvem", description="Nonconforming virtual elements for convection-diffusion-reaction.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one problem and write solution.json")
    s.add_argument("--config", required=True)
    s.add_argument("--mesh", help="poly2 file overriding the config mesh")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("convergence", help="refinement study on a built-in family")
    c.add_argument("--config", required=True)
    c.add_argument("--levels", type=int, default=4)
    c.add_argument("--family", choices=FAMILIES)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_convergence)

    v = sub.add_parser("validate-mesh", help="check edge-length and star-shapedness regularity")
    v.add_argument("path")
    v.add_argument("--rho", type=float, default=0.1)
    v.set_defaults(func=cmd_validate_mesh)

    d = sub.add_parser("project", help="dump the D/G/E/F projector matrices of one cell as JSON")
    d.add_argument("--config", required=True)
    d.add_argument("--cell", type=int, required=True)
    d.add_argument("--mesh")
    d.set_defaults(func=cmd_project)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MeshError as exc:
        print(f"mesh error: {exc}", file=sys.stderr)
        return EXIT_MESH
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
