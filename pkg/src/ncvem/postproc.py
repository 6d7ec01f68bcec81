"""Projected broken-norm errors, projection-level jump diagnostics and convergence studies.

The discrete solution is a virtual function and is never evaluated
pointwise: every error below is a "projected broken norm" that sees u_h
only through Pi_k u_h and Pi_{k-1} grad u_h.
"""
from __future__ import annotations

import io
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .dofs import Field, default_data_degree, interpolate
from .forms import CoefficientField, local_load
from .meshgen import builtin_mesh
from .poly import dim_poly, eval_monomials, gauss_legendre_unit
from .system import Discretization, broken_h1_gram, coercivity_diagnostic, solve_problem

log = logging.getLogger(__name__)

EXACT_TOL = 1e-9
CSV_HEADER = "h,ndof,err_l2,err_h1,rate_l2,rate_h1"


@dataclass
class ErrorReport:
    err_l2: float
    err_h1: float
    cell_l2: np.ndarray  # squared per-cell contributions
    cell_h1: np.ndarray

    @property
    def err_full(self) -> float:
        return math.sqrt(self.err_l2 ** 2 + self.err_h1 ** 2)

    def to_dict(self) -> dict:
        return {
            "norm": "projected broken norm",
            "err_l2": self.err_l2,
            "err_h1": self.err_h1,
            "err_full": self.err_full,
        }


def broken_error(
    disc: Discretization,
    uh: np.ndarray,
    u: Field,
    grad_u: Tuple[Field, Field],
    degree: int | None = None,
) -> ErrorReport:
    """sum_T ||u - Pi_k u_h||^2 and sum_T ||grad u - Pi_{k-1} grad u_h||^2 with elevated quadrature."""
    mesh, k = disc.mesh, disc.k
    degree = default_data_degree(k) if degree is None else degree
    d1 = dim_poly(k - 1)
    ux, uy = grad_u
    l2 = np.zeros(mesh.n_cells)
    h1 = np.zeros(mesh.n_cells)
    for c, P in enumerate(disc.projectors):
        rule = mesh.cell_quadrature(c, degree + 2 * k)
        x, y = rule.points[:, 0], rule.points[:, 1]
        V = eval_monomials(rule.points, P.center, P.h, k)
        loc = uh[disc.dofmap.cell_dofs[c]]
        g = P.G @ loc
        ev = lambda fn: np.broadcast_to(np.asarray(fn(x, y), dtype=float), x.shape)  # noqa: E731
        eu = ev(u) - V @ (P.F @ loc)
        ex = ev(ux) - V[:, :d1] @ g[:d1]
        ey = ev(uy) - V[:, :d1] @ g[d1:]
        l2[c] = rule.weights @ (eu * eu)
        h1[c] = rule.weights @ (ex * ex + ey * ey)
    return ErrorReport(float(np.sqrt(l2.sum())), float(np.sqrt(h1.sum())), l2, h1)


def jump_diagnostic(disc: Discretization, uh: np.ndarray) -> Dict[str, float]:
    """Normalized moments (1/h_e) int_e (Pi_k^+ u_h - Pi_k^- u_h) mu_j over interior edges.

    The DOF-level jump is zero by construction (shared storage); this
    measures the nonconformity of the projections.  Returns max and RMS
    over all interior-edge moments (0 when there are none).
    """
    mesh, k = disc.mesh, disc.k
    inner = mesh.interior_edges
    if len(inner) == 0:
        return {"max": 0.0, "rms": 0.0, "n_edges": 0}
    xi, w = gauss_legendre_unit(2 * k)
    powers = xi[:, None] ** np.arange(k)[None, :]
    coef = [P.F @ uh[disc.dofmap.cell_dofs[c]] for c, P in enumerate(disc.projectors)]
    vals = np.empty((len(inner), k))
    for i, e in enumerate(inner):
        P0, P1 = mesh.vertices[mesh.edges[e]]
        pts = 0.5 * (P0 + P1) + xi[:, None] * (P1 - P0)
        a, b = mesh.edge_cells[e]
        trace = []
        for c in (a, b):
            P = disc.projectors[c]
            trace.append(eval_monomials(pts, P.center, P.h, k) @ coef[c])
        vals[i] = (w * (trace[0] - trace[1])) @ powers
    return {"max": float(np.abs(vals).max()), "rms": float(np.sqrt(np.mean(vals ** 2))), "n_edges": int(len(inner))}


def rhs_consistency_error(disc: Discretization, f: Field, v: Field, degree: int | None = None) -> float:
    """|<f, v_I> - <f_h, v_I>| for a polynomial ``v`` of degree <= k (so v_I = v)."""
    mesh, k = disc.mesh, disc.k
    degree = default_data_degree(k) if degree is None else degree
    vI = interpolate(disc.dofmap, v, degree)
    exact = 0.0
    discrete = 0.0
    for c, P in enumerate(disc.projectors):
        rule = mesh.cell_quadrature(c, degree + k)
        x, y = rule.points[:, 0], rule.points[:, 1]
        exact += rule.weights @ (np.broadcast_to(f(x, y), x.shape) * np.broadcast_to(v(x, y), x.shape))
        discrete += local_load(mesh, P, f, degree) @ vI[disc.dofmap.cell_dofs[c]]
    return float(abs(exact - discrete))


def interpolation_errors(
    disc: Discretization, u: Field, grad_u: Tuple[Field, Field], degree: int | None = None
) -> ErrorReport:
    """||u - Pi_k u_I||_{0,h} and the surrogate ||grad u - Pi_{k-1} grad u_I||_{0,h}."""
    return broken_error(disc, interpolate(disc.dofmap, u, degree), u, grad_u, degree)


# --------------------------------------------------------------------------
# rates
# --------------------------------------------------------------------------

def observed_rates(h: Sequence[float], err: Sequence[float]) -> List[float | None]:
    """Rates between consecutive levels, log(e_prev/e) / log(h_prev/h)."""
    out: List[float | None] = [None]
    for i in range(1, len(h)):
        if err[i] <= 0 or err[i - 1] <= 0:
            out.append(None)
        else:
            out.append(math.log(err[i - 1] / err[i]) / math.log(h[i - 1] / h[i]))
    return out


def ls_slope(h: Sequence[float], err: Sequence[float], last: int = 3) -> float:
    """Least-squares slope of log(err) against log(h) over the last ``last`` levels (nan if any err <= 0)."""
    h = np.asarray(h[-last:], dtype=float)
    err = np.asarray(err[-last:], dtype=float)
    if np.any(err <= 0):
        return float("nan")
    return float(np.polyfit(np.log(h), np.log(err), 1)[0])


@dataclass
class ManufacturedProblem:
    coeffs: CoefficientField
    f: Field
    g: Field | float
    u: Field
    ux: Field
    uy: Field


@dataclass
class ConvergenceRow:
    h: float
    ndof: int
    err_l2: float
    err_h1: float
    rate_l2: float | None = None
    rate_h1: float | None = None
    diagnostics: dict = field(default_factory=dict)


@dataclass
class ConvergenceTable:
    rows: List[ConvergenceRow]
    k: int
    family: str = ""

    def __post_init__(self):
        hs = [r.h for r in self.rows]
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ValueError("h must be strictly decreasing down the rows")
        r2 = observed_rates(hs, [r.err_l2 for r in self.rows])
        r1 = observed_rates(hs, [r.err_h1 for r in self.rows])
        for row, a, b in zip(self.rows, r2, r1):
            row.rate_l2, row.rate_h1 = a, b

    @property
    def h(self) -> List[float]:
        return [r.h for r in self.rows]

    @property
    def exact(self) -> bool:
        return all(r.err_l2 <= EXACT_TOL and r.err_h1 <= EXACT_TOL for r in self.rows)

    def slope(self, which: str = "h1", last: int = 3) -> float:
        return ls_slope(self.h, [getattr(r, f"err_{which}") for r in self.rows], last)

    def _rate(self, rate, err) -> str:
        if self.exact or err <= EXACT_TOL:
            return "exact"
        return "" if rate is None else f"{rate:.4f}"

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.rows:
            buf.write(
                f"{r.h:.6e},{r.ndof},{r.err_l2:.6e},{r.err_h1:.6e},"
                f"{self._rate(r.rate_l2, r.err_l2)},{self._rate(r.rate_h1, r.err_h1)}\n"
            )
        return buf.getvalue()

    def to_dict(self) -> dict:
        out = {"k": self.k, "family": self.family, "norm": "projected broken norm", "rows": [asdict(r) for r in self.rows]}
        if len(self.rows) >= 3 and not self.exact:
            out["slope_l2"] = self.slope("l2")
            out["slope_h1"] = self.slope("h1")
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def convergence_study(
    problem: ManufacturedProblem,
    family: str,
    levels: Sequence[int],
    k: int,
    data_degree: int | None = None,
    coercivity: bool = False,
) -> ConvergenceTable:
    """Solve on ``builtin_mesh(family, n)`` for each n and tabulate projected broken errors."""
    if len(levels) < 3:
        raise ValueError("a convergence study needs at least 3 refinement levels")
    rows = []
    for n in levels:
        t0 = time.perf_counter()
        mesh = builtin_mesh(family, n)
        disc, system, sol = solve_problem(mesh, k, problem.coeffs, problem.f, problem.g, data_degree)
        rep = broken_error(disc, sol.values, problem.u, (problem.ux, problem.uy), data_degree)
        diag = {"n": n, "residual": sol.residual}
        if coercivity:
            diag["coercivity"] = coercivity_diagnostic(system, broken_h1_gram(disc))
        diag["seconds"] = round(time.perf_counter() - t0, 3)
        log.info("level n=%d: ndof=%d err_h1=%.3e", n, disc.n_dofs, rep.err_h1)
        rows.append(ConvergenceRow(mesh.h, disc.n_dofs, rep.err_l2, rep.err_h1, diagnostics=diag))
    return ConvergenceTable(rows, k, family)
