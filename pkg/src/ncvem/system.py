"""Global assembly, Dirichlet elimination, sparse solve and well-posedness diagnostics."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from .dofs import Field, GlobalDofMap, default_data_degree, edge_moments
from .errors import SolverError
from .forms import CoefficientField, LocalForms, local_forms
from .mesh import PolygonalMesh
from .projectors import ElementProjectors, build_element_projectors

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
DENSE_EIG_LIMIT = 1200


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get("NCVEM_THREADS", "")))
    except ValueError:
        return os.cpu_count() or 1


def parallel_map(func: Callable, items: Sequence) -> List:
    threads = n_threads()
    if threads <= 1 or len(items) < 64:
        return [func(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


class Discretization:
    """Mesh + order + DOF map + per-cell projectors (built once, reused)."""

    def __init__(self, mesh: PolygonalMesh, k: int):
        self.mesh = mesh
        self.k = k
        self.dofmap = GlobalDofMap(mesh, k)
        self.projectors: List[ElementProjectors] = parallel_map(
            lambda c: build_element_projectors(mesh, c, k), range(mesh.n_cells)
        )

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_dofs

    def local_values(self, u: np.ndarray, c: int) -> np.ndarray:
        return u[self.dofmap.cell_dofs[c]]


@dataclass
class GlobalSystem:
    matrix: sps.csr_matrix
    rhs: np.ndarray
    dofmap: GlobalDofMap
    constrained: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    constrained_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    # unconstrained operator and the triplet stream it was built from
    raw_matrix: sps.csr_matrix | None = None
    triplets: tuple | None = None
    local: List[LocalForms] | None = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.size, dtype=bool)
        mask[self.constrained] = False
        return np.flatnonzero(mask)


@dataclass
class Solution:
    values: np.ndarray
    residual: float
    stats: dict

    def to_dict(self, diagnostics: dict | None = None) -> dict:
        return {
            "dofs": self.values.tolist(),
            "residual": self.residual,
            "stats": self.stats,
            "diagnostics": diagnostics or {},
        }


def assemble(
    disc: Discretization,
    coeffs: CoefficientField,
    f: Field | None = None,
    data_degree: int | None = None,
    keep_local: bool = False,
) -> GlobalSystem:
    """Scatter the local forms and loads; no orientation signs are involved."""
    mesh, dm = disc.mesh, disc.dofmap
    locs = parallel_map(lambda c: local_forms(mesh, disc.projectors[c], coeffs, f, data_degree), range(mesh.n_cells))
    rows, cols, vals = [], [], []
    rhs = np.zeros(dm.n_dofs)
    for c, lf in enumerate(locs):
        idx = dm.cell_dofs[c]
        n = len(idx)
        rows.append(np.repeat(idx, n))
        cols.append(np.tile(idx, n))
        vals.append(lf.total.ravel())
        np.add.at(rhs, idx, lf.load)
    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    A = sps.coo_matrix((vals, (rows, cols)), shape=(dm.n_dofs, dm.n_dofs)).tocsr()
    A.sum_duplicates()
    return GlobalSystem(
        matrix=A, rhs=rhs, dofmap=dm, raw_matrix=A,
        triplets=(rows, cols, vals), local=locs if keep_local else None,
    )


def boundary_values(dofmap: GlobalDofMap, g: Field | float, degree: int | None = None) -> np.ndarray:
    """Edge moments of the Dirichlet datum on every boundary edge, in ``dirichlet_dofs`` order."""
    k = dofmap.k
    degree = default_data_degree(k) if degree is None else degree
    if np.isscalar(g):
        val = float(g)
        g = lambda x, y: np.full(np.shape(x), val)  # noqa: E731
    return edge_moments(dofmap.mesh, g, k, degree, dofmap.mesh.boundary_edges).ravel()


def apply_dirichlet(system: GlobalSystem, g: Field | float, degree: int | None = None) -> GlobalSystem:
    """Eliminate boundary moments: rhs -= A[:, c] g_c, constrained rows/cols -> identity."""
    dm = system.dofmap
    cdofs = dm.dirichlet_dofs
    gvals = boundary_values(dm, g, degree)
    full = np.zeros(system.size)
    full[cdofs] = gvals
    A = system.raw_matrix
    rhs = system.rhs - A @ full
    rhs[cdofs] = gvals
    keep = np.ones(system.size)
    keep[cdofs] = 0.0
    Dk = sps.diags(keep)
    Ac = (Dk @ A @ Dk + sps.diags(1.0 - keep)).tocsr()
    Ac.eliminate_zeros()
    return replace(system, matrix=Ac, rhs=rhs, constrained=cdofs, constrained_values=gvals)


def solve(system: GlobalSystem) -> Solution:
    """Sparse LU with partial pivoting; enforces ||A x - b|| <= 1e-10 ||b||."""
    t0 = time.perf_counter()
    A = system.matrix.tocsc()
    try:
        lu = spla.splu(A, permc_spec="COLAMD", diag_pivot_thresh=1.0)
        x = lu.solve(system.rhs)
    except RuntimeError as exc:
        raise SolverError(f"factorization failed ({exc}); the configuration may violate coercivity") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("non-finite solution; the configuration may violate coercivity")
    bnorm = np.linalg.norm(system.rhs)
    res = float(np.linalg.norm(A @ x - system.rhs))
    rel = res / bnorm if bnorm > 0 else res
    if res > RESIDUAL_TOL * max(bnorm, np.finfo(float).tiny) and res > 0:
        raise SolverError(f"solver residual {rel:.3e} exceeds {RESIDUAL_TOL:g}")
    stats = {
        "n_dofs": int(system.size),
        "n_free": int(len(system.free)),
        "nnz": int(A.nnz),
        "seconds": time.perf_counter() - t0,
    }
    return Solution(x, rel, stats)


def broken_h1_gram(disc: Discretization) -> sps.csr_matrix:
    """Computable broken-H1 inner product: the discrete forms with K = I, beta = 0, c = 1."""
    return assemble(disc, CoefficientField.constant(1.0, c=1.0)).raw_matrix


def coercivity_diagnostic(system: GlobalSystem, gram: sps.spmatrix | None = None) -> float:
    """Smallest eigenvalue of the symmetric part of the free block.

    With ``gram`` the generalized problem  sym(A_ff) x = lambda Gram_ff x  is
    solved (coercivity in the broken norm); otherwise the Euclidean version.
    """
    free = system.free
    A = system.raw_matrix[free][:, free]
    S = (0.5 * (A + A.T)).tocsc()
    M = sps.identity(len(free), format="csc") if gram is None else gram.tocsr()[free][:, free].tocsc()
    if len(free) == 0:
        return float("nan")
    if len(free) <= DENSE_EIG_LIMIT:
        w = sla.eigh(S.toarray(), M.toarray(), eigvals_only=True, subset_by_index=[0, 0])
        return float(w[0])
    w = spla.eigsh(S, k=1, M=M, sigma=0.0, which="LM", return_eigenvectors=False)
    return float(w[0])


def solve_problem(
    mesh: PolygonalMesh,
    k: int,
    coeffs: CoefficientField,
    f: Field | None,
    g: Field | float = 0.0,
    data_degree: int | None = None,
    disc: Discretization | None = None,
):
    """Assemble, constrain and solve; returns ``(disc, constrained system, solution)``."""
    disc = Discretization(mesh, k) if disc is None else disc
    system = apply_dirichlet(assemble(disc, coeffs, f, data_degree), g, data_degree)
    return disc, system, solve(system)
