"""Degrees of freedom of the nonconforming virtual element space.

Local DOF vectors list the edge moments first (edges in the cell's
counterclockwise loop order, moment index ``j`` ascending) followed by the
interior moments in graded-lex order.  Edge moments are always taken in the
edge's canonical orientation, so the two cells sharing an edge see the very
same functionals and no sign flips occur anywhere.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, List, Union

import numpy as np

from .mesh import PolygonalMesh
from .poly import (
    MultiIndex,
    dim_poly,
    eval_monomials,
    gauss_legendre_unit,
    monomial_exponents,
    monomial_index,
)

Field = Callable[[np.ndarray, np.ndarray], np.ndarray]


def default_data_degree(k: int) -> int:
    """Quadrature exactness used for non-polynomial data."""
    return 2 * k + 6


@dataclass(frozen=True)
class EdgeMoment:
    edge: int
    j: int


@dataclass(frozen=True)
class InteriorMoment:
    cell: int
    s: MultiIndex


DofDescriptor = Union[EdgeMoment, InteriorMoment]


def local_dof_count(n: int, k: int) -> int:
    """N_T = n k + k (k - 1) / 2 for a polygon with ``n`` edges."""
    if n < 3 or k < 1:
        raise ValueError("need n >= 3 edges and order k >= 1")
    return n * k + k * (k - 1) // 2


class GlobalDofMap:
    """Global numbering: all edge moments (edge-major), then interior moments (cell-major)."""

    def __init__(self, mesh: PolygonalMesh, k: int):
        if k < 1:
            raise ValueError("order k must be >= 1")
        if k > 2:
            warnings.warn(f"order k={k} is experimental; k in {{1, 2}} is the tested range", stacklevel=2)
        self.mesh = mesh
        self.k = k
        self.n_interior_per_cell = dim_poly(k - 2)
        self.n_edge_dofs = mesh.n_edges * k
        self.n_dofs = self.n_edge_dofs + mesh.n_cells * self.n_interior_per_cell
        self.cell_dofs: List[np.ndarray] = []
        for c in range(mesh.n_cells):
            edge_part = (mesh.cell_edges[c][:, None] * k + np.arange(k)[None, :]).ravel()
            self.cell_dofs.append(np.concatenate([edge_part, self.interior_dofs(c)]))

    def edge_dofs(self, e: int) -> np.ndarray:
        return e * self.k + np.arange(self.k)

    def interior_dofs(self, c: int) -> np.ndarray:
        m = self.n_interior_per_cell
        return self.n_edge_dofs + c * m + np.arange(m)

    @cached_property
    def dirichlet_dofs(self) -> np.ndarray:
        b = self.mesh.boundary_edges
        return (b[:, None] * self.k + np.arange(self.k)[None, :]).ravel()

    @cached_property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.dirichlet_dofs] = False
        return np.flatnonzero(mask)

    def descriptor(self, i: int) -> DofDescriptor:
        if i < self.n_edge_dofs:
            return EdgeMoment(i // self.k, i % self.k)
        r = i - self.n_edge_dofs
        c, s = divmod(r, self.n_interior_per_cell)
        return InteriorMoment(c, monomial_exponents(self.k - 2)[s])

    @property
    def descriptors(self) -> List[DofDescriptor]:
        return [self.descriptor(i) for i in range(self.n_dofs)]

    def local_count(self, c: int) -> int:
        return len(self.cell_dofs[c])


# --------------------------------------------------------------------------
# evaluation of DOFs on smooth functions
# --------------------------------------------------------------------------

def edge_moments(mesh: PolygonalMesh, f: Field, k: int, degree: int, edges=None) -> np.ndarray:
    """(1/h_e) int_e f mu_j ds for the given edges, shape (len(edges), k)."""
    edges = np.arange(mesh.n_edges) if edges is None else np.asarray(edges)
    xi, w = gauss_legendre_unit(degree + k - 1)
    P0 = mesh.vertices[mesh.edges[edges, 0]]
    P1 = mesh.vertices[mesh.edges[edges, 1]]
    mid = 0.5 * (P0 + P1)
    pts = mid[:, None, :] + xi[None, :, None] * (P1 - P0)[:, None, :]
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=float)
    vals = np.broadcast_to(vals, pts.shape[:2])
    powers = xi[:, None] ** np.arange(k)[None, :]
    return np.einsum("eq,q,qj->ej", vals, w, powers)


def interior_moments(mesh: PolygonalMesh, f: Field, k: int, degree: int, cells=None) -> np.ndarray:
    """(1/|T|) int_T f m_s for |s| <= k-2, shape (len(cells), dim P^{k-2})."""
    cells = range(mesh.n_cells) if cells is None else cells
    cells = list(cells)
    m = dim_poly(k - 2)
    if m == 0:
        return np.zeros((len(cells), 0))
    rules = [mesh.cell_quadrature(c, degree + k - 2) for c in cells]
    pts = np.concatenate([r.points for r in rules])
    vals = np.broadcast_to(np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float), (len(pts),))
    out = np.empty((len(cells), m))
    start = 0
    for i, (c, r) in enumerate(zip(cells, rules)):
        stop = start + len(r.weights)
        M = eval_monomials(r.points, mesh.cell_centroids[c], mesh.cell_diameters[c], k - 2)
        out[i] = (r.weights * vals[start:stop]) @ M / mesh.cell_areas[c]
        start = stop
    return out


def dof_evaluate(mesh: PolygonalMesh, f: Field, descriptor: DofDescriptor, k: int, degree: int | None = None) -> float:
    """Value of a single DOF functional on ``f``."""
    degree = default_data_degree(k) if degree is None else degree
    if isinstance(descriptor, EdgeMoment):
        return float(edge_moments(mesh, f, descriptor.j + 1, degree, [descriptor.edge])[0, descriptor.j])
    idx = monomial_index(descriptor.s)
    return float(interior_moments(mesh, f, descriptor.s[0] + descriptor.s[1] + 2, degree, [descriptor.cell])[0, idx])


def interpolate(dofmap: GlobalDofMap, f: Field, degree: int | None = None) -> np.ndarray:
    """Global DOF vector of the interpolant v_I: every DOF of ``v_I`` equals that of ``f``."""
    k = dofmap.k
    degree = default_data_degree(k) if degree is None else degree
    out = np.empty(dofmap.n_dofs)
    out[: dofmap.n_edge_dofs] = edge_moments(dofmap.mesh, f, k, degree).ravel()
    if dofmap.n_interior_per_cell:
        out[dofmap.n_edge_dofs:] = interior_moments(dofmap.mesh, f, k, degree).ravel()
    return out
