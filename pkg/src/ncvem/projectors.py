"""Per-cell projector matrices acting on local DOF vectors.

Notation for a cell with ``n`` edges, order ``k``:

* ``dk = dim P^k``, ``d1 = dim P^{k-1}``, ``N_T = n k + k(k-1)/2``.
* ``D``  (N_T x dk): DOFs of the scaled monomials.
* ``G``  (2 d1 x N_T): coefficients of the L2 projection of grad v onto
  (P^{k-1})^2, x-component block first.
* ``E``  (dk x N_T): elliptic projection onto P^k.
* ``F``  (dk x N_T): L2 projection onto P^k.  Moments of degree <= k-2 come
  from the interior DOFs; the remaining moments are not reachable from the
  DOFs and are taken from ``E`` instead.  For k = 1 this makes ``F == E``.

The constant mode of ``E`` is fixed by the mean of the edge averages
``(1/n) sum_e (1/|e|) int_e v`` when k = 1 and by the cell mean (first
interior DOF) when k >= 2.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .dofs import Field, default_data_degree, local_dof_count
from .mesh import PolygonalMesh
from .poly import (
    Poly2,
    dim_poly,
    eval_monomials,
    gauss_legendre_unit,
    gradient_matrices,
    scaled_to_poly2,
)

log = logging.getLogger(__name__)

COND_WARN = 1e8


@dataclass(frozen=True)
class ElementProjectors:
    cell: int
    k: int
    center: np.ndarray
    h: float
    area: float
    n_edges: int
    D: np.ndarray
    G: np.ndarray
    E: np.ndarray
    F: np.ndarray
    mass: np.ndarray  # monomial mass matrix of P^k
    grad_mono: np.ndarray  # (2 d1, dk) gradient coefficients of the monomials
    kernel_functional: np.ndarray  # (N_T,) functional fixing constants in E

    @property
    def n_local(self) -> int:
        return self.D.shape[0]

    @property
    def vector_mass(self) -> np.ndarray:
        d1 = dim_poly(self.k - 1)
        M1 = self.mass[:d1, :d1]
        Z = np.zeros_like(M1)
        return np.block([[M1, Z], [Z, M1]])


def _check_conditioning(A: np.ndarray, what: str, cell: int):
    cond = np.linalg.cond(A)
    log.debug("cell %d: cond(%s) = %.3e", cell, what, cond)
    if not np.isfinite(cond):
        raise np.linalg.LinAlgError(f"singular {what} on cell {cell}: degenerate geometry")
    if cond > COND_WARN:
        warnings.warn(f"cell {cell}: cond({what}) = {cond:.2e} exceeds {COND_WARN:.0e}", stacklevel=3)


def edge_restriction(mesh: PolygonalMesh, e: int, center, h: float, l: int) -> np.ndarray:
    """Coefficients in the edge basis mu_0..mu_l of the cell monomials restricted to edge ``e``.

    Shape (l + 1, dim P^l): column ``s`` expands m_s|_e in powers of the
    canonical local coordinate.
    """
    xi, _ = gauss_legendre_unit(2 * l + 1)  # l + 1 distinct nodes
    P0 = mesh.vertices[mesh.edges[e, 0]]
    P1 = mesh.vertices[mesh.edges[e, 1]]
    pts = 0.5 * (P0 + P1) + xi[:, None] * (P1 - P0)
    vander = xi[:, None] ** np.arange(l + 1)[None, :]
    return np.linalg.solve(vander, eval_monomials(pts, center, h, l))


def build_element_projectors(mesh: PolygonalMesh, c: int, k: int) -> ElementProjectors:
    center = mesh.cell_centroids[c]
    h = float(mesh.cell_diameters[c])
    area = float(mesh.cell_areas[c])
    edges = mesh.cell_edges[c]
    n = len(edges)
    NT = local_dof_count(n, k)
    dk, d1, d2 = dim_poly(k), dim_poly(k - 1), dim_poly(k - 2)
    n_edge_dofs = n * k
    interior = slice(n_edge_dofs, NT)

    rule = mesh.cell_quadrature(c, 2 * k)
    V = eval_monomials(rule.points, center, h, k)
    mass = (V * rule.weights[:, None]).T @ V
    mass = 0.5 * (mass + mass.T)
    _check_conditioning(mass, "mass matrix", c)

    # DOFs of the monomials
    D = np.zeros((NT, dk))
    xi, w = gauss_legendre_unit(2 * k - 1)
    powers = xi[:, None] ** np.arange(k)[None, :]
    restrictions = []
    for i, e in enumerate(edges):
        P0 = mesh.vertices[mesh.edges[e, 0]]
        P1 = mesh.vertices[mesh.edges[e, 1]]
        pts = 0.5 * (P0 + P1) + xi[:, None] * (P1 - P0)
        D[i * k:(i + 1) * k] = (powers * w[:, None]).T @ eval_monomials(pts, center, h, k)
        restrictions.append(edge_restriction(mesh, e, center, h, k - 1))
    D[interior] = mass[:d2, :] / area

    # gradient projection: int q . grad v = -int div(q) v + sum_e int_e (q . n) v
    B = np.zeros((2 * d1, NT))
    normals = mesh.outward_normals(c)
    for i, e in enumerate(edges):
        he = mesh.edge_lengths[e]
        R = restrictions[i]  # (k, d1)
        cols = slice(i * k, (i + 1) * k)
        B[:d1, cols] += he * normals[i, 0] * R.T
        B[d1:, cols] += he * normals[i, 1] * R.T
    if d2:
        Dx, Dy = gradient_matrices(k - 1, h)  # (d2, d1)
        B[:d1, interior] -= area * Dx.T
        B[d1:, interior] -= area * Dy.T
    M1 = mass[:d1, :d1]
    G = np.vstack([np.linalg.solve(M1, B[:d1]), np.linalg.solve(M1, B[d1:])])

    # elliptic projection
    Dxk, Dyk = gradient_matrices(k, h)
    grad_mono = np.vstack([Dxk, Dyk])
    Z = np.zeros_like(M1)
    Mvec = np.block([[M1, Z], [Z, M1]])
    stiff = grad_mono.T @ Mvec @ grad_mono
    rhs = grad_mono.T @ Mvec @ G
    p0 = np.zeros(NT)
    if k == 1:
        p0[0:n_edge_dofs:k] = 1.0 / n
    else:
        p0[n_edge_dofs] = 1.0
    stiff[0] = p0 @ D
    rhs[0] = p0
    _check_conditioning(stiff, "elliptic projection matrix", c)
    E = np.linalg.solve(stiff, rhs)

    # L2 projection: low moments from interior DOFs, the rest from E
    rhsF = mass @ E
    if d2:
        rhsF[:d2] = 0.0
        rhsF[:d2, interior] = area * np.eye(d2)
    F = np.linalg.solve(mass, rhsF)

    return ElementProjectors(
        cell=c, k=k, center=center, h=h, area=area, n_edges=n,
        D=D, G=G, E=E, F=F, mass=mass, grad_mono=grad_mono, kernel_functional=p0,
    )


def gradient_projection(mesh, c, k) -> np.ndarray:
    return build_element_projectors(mesh, c, k).G


def elliptic_projection(mesh, c, k) -> np.ndarray:
    return build_element_projectors(mesh, c, k).E


def function_projection(mesh, c, k) -> np.ndarray:
    return build_element_projectors(mesh, c, k).F


# --------------------------------------------------------------------------
# L2 projections of data
# --------------------------------------------------------------------------

def cell_l2_coefficients(mesh: PolygonalMesh, c: int, f: Field, l: int, degree: int | None = None) -> np.ndarray:
    """Scaled-monomial coefficients of the L2(T) projection of ``f`` onto P^l."""
    degree = default_data_degree(l) if degree is None else degree
    rule = mesh.cell_quadrature(c, degree + l)
    M = eval_monomials(rule.points, mesh.cell_centroids[c], mesh.cell_diameters[c], l)
    vals = np.broadcast_to(np.asarray(f(rule.points[:, 0], rule.points[:, 1]), dtype=float), rule.weights.shape)
    mass = (M * rule.weights[:, None]).T @ M
    return np.linalg.solve(mass, M.T @ (rule.weights * vals))


def project_data_cell(mesh: PolygonalMesh, c: int, f: Field, l: int, degree: int | None = None) -> Poly2:
    coeffs = cell_l2_coefficients(mesh, c, f, l, degree)
    return scaled_to_poly2(coeffs, mesh.cell_centroids[c], mesh.cell_diameters[c], l)


def project_data_edge(mesh: PolygonalMesh, e: int, g: Field, l: int, degree: int | None = None) -> Polynomial:
    """L2(e) projection of ``g`` onto P^l(e), as a polynomial in the local coordinate xi in [-1/2, 1/2]."""
    degree = default_data_degree(l) if degree is None else degree
    xi, w = gauss_legendre_unit(degree + l)
    P0 = mesh.vertices[mesh.edges[e, 0]]
    P1 = mesh.vertices[mesh.edges[e, 1]]
    pts = 0.5 * (P0 + P1) + xi[:, None] * (P1 - P0)
    vals = np.broadcast_to(np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float), xi.shape)
    Phi = xi[:, None] ** np.arange(l + 1)[None, :]
    mass = (Phi * w[:, None]).T @ Phi
    return Polynomial(np.linalg.solve(mass, Phi.T @ (w * vals)))
