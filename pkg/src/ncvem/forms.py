"""Local discrete forms: diffusion, skew-symmetrized convection, reaction, stabilizers, load."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dofs import Field, default_data_degree, edge_moments
from .errors import ConfigError
from .mesh import PolygonalMesh
from .poly import Poly2, dim_poly, divergence, eval_monomials
from .projectors import ElementProjectors, cell_l2_coefficients

SAMPLING_TOL = 1e-9


@dataclass
class CoefficientField:
    """Polynomial coefficients of -div(K grad u) + beta . grad u + c u.

    ``eta``/``xi`` are optional declared ellipticity bounds of K and ``c0``
    the declared lower bound of c - div(beta)/2; all are checked by sampling
    in :meth:`validate`.
    """

    K11: Poly2
    K12: Poly2
    K22: Poly2
    beta1: Poly2 = field(default_factory=Poly2)
    beta2: Poly2 = field(default_factory=Poly2)
    c: Poly2 = field(default_factory=Poly2)
    c0: float = 0.0
    eta: float | None = None
    xi: float | None = None

    @classmethod
    def constant(cls, kappa=1.0, beta=(0.0, 0.0), c=0.0, **kw) -> "CoefficientField":
        P = Poly2.constant
        return cls(P(kappa), Poly2(), P(kappa), P(beta[0]), P(beta[1]), P(c), **kw)

    @property
    def div_beta(self) -> Poly2:
        return divergence(self.beta1, self.beta2)

    @property
    def has_convection(self) -> bool:
        return not (self.beta1.is_zero() and self.beta2.is_zero())

    def extra_degree(self) -> int:
        """Degree added by the coefficients to products of two P^k functions."""
        degK = max(self.K11.degree, self.K12.degree, self.K22.degree, 0)
        degb = max(self.beta1.degree, self.beta2.degree, 0)
        return max(degK, degb + 1, self.c.degree, 0)

    def K_at(self, pts) -> np.ndarray:
        x, y = pts[:, 0], pts[:, 1]
        k11, k12, k22 = (np.broadcast_to(p(x, y), x.shape) for p in (self.K11, self.K12, self.K22))
        return np.stack([np.stack([k11, k12], -1), np.stack([k12, k22], -1)], -2)

    def validate(self, mesh: PolygonalMesh, degree: int = 4) -> dict:
        """Sample the coefficients at quadrature points of every cell.

        Raises :class:`ConfigError` when K is not uniformly positive definite
        (or leaves the declared [eta, xi] band) or c - div(beta)/2 drops below
        ``c0``.  Returns the observed bounds.
        """
        pts = np.concatenate([mesh.cell_quadrature(c, degree).points for c in range(mesh.n_cells)])
        pts = np.concatenate([pts, mesh.vertices])
        lam = np.linalg.eigvalsh(self.K_at(pts))
        lam_min, lam_max = float(lam[:, 0].min()), float(lam[:, 1].max())
        x, y = pts[:, 0], pts[:, 1]
        react = np.broadcast_to(self.c(x, y) - 0.5 * self.div_beta(x, y), x.shape)
        react_min = float(react.min())
        if self.eta is not None and lam_min < self.eta - SAMPLING_TOL:
            raise ConfigError(f"K violates lower ellipticity bound: min eigenvalue {lam_min:g} < eta={self.eta:g}")
        if self.xi is not None and lam_max > self.xi + SAMPLING_TOL:
            raise ConfigError(f"K violates upper ellipticity bound: max eigenvalue {lam_max:g} > xi={self.xi:g}")
        if lam_min <= 0:
            raise ConfigError(f"K is not positive definite (min eigenvalue {lam_min:g})")
        if react_min < self.c0 - SAMPLING_TOL:
            raise ConfigError(f"c - div(beta)/2 drops to {react_min:g} below c0={self.c0:g}")
        return {"eta_observed": lam_min, "xi_observed": lam_max, "c0_observed": react_min}


@dataclass
class LocalForms:
    A_diff: np.ndarray
    S_a: np.ndarray
    A_conv: np.ndarray
    A_reac: np.ndarray
    S_c: np.ndarray
    load: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.A_diff + self.S_a + self.A_conv + self.A_reac + self.S_c


def form_quadrature_degree(k: int, coeffs: CoefficientField) -> int:
    return 2 * k + coeffs.extra_degree()


def stabilization(P: ElementProjectors, scale: float) -> np.ndarray:
    """dofi-dofi stabilizer ``scale * (I - D F)^T (I - D F)``; vanishes exactly on P^k."""
    R = np.eye(P.n_local) - P.D @ P.F
    return scale * (R.T @ R)


def local_forms(
    mesh: PolygonalMesh,
    P: ElementProjectors,
    coeffs: CoefficientField,
    f: Field | None = None,
    data_degree: int | None = None,
) -> LocalForms:
    c, k = P.cell, P.k
    dk, d1 = dim_poly(k), dim_poly(k - 1)
    rule = mesh.cell_quadrature(c, form_quadrature_degree(k, coeffs))
    x, y = rule.points[:, 0], rule.points[:, 1]
    w = rule.weights
    V = eval_monomials(rule.points, P.center, P.h, k)
    V1 = V[:, :d1]

    def wmass(A, B, coef):
        vals = np.broadcast_to(coef(x, y), x.shape)
        return (A * (w * vals)[:, None]).T @ B

    # diffusion
    K11, K12, K22 = wmass(V1, V1, coeffs.K11), wmass(V1, V1, coeffs.K12), wmass(V1, V1, coeffs.K22)
    MK = np.block([[K11, K12], [K12, K22]])
    A_diff = P.G.T @ MK @ P.G
    trK = float(np.sum(w * np.broadcast_to(coeffs.K11(x, y) + coeffs.K22(x, y), x.shape))) / P.area
    S_a = stabilization(P, 0.5 * trK)

    # convection, skew-symmetrized
    NT = P.n_local
    if coeffs.has_convection:
        Mb = np.hstack([wmass(V, V1, coeffs.beta1), wmass(V, V1, coeffs.beta2)])  # (dk, 2 d1)
        B1 = P.F.T @ Mb @ P.G  # [i, j] = int beta . (Pi grad phi_j) (Pi phi_i)
        Mdiv = P.F.T @ wmass(V, V, coeffs.div_beta) @ P.F
        A_conv = 0.5 * (B1 - B1.T - Mdiv)
    else:
        A_conv = np.zeros((NT, NT))

    # reaction
    if coeffs.c.is_zero():
        A_reac = np.zeros((NT, NT))
        S_c = np.zeros((NT, NT))
    else:
        A_reac = P.F.T @ wmass(V, V, coeffs.c) @ P.F
        cint = float(np.sum(w * np.broadcast_to(coeffs.c(x, y), x.shape)))
        S_c = stabilization(P, cint)

    load = local_load(mesh, P, f, data_degree) if f is not None else np.zeros(NT)
    return LocalForms(A_diff, S_a, A_conv, A_reac, S_c, load)


def divergence_mass(mesh: PolygonalMesh, P: ElementProjectors, coeffs: CoefficientField) -> np.ndarray:
    """int_T div(beta) (Pi_k phi_j)(Pi_k phi_i) on local basis functions."""
    rule = mesh.cell_quadrature(P.cell, form_quadrature_degree(P.k, coeffs))
    V = eval_monomials(rule.points, P.center, P.h, P.k) @ P.F  # values of Pi_k phi_j
    vals = np.broadcast_to(coeffs.div_beta(rule.points[:, 0], rule.points[:, 1]), rule.weights.shape)
    return (V * (rule.weights * vals)[:, None]).T @ V


def local_load(mesh: PolygonalMesh, P: ElementProjectors, f: Field, data_degree: int | None = None) -> np.ndarray:
    """Local right-hand side <f_h, phi_i>.

    k >= 2: f_h is the L2 projection onto P^{k-2}; only interior-moment DOFs
    receive load (|T| times the projection coefficients).
    k = 1: f_h is the cell mean, paired with the mean of the edge averages,
    so each edge DOF receives |T| * mean(f) / n.
    """
    k = P.k
    degree = default_data_degree(k) if data_degree is None else data_degree
    load = np.zeros(P.n_local)
    if k == 1:
        f0 = cell_l2_coefficients(mesh, P.cell, f, 0, degree)[0]
        load[: P.n_edges] = P.area * f0 / P.n_edges
    else:
        coef = cell_l2_coefficients(mesh, P.cell, f, k - 2, degree)
        load[P.n_edges * k:] = P.area * coef
    return load


def dirichlet_moments(mesh: PolygonalMesh, g: Field, e: int, k: int, degree: int | None = None) -> np.ndarray:
    """The k edge moments of g on edge e (equal to those of its L2(e) projection onto P^{k-1})."""
    degree = default_data_degree(k) if degree is None else degree
    return edge_moments(mesh, g, k, degree, [e])[0]


def dominance_diagnostic(mesh: PolygonalMesh, coeffs: CoefficientField, degree: int = 4) -> dict:
    """Observable shadow of the coercivity floor min(alpha_* eta, c0) - C |div beta|_inf h_T.

    The analysis constant C is unknown, so the product h_T |div beta|_inf is
    reported as is, together with the cell Peclet number |beta|_inf h_T / (2 eta_T).
    A warning is listed when the product exceeds eta or c0 (with c0 > 0), or
    when the Peclet number exceeds 1.
    """
    prod = np.zeros(mesh.n_cells)
    peclet = np.zeros(mesh.n_cells)
    for c in range(mesh.n_cells):
        pts = np.concatenate([mesh.cell_quadrature(c, degree).points, mesh.cell_vertices(c)])
        x, y = pts[:, 0], pts[:, 1]
        hT = mesh.cell_diameters[c]
        div = np.abs(np.broadcast_to(coeffs.div_beta(x, y), x.shape)).max()
        bmag = np.hypot(np.broadcast_to(coeffs.beta1(x, y), x.shape),
                        np.broadcast_to(coeffs.beta2(x, y), x.shape)).max()
        eta_T = np.linalg.eigvalsh(coeffs.K_at(pts))[:, 0].min()
        prod[c] = hT * div
        peclet[c] = bmag * hT / (2 * eta_T)
    eta = coeffs.eta if coeffs.eta is not None else float(
        np.linalg.eigvalsh(coeffs.K_at(mesh.cell_centroids))[:, 0].min())
    out = {
        "max_h_divbeta": float(prod.max()),
        "max_cell_peclet": float(peclet.max()),
        "warnings": [],
    }
    if prod.max() > eta:
        out["warnings"].append(f"h_T*|div beta|_inf = {prod.max():.3g} exceeds eta = {eta:.3g}")
    if coeffs.c0 > 0 and prod.max() > coeffs.c0:
        out["warnings"].append(f"h_T*|div beta|_inf = {prod.max():.3g} exceeds c0 = {coeffs.c0:.3g}")
    if peclet.max() > 1:
        out["warnings"].append(
            f"cell Peclet number {peclet.max():.3g} > 1: convection-dominated, coercivity not guaranteed"
        )
    for msg in out["warnings"]:
        warnings.warn(msg, stacklevel=2)
    return out
