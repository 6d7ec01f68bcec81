"""Polynomial algebra, scaled monomial bases and quadrature on polygons/edges.

Monomials are always ordered graded-lexicographically: within a total degree
``d`` the exponents run ``(d, 0), (d-1, 1), ..., (0, d)``.  Every projector
matrix in the package depends on this ordering.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Tuple

import numpy as np
from scipy.special import roots_jacobi

MultiIndex = Tuple[int, int]


# --------------------------------------------------------------------------
# multi-indices
# --------------------------------------------------------------------------

def dim_poly(l: int) -> int:
    """Dimension of P^l in two variables (0 for l < 0)."""
    return (l + 1) * (l + 2) // 2 if l >= 0 else 0


@lru_cache(maxsize=None)
def monomial_exponents(l: int) -> Tuple[MultiIndex, ...]:
    return tuple((d - i, i) for d in range(l + 1) for i in range(d + 1))


def monomial_index(s: MultiIndex) -> int:
    d = s[0] + s[1]
    return d * (d + 1) // 2 + s[1]


# --------------------------------------------------------------------------
# Poly2: sparse polynomials in global (x, y)
# --------------------------------------------------------------------------

class Poly2:
    """Sparse bivariate polynomial ``sum c_s x^s1 y^s2``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Dict[MultiIndex, float] | None = None):
        self.coeffs: Dict[MultiIndex, float] = {}
        for s, c in (coeffs or {}).items():
            s = (int(s[0]), int(s[1]))
            if s[0] < 0 or s[1] < 0:
                raise ValueError(f"negative exponent {s}")
            if c != 0:
                self.coeffs[s] = self.coeffs.get(s, 0.0) + float(c)
        self.coeffs = {s: c for s, c in self.coeffs.items() if c != 0}

    @classmethod
    def constant(cls, c: float) -> "Poly2":
        return cls({(0, 0): c})

    @classmethod
    def x(cls) -> "Poly2":
        return cls({(1, 0): 1.0})

    @classmethod
    def y(cls) -> "Poly2":
        return cls({(0, 1): 1.0})

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        return max((a + b for a, b in self.coeffs), default=-1)

    def is_zero(self) -> bool:
        return not self.coeffs

    def _coerce(self, other) -> "Poly2":
        if isinstance(other, Poly2):
            return other
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Poly2.constant(float(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.coeffs)
        for s, c in other.coeffs.items():
            out[s] = out.get(s, 0.0) + c
        return Poly2(out)

    __radd__ = __add__

    def __neg__(self):
        return Poly2({s: -c for s, c in self.coeffs.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out: Dict[MultiIndex, float] = {}
        for (a1, b1), c1 in self.coeffs.items():
            for (a2, b2), c2 in other.coeffs.items():
                s = (a1 + a2, b1 + b2)
                out[s] = out.get(s, 0.0) + c1 * c2
        return Poly2(out)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ValueError("only nonnegative integer powers")
        out = Poly2.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.coeffs == other.coeffs

    def __repr__(self):
        if not self.coeffs:
            return "Poly2(0)"
        terms = " + ".join(f"{c:g}*x^{a}*y^{b}" for (a, b), c in sorted(self.coeffs.items()))
        return f"Poly2({terms})"

    def diff(self, var) -> "Poly2":
        """Partial derivative; ``var`` is 0 or "x" for x, 1 or "y" for y."""
        var = {"x": 0, "y": 1}.get(var, var)
        out = {}
        for (a, b), c in self.coeffs.items():
            if var == 0 and a > 0:
                out[(a - 1, b)] = c * a
            elif var == 1 and b > 0:
                out[(a, b - 1)] = c * b
        return Poly2(out)

    def __call__(self, x, y):
        return self.evaluate(x, y)

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for (a, b), c in self.coeffs.items():
            out = out + c * x**a * y**b
        return out

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)


def divergence(px: Poly2, py: Poly2) -> Poly2:
    return px.diff(0) + py.diff(1)


def scaled_to_poly2(coeffs: Iterable[float], center, h: float, l: int) -> Poly2:
    """Expand ``sum c_s ((x - xc)/h)^s`` into global coordinates."""
    xs = (Poly2.x() - float(center[0])) * (1.0 / h)
    ys = (Poly2.y() - float(center[1])) * (1.0 / h)
    out = Poly2()
    for c, (a, b) in zip(coeffs, monomial_exponents(l)):
        if c != 0:
            out = out + float(c) * (xs**a) * (ys**b)
    return out


# --------------------------------------------------------------------------
# scaled monomial bases
# --------------------------------------------------------------------------

def eval_monomials(points, center, h: float, l: int) -> np.ndarray:
    """Values of M^l(T) at ``points``; shape (npts, dim_poly(l))."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if l < 0:
        return np.zeros((pts.shape[0], 0))
    X = (pts[:, 0] - center[0]) / h
    Y = (pts[:, 1] - center[1]) / h
    xp = np.ones((l + 1, pts.shape[0]))
    yp = np.ones((l + 1, pts.shape[0]))
    for i in range(1, l + 1):
        xp[i] = xp[i - 1] * X
        yp[i] = yp[i - 1] * Y
    return np.stack([xp[a] * yp[b] for a, b in monomial_exponents(l)], axis=1)


def eval_monomial_gradients(points, center, h: float, l: int) -> np.ndarray:
    """Gradients of M^l(T) at ``points``; shape (npts, dim_poly(l), 2)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    low = eval_monomials(pts, center, h, l - 1)
    out = np.zeros((pts.shape[0], dim_poly(l), 2))
    for i, (a, b) in enumerate(monomial_exponents(l)):
        if a > 0:
            out[:, i, 0] = a / h * low[:, monomial_index((a - 1, b))]
        if b > 0:
            out[:, i, 1] = b / h * low[:, monomial_index((a, b - 1))]
    return out


def gradient_matrices(l: int, h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Coefficient maps ``Dx, Dy`` of shape (dim P^{l-1}, dim P^l).

    Column ``s`` holds the expansion of d/dx m_s (resp. d/dy) in M^{l-1}.
    """
    Dx = np.zeros((dim_poly(l - 1), dim_poly(l)))
    Dy = np.zeros_like(Dx)
    for i, (a, b) in enumerate(monomial_exponents(l)):
        if a > 0:
            Dx[monomial_index((a - 1, b)), i] = a / h
        if b > 0:
            Dy[monomial_index((a, b - 1)), i] = b / h
    return Dx, Dy


def laplacian_matrix(l: int, h: float) -> np.ndarray:
    """Coefficient map of the Laplacian, shape (dim P^{l-2}, dim P^l)."""
    Dx, Dy = gradient_matrices(l, h)
    Dx1, Dy1 = gradient_matrices(l - 1, h)
    return Dx1 @ Dx + Dy1 @ Dy


@dataclass(frozen=True)
class CellMonomialBasis:
    """M^l(T) = {((x - x_T)/h_T)^s : |s| <= l}."""

    center: Tuple[float, float]
    h: float
    degree: int

    @property
    def dim(self) -> int:
        return dim_poly(self.degree)

    @property
    def exponents(self):
        return monomial_exponents(self.degree)

    def evaluate(self, points) -> np.ndarray:
        return eval_monomials(points, self.center, self.h, self.degree)

    def gradient(self, points) -> np.ndarray:
        return eval_monomial_gradients(points, self.center, self.h, self.degree)

    def gradient_coefficients(self):
        return gradient_matrices(self.degree, self.h)

    def laplacian_coefficients(self) -> np.ndarray:
        return laplacian_matrix(self.degree, self.h)

    def to_poly2(self, coeffs) -> Poly2:
        return scaled_to_poly2(coeffs, self.center, self.h, self.degree)


@dataclass(frozen=True)
class EdgeMonomialBasis:
    """1D scaled monomials mu_j(t) = ((t - t_mid)/h_e)^j along the canonical edge.

    The local coordinate ``xi = (t - t_mid)/h_e`` lies in [-1/2, 1/2] and
    increases from the edge's first (lower-index) vertex to its second.
    """

    start: Tuple[float, float]
    end: Tuple[float, float]
    degree: int

    @property
    def dim(self) -> int:
        return self.degree + 1

    @property
    def length(self) -> float:
        return float(math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1]))

    def xi_of(self, points) -> np.ndarray:
        """Local coordinate of points lying on the edge."""
        a = np.asarray(self.start)
        d = np.asarray(self.end) - a
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts - a) @ d / (d @ d) - 0.5

    def point_at(self, xi) -> np.ndarray:
        a = np.asarray(self.start)
        b = np.asarray(self.end)
        xi = np.asarray(xi, dtype=float)
        return 0.5 * (a + b) + xi[..., None] * (b - a)

    def evaluate_xi(self, xi) -> np.ndarray:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        return xi[:, None] ** np.arange(self.degree + 1)[None, :]

    def evaluate(self, points) -> np.ndarray:
        return self.evaluate_xi(self.xi_of(points))


# --------------------------------------------------------------------------
# quadrature
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,)
    degree: int
    # local edge coordinate in [-1/2, 1/2] for edge rules
    xi: np.ndarray | None = None

    def integrate(self, values) -> np.ndarray:
        """Apply the rule to sampled values, or to a callable ``f(x, y)``."""
        if callable(values):
            x, y = self.points[:, 0], self.points[:, 1]
            values = np.broadcast_to(np.asarray(values(x, y), dtype=float), x.shape)
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


@lru_cache(maxsize=None)
def gauss_legendre_unit(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [-1/2, 1/2], exact to ``degree``, weights summing to 1."""
    n = max(1, math.ceil((degree + 1) / 2))
    t, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * t, 0.5 * w


@lru_cache(maxsize=None)
def reference_triangle_rule(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Collapsed (Duffy) Gauss rule on the triangle (0,0),(1,0),(0,1).

    Positive weights, exact for total degree ``degree``; weights sum to 1/2.
    """
    n = max(1, math.ceil((degree + 1) / 2))
    tu, wu = roots_jacobi(n, 1.0, 0.0)
    tv, wv = np.polynomial.legendre.leggauss(n)
    u = 0.5 * (1.0 + tu)
    v = 0.5 * (1.0 + tv)
    wu = wu / 4.0
    wv = wv / 2.0
    U, V = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    pts = np.stack([U.ravel(), (V * (1.0 - U)).ravel()], axis=1)
    return pts, W.ravel()


def edge_quadrature(start, end, degree: int) -> QuadratureRule:
    """Gauss-Legendre rule on the segment start->end, exact to ``degree``."""
    xi, w = gauss_legendre_unit(degree)
    a = np.asarray(start, dtype=float)
    b = np.asarray(end, dtype=float)
    length = float(np.hypot(*(b - a)))
    pts = 0.5 * (a + b) + xi[:, None] * (b - a)
    return QuadratureRule(pts, w * length, degree, xi=xi)


def polygon_quadrature(vertices, degree: int, center=None) -> QuadratureRule:
    """Fan-triangulate the polygon from ``center`` and apply triangle rules.

    ``center`` must lie in the polygon kernel (any point from which every
    vertex is visible).  Defaults to the vertex average, which is only safe
    for convex polygons.
    """
    V = np.asarray(vertices, dtype=float)
    c = V.mean(axis=0) if center is None else np.asarray(center, dtype=float)
    ref_pts, ref_w = reference_triangle_rule(degree)
    a = V - c
    b = np.roll(V, -1, axis=0) - c
    jac = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    if np.any(jac < 0):
        raise ValueError("fan center outside polygon kernel")
    keep = jac > 0
    a, b, jac = a[keep], b[keep], jac[keep]
    pts = c + ref_pts[None, :, 0, None] * a[:, None, :] + ref_pts[None, :, 1, None] * b[:, None, :]
    w = jac[:, None] * ref_w[None, :]
    return QuadratureRule(pts.reshape(-1, 2), w.ravel(), degree)
