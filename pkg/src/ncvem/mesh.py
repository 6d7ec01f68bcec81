"""Polygonal meshes: topology, geometry, shape-regularity checks and .poly2 I/O."""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import List, Sequence

import numpy as np
from scipy.optimize import linprog

from .poly import polygon_quadrature

log = logging.getLogger(__name__)

# half-plane membership tolerance for kernel computations
KERNEL_TOL = 1e-10


class MeshError(ValueError):
    """Invalid mesh input or mesh file."""


# --------------------------------------------------------------------------
# polygon geometry helpers
# --------------------------------------------------------------------------

def signed_area(V: np.ndarray) -> float:
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def geometric_quantities(V) -> tuple[np.ndarray, float, float]:
    """Return ``(centroid, area, diameter)`` of a counterclockwise polygon."""
    V = np.asarray(V, dtype=float)
    x, y = V[:, 0], V[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if not area > 0:
        raise MeshError(f"polygon has non-positive signed area {area:g}")
    cx = ((x + xn) * cross).sum() / (6 * area)
    cy = ((y + yn) * cross).sum() / (6 * area)
    diff = V[:, None, :] - V[None, :, :]
    diam = float(np.sqrt((diff**2).sum(-1)).max())
    return np.array([cx, cy]), float(area), diam


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def is_simple(V: np.ndarray) -> bool:
    """No two non-adjacent edges properly cross."""
    n = len(V)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_intersect(V[i], V[(i + 1) % n], V[j], V[(j + 1) % n]):
                return False
    return True


def edge_halfplanes(V: np.ndarray):
    """Inward half-planes ``A p <= b`` (unit rows) of a counterclockwise polygon."""
    d = np.roll(V, -1, axis=0) - V
    L = np.hypot(d[:, 0], d[:, 1])
    # outward normal of a CCW edge is (dy, -dx)
    A = np.stack([d[:, 1], -d[:, 0]], axis=1) / L[:, None]
    b = np.einsum("ij,ij->i", A, V)
    return A, b


def chebyshev_center(V: np.ndarray) -> tuple[np.ndarray, float]:
    """Largest disk inside the polygon kernel: ``(center, radius)``.

    The kernel of a simple polygon is the intersection of its edge
    half-planes, so the largest disk from whose points the whole polygon is
    visible solves a small LP.  Radius is 0 (or negative) if the kernel is
    empty or degenerate.
    """
    A, b = edge_halfplanes(V)
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=np.hstack([A, np.ones((len(b), 1))]),
        b_ub=b,
        bounds=[(None, None), (None, None), (None, None)],
        method="highs",
    )
    if res.status != 0:
        return V.mean(axis=0), -math.inf
    return res.x[:2], float(res.x[2])


def _centroid_shortcut(V, A, b):
    c = V.mean(axis=0)
    slack = b - A @ c
    if np.all(slack > KERNEL_TOL):
        return c, float(slack.min())
    return None, None


def kernel_point(V: np.ndarray) -> np.ndarray:
    """A point strictly inside the polygon kernel (for fan triangulation)."""
    A, b = edge_halfplanes(V)
    c, _ = _centroid_shortcut(V, A, b)
    if c is not None:
        return c
    c, r = chebyshev_center(V)
    if not r > KERNEL_TOL:
        raise MeshError("polygon kernel is empty: cell is not star-shaped")
    return c


def kernel_polygon(V: np.ndarray) -> np.ndarray:
    """Kernel of a polygon by successive half-plane clipping (may be empty)."""
    A, b = edge_halfplanes(V)
    lo, hi = V.min(axis=0), V.max(axis=0)
    poly = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    for a_i, b_i in zip(A, b):
        if len(poly) == 0:
            break
        s = poly @ a_i - b_i
        out = []
        n = len(poly)
        for i in range(n):
            p, q = poly[i], poly[(i + 1) % n]
            sp, sq = s[i], s[(i + 1) % n]
            if sp <= KERNEL_TOL:
                out.append(p)
            if (sp < -KERNEL_TOL and sq > KERNEL_TOL) or (sp > KERNEL_TOL and sq < -KERNEL_TOL):
                t = sp / (sp - sq)
                out.append(p + t * (q - p))
        poly = np.array(out) if out else np.zeros((0, 2))
    return poly


# --------------------------------------------------------------------------
# mesh
# --------------------------------------------------------------------------

class PolygonalMesh:
    """Immutable polygonal mesh with canonical edges.

    Edges are stored with ``v0 < v1`` and numbered in lexicographic order of
    ``(v0, v1)``, so edge data does not depend on cell order.  ``n_e`` is the
    unit normal pointing from the cell on the left of v0->v1 to the right;
    the outward normal of cell ``c`` on its ``i``-th edge is
    ``cell_edge_signs[c][i] * edge_normals[e]``.
    """

    def __init__(self, vertices, cells: Sequence[Sequence[int]]):
        self.vertices = np.asarray(vertices, dtype=float)
        self.vertices.setflags(write=False)
        self.cells: List[np.ndarray] = [np.asarray(c, dtype=np.int64) for c in cells]
        self._build()

    def _build(self):
        raw = []
        for loop in self.cells:
            n = len(loop)
            for i in range(n):
                a, b = int(loop[i]), int(loop[(i + 1) % n])
                raw.append((min(a, b), max(a, b)))
        keys = sorted(set(raw))
        edge_ids = {k: i for i, k in enumerate(keys)}
        self.edges = np.array(keys, dtype=np.int64).reshape(-1, 2)
        ne = len(keys)
        self.edge_cells = -np.ones((ne, 2), dtype=np.int64)  # (left, right)
        self.cell_edges: List[np.ndarray] = []
        self.cell_edge_signs: List[np.ndarray] = []
        for c, loop in enumerate(self.cells):
            n = len(loop)
            eids = np.empty(n, dtype=np.int64)
            sgn = np.empty(n, dtype=np.int64)
            for i in range(n):
                a, b = int(loop[i]), int(loop[(i + 1) % n])
                e = edge_ids[(min(a, b), max(a, b))]
                eids[i] = e
                sgn[i] = 1 if a < b else -1
                slot = 0 if a < b else 1
                if self.edge_cells[e, slot] != -1:
                    raise MeshError(f"edge {keys[e]} traversed twice in the same direction")
                self.edge_cells[e, slot] = c
            self.cell_edges.append(eids)
            self.cell_edge_signs.append(sgn)

        P0 = self.vertices[self.edges[:, 0]]
        P1 = self.vertices[self.edges[:, 1]]
        d = P1 - P0
        self.edge_lengths = np.hypot(d[:, 0], d[:, 1])
        self.edge_midpoints = 0.5 * (P0 + P1)
        self.edge_tangents = d / self.edge_lengths[:, None]
        self.edge_normals = np.stack([self.edge_tangents[:, 1], -self.edge_tangents[:, 0]], axis=1)
        self.edge_boundary = (self.edge_cells == -1).any(axis=1)

        nc = len(self.cells)
        self.cell_centroids = np.zeros((nc, 2))
        self.cell_areas = np.zeros(nc)
        self.cell_diameters = np.zeros(nc)
        for c in range(nc):
            xT, area, hT = geometric_quantities(self.cell_vertices(c))
            self.cell_centroids[c] = xT
            self.cell_areas[c] = area
            self.cell_diameters[c] = hT
        for arr in (self.edges, self.edge_cells, self.edge_lengths, self.edge_midpoints,
                    self.edge_tangents, self.edge_normals, self.edge_boundary,
                    self.cell_centroids, self.cell_areas, self.cell_diameters):
            arr.setflags(write=False)

    # -- sizes ---------------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def h(self) -> float:
        return float(self.cell_diameters.max())

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_boundary)

    @cached_property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(~self.edge_boundary)

    def cell_vertices(self, c: int) -> np.ndarray:
        return self.vertices[self.cells[c]]

    def edge_adjacent_cells(self, e: int) -> list[int]:
        return [int(c) for c in self.edge_cells[e] if c >= 0]

    def outward_normals(self, c: int) -> np.ndarray:
        return self.cell_edge_signs[c][:, None] * self.edge_normals[self.cell_edges[c]]

    @cached_property
    def kernel_points(self) -> np.ndarray:
        return np.array([kernel_point(self.cell_vertices(c)) for c in range(self.n_cells)])

    def cell_quadrature(self, c: int, degree: int):
        return polygon_quadrature(self.cell_vertices(c), degree, self.kernel_points[c])

    def __repr__(self):
        return f"PolygonalMesh({self.n_vertices} vertices, {self.n_cells} cells, {self.n_edges} edges)"


def build_topology(vertices, cells) -> PolygonalMesh:
    """Validate vertex loops, fix orientation and build a :class:`PolygonalMesh`.

    Clockwise loops are reversed with a warning; duplicated or out-of-range
    vertex indices and self-intersecting loops raise :class:`MeshError`.
    """
    V = np.asarray(vertices, dtype=float)
    if V.ndim != 2 or V.shape[1] != 2:
        raise MeshError("vertices must be an (n, 2) array")
    if not np.all(np.isfinite(V)):
        raise MeshError("non-finite vertex coordinates")
    loops = []
    for c, loop in enumerate(cells):
        loop = [int(i) for i in loop]
        if len(loop) < 3:
            raise MeshError(f"cell {c} has fewer than 3 vertices")
        if any(i < 0 or i >= len(V) for i in loop):
            raise MeshError(f"cell {c} references a vertex index out of range")
        if len(set(loop)) != len(loop):
            raise MeshError(f"cell {c} repeats a vertex")
        P = V[loop]
        if not is_simple(P):
            raise MeshError(f"cell {c} is not a simple polygon")
        a = signed_area(P)
        if a == 0:
            raise MeshError(f"cell {c} has zero area")
        if a < 0:
            warnings.warn(f"cell {c} is clockwise; reversing", stacklevel=2)
            loop = loop[::-1]
        loops.append(loop)
    return PolygonalMesh(V, loops)


# --------------------------------------------------------------------------
# shape regularity
# --------------------------------------------------------------------------

@dataclass
class MeshReport:
    rho: float
    h: float
    edge_ratio: np.ndarray  # per cell: min_e h_e / h_T
    radius_ratio: np.ndarray  # per cell: kernel inradius / h_T
    pass_edge_ratio: bool = field(init=False)
    pass_star_shaped: bool = field(init=False)

    def __post_init__(self):
        self.pass_edge_ratio = bool(np.all(self.edge_ratio >= self.rho))
        self.pass_star_shaped = bool(np.all(self.radius_ratio >= self.rho))

    @property
    def ok(self) -> bool:
        return self.pass_edge_ratio and self.pass_star_shaped

    def summary(self) -> str:
        return (
            f"cells={len(self.edge_ratio)} h={self.h:.6g} rho={self.rho:g}\n"
            f"edge length / diameter min={self.edge_ratio.min():.6g} -> {'pass' if self.pass_edge_ratio else 'FAIL'}\n"
            f"kernel inradius / diameter min={self.radius_ratio.min():.6g} -> "
            f"{'pass' if self.pass_star_shaped else 'FAIL'}"
        )

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "h": self.h,
            "min_edge_ratio": float(self.edge_ratio.min()),
            "min_radius_ratio": float(self.radius_ratio.min()),
            "pass_edge_ratio": self.pass_edge_ratio,
            "pass_star_shaped": self.pass_star_shaped,
        }


def validate_mesh(mesh: PolygonalMesh, rho: float = 0.1) -> MeshReport:
    """Per-cell checks of h_e >= rho h_T and star-shapedness w.r.t. a disk of radius rho h_T."""
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    nc = mesh.n_cells
    edge_ratio = np.empty(nc)
    radius_ratio = np.empty(nc)
    for c in range(nc):
        hT = mesh.cell_diameters[c]
        edge_ratio[c] = mesh.edge_lengths[mesh.cell_edges[c]].min() / hT
        _, r = chebyshev_center(mesh.cell_vertices(c))
        radius_ratio[c] = max(r, 0.0) / hT
    return MeshReport(rho, mesh.h, edge_ratio, radius_ratio)


# --------------------------------------------------------------------------
# .poly2 text format
# --------------------------------------------------------------------------

def _tokens(text: str):
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            yield line.split()


def parse_poly2(text: str) -> PolygonalMesh:
    lines = list(_tokens(text))
    try:
        head = lines[0]
        if head[0] != "poly2" or len(head) != 3:
            raise MeshError("first line must be 'poly2 <num_vertices> <num_cells>'")
        nv, nc = int(head[1]), int(head[2])
        if len(lines) != 1 + nv + nc:
            raise MeshError(f"expected {nv} vertex and {nc} cell lines, found {len(lines) - 1} lines")
        V = np.array([[float(t) for t in ln] for ln in lines[1:1 + nv]])
        if V.shape != (nv, 2):
            raise MeshError("vertex lines must contain exactly two coordinates")
        cells = []
        for ln in lines[1 + nv:]:
            n = int(ln[0])
            if len(ln) != n + 1:
                raise MeshError(f"cell line declares {n} vertices but lists {len(ln) - 1}")
            cells.append([int(t) for t in ln[1:]])
    except (IndexError, ValueError) as exc:
        if isinstance(exc, MeshError):
            raise
        raise MeshError(f"malformed poly2 data: {exc}") from exc
    return build_topology(V, cells)


def read_poly2(path) -> PolygonalMesh:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise MeshError(f"cannot read mesh file {path}: {exc}") from exc
    return parse_poly2(text)


def format_poly2(mesh: PolygonalMesh) -> str:
    out = [f"poly2 {mesh.n_vertices} {mesh.n_cells}"]
    out += [f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    out += [" ".join([str(len(c))] + [str(int(i)) for i in c]) for c in mesh.cells]
    return "\n".join(out) + "\n"


def write_poly2(mesh: PolygonalMesh, path) -> None:
    Path(path).write_text(format_poly2(mesh), encoding="utf-8")
