"""Built-in mesh families on the unit square."""
from __future__ import annotations

import math

import numpy as np

from .mesh import PolygonalMesh, build_topology

FAMILIES = ("quad", "tri", "distorted-quad", "polygonal-dual")

DISTORTION_SEED = 20160427


def _grid(n: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(t, t, indexing="xy")
    return np.stack([X.ravel(), Y.ravel()], axis=1)


def _vid(i: int, j: int, n: int) -> int:
    return j * (n + 1) + i


def quad_mesh(n: int) -> PolygonalMesh:
    """n x n uniform squares."""
    cells = [
        [_vid(i, j, n), _vid(i + 1, j, n), _vid(i + 1, j + 1, n), _vid(i, j + 1, n)]
        for j in range(n)
        for i in range(n)
    ]
    return build_topology(_grid(n), cells)


def distorted_quad_mesh(n: int, amplitude: float = 0.2, seed: int = DISTORTION_SEED) -> PolygonalMesh:
    """Quad mesh with interior vertices moved by up to ``amplitude * h`` per coordinate."""
    V = _grid(n)
    h = 1.0 / n
    rng = np.random.default_rng(seed)
    shift = rng.uniform(-amplitude * h, amplitude * h, size=V.shape)
    interior = (V[:, 0] > 0) & (V[:, 0] < 1) & (V[:, 1] > 0) & (V[:, 1] < 1)
    V[interior] += shift[interior]
    cells = [
        [_vid(i, j, n), _vid(i + 1, j, n), _vid(i + 1, j + 1, n), _vid(i, j + 1, n)]
        for j in range(n)
        for i in range(n)
    ]
    return build_topology(V, cells)


def _crisscross(n: int):
    V = list(_grid(n))
    tris = []
    for j in range(n):
        for i in range(n):
            a, b = _vid(i, j, n), _vid(i + 1, j, n)
            c, d = _vid(i + 1, j + 1, n), _vid(i, j + 1, n)
            m = len(V)
            V.append([(i + 0.5) / n, (j + 0.5) / n])
            tris += [[a, b, m], [b, c, m], [c, d, m], [d, a, m]]
    return np.array(V), tris


def tri_mesh(n: int) -> PolygonalMesh:
    """Crisscross triangulation: each square split into 4 by its center."""
    V, tris = _crisscross(n)
    return build_topology(V, tris)


def polygonal_dual_mesh(n: int) -> PolygonalMesh:
    """Centroid dual of the crisscross triangulation.

    Interior vertices of the triangulation become polygons joining the
    surrounding triangle centroids; boundary vertices additionally use the
    midpoints of their boundary edges and the vertex itself.
    """
    V, tris = _crisscross(n)
    tris = np.array(tris)
    cent = V[tris].mean(axis=1)
    on_bnd = lambda p: min(p[0], p[1], 1 - p[0], 1 - p[1]) < 1e-12  # noqa: E731

    verts: list = []
    index: dict = {}

    def add(p):
        key = (round(p[0] * 1e12), round(p[1] * 1e12))
        if key not in index:
            index[key] = len(verts)
            verts.append([float(p[0]), float(p[1])])
        return index[key]

    cells = []
    for v in range(len(V)):
        p = V[v]
        around = np.flatnonzero((tris == v).any(axis=1))
        ang = [math.atan2(*(cent[t] - p)[::-1]) for t in around]
        ring = [add(cent[t]) for t in around[np.argsort(ang)]]
        if not on_bnd(p):
            cells.append(ring)
            continue
        # boundary vertex: the ring of centroids spans an angular gap that
        # faces outward; close it through the boundary-edge midpoints and p
        pts = np.array([verts[i] for i in ring])
        a = np.arctan2(pts[:, 1] - p[1], pts[:, 0] - p[0])
        order = np.argsort(a)
        a = a[order]
        ring = [ring[i] for i in order]
        gaps = np.diff(np.concatenate([a, [a[0] + 2 * math.pi]]))
        g = int(np.argmax(gaps))
        ring = ring[g + 1:] + ring[:g + 1]  # starts after the outward gap
        nbrs = set()
        for t in around:
            for w in tris[t]:
                if w != v and on_bnd(V[w]) and _shares_boundary_line(p, V[w]):
                    nbrs.add(int(w))
        mids = [0.5 * (p + V[w]) for w in sorted(nbrs)]
        a_first = a[(g + 1) % len(a)]
        # m_in sits just clockwise of the first centroid, m_out just past the last
        back = [(a_first - math.atan2(m[1] - p[1], m[0] - p[0])) % (2 * math.pi) for m in mids]
        m_in = mids[int(np.argmin(back))]
        m_out = mids[int(np.argmax(back))]
        cells.append([add(m_in)] + ring + [add(m_out), add(p)])
    return build_topology(np.array(verts), cells)


def _shares_boundary_line(p, q) -> bool:
    for k in (0, 1):
        for val in (0.0, 1.0):
            if abs(p[k] - val) < 1e-12 and abs(q[k] - val) < 1e-12:
                return True
    return False


def builtin_mesh(family: str, n: int) -> PolygonalMesh:
    if n < 1:
        raise ValueError("resolution n must be >= 1")
    if family == "quad":
        return quad_mesh(n)
    if family == "tri":
        return tri_mesh(n)
    if family == "distorted-quad":
        return distorted_quad_mesh(n)
    if family == "polygonal-dual":
        return polygonal_dual_mesh(n)
    raise ValueError(f"unknown mesh family {family!r}; expected one of {FAMILIES}")
