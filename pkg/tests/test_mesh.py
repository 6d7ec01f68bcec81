import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncvem.mesh import (
    MeshError,
    build_topology,
    format_poly2,
    geometric_quantities,
    kernel_polygon,
    parse_poly2,
    read_poly2,
    validate_mesh,
    write_poly2,
)
from ncvem.meshgen import FAMILIES, builtin_mesh

SQUARE = [[0.0, 0], [1, 0], [1, 1], [0, 1]]


def test_single_square():
    m = build_topology(SQUARE, [[0, 1, 2, 3]])
    assert (m.n_cells, m.n_edges) == (1, 4)
    assert m.edge_boundary.all()
    assert len(m.interior_edges) == 0


def test_two_by_two():
    m = builtin_mesh("quad", 2)
    assert (m.n_cells, m.n_edges, len(m.interior_edges)) == (4, 12, 4)


def test_l_shape():
    V = [[0, 0], [1, 0], [2, 0], [0, 1], [1, 1], [2, 1], [0, 2], [1, 2]]
    cells = [[0, 1, 4, 3], [1, 2, 5, 4], [3, 4, 7, 6]]
    m = build_topology(V, cells)
    assert (m.n_cells, m.n_edges, len(m.interior_edges)) == (3, 10, 2)


def test_geometric_quantities():
    c, a, h = geometric_quantities(np.array(SQUARE))
    assert np.allclose(c, [0.5, 0.5]) and a == 1 and abs(h - math.sqrt(2)) < 1e-15
    c, a, h = geometric_quantities(np.array([[0.0, 0], [1, 0], [0, 1]]))
    assert np.allclose(c, [1 / 3, 1 / 3]) and abs(a - 0.5) < 1e-15 and abs(h - math.sqrt(2)) < 1e-15
    t = np.arange(6) * np.pi / 3
    _, a, h = geometric_quantities(np.c_[np.cos(t), np.sin(t)])
    assert abs(a - 3 * math.sqrt(3) / 2) < 1e-14 and abs(h - 2) < 1e-14


def test_validate_square():
    rep = validate_mesh(build_topology(SQUARE, [[0, 1, 2, 3]]), 0.1)
    assert rep.ok
    assert abs(rep.edge_ratio[0] - 1 / math.sqrt(2)) < 1e-14
    assert abs(rep.radius_ratio[0] - 0.5 / math.sqrt(2)) < 1e-9


def test_validate_sliver_fails_edge_ratio():
    V = [[0, 0], [1, 0], [1, 1e-3], [0, 1e-3]]
    rep = validate_mesh(build_topology(V, [[0, 1, 2, 3]]), 0.1)
    assert not rep.pass_edge_ratio


def test_nonconvex_star_pentagon():
    V = np.array([[0, 0], [2, 0], [2, 2], [1, 0.8], [0, 2]], float)  # reflex vertex at (1, 0.8)
    m = build_topology(V, [[0, 1, 2, 3, 4]])
    rep = validate_mesh(m, 0.1)
    K = kernel_polygon(V)
    assert len(K) >= 3
    assert rep.radius_ratio[0] > 0
    # quadrature through the kernel point integrates the area exactly
    assert abs(m.cell_quadrature(0, 2).weights.sum() - m.cell_areas[0]) < 1e-13


def test_not_star_shaped_rejected():
    # comb-like polygon whose kernel is empty
    V = [[0, 0], [3, 0], [3, 3], [2.9, 3], [2.9, 0.1], [0.1, 0.1], [0.1, 3], [0, 3]]
    with pytest.raises(MeshError):
        m = build_topology(V, [list(range(8))])
        m.kernel_points


@pytest.mark.parametrize("family", FAMILIES)
@pytest.mark.parametrize("n", [1, 2, 5])
def test_mesh_invariants(family, n):
    m = builtin_mesh(family, n)
    assert abs(m.cell_areas.sum() - 1) < 1e-12
    # interior edges: two cells, opposite induced orientation
    for e in m.interior_edges:
        a, b = m.edge_cells[e]
        sa = m.cell_edge_signs[a][list(m.cell_edges[a]).index(e)]
        sb = m.cell_edge_signs[b][list(m.cell_edges[b]).index(e)]
        assert sa == -sb
    for c in range(m.n_cells):
        nrm = m.outward_normals(c) * m.edge_lengths[m.cell_edges[c]][:, None]
        assert np.abs(nrm.sum(axis=0)).max() < 1e-12


def test_canonical_edges_independent_of_cell_order():
    m = builtin_mesh("polygonal-dual", 3)
    perm = np.random.default_rng(3).permutation(m.n_cells)
    m2 = build_topology(m.vertices, [m.cells[i] for i in perm])
    key = lambda mm: sorted(map(tuple, np.c_[mm.edges, mm.edge_lengths, mm.edge_midpoints, mm.edge_normals].round(14)))  # noqa: E731
    assert key(m) == key(m2)


def test_clockwise_loop_is_corrected():
    with pytest.warns(UserWarning):
        m = build_topology(SQUARE, [[3, 2, 1, 0]])
    assert m.cell_areas[0] == 1


@pytest.mark.parametrize(
    "cells",
    [[[0, 1, 2, 3, 0]], [[0, 1, 7]], [[0, 1]], [[0, 2, 1, 3]], [[0, 1, 1, 2]]],
)
def test_bad_cells(cells):
    with pytest.raises(MeshError):
        build_topology(SQUARE, cells)


def test_zero_area_rejected():
    with pytest.raises(MeshError):
        build_topology([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]])


def test_poly2_round_trip(tmp_path):
    m = builtin_mesh("distorted-quad", 3)
    path = tmp_path / "m.poly2"
    write_poly2(m, path)
    m2 = read_poly2(path)
    assert np.array_equal(m.vertices, m2.vertices)
    assert all(np.array_equal(a, b) for a, b in zip(m.cells, m2.cells))
    assert format_poly2(m2) == path.read_text()


@pytest.mark.parametrize(
    "text",
    ["", "poly2 1", "poly3 3 1\n0 0\n1 0\n0 1\n3 0 1 2", "poly2 3 1\n0 0\n1 0\n0 1\n4 0 1 2", "poly2 3 1\n0 0\n1 x\n0 1\n3 0 1 2"],
)
def test_poly2_malformed(text):
    with pytest.raises(MeshError):
        parse_poly2(text)


def test_poly2_comments():
    m = parse_poly2("# unit triangle\npoly2 3 1\n0 0  # origin\n1 0\n0 1\n3 0 1 2\n")
    assert m.n_cells == 1


def test_missing_file():
    with pytest.raises(MeshError):
        read_poly2("/nonexistent/mesh.poly2")


def test_builtin_counts():
    assert builtin_mesh("quad", 2).n_cells == 4
    assert builtin_mesh("tri", 1).n_cells == 4
    with pytest.raises(ValueError):
        builtin_mesh("hex", 2)


@settings(max_examples=8, deadline=None)
@given(n=st.sampled_from([1, 2, 3, 8, 16, 32]), family=st.sampled_from(FAMILIES))
def test_families_pass_regularity(n, family):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        m = builtin_mesh(family, n)
    assert validate_mesh(m, 0.1).ok


@pytest.mark.slow
def test_distorted_quad_regular_up_to_128():
    for n in (64, 128):
        assert validate_mesh(builtin_mesh("distorted-quad", n), 0.1).ok
