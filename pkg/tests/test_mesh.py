"""Mesh generation, geometry queries and point location."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lgfem.mesh import Mesh, MeshError, OutOfDomainError, generate_unit_square_mesh


def brute_force_locate(mesh, x):
    """Exhaustive lowest-id containment scan (reference for locate_point)."""
    for e in range(mesh.num_elements):
        lam = mesh.barycentric(e, x)
        if lam.min() >= -1e-12:
            return e
    return None


def two_triangle_mesh():
    """Single unit cell split along one diagonal; all vertices on the boundary."""
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    elems = np.array([[0, 1, 2], [0, 2, 3]])
    return Mesh(verts, elems)


def test_crisscross_counts():
    m = generate_unit_square_mesh(2)
    assert m.num_elements == 16
    assert m.num_vertices == 13
    assert np.sum(m.areas) == pytest.approx(1.0, abs=1e-12)

    m16 = generate_unit_square_mesh(16)
    assert m16.num_elements == 4 * 16 * 16
    assert np.sum(m16.areas) == pytest.approx(1.0, abs=1e-12)


def test_alternating_diagonal_counts():
    m = generate_unit_square_mesh(4, pattern="alternating_diagonal")
    assert m.num_elements == 2 * 16
    assert m.num_vertices == 25
    assert np.sum(m.areas) == pytest.approx(1.0, abs=1e-12)


def test_small_n_rejected():
    with pytest.raises(ValueError):
        generate_unit_square_mesh(1)
    with pytest.raises(ValueError):
        generate_unit_square_mesh(4, pattern="nosuch")


def test_positive_areas_and_h():
    for pattern in ("crisscross", "alternating_diagonal"):
        m = generate_unit_square_mesh(5, pattern)
        assert np.all(m.areas > 0)
        # h_elem is the longest edge of each element
        tri = m.vertices[m.elements]
        edges = np.linalg.norm(tri - tri[:, [1, 2, 0], :], axis=2)
        assert np.allclose(m.h_elem, edges.max(axis=1), atol=1e-15)
        assert m.h == pytest.approx(m.h_elem.max())


def test_neighbor_symmetry():
    m = generate_unit_square_mesh(3)
    for e in range(m.num_elements):
        for i in range(3):
            nb = m.neighbors[e, i]
            if nb >= 0:
                assert e in m.neighbors[nb]
                # shared edge = the two vertices of e other than local vertex i
                shared = {m.elements[e, (i + 1) % 3], m.elements[e, (i + 2) % 3]}
                assert shared < set(m.elements[nb])


def test_nonconforming_mesh_rejected():
    # hanging node: vertex 4 sits mid-edge of element 0's hypotenuse
    verts = np.array(
        [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]
    )
    elems = np.array([[0, 1, 2], [0, 4, 3], [4, 2, 3]])
    with pytest.raises(MeshError):
        Mesh(verts, elems)


def test_flipped_element_rejected():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshError):
        Mesh(verts, np.array([[0, 2, 1]]))


def test_internal_vertex_check():
    ok, bad = two_triangle_mesh().check_internal_vertex_hypothesis()
    assert not ok
    assert bad == [0, 1]

    ok, bad = generate_unit_square_mesh(2).check_internal_vertex_hypothesis()
    assert ok and bad == []

    for n in (2, 3, 5, 8):
        ok, _ = generate_unit_square_mesh(n).check_internal_vertex_hypothesis()
        assert ok

    # reported either way for the diagonal pattern; corner cells fail
    ok, bad = generate_unit_square_mesh(
        16, pattern="alternating_diagonal"
    ).check_internal_vertex_hypothesis()
    assert isinstance(ok, bool) and isinstance(bad, list)


def test_locate_centroid():
    m = generate_unit_square_mesh(4)
    for e in (0, 7, 31):
        c = m.vertices[m.elements[e]].mean(axis=0)
        found, lam = m.locate_point(c)
        assert found == e
        assert np.allclose(lam, 1.0 / 3.0, atol=1e-12)


def test_locate_lowest_id_tie_break():
    m = generate_unit_square_mesh(4)
    # every interior vertex is shared by several elements
    for v in np.nonzero(~m.boundary_vertex)[0]:
        sharing = sorted(np.nonzero((m.elements == v).any(axis=1))[0])
        e, lam = m.locate_point(m.vertices[v])
        assert e == sharing[0]
        assert lam.min() >= -1e-12
    # edge midpoints shared by exactly two elements
    e, _ = m.locate_point((0.5, 0.125))  # interior edge of the first column
    assert e == brute_force_locate(m, np.array([0.5, 0.125]))


def test_locate_matches_brute_force(rng):
    for pattern in ("crisscross", "alternating_diagonal"):
        m = generate_unit_square_mesh(8, pattern)
        pts = rng.random((1000, 2))
        hint = None
        for x in pts:
            e, lam = m.locate_point(x, hint=hint)
            hint = e
            assert lam.min() >= -1e-12
            assert np.allclose(m.vertices[m.elements[e]].T @ lam, x, atol=1e-12)
            if lam.min() > 1e-12:  # strictly interior: unique answer
                assert e == brute_force_locate(m, x)


def test_locate_clamps_and_rejects():
    m = generate_unit_square_mesh(4)
    e, lam = m.locate_point((-5e-11, 0.3))  # inside tolerance: clamped
    assert lam.min() >= -1e-12
    x = m.vertices[m.elements[e]].T @ lam
    assert x[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(OutOfDomainError):
        m.locate_point((-1e-9, 0.3))
    with pytest.raises(OutOfDomainError):
        m.locate_point((0.4, 1.0 + 1e-9))


@settings(max_examples=60, deadline=None)
@given(
    x=st.floats(0.0, 1.0, allow_nan=False),
    y=st.floats(0.0, 1.0, allow_nan=False),
    hint=st.integers(0, 63),
)
def test_locate_always_contains(x, y, hint):
    m = generate_unit_square_mesh(4)
    e, lam = m.locate_point((x, y), hint=hint)
    assert 0 <= e < m.num_elements
    assert lam.min() >= -1e-12
    assert lam.sum() == pytest.approx(1.0, abs=1e-12)


def test_dump_load_roundtrip(tmp_path):
    m = generate_unit_square_mesh(3)
    path = tmp_path / "mesh.txt"
    m.dump(path)
    lines = path.read_text().splitlines()
    nv, ne = map(int, lines[0].split())
    assert (nv, ne) == (m.num_vertices, m.num_elements)
    assert len(lines) == 1 + nv + ne
    m2 = Mesh.load(path)
    assert np.array_equal(m2.vertices, m.vertices)
    assert np.array_equal(m2.elements, m.elements)
    assert np.array_equal(m2.boundary_vertex, m.boundary_vertex)
