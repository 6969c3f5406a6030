"""Lagrange spaces, interpolation and field evaluation."""

import numpy as np
import pytest

from lgfem.fe_space import (
    Field,
    FeSpace,
    SpaceMismatchError,
    basis_values,
    lagrange_interpolate,
    project_p2_to_p1_at_vertices,
)
from lgfem.mesh import generate_unit_square_mesh
from lgfem.quadrature import physical_points, triangle_rule


def random_bary(rng, n):
    """Uniform random barycentric triples."""
    u = np.sort(rng.random((n, 2)), axis=1)
    return np.column_stack([u[:, 0], u[:, 1] - u[:, 0], 1.0 - u[:, 1]])


def test_dof_counts(mesh_n2, p1_n2, p2_n2):
    assert p1_n2.num_dofs == mesh_n2.num_vertices
    # Euler: edges = (3*ne + boundary edges) / 2
    n_edges = (3 * mesh_n2.num_elements + 4 * 2) // 2
    assert p2_n2.num_dofs == mesh_n2.num_vertices + n_edges


def test_edge_dofs_shared(p2_n4):
    # every edge-midpoint DOF id appears in either 1 (boundary) or 2 elements
    mid_ids = p2_n4.elem_dofs[:, 3:].ravel()
    nv = p2_n4.mesh.num_vertices
    counts = np.bincount(mid_ids - nv)
    assert set(counts.tolist()) <= {1, 2}
    # node of each midpoint DOF is the average of its edge's endpoints
    for e in range(p2_n4.mesh.num_elements):
        v = p2_n4.mesh.elements[e]
        for i in range(3):
            a, b = v[(i + 1) % 3], v[(i + 2) % 3]
            mid = 0.5 * (p2_n4.mesh.vertices[a] + p2_n4.mesh.vertices[b])
            assert np.allclose(p2_n4.nodes[p2_n4.elem_dofs[e, 3 + i]], mid, atol=1e-15)


def test_dirichlet_mask(p2_n4):
    on_boundary = (
        (p2_n4.nodes[:, 0] < 1e-12)
        | (p2_n4.nodes[:, 0] > 1 - 1e-12)
        | (p2_n4.nodes[:, 1] < 1e-12)
        | (p2_n4.nodes[:, 1] > 1 - 1e-12)
    )
    assert np.array_equal(p2_n4.dirichlet_mask, on_boundary)


def test_partition_of_unity(rng):
    lam = random_bary(rng, 20)
    for k in (1, 2):
        assert np.allclose(basis_values(k, lam).sum(axis=-1), 1.0, atol=1e-13)


def test_interpolate_constant(p1_n4, p2_n4):
    for space in (p1_n4, p2_n4):
        fld = lagrange_interpolate(space, lambda x, y: 3.5 * np.ones_like(x))
        assert np.allclose(fld.coeffs, 3.5)
        e, lam = 0, np.array([0.2, 0.3, 0.5])
        assert fld.evaluate(e, lam) == pytest.approx(3.5, abs=1e-14)
        assert np.allclose(fld.evaluate_gradient(e, lam), 0.0, atol=1e-13)


@pytest.mark.parametrize("k", [1, 2])
def test_polynomial_reproduction(k, rng, mesh_n4):
    space = FeSpace(mesh_n4, k)
    if k == 1:
        poly = lambda x, y: 2.0 - x + 3.0 * y  # noqa: E731
    else:
        poly = lambda x, y: 1.0 + x * y - 2.0 * x**2 + y  # noqa: E731
    fld = lagrange_interpolate(space, poly)
    pts = rng.random((100, 2))
    vals = fld.evaluate_at_points(pts)
    assert np.allclose(vals, poly(pts[:, 0], pts[:, 1]), atol=1e-12)


def test_gradient_examples(mesh_n4):
    p1 = FeSpace(mesh_n4, 1)
    fld = lagrange_interpolate(p1, lambda x, y: x)
    for e in range(mesh_n4.num_elements):
        g = fld.evaluate_gradient(e, np.array([1 / 3, 1 / 3, 1 / 3]))
        assert np.allclose(g, [1.0, 0.0], atol=1e-13)

    p2 = FeSpace(mesh_n4, 2)
    fld2 = lagrange_interpolate(p2, lambda x, y: x**2)
    e, lam = mesh_n4.locate_point((0.3, 0.4))
    g = fld2.evaluate_gradient(e, lam)
    assert np.allclose(g, [0.6, 0.0], atol=1e-12)


def test_interpolation_error_matches_quadrature_oracle():
    """L2 error of the P1 interpolant of a smooth function against a
    brute-force high-order quadrature of |interpolant - f|."""
    mesh = generate_unit_square_mesh(16)
    space = FeSpace(mesh, 1)
    f = lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y)  # noqa: E731
    fld = lagrange_interpolate(space, f)
    # nodal values agree exactly
    assert np.allclose(fld.coeffs[0], f(space.nodes[:, 0], space.nodes[:, 1]), atol=0)

    qb, qw = triangle_rule(16)
    pts = physical_points(qb, mesh.vertices[mesh.elements])
    phi = basis_values(1, qb)
    local = fld.coeffs[0][space.elem_dofs]  # (ne, 3)
    vals = local @ phi.T  # (ne, nq)
    diff2 = (vals - f(pts[..., 0], pts[..., 1])) ** 2
    oracle = np.sqrt(np.einsum("q,eq,e->", qw, diff2, mesh.areas))
    # same quantity with a degree-8 rule
    qb8, qw8 = triangle_rule(8)
    pts8 = physical_points(qb8, mesh.vertices[mesh.elements])
    vals8 = local @ basis_values(1, qb8).T
    approx = np.sqrt(
        np.einsum("q,eq,e->", qw8, (vals8 - f(pts8[..., 0], pts8[..., 1])) ** 2, mesh.areas)
    )
    assert approx == pytest.approx(oracle, rel=1e-10)
    # and the error magnitude is the expected O(h^2)
    assert 1e-4 < oracle < 1e-2


def test_interpolate_rejects_nonfinite(p1_n2):
    with pytest.raises(FloatingPointError):
        lagrange_interpolate(p1_n2, lambda x, y: np.where(x > 0.4, np.inf, 1.0))


def test_vector_interpolation(p2_n4):
    fld = lagrange_interpolate(p2_n4, lambda x, y: (x + y, x - y), ncomp=2)
    assert fld.ncomp == 2
    v = fld.evaluate_at_points(np.array([[0.3, 0.2]]))
    assert np.allclose(v, [[0.5, 0.1]], atol=1e-13)
    with pytest.raises(ValueError):
        lagrange_interpolate(p2_n4, lambda x, y: x + y, ncomp=2)


def test_p2_to_p1_restriction(mesh_n4, p1_n4, p2_n4, rng):
    # a globally linear P2 field restricts without loss
    lin = lagrange_interpolate(p2_n4, lambda x, y: 1.0 + 2.0 * x - y)
    res = project_p2_to_p1_at_vertices(lin, p1_n4)
    pts = rng.random((50, 2))
    assert np.allclose(
        res.evaluate_at_points(pts), lin.evaluate_at_points(pts), atol=1e-14
    )

    # zero vertex values with nonzero midpoints restrict to zero
    bubble = Field.zeros(p2_n4)
    bubble.coeffs[0, mesh_n4.num_vertices:] = 1.0
    assert np.all(project_p2_to_p1_at_vertices(bubble, p1_n4).coeffs == 0.0)

    # random field: vertex coefficients are copied verbatim
    rand = Field(p2_n4, rng.standard_normal((2, p2_n4.num_dofs)))
    out = project_p2_to_p1_at_vertices(rand, p1_n4)
    assert np.array_equal(out.coeffs, rand.coeffs[:, : mesh_n4.num_vertices])

    with pytest.raises(SpaceMismatchError):
        project_p2_to_p1_at_vertices(Field.zeros(p1_n4), p1_n4)


def test_grad_inf_norm_linear_field(p1_n4, p2_n4):
    fld = lagrange_interpolate(p1_n4, lambda x, y: (3.0 * x, 4.0 * y), ncomp=2)
    # gradient is diag(3, 4) everywhere: Frobenius norm 5
    assert fld.grad_inf_norm() == pytest.approx(5.0, abs=1e-12)
    fld2 = lagrange_interpolate(p2_n4, lambda x, y: (3.0 * x, 4.0 * y), ncomp=2)
    assert fld2.grad_inf_norm() == pytest.approx(5.0, abs=1e-12)


def test_p1_interpolation_gradient_stability(rng):
    """The max gradient of the P1 interpolant of a smooth field stays
    within a modest factor of the field's own max gradient."""
    mesh = generate_unit_square_mesh(8)
    p1 = FeSpace(mesh, 1)
    ratios = []
    for _ in range(10):
        a, b = rng.uniform(0.5, 2.0, size=2)
        c = rng.uniform(0.0, 2 * np.pi)
        w = lambda x, y: (  # noqa: E731
            np.sin(a * np.pi * x + c) * np.sin(np.pi * y),
            np.sin(np.pi * x) * np.sin(b * np.pi * y + c),
        )
        wh = lagrange_interpolate(p1, w, ncomp=2)
        # dense sampling of the smooth field's gradient by finite differences
        xs = np.linspace(0.0, 1.0, 201)
        X, Y = np.meshgrid(xs, xs)
        eps = 1e-6
        gx = (np.array(w(X + eps, Y)) - np.array(w(X - eps, Y))) / (2 * eps)
        gy = (np.array(w(X, Y + eps)) - np.array(w(X, Y - eps))) / (2 * eps)
        smooth = float(np.sqrt(gx[0] ** 2 + gx[1] ** 2 + gy[0] ** 2 + gy[1] ** 2).max())
        ratios.append(wh.grad_inf_norm() / smooth)
    # interpolation cannot amplify gradients by much on a shape-regular mesh
    assert max(ratios) < 2.0
    assert min(ratios) > 0.2
