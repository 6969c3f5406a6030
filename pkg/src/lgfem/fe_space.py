"""Degree-k Lagrange finite element spaces (k = 1, 2) and discrete fields.

DOF layout: for k=1 the global DOFs coincide with mesh vertices; for k=2
the first nv DOFs are the vertices followed by one DOF per edge midpoint
(edges keyed by sorted vertex pair, numbered in first-encounter order over
elements, which is deterministic).  Local DOF order on an element is
(v0, v1, v2) for k=1 and (v0, v1, v2, m12, m20, m01) for k=2, where m_jk
is the midpoint of the edge opposite the remaining vertex.
"""

import numpy as np

from .quadrature import triangle_rule


class SpaceMismatchError(Exception):
    """Operation mixing fields/spaces over different meshes or degrees."""


def basis_values(k, lam):
    """Values of the local Lagrange basis at barycentric points.

    lam: (..., 3).  Returns (..., nb) with nb = 3 (k=1) or 6 (k=2).
    """
    lam = np.asarray(lam, dtype=np.float64)
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    if k == 1:
        return np.stack([l0, l1, l2], axis=-1)
    if k == 2:
        return np.stack(
            [
                l0 * (2.0 * l0 - 1.0),
                l1 * (2.0 * l1 - 1.0),
                l2 * (2.0 * l2 - 1.0),
                4.0 * l1 * l2,
                4.0 * l2 * l0,
                4.0 * l0 * l1,
            ],
            axis=-1,
        )
    raise ValueError(f"unsupported degree {k}")


def basis_bary_gradients(k, lam):
    """d(phi_i)/d(lam_j) at barycentric points: shape (..., nb, 3)."""
    lam = np.asarray(lam, dtype=np.float64)
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    z = np.zeros_like(l0)
    o = np.ones_like(l0)
    if k == 1:
        rows = [
            [o, z, z],
            [z, o, z],
            [z, z, o],
        ]
    elif k == 2:
        rows = [
            [4.0 * l0 - 1.0, z, z],
            [z, 4.0 * l1 - 1.0, z],
            [z, z, 4.0 * l2 - 1.0],
            [z, 4.0 * l2, 4.0 * l1],
            [4.0 * l2, z, 4.0 * l0],
            [4.0 * l1, 4.0 * l0, z],
        ]
    else:
        raise ValueError(f"unsupported degree {k}")
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


class FeSpace:
    """Scalar Lagrange space descriptor on a mesh."""

    def __init__(self, mesh, degree):
        if degree not in (1, 2):
            raise ValueError(f"degree must be 1 or 2, got {degree}")
        self.mesh = mesh
        self.degree = degree
        nv = mesh.num_vertices
        ne = mesh.num_elements

        if degree == 1:
            self.elem_dofs = mesh.elements.copy()
            self.nodes = mesh.vertices.copy()
        else:
            edge_ids = {}
            elem_dofs = np.empty((ne, 6), dtype=np.int64)
            elem_dofs[:, :3] = mesh.elements
            mids = []
            for e in range(ne):
                v = mesh.elements[e]
                for i in range(3):
                    a, b = v[(i + 1) % 3], v[(i + 2) % 3]
                    key = (min(a, b), max(a, b))
                    d = edge_ids.get(key)
                    if d is None:
                        d = nv + len(edge_ids)
                        edge_ids[key] = d
                        mids.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
                    elem_dofs[e, 3 + i] = d
            self.elem_dofs = elem_dofs
            self.nodes = np.vstack([mesh.vertices, np.array(mids)])

        x, y = self.nodes[:, 0], self.nodes[:, 1]
        tol = 1e-12
        self.dirichlet_mask = (
            (np.abs(x) <= tol)
            | (np.abs(x - 1.0) <= tol)
            | (np.abs(y) <= tol)
            | (np.abs(y - 1.0) <= tol)
        )
        self.elem_dofs.setflags(write=False)
        self.nodes.setflags(write=False)
        self.dirichlet_mask.setflags(write=False)

    @property
    def num_dofs(self):
        return self.nodes.shape[0]

    @property
    def local_size(self):
        return 3 if self.degree == 1 else 6

    def same_as(self, other):
        return self.mesh is other.mesh and self.degree == other.degree


class Field:
    """Coefficient vector of a discrete function; coeffs shape (ncomp, ndof)."""

    def __init__(self, space, coeffs):
        coeffs = np.atleast_2d(np.asarray(coeffs, dtype=np.float64))
        if coeffs.shape[1] != space.num_dofs or coeffs.shape[0] not in (1, 2):
            raise ValueError(f"coefficient shape {coeffs.shape} does not match space")
        self.space = space
        self.coeffs = coeffs

    @property
    def ncomp(self):
        return self.coeffs.shape[0]

    @staticmethod
    def zeros(space, ncomp=1):
        return Field(space, np.zeros((ncomp, space.num_dofs)))

    def copy(self):
        return Field(self.space, self.coeffs.copy())

    def evaluate(self, elem, lam):
        """Value at barycentric point(s) lam in element elem.

        Returns scalar/(2,) for one point, or (npts,)/(npts, 2) for many.
        """
        phi = basis_values(self.space.degree, lam)
        local = self.coeffs[:, self.space.elem_dofs[elem]]  # (ncomp, nb)
        out = phi @ local.T
        if self.ncomp == 1:
            out = out[..., 0]
        return out

    def evaluate_gradient(self, elem, lam):
        """Gradient at barycentric point(s): (2,) scalar / (2, 2) vector,
        with leading point axes for batched lam.  Row c of the vector
        result is grad of component c."""
        glam = _bary_gradients_phys(self.space.mesh, elem)  # (3, 2)
        dphi = basis_bary_gradients(self.space.degree, lam)  # (..., nb, 3)
        gphi = dphi @ glam  # (..., nb, 2)
        local = self.coeffs[:, self.space.elem_dofs[elem]]  # (ncomp, nb)
        out = np.einsum("cb,...bk->...ck", local, gphi)
        if self.ncomp == 1:
            out = out[..., 0, :]
        return out

    def evaluate_at_points(self, points, hints=None):
        """Evaluate at physical points via point location (convenience)."""
        points = np.atleast_2d(points)
        out = np.empty((points.shape[0], self.ncomp))
        hint = None
        for i, x in enumerate(points):
            if hints is not None:
                hint = hints[i]
            e, lam = self.space.mesh.locate_point(x, hint=hint)
            out[i] = np.atleast_1d(self.evaluate(e, lam))
            hint = e
        return out[:, 0] if self.ncomp == 1 else out

    def grad_inf_norm(self):
        """Max over elements of the Frobenius norm of the gradient,
        sampled at the vertices (exact for k=1; for k=2 the gradient is
        linear, so vertex sampling attains the element max)."""
        mesh = self.space.mesh
        lam = np.eye(3)
        dphi = basis_bary_gradients(self.space.degree, lam)  # (3, nb, 3)
        glam = _all_bary_gradients(mesh)  # (ne, 3, 2)
        gphi = np.einsum("pbl,elk->epbk", dphi, glam)  # (ne, 3, nb, 2)
        local = self.coeffs[:, self.space.elem_dofs]  # (ncomp, ne, nb)
        grads = np.einsum("ceb,epbk->epck", local, gphi)  # (ne, 3, ncomp, 2)
        fro = np.sqrt((grads**2).sum(axis=(2, 3)))
        return float(fro.max())


def _bary_gradients_phys(mesh, elem):
    """Physical gradients of the barycentric coordinates on one element."""
    a, b, c = mesh.vertices[mesh.elements[elem]]
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    g1 = np.array([c[1] - a[1], a[0] - c[0]]) / det
    g2 = np.array([a[1] - b[1], b[0] - a[0]]) / det
    return np.stack([-g1 - g2, g1, g2])


def _all_bary_gradients(mesh):
    """Physical gradients of barycentric coordinates: (ne, 3, 2)."""
    tri = mesh.vertices[mesh.elements]
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (
        c[:, 0] - a[:, 0]
    )
    g1 = np.stack([c[:, 1] - a[:, 1], a[:, 0] - c[:, 0]], axis=1) / det[:, None]
    g2 = np.stack([a[:, 1] - b[:, 1], b[:, 0] - a[:, 0]], axis=1) / det[:, None]
    return np.stack([-g1 - g2, g1, g2], axis=1)


def lagrange_interpolate(space, f, ncomp=None):
    """Nodal Lagrange interpolation of a callable f(x, y).

    f must be vectorized over numpy arrays and return either a scalar
    array (shape (n,)) or a vector pair (shape (2, n) or a 2-tuple of
    arrays).  Returns a Field.
    """
    x, y = space.nodes[:, 0], space.nodes[:, 1]
    vals = np.asarray(f(x, y), dtype=np.float64)
    if vals.ndim == 0:
        vals = np.full((1, space.num_dofs), float(vals))
    elif vals.ndim == 1:
        vals = np.broadcast_to(vals, (space.num_dofs,))[None, :]
    if vals.shape[-1] != space.num_dofs:
        vals = np.broadcast_to(vals[..., None], vals.shape + (space.num_dofs,))
    if ncomp is not None and vals.shape[0] != ncomp:
        raise ValueError(f"expected {ncomp} components, f returned shape {vals.shape}")
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite nodal value in interpolation")
    return Field(space, np.array(vals))


def project_p2_to_p1_at_vertices(field, p1_space):
    """Vertex-value restriction of a P2 field onto the P1 space.

    Equivalent to the nodal P1 interpolant of the field (vertex DOFs of
    the P2 layout come first and coincide with mesh vertices).
    """
    if field.space.degree != 2:
        raise SpaceMismatchError("input field must live on a degree-2 space")
    if p1_space.degree != 1 or p1_space.mesh is not field.space.mesh:
        raise SpaceMismatchError("target must be the degree-1 space on the same mesh")
    nv = field.space.mesh.num_vertices
    return Field(p1_space, field.coeffs[:, :nv].copy())
