"""Assembly of the bilinear forms and the saddle-point time-step system.

Matrix entries are exact: every form is integrated with a Gauss rule
matching the polynomial degree of its integrand.  Data terms (forcing)
use a degree-8 rule by default.  Square matrices are accumulated in a
symmetric triplet store (row <= col kept once) and finalized with a
deterministic sorted reduction.
"""

import numpy as np
import scipy.sparse as sp

from .fe_space import SpaceMismatchError, basis_bary_gradients, basis_values, _all_bary_gradients
from .quadrature import physical_points, triangle_rule


class SparseSymMatrix:
    """Symmetric sparse matrix accumulated as upper-triangle triplets."""

    def __init__(self, dim):
        self.dim = dim
        self._rows = []
        self._cols = []
        self._vals = []
        self._csr = None

    def add_triplets(self, rows, cols, vals):
        if self._csr is not None:
            raise RuntimeError("matrix already finalized")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        keep = rows <= cols  # the mirrored lower entries carry the same values
        self._rows.append(rows[keep])
        self._cols.append(cols[keep])
        self._vals.append(vals[keep])

    def finalize(self):
        if self._csr is None:
            rows = np.concatenate(self._rows) if self._rows else np.empty(0, np.int64)
            cols = np.concatenate(self._cols) if self._cols else np.empty(0, np.int64)
            vals = np.concatenate(self._vals) if self._vals else np.empty(0)
            order = np.lexsort((cols, rows))
            rows, cols, vals = rows[order], cols[order], vals[order]
            upper = sp.coo_matrix((vals, (rows, cols)), shape=(self.dim, self.dim)).tocsr()
            upper.sum_duplicates()
            strict = sp.triu(upper, k=1)
            self._upper = upper
            self._csr = (upper + strict.T).tocsr()
            self._rows = self._cols = self._vals = None
        return self

    def to_csr(self):
        """Full symmetric CSR form."""
        self.finalize()
        return self._csr

    def quad_form(self, x):
        return float(x @ (self.to_csr() @ x))

    def dump(self, path):
        """Coordinate text dump 'row col value' of the stored upper triangle."""
        self.finalize()
        coo = self._upper.tocoo()
        with open(path, "w", newline="\n") as fh:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {v:.17g}\n")


def _geometry_tables(space, degree):
    """Common per-rule tables: rule, basis values/gradients, element data."""
    qb, qw = triangle_rule(degree)
    phi = basis_values(space.degree, qb)  # (nq, nb)
    dphi = basis_bary_gradients(space.degree, qb)  # (nq, nb, 3)
    glam = _all_bary_gradients(space.mesh)  # (ne, 3, 2)
    return qb, qw, phi, dphi, glam


def assemble_mass(space):
    """Scalar mass matrix (phi_i, phi_j)."""
    k = space.degree
    _, qw, phi, _, _ = _geometry_tables(space, 2 * k)
    mref = np.einsum("q,qi,qj->ij", qw, phi, phi)
    return _scatter_local(space, space.mesh.areas[:, None, None] * mref[None])


def assemble_stiffness(space):
    """Scalar stiffness matrix (grad phi_i, grad phi_j), without viscosity."""
    k = space.degree
    _, qw, _, dphi, glam = _geometry_tables(space, max(0, 2 * (k - 1)))
    gphi = np.einsum("qbl,elk->eqbk", dphi, glam)
    local = np.einsum("q,eqik,eqjk->eij", qw, gphi, gphi) * space.mesh.areas[:, None, None]
    return _scatter_local(space, local)


def _scatter_local(space, local):
    ne, nb = space.mesh.num_elements, space.local_size
    dofs = space.elem_dofs
    rows = np.broadcast_to(dofs[:, :, None], (ne, nb, nb))
    cols = np.broadcast_to(dofs[:, None, :], (ne, nb, nb))
    mat = SparseSymMatrix(space.num_dofs)
    mat.add_triplets(rows, cols, local)
    return mat.finalize()


def assemble_divergence(vspace, pspace):
    """Rectangular matrix of b(v, q) = -(div v, q).

    Rows are pressure DOFs, columns the 2*n_u vector-velocity DOFs in
    component-major order (column c*n_u + i is phi_i e_c).
    """
    if vspace.mesh is not pspace.mesh:
        raise SpaceMismatchError("velocity and pressure spaces must share a mesh")
    mesh = vspace.mesh
    degree = (vspace.degree - 1) + pspace.degree
    qb, qw = triangle_rule(degree)
    psi = basis_values(pspace.degree, qb)  # (nq, nbp)
    dphi = basis_bary_gradients(vspace.degree, qb)  # (nq, nbv, 3)
    glam = _all_bary_gradients(mesh)
    gphi = np.einsum("qbl,elk->eqbk", dphi, glam)  # (ne, nq, nbv, 2)
    local = -np.einsum("q,qj,eqic->ejci", qw, psi, gphi) * mesh.areas[:, None, None, None]

    ne = mesh.num_elements
    nbp, nbv = pspace.local_size, vspace.local_size
    n_u = vspace.num_dofs
    rows = np.broadcast_to(pspace.elem_dofs[:, :, None, None], (ne, nbp, 2, nbv))
    comp = np.arange(2)[None, None, :, None]
    cols = comp * n_u + np.broadcast_to(vspace.elem_dofs[:, None, None, :], (ne, nbp, 2, nbv))
    return sp.coo_matrix(
        (local.ravel(), (rows.ravel(), cols.ravel())), shape=(pspace.num_dofs, 2 * n_u)
    ).tocsr()


def assemble_stabilization(pspace):
    """Burman pressure stabilization: sum_K h_K^{2k} sum_{|a|=k} (D^a p, D^a q)_K.

    For k=1 the element term is h_K^2 (grad p, grad q)_K; for k=2 it is
    h_K^4 times the sum over the three second-derivative multi-indices,
    each counted once.  Both integrands are constant per element.
    """
    mesh = pspace.mesh
    k = pspace.degree
    glam = _all_bary_gradients(mesh)  # (ne, 3, 2)
    areas = mesh.areas
    hk = mesh.h_elem

    if k == 1:
        local = np.einsum("eik,ejk->eij", glam, glam)
        local *= (hk**2 * areas)[:, None, None]
    else:
        g = glam
        # constant element Hessians of the P2 basis: rows (Dxx, Dxy, Dyy)
        def outer_sym(u, v):
            m = np.einsum("ei,ej->eij", u, v)
            return m + m.transpose(0, 2, 1)

        hess = np.empty((mesh.num_elements, 6, 2, 2))
        for i in range(3):
            hess[:, i] = 4.0 * np.einsum("ei,ej->eij", g[:, i], g[:, i])
        pairs = [(1, 2), (2, 0), (0, 1)]
        for b, (i, j) in enumerate(pairs):
            hess[:, 3 + b] = 4.0 * outer_sym(g[:, i], g[:, j])
        d2 = np.stack([hess[..., 0, 0], hess[..., 0, 1], hess[..., 1, 1]], axis=-1)
        local = np.einsum("eia,eja->eij", d2, d2)
        local *= (hk**4 * areas)[:, None, None]
    return _scatter_local(pspace, local)


def assemble_load(space, f, degree=8):
    """Load vector (f, phi_i) with a high-order rule.

    f(x, y) must be vectorized; scalar-valued f yields shape (ndof,),
    vector-valued f yields the flat component-major vector (2*ndof,).
    """
    mesh = space.mesh
    qb, qw = triangle_rule(degree)
    phi = basis_values(space.degree, qb)  # (nq, nb)
    tri = mesh.vertices[mesh.elements]
    pts = physical_points(qb, tri)  # (ne, nq, 2)
    vals = np.asarray(f(pts[..., 0], pts[..., 1]), dtype=np.float64)
    if vals.ndim == 2:  # scalar
        local = np.einsum("q,eq,qb->eb", qw, vals, phi) * mesh.areas[:, None]
        out = np.zeros(space.num_dofs)
        np.add.at(out, space.elem_dofs.ravel(), local.ravel())
        return out
    # vector: vals shape (2, ne, nq)
    local = np.einsum("q,ceq,qb->ceb", qw, vals, phi) * mesh.areas[None, :, None]
    out = np.zeros((2, space.num_dofs))
    for c in range(2):
        np.add.at(out[c], space.elem_dofs.ravel(), local[c].ravel())
    return out.ravel()


def pressure_mean_vector(pspace):
    """Vector m with m_j = integral of psi_j over the domain."""
    return assemble_load(pspace, lambda x, y: np.ones_like(x), degree=pspace.degree)


class SaddleSystem:
    """Assembled symmetric block system of one time step.

    Unknowns: free vector-velocity DOFs, all pressure DOFs, one scalar
    multiplier enforcing (p, 1) = 0.  Velocity Dirichlet DOFs are
    eliminated symmetrically (homogeneous boundary data).
    """

    def __init__(self, vspace, pspace, nu, dt, delta0, M, A, B, C, mean_vec):
        self.vspace = vspace
        self.pspace = pspace
        self.nu = nu
        self.dt = dt
        self.delta0 = delta0
        n_u = vspace.num_dofs
        free_scalar = ~vspace.dirichlet_mask
        self.free = np.concatenate([np.nonzero(free_scalar)[0], n_u + np.nonzero(free_scalar)[0]])
        self.n_free = self.free.size
        self.n_p = pspace.num_dofs
        self.mean_vec = mean_vec

        K = (M.to_csr() / dt) + nu * A.to_csr()
        Kvec = sp.block_diag([K, K], format="csr")
        Kff = Kvec[self.free][:, self.free]
        Bf = B[:, self.free]
        m = sp.csc_matrix(mean_vec[:, None])
        if delta0 is None:
            pblock = None
        else:
            pblock = -delta0 * C.to_csr()
        self.matrix = sp.bmat(
            [
                [Kff, Bf.T, None],
                [Bf, pblock, m],
                [None, m.T, None],
            ],
            format="csc",
        )

    @property
    def dim(self):
        return self.n_free + self.n_p + 1

    def reduce_rhs(self, velocity_rhs):
        """System right-hand side from the full velocity load vector."""
        rhs = np.zeros(self.dim)
        rhs[: self.n_free] = velocity_rhs[self.free]
        return rhs

    def expand_solution(self, x):
        """Split a system vector into (u coeffs (2, n_u), p coeffs, multiplier)."""
        n_u = self.vspace.num_dofs
        u = np.zeros(2 * n_u)
        u[self.free] = x[: self.n_free]
        p = x[self.n_free : self.n_free + self.n_p]
        return u.reshape(2, n_u), p, float(x[-1])

    def dump(self, path):
        """Coordinate text dump 'row col value' of the full matrix."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", newline="\n") as fh:
            for r, c, v in zip(coo.row[order], coo.col[order], coo.data[order]):
                fh.write(f"{r} {c} {v:.17g}\n")


def build_system(vspace, pspace, nu, dt, delta0=None):
    """Assemble all forms and build the saddle-point system.

    delta0=None selects the Taylor-Hood pairing (no stabilization block);
    equal-order spaces require delta0 > 0.
    """
    if vspace.mesh is not pspace.mesh:
        raise SpaceMismatchError("velocity and pressure spaces must share a mesh")
    equal_order = vspace.degree == pspace.degree
    if equal_order and (delta0 is None or delta0 <= 0):
        raise ValueError("equal-order spaces require a stabilization parameter delta0 > 0")
    if not equal_order:
        if pspace.degree != vspace.degree - 1:
            raise ValueError("pressure degree must be k or k-1")
        if vspace.degree < 2:
            raise ValueError("Taylor-Hood pairing requires velocity degree >= 2")
        if delta0 is not None:
            raise ValueError("delta0 must be omitted for Taylor-Hood spaces")

    M = assemble_mass(vspace)
    A = assemble_stiffness(vspace)
    B = assemble_divergence(vspace, pspace)
    C = assemble_stabilization(pspace) if equal_order else None
    mvec = pressure_mean_vector(pspace)
    return SaddleSystem(vspace, pspace, nu, dt, delta0, M, A, B, C, mvec)
