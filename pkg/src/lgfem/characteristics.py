"""Upwind characteristic map x -> x - w*(x) dt and composite integrals.

The transport velocity w* is a P1 field vanishing on the boundary, so the
map is affine on each element and the composite term
int (u_prev o X1) . phi dx is exactly computable by clipping image
triangles against the mesh ("exact" mode).  A high-order quadrature mode
is kept as an independent oracle and fallback.
"""

import logging

import numpy as np

from . import _kernels
from .fe_space import Field, SpaceMismatchError, basis_values
from .quadrature import physical_points, triangle_rule

log = logging.getLogger(__name__)

STEP_CONDITION_LIMIT = 0.25


class StepConditionError(Exception):
    """The characteristic map is degenerate or leaves the domain."""


class CharMap:
    """Element-wise affine upwind map built from a P1 velocity field."""

    def __init__(self, w_star, dt):
        if w_star.space.degree != 1 or w_star.ncomp != 2:
            raise SpaceMismatchError("w* must be a P1 vector field")
        bdry = w_star.space.dirichlet_mask
        wb = np.abs(w_star.coeffs[:, bdry])
        if wb.size and wb.max() > 1e-10:
            raise ValueError(
                f"w* must vanish on the boundary (max boundary value {wb.max():g})"
            )
        w_star = w_star.copy()
        w_star.coeffs[:, bdry] = 0.0
        self.w_star = w_star
        self.dt = float(dt)
        self.grad_inf = w_star.grad_inf_norm()

        mesh = w_star.space.mesh
        tri = mesh.vertices[mesh.elements]  # (ne, 3, 2)
        wtri = w_star.coeffs.T[mesh.elements]  # (ne, 3, 2)
        img = tri - self.dt * wtri
        d1 = img[:, 1] - img[:, 0]
        d2 = img[:, 2] - img[:, 0]
        self.image_vertices = img
        self.dets = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / mesh.areas

    @property
    def mesh(self):
        return self.w_star.space.mesh

    @property
    def condition_ok(self):
        return self.dt * self.grad_inf <= STEP_CONDITION_LIMIT + 1e-12

    def jacobian_bounds(self):
        """(min det, max det, condition_ok) over all elements."""
        return float(self.dets.min()), float(self.dets.max()), self.condition_ok

    def map_point(self, x):
        """Image x - w*(x) dt, clamped onto the closed domain."""
        x = np.asarray(x, dtype=np.float64)
        e, lam = self.mesh.locate_point(x)
        w = self.w_star.evaluate(e, lam)
        y = x - self.dt * w
        if (
            y[0] < -1e-10
            or y[0] > 1.0 + 1e-10
            or y[1] < -1e-10
            or y[1] > 1.0 + 1e-10
        ):
            raise StepConditionError(f"image {y} of point {x} leaves the domain")
        return np.clip(y, 0.0, 1.0)


def composite_load_vector(cm, u_prev, test_space, mode="exact", quad_degree=None, with_stats=False):
    """Load vector with entries int (u_prev o X1) . phi_i dx.

    mode "exact" clips image triangles against the mesh and integrates
    the polynomial integrand without quadrature error; "quadrature" uses
    a fixed high-order rule with point location of mapped points.
    Returns the flat component-major vector (2 * ndof_test), and a stats
    dict when with_stats is set.
    """
    if u_prev.ncomp != 2:
        raise SpaceMismatchError("u_prev must be a vector field")
    mesh = cm.mesh
    if u_prev.space.mesh is not mesh or test_space.mesh is not mesh:
        raise SpaceMismatchError("u_prev, test space and w* must share a mesh")
    if not cm.condition_ok:
        log.warning(
            "step condition violated: dt*|w*|_{1,inf} = %.3g > 1/4", cm.dt * cm.grad_inf
        )

    if mode == "exact":
        degree = quad_degree if quad_degree is not None else u_prev.space.degree + test_space.degree
        qb, qw = triangle_rule(degree)
        out = np.zeros((2, test_space.num_dofs))
        covered = np.zeros(mesh.num_elements)
        status, detmin, detmax = _kernels.composite_exact_kernel(
            mesh.vertices,
            mesh.elements,
            mesh.areas,
            mesh.h_elem,
            u_prev.space.elem_dofs,
            u_prev.space.degree,
            u_prev.coeffs,
            test_space.elem_dofs,
            test_space.degree,
            cm.w_star.coeffs.T.copy(),
            cm.dt,
            mesh._grid_n,
            mesh._bin_ptr,
            mesh._bin_elems,
            qb,
            qw,
            out,
            covered,
        )
        if status >= 0:
            raise StepConditionError(
                f"degenerate affine map on element {status} (det {cm.dets[status]:g})"
            )
        vec = out.ravel()
        if with_stats:
            defect = np.abs(covered - mesh.areas)
            stats = {
                "det_min": detmin,
                "det_max": detmax,
                "max_area_defect": float(defect.max()),
                "covered_area": covered,
            }
            return vec, stats
        return vec

    if mode != "quadrature":
        raise ValueError(f"unknown composite mode {mode!r}")
    degree = quad_degree if quad_degree is not None else 12
    vec = _composite_quadrature(cm, u_prev, test_space, degree)
    if with_stats:
        return vec, {"det_min": float(cm.dets.min()), "det_max": float(cm.dets.max())}
    return vec


def _composite_quadrature(cm, u_prev, test_space, degree):
    mesh = cm.mesh
    if np.any(cm.dets <= 1e-12):
        bad = int(np.argmin(cm.dets))
        raise StepConditionError(
            f"degenerate affine map on element {bad} (det {cm.dets[bad]:g})"
        )
    qb, qw = triangle_rule(degree)
    phi = basis_values(test_space.degree, qb)  # (nq, nbv)
    tri = mesh.vertices[mesh.elements]
    pts = physical_points(qb, tri)  # (ne, nq, 2)
    # w* is P1 on the element: evaluate locally, then map
    wtri = cm.w_star.coeffs.T[mesh.elements]  # (ne, 3, 2)
    wq = np.einsum("qj,ejk->eqk", qb, wtri)
    mapped = np.clip(pts - cm.dt * wq, 0.0, 1.0)

    out = np.zeros((2, test_space.num_dofs))
    hint = 0
    for e in range(mesh.num_elements):
        dofs = test_space.elem_dofs[e]
        uvals = np.empty((qw.size, 2))
        for q in range(qw.size):
            c, lam = mesh.locate_point(mapped[e, q], hint=hint)
            hint = c
            uvals[q] = u_prev.evaluate(c, lam)
        local = np.einsum("q,qc,qb->cb", qw, uvals, phi) * mesh.areas[e]
        np.add.at(out[0], dofs, local[0])
        np.add.at(out[1], dofs, local[1])
    return out.ravel()
