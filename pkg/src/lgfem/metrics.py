"""Discrete-in-time error norms, relative errors and convergence fitting.

The relative errors are measured against the Lagrange interpolant of the
exact solution (the plotted quantities of the experiments); since both
the discrete solution and the interpolant live in the same FE space, the
space integrals reduce to exact mass/stiffness quadratic forms.  Errors
against the exact solution itself are available as a secondary result
via high-order quadrature.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .assembly import assemble_mass, assemble_stiffness
from .fe_space import basis_values, lagrange_interpolate
from .quadrature import physical_points, triangle_rule


@lru_cache(maxsize=64)
def _norm_matrices(space):
    return assemble_mass(space).to_csr(), assemble_stiffness(space).to_csr()


def l2_norm(fld):
    """Exact L2 norm of a discrete field."""
    M, _ = _norm_matrices(fld.space)
    return float(np.sqrt(sum(c @ (M @ c) for c in fld.coeffs)))


def h1_seminorm(fld):
    """Exact H1 seminorm (gradient L2 norm) of a discrete field."""
    _, A = _norm_matrices(fld.space)
    return float(np.sqrt(sum(c @ (A @ c) for c in fld.coeffs)))


def quadrature_l2_error(fld, g, degree=8):
    """L2 distance between a field and a callable g(x, y) by quadrature."""
    mesh = fld.space.mesh
    qb, qw = triangle_rule(degree)
    phi = basis_values(fld.space.degree, qb)  # (nq, nb)
    local = fld.coeffs[:, fld.space.elem_dofs]  # (ncomp, ne, nb)
    vals = np.einsum("ceb,qb->ceq", local, phi)  # (ncomp, ne, nq)
    pts = physical_points(qb, mesh.vertices[mesh.elements])
    gv = np.asarray(g(pts[..., 0], pts[..., 1]), dtype=np.float64)
    if gv.ndim == 2:
        gv = gv[None]
    diff2 = ((vals - gv) ** 2).sum(axis=0)  # (ne, nq)
    return float(np.sqrt(np.einsum("q,eq,e->", qw, diff2, mesh.areas)))


@dataclass
class ErrorReport:
    """Relative errors of one run, plus per-step traces."""

    e_linf_l2_u: float
    e_l2_h1_u: float
    e_l2_l2_p: float
    u_l2_trace: list = field(default_factory=list)
    u_h1_trace: list = field(default_factory=list)
    p_l2_trace: list = field(default_factory=list)
    exact_based: dict = field(default_factory=dict)


def _ratio(num, den):
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


def relative_errors(states, problem, dt, with_exact=False, quad_degree=8):
    """Relative errors E_X over a (streamed) trajectory.

    E_{linf(L2)}(u) runs over steps 0..N_T, the squared-sum norms over
    1..N_T.  The velocity reference is the degree-k interpolant of the
    exact velocity, the pressure reference the interpolant onto the
    discrete pressure space (degree k or k-1 by pairing).
    """
    if problem.exact_u is None or problem.exact_p is None:
        raise ValueError("problem does not define an exact solution")

    num_linf = den_linf = 0.0
    num_h1 = den_h1 = num_p = den_p = 0.0
    ex_num_linf = ex_den_linf = 0.0
    ex_num_p = ex_den_p = 0.0
    u_l2_trace, u_h1_trace, p_l2_trace = [], [], []

    for state in states:
        t = state.t
        vspace = state.u.space
        ref_u = lagrange_interpolate(vspace, lambda x, y: problem.exact_u(x, y, t))
        du = state.u.copy()
        du.coeffs -= ref_u.coeffs
        e_l2 = l2_norm(du)
        r_l2 = l2_norm(ref_u)
        num_linf = max(num_linf, e_l2)
        den_linf = max(den_linf, r_l2)
        u_l2_trace.append(e_l2)

        if with_exact:
            ex_num_linf = max(
                ex_num_linf,
                quadrature_l2_error(state.u, lambda x, y: problem.exact_u(x, y, t), quad_degree),
            )
            zero = state.u.copy()
            zero.coeffs[:] = 0.0
            ex_den_linf = max(
                ex_den_linf,
                quadrature_l2_error(zero, lambda x, y: problem.exact_u(x, y, t), quad_degree),
            )

        if state.n == 0:
            continue
        e_h1 = h1_seminorm(du)
        r_h1 = h1_seminorm(ref_u)
        num_h1 += dt * e_h1**2
        den_h1 += dt * r_h1**2
        u_h1_trace.append(e_h1)

        pspace = state.p.space
        ref_p = lagrange_interpolate(pspace, lambda x, y: problem.exact_p(x, y, t))
        dp = state.p.copy()
        dp.coeffs -= ref_p.coeffs
        ep = l2_norm(dp)
        rp = l2_norm(ref_p)
        num_p += dt * ep**2
        den_p += dt * rp**2
        p_l2_trace.append(ep)

        if with_exact:
            eq = quadrature_l2_error(state.p, lambda x, y: problem.exact_p(x, y, t), quad_degree)
            zero = state.p.copy()
            zero.coeffs[:] = 0.0
            rq = quadrature_l2_error(zero, lambda x, y: problem.exact_p(x, y, t), quad_degree)
            ex_num_p += dt * eq**2
            ex_den_p += dt * rq**2

    report = ErrorReport(
        e_linf_l2_u=_ratio(num_linf, den_linf),
        e_l2_h1_u=_ratio(np.sqrt(num_h1), np.sqrt(den_h1)),
        e_l2_l2_p=_ratio(np.sqrt(num_p), np.sqrt(den_p)),
        u_l2_trace=u_l2_trace,
        u_h1_trace=u_h1_trace,
        p_l2_trace=p_l2_trace,
    )
    if with_exact:
        report.exact_based = {
            "e_linf_l2_u": _ratio(ex_num_linf, ex_den_linf),
            "e_l2_l2_p": _ratio(np.sqrt(ex_num_p), np.sqrt(ex_den_p)),
        }
    return report


def fit_order(h_values, e_values):
    """Least-squares slope of log E versus log h; returns (slope, residual)."""
    h = np.asarray(h_values, dtype=np.float64)
    e = np.asarray(e_values, dtype=np.float64)
    if h.size < 3 or h.size != e.size:
        raise ValueError("need at least 3 matching (h, E) pairs")
    if np.any(h <= 0) or np.any(e <= 0):
        raise ValueError("h and E values must be positive")
    coeffs, res, *_ = np.polyfit(np.log(h), np.log(e), 1, full=True)
    residual = float(np.sqrt(res[0])) if res.size else 0.0
    return float(coeffs[0]), residual
