"""Time-stepping drivers for the four Lagrange-Galerkin schemes.

Variants: Oseen or Navier-Stokes convection, each with either the
Taylor-Hood P_k/P_{k-1} pairing or the equal-order P_k/P_k pairing with
pressure stabilization.  The system matrix is assembled and factorized
once per run; only the right-hand side changes between steps (the
nonlinearity of the Navier-Stokes variants sits entirely in the upwind
map).
"""

import logging
import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import linsolve
from .assembly import assemble_load, build_system
from .characteristics import CharMap, StepConditionError, composite_load_vector
from .fe_space import FeSpace, Field, lagrange_interpolate, project_p2_to_p1_at_vertices
from .mesh import generate_unit_square_mesh
from .metrics import quadrature_l2_error

log = logging.getLogger(__name__)

SCHEMES = ("O_TH", "O_PS", "NS_TH", "NS_PS")


@dataclass
class RunConfig:
    scheme: str
    N: int
    dt: float
    T: float
    nu: float
    k: int = 2
    delta0: Optional[float] = None
    pattern: str = "crisscross"
    composite_mode: str = "exact"
    solver: str = "direct"
    rhs_quad_degree: int = 8
    strict: bool = False
    verbose: bool = False

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.k not in (1, 2):
            raise ValueError("k must be 1 or 2")
        if self.is_taylor_hood and self.k < 2:
            raise ValueError("Taylor-Hood pairing requires k >= 2")
        if self.is_stabilized:
            if self.delta0 is None or self.delta0 <= 0:
                raise ValueError("stabilized schemes require delta0 > 0")
        elif self.delta0 is not None:
            raise ValueError("delta0 applies only to stabilized schemes")
        if not (0.0 < self.nu <= 1.0):
            raise ValueError("viscosity must lie in (0, 1]")
        if self.dt <= 0 or self.T <= 0 or self.num_steps < 1:
            raise ValueError("need floor(T / dt) >= 1")

    @property
    def is_navier_stokes(self):
        return self.scheme.startswith("NS")

    @property
    def is_stabilized(self):
        return self.scheme.endswith("PS")

    @property
    def is_taylor_hood(self):
        return self.scheme.endswith("TH")

    @property
    def num_steps(self):
        return int(math.floor(self.T / self.dt + 1e-12))

    @property
    def pressure_degree(self):
        return self.k if self.is_stabilized else self.k - 1


@dataclass
class TrajectoryState:
    n: int
    t: float
    u: Field
    p: Field
    diagnostics: dict = dc_field(default_factory=dict)


def _interpolate_velocity(space, g):
    fld = lagrange_interpolate(space, g, ncomp=2)
    fld.coeffs[:, space.dirichlet_mask] = 0.0  # homogeneous boundary, exactly
    return fld


def run(config, problem, mesh=None):
    """Generator of TrajectoryState for n = 0..N_T."""
    if mesh is None:
        mesh = generate_unit_square_mesh(config.N, config.pattern)
    if not config.is_navier_stokes and problem.w is None:
        raise ValueError("Oseen schemes need a convection field w on the problem")

    vspace = FeSpace(mesh, config.k)
    pspace = FeSpace(mesh, config.pressure_degree)
    p1space = vspace if config.k == 1 else FeSpace(mesh, 1)
    system = build_system(
        vspace, pspace, config.nu, config.dt,
        config.delta0 if config.is_stabilized else None,
    )

    u_prev = _interpolate_velocity(vspace, lambda x, y: problem.u0(x, y))
    yield TrajectoryState(0, 0.0, u_prev, Field.zeros(pspace))

    dt = config.dt
    for n in range(1, config.num_steps + 1):
        t = n * dt
        t_prev = t - dt
        if config.is_navier_stokes:
            if config.k == 1:
                w_star = u_prev.copy()
            else:
                w_star = project_p2_to_p1_at_vertices(u_prev, p1space)
        else:
            w_star = _interpolate_velocity(
                p1space, lambda x, y: problem.w(x, y, t_prev)
            )
        w_star.coeffs[:, p1space.dirichlet_mask] = 0.0

        cm = CharMap(w_star, dt)
        if not cm.condition_ok:
            msg = (
                f"step {n}: dt*|w*|_1,inf = {dt * cm.grad_inf:.3g} "
                f"violates the step condition (<= 1/4)"
            )
            if config.strict:
                raise StepConditionError(msg)
            log.warning(msg)

        composite = composite_load_vector(
            cm, u_prev, vspace, mode=config.composite_mode
        )
        load = assemble_load(
            vspace, lambda x, y: problem.f(x, y, t), degree=config.rhs_quad_degree
        )
        rhs = system.reduce_rhs(load + composite / dt)
        try:
            x, stats = linsolve.solve(system, rhs, reuse=True, method=config.solver)
        except linsolve.SolverFailure as exc:
            raise linsolve.SolverFailure(f"solver failed at step {n}: {exc}") from exc

        u_coeffs, p_coeffs, _mult = system.expand_solution(x)
        u = Field(vspace, u_coeffs)
        p = Field(pspace, p_coeffs[None, :])
        det_min, det_max, cond_ok = cm.jacobian_bounds()
        diag = {
            "det_min": det_min,
            "det_max": det_max,
            "step_condition_ok": cond_ok,
            "dt_grad_inf": dt * cm.grad_inf,
            "solver": stats,
            "pressure_mean": float(system.mean_vec @ p_coeffs),
        }
        if config.verbose:
            log.info(
                "step %d t=%.6g residual=%.3g det=[%.4g, %.4g]",
                n, t, stats.rel_residual, det_min, det_max,
            )
        yield TrajectoryState(n, t, u, p, diag)
        u_prev = u


def run_collect(config, problem, mesh=None):
    """Run and keep all states in memory (small problems only)."""
    return list(run(config, problem, mesh))


def check_hypotheses(config, problem, mesh=None):
    """Informational checks on the time step, the mesh and the initial value.

    Reports (i) the measured step-condition quantity dt*|P1-interpolated
    initial convection|_{1,inf} against 1/4, (ii) the internal-vertex
    mesh check and (iii) the initial interpolation error |u_h^0 - u^0|_L2.
    """
    if mesh is None:
        mesh = generate_unit_square_mesh(config.N, config.pattern)
    p1space = FeSpace(mesh, 1)
    vspace = FeSpace(mesh, config.k)

    if config.is_navier_stokes or problem.w is None:
        w0 = lambda x, y: problem.u0(x, y)  # noqa: E731
    else:
        w0 = lambda x, y: problem.w(x, y, 0.0)  # noqa: E731
    w_star = _interpolate_velocity(p1space, w0)
    measured = config.dt * w_star.grad_inf_norm()

    ok_mesh, bad_elems = mesh.check_internal_vertex_hypothesis()
    u_h0 = _interpolate_velocity(vspace, lambda x, y: problem.u0(x, y))
    init_err = quadrature_l2_error(u_h0, lambda x, y: problem.u0(x, y), degree=8)

    return {
        "dt_grad_inf": measured,
        "step_condition_ok": measured <= 0.25 + 1e-12,
        "internal_vertex_ok": ok_mesh,
        "violating_elements": bad_elems,
        "initial_interpolation_error": init_err,
    }
