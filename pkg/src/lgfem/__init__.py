"""Pressure-stabilized Lagrange-Galerkin solver for transient Oseen and
Navier-Stokes flow on the unit square."""

from .characteristics import CharMap, StepConditionError, composite_load_vector
from .fe_space import FeSpace, Field, lagrange_interpolate, project_p2_to_p1_at_vertices
from .mesh import Mesh, OutOfDomainError, generate_unit_square_mesh
from .metrics import ErrorReport, fit_order, relative_errors
from .problems import ProblemDef, example41, example42
from .scheme import RunConfig, TrajectoryState, check_hypotheses, run, run_collect

__all__ = [
    "CharMap",
    "ErrorReport",
    "FeSpace",
    "Field",
    "Mesh",
    "OutOfDomainError",
    "ProblemDef",
    "RunConfig",
    "StepConditionError",
    "TrajectoryState",
    "check_hypotheses",
    "composite_load_vector",
    "example41",
    "example42",
    "fit_order",
    "generate_unit_square_mesh",
    "lagrange_interpolate",
    "project_p2_to_p1_at_vertices",
    "relative_errors",
    "run",
    "run_collect",
]

__version__ = "0.1.0"
