"""Direct meshless local Petrov-Galerkin solvers for transient heat conduction."""

from .assembly import (
    Method,
    SemiDiscreteSystem,
    SolverConfig,
    Trajectory,
    assemble,
    postprocess,
    solve_method_of_lines,
    solve_steady,
    step_backward_euler,
    step_crank_nicolson,
    step_theta,
)
from .basis import PolyBasis
from .gmls import WeightConfig, build_stencil, solve_coefficients
from .nodes import DomainSpec, NodeSet, Shape, Tag, clip_subdomain, make_regular_grid
from .problems import (
    FgmParams,
    convergence_study,
    fgm_problem,
    fgm_series_solution,
    fgm_steady_state,
    manufactured_problem,
    test_problem,
    timing_study,
)
from .weakforms import HeatProblem, QuadConfig

__version__ = "0.1.0"

__all__ = [
    "DomainSpec",
    "FgmParams",
    "HeatProblem",
    "Method",
    "NodeSet",
    "PolyBasis",
    "QuadConfig",
    "SemiDiscreteSystem",
    "Shape",
    "SolverConfig",
    "Tag",
    "Trajectory",
    "WeightConfig",
    "assemble",
    "build_stencil",
    "clip_subdomain",
    "convergence_study",
    "fgm_problem",
    "fgm_series_solution",
    "fgm_steady_state",
    "make_regular_grid",
    "manufactured_problem",
    "postprocess",
    "solve_coefficients",
    "solve_method_of_lines",
    "solve_steady",
    "step_backward_euler",
    "step_crank_nicolson",
    "step_theta",
    "test_problem",
    "timing_study",
]
