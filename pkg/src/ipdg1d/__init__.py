"""One-dimensional symmetric interior penalty DG toolkit with C1 reconstructions."""

from .analysis import (
    EocTable,
    InfSupReport,
    WhSpace,
    build_wh_space,
    eoc,
    infsup_constant,
    infsup_sweep,
    infsup_V,
    infsup_W,
    proof_construction_check,
    proof_construction_constants,
    reconstruction_constants,
    ritz_projection_stability,
)
from .dgspace import DgFunction, DgSpace, QuadratureRule, gauss_rule, project_l2
from .exceptions import CoercivityError, NumericalRankError, SkeletonCollisionError
from .forms import (
    AssembledForms,
    NormTriple,
    PenaltyParams,
    assemble_ip,
    assemble_norm_grams,
    check_coercivity,
    coercivity_constant,
    norms_of,
)
from .mesh import Mesh1D, perturbed_mesh, refine, uniform_mesh
from .problems import (
    ErrorRecord,
    ExactSolution,
    ProblemSpec,
    convergence_study,
    exact_solution,
    measure_errors,
    point_source_load,
    point_source_problem,
    sine_problem,
    solve,
)
from .reconstruct import (
    C1Function,
    C1Space,
    averaging_reconstruct,
    bound_ratios,
    operator_matrices,
    orthogonality_residuals,
    ritz_reconstruct,
)

__version__ = "0.1.0"
