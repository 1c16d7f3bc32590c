"""Online convex optimization with switching costs under delayed gradients."""

from .adversary import gen_linear_lb, gen_modified, gen_omgd_lb, gen_preliminary, gen_slow
from .bounds import PathStats, path_stats
from .errors import (
    ConstrainedCaseUnsupported,
    InformationViolation,
    InvalidArgument,
    NumericRangeError,
    OcoSwitchError,
    Unsupported,
)
from .offline_opt import (
    OptSolution,
    brute_force_opt,
    closed_form_opt_T2,
    solve_opt,
    solve_opt_linear,
    solve_opt_quadratic,
)
from .online_solvers import (
    SolverSpec,
    compute_k_gd,
    compute_k_nag,
    run_baseline,
    run_nag,
    run_omgd,
    run_solver,
)
from .problem_model import (
    FeasibleSet,
    FunctionModel,
    InfoGate,
    Instance,
    Trajectory,
    gated_grad,
    minimizer,
    project,
)

__version__ = "0.1.0"
