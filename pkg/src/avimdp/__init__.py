"""Accelerated value iteration for average-cost Markov decision processes."""

from .accel import Accel, AccelStep, linear_extension_step, projective_step
from .discounted import (
    BoundsInterval,
    lambda_bounds_from_discounted,
    reduce_to_discounted,
    solve_discounted,
)
from .errors import (
    AviError,
    BracketError,
    InputError,
    MdpParseError,
    MdpValidationError,
    NonConvergenceError,
    PreconditionError,
    StructuralError,
)
from .fileformat import load_mdp, parse_mdp, save_mdp, serialize_mdp
from .inner import InnerConfig, solve_ssp
from .model import (
    Action,
    GeneratorSpec,
    MdpModel,
    ValidationReport,
    generate_random_mdp,
    validate_mdp,
)
from .oracle import brute_force_lambda_star, evaluate_policy, hitting_time_bound
from .solvers import (
    Algorithm,
    Solution,
    SolverConfig,
    choose_lambda0,
    solve,
    solve_bertsekas,
    solve_gavi1,
    solve_gavi2,
    solve_gavi3,
)
from .ssp import SspModel, Sweep, apply_T, apply_T_gs, build_ssp, in_H

__version__ = "0.1.0"
