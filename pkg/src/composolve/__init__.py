"""First-order solvers and hard instances for ``min f(x) + h(Ax - b)``."""

from .agd import AgdSpec, agd
from .baselines import SingleLoopConfig, run_single_loop
from .cvx import AppaConfig, PerturbConfig, solve_c_appa, solve_c_perturb
from .errors import (DivergenceError, NonConvergenceError, NotStronglyConvexError, ParameterError,
                     UnsupportedError)
from .instances import (ChainMatrix, NcChainInstance, ScChainInstance, append_duplicate_block,
                        build_chain_matrix, make_c_instance, make_nc_instance, make_sc_instance,
                        nc_chain, random_equality_qp, random_nonconvex, sc_chain)
from .io import load_problem, problem_from_dict, problem_to_dict, save_problem
from .measures import check_support, subopt_c, subopt_nc, subopt_sc
from .nc import NcConfig, solve_nc
from .oracles import OracleCounters, Oracles
from .problem import (CompositeProblem, LinearMap, ProxFunction, SmoothObjective, custom_prox,
                      dense_map, euclidean_norm, identity_map, indicator_cone, indicator_nonpositive,
                      indicator_zero, l1_norm, quadratic, validate)
from .prox import SurrogateSpec, h_rho_value, prox_conjugate_scaled
from .sc import ScConfig, solve_sc
from .trace import IterateTrace, SolverReport

__version__ = "0.1.0"
