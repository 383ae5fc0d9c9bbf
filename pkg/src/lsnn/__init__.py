"""Least-squares ReLU network solver for linear advection-reaction problems."""

from .estimators import LSNNSolver, ReLUNetRegressor
from .functional import LSObjective, TransportConfig, discrete_ls, ls_ratio
from .metrics import ErrorReport, breaking_lines, make_report
from .network import (NetworkParams, NetworkShape, forward, init_random, load_params,
                      param_count, save_params)
from .optim import TrainSchedule, lr_at, multistart_train
from .problems import PROBLEMS, ProblemSpec, get_problem
from .quadrature import build_domain_mesh, build_inflow_mesh

__version__ = "0.1.0"

__all__ = [
    "LSNNSolver", "ReLUNetRegressor", "LSObjective", "TransportConfig", "discrete_ls",
    "ls_ratio", "ErrorReport", "breaking_lines", "make_report", "NetworkParams",
    "NetworkShape", "forward", "init_random", "load_params", "param_count", "save_params",
    "TrainSchedule", "lr_at", "multistart_train", "PROBLEMS", "ProblemSpec", "get_problem",
    "build_domain_mesh", "build_inflow_mesh",
]
