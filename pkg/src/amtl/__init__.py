"""Asynchronous and synchronous solvers for regularized multi-task learning."""

from .data import SyntheticSpec, gen_synthetic, load_csv_dir, save_csv_dir
from .kinds import Clock, LossKind, Mode, Regularizer
from .model import MtlProblem, TaskDataset, objective
from .operators import optimality_residual, recover_w
from .runtime import ComputeModel, DelayModel, RunConfig, run, run_amtl, run_smtl
from .scheduler import StepPolicy
from .trace import RunResult, compare_report, export_csv

__version__ = "0.1.0"
