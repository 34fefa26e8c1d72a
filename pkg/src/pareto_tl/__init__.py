"""Pareto-frontier source data selection for transfer-learning regression."""

from .data import LabeledDataset, apply_scaler, fit_unit_scaler, load_csv
from .distances import DistanceTable, compute_distance_table
from .evaluation import EvalReport, RunStats, TaskSpec, loocv_score, multi_run_median, run_task
from .pareto import exhaustive_search, local_search, pareto_frontier, peel_frontiers

__version__ = "0.1.0"
