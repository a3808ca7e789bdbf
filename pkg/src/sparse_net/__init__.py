"""Group Lasso and GL+AGL feature selection for analytic feed-forward networks."""

__version__ = "0.1.0"

from .net import NetworkArch, NetworkParams, empirical_risk, forward, gradient
from .penalty import FROZEN, PenaltySpec, adaptive_weights, penalty_value, prox_group
from .optimizer import DivergenceError, FitResult, OptConfig, fit, initialize_params
from .estimators import SelectConfig, fit_gl_agl, fit_group_lasso, grid_select, selected_support
from .data import (
    Dataset, SyntheticConfig, augment_noise_features, gen_synthetic, load_csv, standardize,
    standardize_response, train_test_split,
)
from .harness import compute_metrics, report, run_replicates, selection_frequency

__all__ = [
    "NetworkArch", "NetworkParams", "forward", "empirical_risk", "gradient",
    "FROZEN", "PenaltySpec", "penalty_value", "adaptive_weights", "prox_group",
    "OptConfig", "FitResult", "DivergenceError", "fit", "initialize_params",
    "SelectConfig", "fit_group_lasso", "fit_gl_agl", "grid_select", "selected_support",
    "Dataset", "SyntheticConfig", "gen_synthetic", "load_csv", "augment_noise_features",
    "standardize", "standardize_response", "train_test_split",
    "compute_metrics", "run_replicates", "selection_frequency", "report",
]
