"""Online radial basis function networks for multi-horizon returns forecasting."""
from ._backend import BACKEND
from .config import ExperimentConfig, load_config, parse_config
from .data import (PricePanel, ReturnSeries, SplitSpec, compute_returns, load_csv, split,
                   synthesize_ar1, synthesize_coefficient_flip, synthesize_jump_diffusion)
from .estimators import EwrlsState, ewrls_init, ewrls_predict, ewrls_run, ewrls_step, ridge_fit
from .evaluation import (EvaluationReport, accuracy, emit_report, evaluate, mse, nmse,
                         two_sample_t_test, wald_test_vs_one)
from .featsel import FeatureSelection, forward_stepwise, select_features, vif
from .pipeline import random_walk_forecast, run_experiment
from .prototypes import PrototypeSet, estimate_covariances, kmeans_fit, online_update
from .rbfmap import feature_vector, rbf_activation
from .rbfnet import LinearModel, RbfNetConfig, RbfNetModel
from .records import CellForecasts, ForecastRecord

__version__ = "0.1.0"
