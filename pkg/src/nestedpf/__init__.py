"""Nested (decentralized) particle filtering with look-ahead proposals and bandit-chosen decompositions."""

from .bandit import Controller, Exp3State, HedgeState, controller_step, prediction_reward
from .dpf import dpf_estimate, dpf_init, dpf_step
from .filters import ALGORITHMS, Filter
from .harness import (
    ConfigError,
    ExperimentConfig,
    bandit_demo,
    compare_suite,
    load_config,
    oracle_check,
    rmse,
    run_experiment,
)
from .kalman import kalman_filter
from .ladpf import ladpf_estimate, ladpf_init, ladpf_step
from .models import (
    Trajectory,
    linear_gaussian_model,
    model1,
    model2,
    simulate_trajectory,
    swap_decomposition,
)
from .pf import pf_estimate, pf_init, pf_step
from .randomness import RngStream, normalize, resample

__version__ = "0.1.0"
