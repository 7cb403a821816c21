"""Causal discovery of linear cyclic models with latent confounders from overlapping experiments."""

from .algorithms import (ABSENT, ALGORITHMS, PRESENT, UNKNOWN, AlgorithmConfig, EdgePredictionMatrix,
                         run_algorithm, run_bilin, run_ehs, run_heh, run_lininf)
from .experiments import (DataSet, EffectKey, ExperimentSpec, bootstrap_resample, exact_dataset,
                          observed_effects, sample_data)
from .faithfulness import ConstraintStore, EffectZero, ProductZero, derive_constraints
from .identifiability import (is_fully_identifiable, pair_condition_matrix, plan_experiments,
                              spencer_min_experiments)
from .independence import find_minimal_records, partial_correlation
from .linsolve import LinearSystem, solve_determined
from .model import (LinearCyclicModel, check_weak_stability, equilibrium_covariance, manipulate,
                    random_model, total_effects, true_experimental_effect)

__version__ = "0.1.0"

__all__ = [
    "ABSENT", "ALGORITHMS", "AlgorithmConfig", "ConstraintStore", "DataSet", "EdgePredictionMatrix",
    "EffectKey", "EffectZero", "ExperimentSpec", "LinearCyclicModel", "LinearSystem", "PRESENT",
    "ProductZero", "UNKNOWN", "bootstrap_resample", "check_weak_stability", "derive_constraints",
    "equilibrium_covariance", "exact_dataset", "find_minimal_records", "is_fully_identifiable",
    "manipulate", "observed_effects", "pair_condition_matrix", "partial_correlation",
    "plan_experiments", "random_model", "run_algorithm", "run_bilin", "run_ehs", "run_heh",
    "run_lininf", "sample_data", "solve_determined", "spencer_min_experiments", "total_effects",
    "true_experimental_effect",
]
