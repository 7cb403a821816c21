"""The four discovery algorithms: EHS, HEH, BILIN and LININF."""

from .bilin import BilinearProblem, bilin_objective, build_problem, run_bilin
from .common import (ABSENT, PRESENT, UNKNOWN, AlgorithmConfig, EdgePredictionMatrix,
                     faithfulness_store)
from .ehs import run_ehs
from .heh import run_heh
from .lininf import LinearInference, run_lininf

ALGORITHMS = ("ehs", "heh", "bilin", "lininf")


def run_algorithm(name: str, datasets, config=None, n=None, store=None) -> EdgePredictionMatrix:
    """Dispatch by name; LININF's recorded effects are dropped."""
    name = name.lower()
    if name == "ehs":
        return run_ehs(datasets, config, n)
    if name == "heh":
        return run_heh(datasets, config, n, store)
    if name == "bilin":
        return run_bilin(datasets, config, n, store)
    if name == "lininf":
        return run_lininf(datasets, config, n, store)[0]
    raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")


__all__ = [
    "ABSENT", "ALGORITHMS", "AlgorithmConfig", "BilinearProblem", "EdgePredictionMatrix",
    "LinearInference", "PRESENT", "UNKNOWN", "bilin_objective", "build_problem",
    "faithfulness_store", "run_algorithm", "run_bilin", "run_ehs", "run_heh", "run_lininf",
]
