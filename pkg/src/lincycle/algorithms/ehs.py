"""Baseline without faithfulness: linear constraints on the total effects."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from ..experiments import DataSet, EffectKey, observed_effects, total_key
from ..linsolve import LinearSystem, solve_determined
from .common import AlgorithmConfig, EdgePredictionMatrix, universe_names, universe_size


def total_effect_rows(datasets: Sequence[DataSet]) -> LinearSystem:
    """One row per (data set, intervened ``x_i``, observed ``x_u``).

    Unknowns are the single-intervention effects ``t(x_i ~> x_j || {x_i})``::

        t(i~>u) - sum_{j in J \\ i} t(i~>j) t(j~>u || J) = t(i~>u || J)
    """
    system = LinearSystem()
    for d in datasets:
        eff = observed_effects(d)
        J = d.spec.J
        for i in sorted(J):
            for u in sorted(d.spec.U):
                coefs = {total_key(i, u): 1.0}
                for j in sorted(J - {i}):
                    coefs[total_key(i, j)] = coefs.get(total_key(i, j), 0.0) - eff[EffectKey(j, u, J)]
                system.add_row(coefs, eff[EffectKey(i, u, J)])
    return system


def direct_from_single_effects(E: np.ndarray) -> np.ndarray:
    """Recover ``B`` from ``E[j, i] = t(x_i ~> x_j || {x_i})`` (unit diagonal).

    ``E`` equals ``(I - B)^-1`` up to a column scaling, so ``E^-1`` equals
    ``I - B`` up to a row scaling fixed by the unit diagonal of ``I - B``.
    """
    M = np.linalg.inv(E)
    M = M / np.diag(M)[:, None]
    B = np.eye(E.shape[0]) - M
    np.fill_diagonal(B, 0.0)
    return B


def run_ehs(datasets: Sequence[DataSet], config: Optional[AlgorithmConfig] = None,
            n: Optional[int] = None) -> EdgePredictionMatrix:
    n = universe_size(datasets, n)
    config = config or AlgorithmConfig.for_datasets(datasets)
    pred = EdgePredictionMatrix(n, universe_names(datasets, n))
    system = total_effect_rows(datasets)
    if len(system) == 0:
        return pred
    report = solve_determined(system, config.det_tol, config.rank_rtol)

    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    if all(report.determined.get(total_key(i, j), False) for i, j in pairs):
        E = np.eye(n)
        for i, j in pairs:
            E[j, i] = report.solution[total_key(i, j)]
        B = direct_from_single_effects(E)
        for i, j in pairs:
            pred.classify(i, j, B[j, i], config.zero_tol)
        return pred

    # partial identification: only direct effects measured outright
    for d in datasets:
        if len(d.spec.J) != n - 1:
            continue
        for key, v in observed_effects(d).items():
            pred.classify(key.source, key.target, v, config.zero_tol)
    return pred
