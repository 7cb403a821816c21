"""Linear constraints on the direct effects plus within-data-set faithfulness zeros."""

from __future__ import annotations

from typing import Optional, Sequence

from ..experiments import DataSet, EffectKey, direct_key, observed_effects
from ..faithfulness import ConstraintStore
from ..linsolve import LinearSystem, solve_determined
from .common import (AlgorithmConfig, EdgePredictionMatrix, faithfulness_store, universe_names,
                     universe_size)


def _b(i: int, u: int) -> tuple[str, int, int]:
    return ("b", i, u)


def direct_effect_rows(datasets: Sequence[DataSet], n: int) -> LinearSystem:
    """Rows for fully revealed data sets (no hidden variables)::

        t(i~>u || J) = b(i->u) + sum_{j not in J, j != u} t(i~>j || J) b(j->u)
    """
    system = LinearSystem()
    for d in datasets:
        if d.spec.L:
            continue
        eff = observed_effects(d)
        J = d.spec.J
        for i in sorted(J):
            for u in sorted(d.spec.U):
                coefs = {_b(i, u): 1.0}
                for j in sorted(d.spec.U - {u}):
                    coefs[_b(j, u)] = eff[EffectKey(i, j, J)]
                system.add_row(coefs, eff[EffectKey(i, u, J)])
    return system


def run_heh(datasets: Sequence[DataSet], config: Optional[AlgorithmConfig] = None,
            n: Optional[int] = None, store: Optional[ConstraintStore] = None) -> EdgePredictionMatrix:
    n = universe_size(datasets, n)
    config = config or AlgorithmConfig.for_datasets(datasets)
    pred = EdgePredictionMatrix(n, universe_names(datasets, n))
    system = direct_effect_rows(datasets, n)
    store = store if store is not None else faithfulness_store(datasets, config)
    for i in range(n):
        for u in range(n):
            if i != u and store.implied_zero(direct_key(i, u, n)):
                system.add_row({_b(i, u): 1.0}, 0.0)
    if len(system) == 0:
        return pred
    report = solve_determined(system, config.det_tol, config.rank_rtol)
    for (_, i, u), ok in report.determined.items():
        if ok:
            pred.classify(i, u, report.solution[_b(i, u)], config.zero_tol)
    return pred
