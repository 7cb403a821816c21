"""Pair-condition analysis and experiment planning.

An ordered pair ``(x_i, x_j)`` satisfies the pair condition when some
experiment intervenes on ``x_i`` and observes ``x_j``. All ordered pairs
covered is what makes the direct effects of the model identifiable.
"""

from __future__ import annotations

import itertools
import json
from math import comb
from typing import Optional, Sequence

import numpy as np

from .experiments import ExperimentSpec
from .model import variable_names


def _universe(specs: Sequence[ExperimentSpec], n: Optional[int]) -> int:
    sizes = {s.n for s in specs}
    if n is not None:
        sizes.add(n)
    if len(sizes) != 1:
        raise ValueError(f"specs disagree on the variable universe: sizes {sorted(sizes)}")
    return sizes.pop()


def pair_condition_matrix(specs: Sequence[ExperimentSpec], n: Optional[int] = None) -> np.ndarray:
    """Boolean ``n x n`` matrix; ``M[i, j]`` iff some spec has ``i`` in J and ``j`` in U.

    ``n`` is only needed when ``specs`` is empty. The diagonal is always False.
    """
    n = _universe(specs, n)
    M = np.zeros((n, n), dtype=bool)
    for s in specs:
        for i in s.J:
            for j in s.U:
                M[i, j] = True
    return M


def missing_pairs(specs: Sequence[ExperimentSpec], n: Optional[int] = None) -> list[tuple[int, int]]:
    M = pair_condition_matrix(specs, n)
    return [(i, j) for i in range(len(M)) for j in range(len(M)) if i != j and not M[i, j]]


def is_fully_identifiable(specs: Sequence[ExperimentSpec],
                          n: Optional[int] = None) -> tuple[bool, list[tuple[int, int]]]:
    """``(ok, missing)`` where ``missing`` lists uncovered ordered pairs."""
    miss = missing_pairs(specs, n)
    return not miss, miss


def spencer_min_experiments(n: int) -> int:
    """Smallest ``K`` with ``C(K, floor(K/2)) >= n``; 0 for a single variable."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return 0
    K = 1
    while comb(K, K // 2) < n:
        K += 1
    return K


def spencer_experiments(n: int) -> list[ExperimentSpec]:
    """Fully observed experiments forming a completely separating system.

    Variable ``v`` gets the ``v``-th ``floor(K/2)``-subset of ``{0..K-1}``
    and is intervened in exactly those experiments. The subsets form an
    antichain, so for every ordered pair some experiment intervenes on the
    first variable but not the second.
    """
    K = spencer_min_experiments(n)
    labels = list(itertools.combinations(range(K), K // 2))[:n]
    out = []
    for k in range(K):
        J = frozenset(v for v, lab in enumerate(labels) if k in lab)
        if J:
            out.append(ExperimentSpec.make(n, J))
    return out


def _coverage(M: np.ndarray, J: frozenset[int]) -> int:
    n = len(M)
    return sum(1 for i in J for j in range(n) if j not in J and not M[i, j])


def plan_experiments(n: int, existing: Sequence[ExperimentSpec] = ()) -> list[ExperimentSpec]:
    """Additional fully observed experiments that complete the pair condition.

    Greedy over the Spencer experiments plus all singletons: each step takes
    the intervention set covering the most new pairs, ties broken by the
    lexicographically smallest sorted ``J``. If the greedy plan is longer
    than ``n`` the plain singleton plan for the uncovered sources is used.
    """
    M = pair_condition_matrix(existing, n)
    candidates = {s.J for s in spencer_experiments(n)} | {frozenset([v]) for v in range(n)}
    order = sorted(candidates, key=lambda J: sorted(J))

    def is_done(M):
        return all(M[i, j] for i in range(n) for j in range(n) if i != j)

    plan: list[ExperimentSpec] = []
    work = M.copy()
    while not is_done(work):
        best = max(order, key=lambda J: _coverage(work, J))  # max keeps the first on ties
        if _coverage(work, best) == 0:
            raise RuntimeError("planner made no progress")  # unreachable: singletons always help
        spec = ExperimentSpec.make(n, best)
        plan.append(spec)
        for i in spec.J:
            for j in spec.U:
                work[i, j] = True

    if len(plan) > n:
        sources = sorted({i for i, j in missing_pairs(existing, n)})
        plan = [ExperimentSpec.make(n, [i]) for i in sources]

    ok, miss = is_fully_identifiable([*existing, *plan], n)
    if not ok:
        raise RuntimeError(f"plan leaves pairs uncovered: {miss}")
    return plan


def coverage_report(specs: Sequence[ExperimentSpec], n: Optional[int] = None,
                    plan: Optional[Sequence[ExperimentSpec]] = None) -> dict:
    """JSON-ready summary: matrix, missing pairs and (optionally) a plan."""
    n = _universe(specs, n)
    names = variable_names(n)
    M = pair_condition_matrix(specs, n)
    ok, miss = is_fully_identifiable(specs, n)
    out = {
        "n": n,
        "identifiable": ok,
        "matrix": M.astype(int).tolist(),
        "missing": [[names[i], names[j]] for i, j in miss],
        "spencer_min_experiments": spencer_min_experiments(n),
    }
    if plan is not None:
        out["plan"] = [s.to_dict(names) for s in plan]
    return out


def coverage_report_json(specs: Sequence[ExperimentSpec], n: Optional[int] = None,
                         plan: Optional[Sequence[ExperimentSpec]] = None) -> str:
    return json.dumps(coverage_report(specs, n, plan), indent=2)
