"""Alternating least squares over direct and total effects jointly.

Unknowns are ``B`` (zero diagonal) and ``T = (I - B)^-1``. Linear rows on
``vec(B)``, linear rows on ``vec(T)`` and the coupling ``T(I - B) = I`` make the
problem bilinear; each half-step is an ordinary least-squares solve. Many
random restarts give a sample of solutions, and entries of ``B`` that agree
across the sample are reported.

``vec`` is row-major throughout: ``vec(M)[r * n + c] = M[r, c]``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..experiments import DataSet, EffectKey, observed_effects
from ..faithfulness import ConstraintStore
from .common import (AlgorithmConfig, EdgePredictionMatrix, faithfulness_store, universe_names,
                     universe_size)

logger = logging.getLogger(__name__)

# restarts whose objective exceeds best + max(abs slack, rel slack * best) are dropped
OBJECTIVE_ABS_SLACK = 1e-8
OBJECTIVE_REL_SLACK = 0.1


@dataclass
class BilinearProblem:
    """``K1 vec(B) = k1``, ``K2 vec(T) = k2`` and product penalties ``(T[p] * B[q])^2``."""

    n: int
    K1: np.ndarray
    k1: np.ndarray
    K2: np.ndarray
    k2: np.ndarray
    products: list[tuple[tuple[int, int], tuple[int, int]]] = field(default_factory=list)

    @classmethod
    def empty(cls, n: int) -> "BilinearProblem":
        return cls(n, np.zeros((0, n * n)), np.zeros(0), np.zeros((0, n * n)), np.zeros(0))


def bilin_objective(B: np.ndarray, T: np.ndarray, K1: np.ndarray, k1: np.ndarray,
                    K2: np.ndarray, k2: np.ndarray,
                    product_terms: Sequence[tuple[tuple[int, int], tuple[int, int]]] = ()) -> float:
    """Sum of squared residuals of all constraint groups."""
    n = B.shape[0]
    val = float(np.sum((K1 @ B.ravel() - k1) ** 2)) if len(k1) else 0.0
    val += float(np.sum((K2 @ T.ravel() - k2) ** 2)) if len(k2) else 0.0
    val += float(np.sum((T @ (np.eye(n) - B) - np.eye(n)) ** 2))
    for p, q in product_terms:
        val += float((T[p] * B[q]) ** 2)
    return val


def build_problem(datasets: Sequence[DataSet], n: int, store: ConstraintStore) -> BilinearProblem:
    """Assemble all bilinear-compatible constraints.

    Rows on ``T`` follow from intervening on ``x_i`` together with the rest of
    ``J``; because ``T[:, i]`` is ``T[i, i]`` times the single-intervention
    effects, the observed effect enters with a ``T[i, i]`` factor::

        T[u, i] - sum_{j in J \\ i} t(j~>u || J) T[j, i] - t(i~>u || J) T[i, i] = 0
    """
    rows_T, rows_B, rhs_B = [], [], []
    for d in datasets:
        eff = observed_effects(d)
        J = d.spec.J
        for i in sorted(J):
            for u in sorted(d.spec.U):
                row = np.zeros(n * n)
                row[u * n + i] = 1.0
                for j in sorted(J - {i}):
                    row[j * n + i] -= eff[EffectKey(j, u, J)]
                row[i * n + i] -= eff[EffectKey(i, u, J)]
                rows_T.append(row)
                if d.spec.L:
                    continue
                rowb = np.zeros(n * n)
                rowb[u * n + i] = 1.0
                for j in sorted(d.spec.U - {u}):
                    rowb[u * n + j] = eff[EffectKey(i, j, J)]
                rows_B.append(rowb)
                rhs_B.append(eff[EffectKey(i, u, J)])

    V = frozenset(range(n))
    for i in range(n):
        for u in range(n):
            if i != u and store.implied_zero(EffectKey(i, u, V - {u})):
                row = np.zeros(n * n)
                row[u * n + i] = 1.0
                rows_B.append(row)
                rhs_B.append(0.0)

    products = []
    for p in store.products():
        # a zero product stays zero when either factor's intervention set grows,
        # so a total-effect factor can pair with the direct effect of the other
        for tot, other in ((p.a, p.b), (p.b, p.a)):
            if tot.J == frozenset([tot.source]):
                term = ((tot.target, tot.source), (other.target, other.source))
                if term not in products:
                    products.append(term)
                break

    K1 = np.array(rows_B).reshape(-1, n * n)
    K2 = np.array(rows_T).reshape(-1, n * n)
    return BilinearProblem(n, K1, np.asarray(rhs_B, dtype=float), K2,
                           np.zeros(len(rows_T)), products)


def _lstsq_near(A: np.ndarray, b: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """Least-squares solution closest to ``x0`` (keeps free directions where they are)."""
    delta, *_ = np.linalg.lstsq(A, b - A @ x0, rcond=None)
    return x0 + delta


def _update_B(prob: BilinearProblem, T: np.ndarray, B: np.ndarray, free: np.ndarray) -> np.ndarray:
    n = prob.n
    I = np.eye(n)
    blocks = [np.kron(T, I)]
    rhs = [(T - I).ravel()]
    if len(prob.k1):
        blocks.append(prob.K1)
        rhs.append(prob.k1)
    if prob.products:
        P = np.zeros((len(prob.products), n * n))
        for r, (p, q) in enumerate(prob.products):
            P[r, q[0] * n + q[1]] = T[p]
        blocks.append(P)
        rhs.append(np.zeros(len(prob.products)))
    A = np.vstack(blocks)[:, free]
    b = np.concatenate(rhs)
    x = _lstsq_near(A, b, B.ravel()[free])
    out = np.zeros(n * n)
    out[free] = x
    return out.reshape(n, n)


def _update_T(prob: BilinearProblem, B: np.ndarray, T: np.ndarray) -> np.ndarray:
    n = prob.n
    I = np.eye(n)
    M = I - B
    blocks = [np.kron(I, M.T)]
    rhs = [I.ravel()]
    if len(prob.k2):
        blocks.append(prob.K2)
        rhs.append(prob.k2)
    if prob.products:
        P = np.zeros((len(prob.products), n * n))
        for r, (p, q) in enumerate(prob.products):
            P[r, p[0] * n + p[1]] = B[q]
        blocks.append(P)
        rhs.append(np.zeros(len(prob.products)))
    x = _lstsq_near(np.vstack(blocks), np.concatenate(rhs), T.ravel())
    return x.reshape(n, n)


@dataclass
class BilinSolution:
    B: np.ndarray
    T: np.ndarray
    objective: float
    sweeps: int
    converged: bool


def alternate(prob: BilinearProblem, B0: np.ndarray, T0: np.ndarray, max_sweeps: int,
              convergence_tol: float, stall_rtol: Optional[float] = None) -> BilinSolution:
    """Alternate B- and T-updates until the objective stops moving.

    ``convergence_tol`` bounds the change relative to the objective, floored
    at ``convergence_tol`` itself, so a consistent system runs to (numerical)
    zero. Noisy constraints have no exact solution and the descent creeps on
    along weakly determined directions; ``stall_rtol`` then stops once the
    relative improvement per sweep falls below it.
    """
    n = prob.n
    free = (~np.eye(n, dtype=bool)).ravel()
    B, T = B0.copy(), T0.copy()
    np.fill_diagonal(B, 0.0)
    obj = bilin_objective(B, T, prob.K1, prob.k1, prob.K2, prob.k2, prob.products)
    for sweep in range(1, max_sweeps + 1):
        B = _update_B(prob, T, B, free)
        T = _update_T(prob, B, T)
        new = bilin_objective(B, T, prob.K1, prob.k1, prob.K2, prob.k2, prob.products)
        # relative change while the objective is large, absolute once it is tiny
        change = abs(obj - new)
        if change <= convergence_tol * max(new, convergence_tol) or (
                stall_rtol is not None and change <= stall_rtol * new):
            return BilinSolution(B, T, new, sweep, True)
        obj = new
    return BilinSolution(B, T, obj, max_sweeps, False)


def run_bilin(datasets: Sequence[DataSet], config: Optional[AlgorithmConfig] = None,
              n: Optional[int] = None, store: Optional[ConstraintStore] = None,
              return_solutions: bool = False):
    n = universe_size(datasets, n)
    config = config or AlgorithmConfig.for_datasets(datasets)
    store = store if store is not None else faithfulness_store(datasets, config)
    prob = build_problem(datasets, n, store)
    rng = np.random.default_rng(config.seed)

    sols = []
    for _ in range(config.restarts):
        B0 = rng.uniform(-1, 1, (n, n))
        T0 = np.eye(n) + rng.uniform(-1, 1, (n, n))
        sols.append(alternate(prob, B0, T0, config.max_sweeps, config.convergence_tol,
                              config.stall_rtol))
    kept = [s for s in sols if s.converged]
    if kept:
        best = min(s.objective for s in kept)
        cutoff = best + max(OBJECTIVE_ABS_SLACK, OBJECTIVE_REL_SLACK * best)
        kept = [s for s in kept if s.objective <= cutoff]
    if len(kept) < len(sols):
        logger.debug("BILIN kept %d of %d restarts", len(kept), len(sols))

    pred = EdgePredictionMatrix(n, universe_names(datasets, n))
    if kept:
        Bs = np.stack([s.B for s in kept])
        mean, var = Bs.mean(axis=0), Bs.var(axis=0)
        # a single surviving restart says nothing about spread
        if len(kept) >= 2:
            for i in range(n):
                for j in range(n):
                    if i != j and var[j, i] < config.variance_tol:
                        pred.classify(i, j, mean[j, i], config.zero_tol)
    if return_solutions:
        return pred, kept
    return pred
