"""Linear inference over all experimental effects.

Every experimental effect ``t(x_i ~> x_u || J)`` is an unknown. Observed
effects and faithfulness zeros seed a set of known values; the relation
between nested intervention sets ``J_k < J_l`` (with ``x_u`` outside ``J_l``)::

    t(i~>u || J_k) = t(i~>u || J_l) + sum_{j in J_l \\ J_k} t(i~>j || J_k) t(j~>u || J_l)

becomes linear once one factor of every product is known. Linear rows are
solved, uniquely determined unknowns are recorded, zeros propagate to
supersets, and the loop repeats until nothing new is learned.

With finite samples the whole procedure runs in lockstep on bootstrap
replicates of the data; an inferred effect counts as zero only when every
replicate puts it below ``zero_tol``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from ..experiments import DataSet, EffectKey, bootstrap_resample, direct_key, observed_effects
from ..faithfulness import ConstraintStore
from ..linsolve import solve_matrix
from .common import (AlgorithmConfig, EdgePredictionMatrix, faithfulness_store, universe_names,
                     universe_size)

logger = logging.getLogger(__name__)

EXACT_NONZERO_TOL = 1e-6
DEFAULT_MAX_N = 8


def _subsets(items: Sequence[int], min_size: int = 0) -> Iterator[tuple[int, ...]]:
    for k in range(min_size, len(items) + 1):
        yield from itertools.combinations(items, k)


def all_effect_keys(n: int) -> list[EffectKey]:
    """All ``n(n-1)2^(n-2)`` experimental effects, in canonical order."""
    keys = []
    for i in range(n):
        for u in range(n):
            if i == u:
                continue
            others = [v for v in range(n) if v not in (i, u)]
            for S in _subsets(others):
                keys.append(EffectKey(i, u, frozenset(S) | {i}))
    return keys


def nested_relations(n: int) -> Iterator[tuple[EffectKey, frozenset[int]]]:
    """Pairs ``(t(i~>u||J_k), J_l)`` with ``J_k < J_l <= V \\ {u}``."""
    for key in all_effect_keys(n):
        free = [v for v in range(n) if v not in key.J and v != key.target]
        for S in _subsets(free, 1):
            yield key, key.J | frozenset(S)


@dataclass
class _Row:
    coefs: dict[EffectKey, np.ndarray]
    const: np.ndarray  # row reads  sum coefs * x + const = 0


@dataclass
class LininfReport:
    rounds: int = 0
    recorded_per_round: list[int] = field(default_factory=list)
    inconsistent_rounds: list[int] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    conflicts: int = 0


class LinearInference:
    """Stateful runner; :func:`run_lininf` is the functional entry point."""

    def __init__(self, datasets: Sequence[DataSet], config: Optional[AlgorithmConfig] = None,
                 n: Optional[int] = None, store: Optional[ConstraintStore] = None):
        self.datasets = list(datasets)
        self.n = universe_size(self.datasets, n)
        self.config = config or AlgorithmConfig.for_datasets(self.datasets)
        self.exact = all(d.is_exact for d in self.datasets)
        max_n = self.config.max_n
        if self.n > max_n:
            raise ValueError(f"n={self.n} exceeds max_n={max_n}; the effect space grows as n^2 2^n")
        if self.n > DEFAULT_MAX_N:
            logger.warning("running LININF with n=%d: %d unknown effects", self.n,
                           self.n * (self.n - 1) * 2 ** (self.n - 2))
        self.store = store if store is not None else faithfulness_store(self.datasets, self.config)
        self.replicates = 1 if self.exact else 1 + self.config.bootstrap_replicates
        self.values: dict[EffectKey, np.ndarray] = {}
        self.report = LininfReport()
        self.zero_tol = self.config.zero_tol
        self.nonzero_tol = EXACT_NONZERO_TOL if self.exact else self.config.zero_tol
        self._zero = np.zeros(self.replicates)

    # -- value bookkeeping -------------------------------------------------

    def _replicate_data(self) -> list[list[DataSet]]:
        if self.replicates == 1:
            return [self.datasets]
        seeds = np.random.SeedSequence(self.config.seed).spawn(len(self.datasets))
        boots = [bootstrap_resample(d, self.replicates - 1, np.random.default_rng(s))
                 for d, s in zip(self.datasets, seeds)]
        return [self.datasets] + [[b[r] for b in boots] for r in range(self.replicates - 1)]

    def known(self, key: EffectKey) -> Optional[np.ndarray]:
        if self.store.implied_zero(key):
            return self._zero
        return self.values.get(key)

    def _is_zero(self, v: np.ndarray) -> bool:
        return bool(np.all(np.abs(v) < self.zero_tol))

    def _robust_nonzero(self) -> dict[EffectKey, float]:
        return {k: float(v[0]) for k, v in self.values.items()
                if np.all(np.abs(v) > self.nonzero_tol)}

    def _record(self, key: EffectKey, v: np.ndarray) -> bool:
        if key in self.values or self.store.implied_zero(key):
            return False
        self.values[key] = v
        if self._is_zero(v):
            self.store.add_zero(key, "recorded-zero")
        return True

    def _propagate_products(self) -> None:
        while self.store.resolve_products(self._robust_nonzero(), self.nonzero_tol):
            pass

    # -- rows --------------------------------------------------------------

    def _row(self, key_k: EffectKey, J_l: frozenset[int]) -> Optional[_Row]:
        i, u = key_k.source, key_k.target
        R = self.replicates
        coefs: dict[EffectKey, np.ndarray] = {}
        const = np.zeros(R)

        def linear(key: EffectKey, c):
            nonlocal const
            val = self.known(key)
            if val is None:
                coefs[key] = coefs.get(key, 0.0) + c
            else:
                const = const + c * val

        linear(key_k, np.ones(R))
        linear(EffectKey(i, u, J_l), -np.ones(R))
        for j in sorted(J_l - key_k.J):
            a, b = EffectKey(i, j, key_k.J), EffectKey(j, u, J_l)
            va, vb = self.known(a), self.known(b)
            if va is not None and vb is not None:
                const = const - va * vb
            elif va is not None:
                if np.any(va != 0.0):
                    coefs[b] = coefs.get(b, 0.0) - va
            elif vb is not None:
                if np.any(vb != 0.0):
                    coefs[a] = coefs.get(a, 0.0) - vb
            elif not self.store.product_implied_zero(a, b):
                return None
        coefs = {k: c for k, c in coefs.items() if np.any(c != 0.0)}
        if not coefs:
            return None
        return _Row(coefs, const)

    def build_rows(self) -> list[_Row]:
        rows = []
        for key_k, J_l in nested_relations(self.n):
            row = self._row(key_k, J_l)
            if row is not None:
                rows.append(row)
        return rows

    # -- main loop ---------------------------------------------------------

    def run(self) -> "LinearInference":
        reps = self._replicate_data()
        for k, d in enumerate(self.datasets):
            per_rep = [observed_effects(reps[r][k]) for r in range(self.replicates)]
            for key in per_rep[0]:
                self._record(key, np.array([p[key] for p in per_rep]))
        self._propagate_products()

        max_rounds = self.config.max_rounds
        while max_rounds is None or self.report.rounds < max_rounds:
            rows = self.build_rows()
            self.report.rounds += 1
            if not rows:
                self.report.recorded_per_round.append(0)
                break
            unknowns = sorted({k for r in rows for k in r.coefs}, key=EffectKey.sort_key)
            col = {k: c for c, k in enumerate(unknowns)}
            new = 0
            solutions = []
            determined = None
            for r in range(self.replicates):
                A = np.zeros((len(rows), len(unknowns)))
                b = np.empty(len(rows))
                for m, row in enumerate(rows):
                    for key, c in row.coefs.items():
                        A[m, col[key]] = c[r]
                    b[m] = -row.const[r]
                x, det, _, _ = solve_matrix(A, b, self.config.rank_rtol, self.config.det_tol)
                if r == 0:
                    determined = det
                    res = float(np.linalg.norm(A @ x - b))
                    rel = res / max(float(np.linalg.norm(b)), 1.0)
                    self.report.residuals.append(rel)
                    if self.exact and rel > 1e-6:
                        self.report.inconsistent_rounds.append(self.report.rounds)
                        logger.warning("LININF round %d: inconsistent system (rel. residual %.2e)",
                                       self.report.rounds, rel)
                solutions.append(x)
            X = np.vstack(solutions)
            for c, key in enumerate(unknowns):
                if determined[c] and self._record(key, X[:, c].copy()):
                    new += 1
            self._propagate_products()
            self.report.recorded_per_round.append(new)
            if new == 0:
                break
        self.report.conflicts = len(self.store.conflicts)
        return self

    # -- output ------------------------------------------------------------

    def recorded(self) -> dict[EffectKey, float]:
        """Recorded effects (original data) plus explicitly stored zeros."""
        out = {k: float(v[0]) for k, v in self.values.items()}
        for z in self.store.zero_constraints:
            out.setdefault(z.key, 0.0)
        return out

    def prediction(self) -> EdgePredictionMatrix:
        n = self.n
        pred = EdgePredictionMatrix(n, universe_names(self.datasets, n))
        for i in range(n):
            for u in range(n):
                if i == u:
                    continue
                key = direct_key(i, u, n)
                if self.store.implied_zero(key):
                    pred.set_absent(i, u)
                elif key in self.values:
                    v = float(self.values[key][0])
                    if abs(v) >= self.zero_tol:
                        pred.set_present(i, u, v)
        return pred


def run_lininf(datasets: Sequence[DataSet], config: Optional[AlgorithmConfig] = None,
               n: Optional[int] = None, store: Optional[ConstraintStore] = None):
    """Returns ``(prediction, recorded effects)``."""
    runner = LinearInference(datasets, config, n, store).run()
    return runner.prediction(), runner.recorded()
