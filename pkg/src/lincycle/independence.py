"""Partial-correlation independence tests and minimal (in)dependence search."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy import stats

from .experiments import DataSet

DEFAULT_ALPHA = 0.05
DEFAULT_EXACT_TOL = 1e-9
SINGULAR_RTOL = 1e-9


class UntestableError(ValueError):
    """The covariance submatrix of a query is numerically singular."""


def partial_correlation(cov: np.ndarray, x: int, y: int, C: Iterable[int] = ()) -> float:
    """Partial correlation of columns ``x`` and ``y`` given columns ``C``."""
    idx = [x, y, *C]
    S = cov[np.ix_(idx, idx)]
    sv = np.linalg.svd(S, compute_uv=False)
    if sv[-1] <= SINGULAR_RTOL * sv[0]:
        raise UntestableError(f"singular covariance over columns {idx}")
    P = np.linalg.inv(S)
    return float(-P[0, 1] / math.sqrt(P[0, 0] * P[1, 1]))


def fisher_z_pvalue(r: float, n_samples: int, cond_size: int) -> float:
    dof = n_samples - cond_size - 3
    if dof < 1:
        raise UntestableError(f"too few samples ({n_samples}) for {cond_size} conditioning variables")
    r = min(max(r, -1 + 1e-15), 1 - 1e-15)
    z = math.sqrt(dof) * math.atanh(r)
    return float(2 * stats.norm.sf(abs(z)))


def test_independence(dataset: DataSet, x: int, y: int, C: Iterable[int] = (),
                      alpha: float = DEFAULT_ALPHA, tol: float = DEFAULT_EXACT_TOL) -> bool:
    """Judge ``x _||_ y | C`` in one data set (variables by global index).

    Finite samples use Fisher's z-test at level ``alpha``; exact covariances
    count as independent when ``|rho| < tol``. Raises :class:`UntestableError`
    when the judgment cannot be made.
    """
    C = list(C)
    obs = dataset.spec.observed
    missing = [v for v in (x, y, *C) if v not in obs]
    if missing:
        raise ValueError(f"variables {missing} are not revealed in this data set")
    if x == y or x in C or y in C:
        raise ValueError("x, y and C must be disjoint")
    pos = {v: k for k, v in enumerate(obs)}
    r = partial_correlation(dataset.covariance, pos[x], pos[y], [pos[c] for c in C])
    if dataset.is_exact:
        return abs(r) < tol
    return fisher_z_pvalue(r, dataset.sample_count, len(C)) >= alpha


@dataclass(frozen=True)
class MinimalRecord:
    """``x _||_ y | D u [C]`` (independence) or its dependence dual.

    ``C`` is minimal: every proper subset flips the judgment.
    """

    kind: str  # "independence" | "dependence"
    x: int
    y: int
    D: frozenset[int]
    C: frozenset[int]
    experiment: int = 0

    def __post_init__(self):
        if self.kind not in ("independence", "dependence"):
            raise ValueError(f"unknown record kind {self.kind!r}")
        if {self.x, self.y} & (self.D | self.C) or self.D & self.C or self.x == self.y:
            raise ValueError("x, y, D, C must be disjoint")
        if self.x > self.y:
            x, y = self.y, self.x
            object.__setattr__(self, "x", x)
            object.__setattr__(self, "y", y)

    @property
    def independent(self) -> bool:
        return self.kind == "independence"

    def __str__(self):
        f = lambda s: ",".join(f"x{i + 1}" for i in sorted(s))
        rel = "_||_" if self.independent else "_/||_"
        d = f"{f(self.D)} u " if self.D else ""
        return f"x{self.x + 1} {rel} x{self.y + 1} | {d}[{f(self.C)}]"

    def to_json(self) -> str:
        return json.dumps({"kind": self.kind, "x": self.x, "y": self.y, "D": sorted(self.D),
                           "C": sorted(self.C), "experiment": self.experiment})


class _Oracle:
    """Caches judgments for one data set; ``None`` marks untestable queries."""

    def __init__(self, dataset: DataSet, alpha: float, tol: float):
        self.dataset, self.alpha, self.tol = dataset, alpha, tol
        self.cache: dict[tuple, Optional[bool]] = {}

    def __call__(self, x: int, y: int, C: frozenset[int]) -> Optional[bool]:
        key = (min(x, y), max(x, y), C)
        if key not in self.cache:
            try:
                self.cache[key] = test_independence(self.dataset, x, y, sorted(C), self.alpha, self.tol)
            except UntestableError:
                self.cache[key] = None
        return self.cache[key]


def _proper_subsets(C: frozenset[int]):
    items = sorted(C)
    for k in range(len(items)):
        for sub in itertools.combinations(items, k):
            yield frozenset(sub)


def find_minimal_records(dataset: DataSet, max_cond_size: Optional[int] = None,
                         alpha: float = DEFAULT_ALPHA, tol: float = DEFAULT_EXACT_TOL,
                         experiment: int = 0, intervened_context: bool = True) -> list[MinimalRecord]:
    """Enumerate minimal independencies and dependencies among revealed variables.

    With ``D = {}`` every conditioning set up to ``max_cond_size`` is tried
    (``None`` means unbounded). With ``intervened_context`` the search also
    emits single-variable minimal dependencies ``x _/||_ y | D u [w]`` whose
    fixed part ``D`` consists of intervened variables.
    """
    obs = dataset.spec.observed
    J = dataset.spec.J
    limit = len(obs) - 2 if max_cond_size is None else min(max_cond_size, len(obs) - 2)
    judge = _Oracle(dataset, alpha, tol)
    records: dict[tuple, MinimalRecord] = {}

    def emit(rec: MinimalRecord):
        records.setdefault((rec.kind, rec.x, rec.y, rec.D, rec.C), rec)

    for x, y in itertools.combinations(obs, 2):
        rest = [v for v in obs if v not in (x, y)]
        for k in range(limit + 1):
            for C in itertools.combinations(rest, k):
                C = frozenset(C)
                res = judge(x, y, C)
                if res is None:
                    continue
                # every proper subset must carry the opposite, testable judgment
                if all(judge(x, y, S) is (not res) for S in _proper_subsets(C)):
                    kind = "independence" if res else "dependence"
                    emit(MinimalRecord(kind, x, y, frozenset(), C, experiment))

        if not intervened_context:
            continue
        J_rest = [v for v in rest if v in J]
        for k in range(1, min(limit, len(J_rest)) + 1):
            for D in itertools.combinations(J_rest, k):
                D = frozenset(D)
                if judge(x, y, D) is not True:
                    continue
                for w in rest:
                    if w in D or w in J or len(D) + 1 > limit:
                        continue
                    if judge(x, y, D | {w}) is False:
                        emit(MinimalRecord("dependence", x, y, D, frozenset([w]), experiment))

    return sorted(records.values(), key=lambda r: (r.kind, r.x, r.y, len(r.D), sorted(r.D),
                                                   len(r.C), sorted(r.C)))


# keep pytest from collecting the public API name as a test
test_independence.__test__ = False
