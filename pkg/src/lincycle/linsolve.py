"""Sparse linear systems over named unknowns, solved with a rank-revealing SVD."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Optional

import numpy as np

EXACT_RANK_RTOL = 1e-9
FINITE_RANK_RTOL = 1e-6
DEFAULT_DET_TOL = 1e-6
INCONSISTENT_RTOL = 1e-6


class LinearSystem:
    """Rows ``sum_k coef_k * unknown_k = rhs`` assembled incrementally.

    Unknown identifiers may be any hashable; columns are assigned in
    registration order.
    """

    def __init__(self, unknowns: Iterable[Hashable] = ()):
        self.index: dict[Hashable, int] = {}
        self.unknowns: list[Hashable] = []
        self.rows: list[dict[int, float]] = []
        self.rhs: list[float] = []
        self.flagged_rows: list[int] = []
        for u in unknowns:
            self.register(u)

    def register(self, unknown: Hashable) -> int:
        col = self.index.get(unknown)
        if col is None:
            col = self.index[unknown] = len(self.unknowns)
            self.unknowns.append(unknown)
        return col

    def add_row(self, coefs: Mapping[Hashable, float], rhs: float = 0.0) -> None:
        row: dict[int, float] = {}
        for u, c in coefs.items():
            if c != 0.0:
                col = self.register(u)
                row[col] = row.get(col, 0.0) + float(c)
        row = {k: v for k, v in row.items() if v != 0.0}
        if not row and rhs != 0.0:
            # 0 = rhs: keep it so the residual reports the inconsistency
            self.flagged_rows.append(len(self.rows))
        self.rows.append(row)
        self.rhs.append(float(rhs))

    def __len__(self):
        return len(self.rows)

    @property
    def n_unknowns(self) -> int:
        return len(self.unknowns)

    def matrix(self) -> tuple[np.ndarray, np.ndarray]:
        A = np.zeros((len(self.rows), len(self.unknowns)))
        for r, row in enumerate(self.rows):
            for c, v in row.items():
                A[r, c] = v
        return A, np.asarray(self.rhs, dtype=float)


@dataclass
class SolveReport:
    solution: dict[Hashable, float]
    determined: dict[Hashable, bool]
    residual: float
    rank: int
    relative_residual: float = 0.0
    inconsistent: bool = False
    null_space: Optional[np.ndarray] = field(default=None, repr=False)

    def determined_values(self) -> dict[Hashable, float]:
        return {u: v for u, v in self.solution.items() if self.determined[u]}


def solve_matrix(A: np.ndarray, b: np.ndarray, rank_rtol: float = EXACT_RANK_RTOL,
                 det_tol: float = DEFAULT_DET_TOL):
    """Minimum-norm least squares plus a determinedness mask.

    Column ``k`` is determined when the unit vector ``e_k`` lies in the row
    space of ``A``, i.e. its component along the null space is below
    ``det_tol``. Returns ``(x, determined, rank, null_basis)`` where the
    columns of ``null_basis`` span the null space.
    """
    m, k = A.shape
    if k == 0:
        return np.zeros(0), np.zeros(0, dtype=bool), 0, np.zeros((0, 0))
    if m == 0:
        return np.zeros(k), np.zeros(k, dtype=bool), 0, np.eye(k)
    U, s, Vt = np.linalg.svd(A, full_matrices=m < k)
    rank = int(np.sum(s > rank_rtol * s[0])) if s.size and s[0] > 0 else 0
    x = Vt[:rank].T @ ((U[:, :rank].T @ b) / s[:rank])
    N = Vt[rank:].T
    determined = np.linalg.norm(N, axis=1) < det_tol
    return x, determined, rank, N


def solve_determined(system: LinearSystem, tol: float = DEFAULT_DET_TOL,
                     rank_rtol: float = EXACT_RANK_RTOL,
                     inconsistent_rtol: float = INCONSISTENT_RTOL) -> SolveReport:
    """Solve in the least-squares sense and classify each unknown."""
    A, b = system.matrix()
    x, det, rank, N = solve_matrix(A, b, rank_rtol, tol)
    res = float(np.linalg.norm(A @ x - b)) if len(b) else 0.0
    scale = max(float(np.linalg.norm(b)), 1.0)
    rel = res / scale
    return SolveReport(
        solution={u: float(x[i]) for i, u in enumerate(system.unknowns)},
        determined={u: bool(det[i]) for i, u in enumerate(system.unknowns)},
        residual=res,
        rank=rank,
        relative_residual=rel,
        inconsistent=rel > inconsistent_rtol,
        null_space=N,
    )
