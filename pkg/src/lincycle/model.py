"""Linear cyclic models with correlated disturbances.

A model is the pair ``(B, Sigma_e)`` of the structural equation ``x := Bx + e``,
where ``B[j, i]`` is the direct effect of ``x_i`` on ``x_j`` and ``Sigma_e`` is
the disturbance covariance. Off-diagonal entries of ``Sigma_e`` stand in for
latent confounders.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

logger = logging.getLogger(__name__)

#: relative singular-value threshold below which ``I - B`` counts as singular
SINGULAR_RTOL = 1e-9

#: exhaustive stability checks enumerate 2**n subsets; above this we fall back
EXHAUSTIVE_MAX_N = 12


class StabilityError(ValueError):
    """Raised when ``I - B`` (or a manipulated version) is not invertible."""


def variable_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def is_invertible(M: np.ndarray, rtol: float = SINGULAR_RTOL) -> bool:
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0:
        return True
    return bool(s[-1] > rtol * s[0])


@dataclass(frozen=True, eq=False)
class LinearCyclicModel:
    """Direct-effects matrix ``B`` and disturbance covariance ``Sigma_e``.

    Arrays are copied and made read-only on construction, so instances can be
    shared freely.
    """

    B: np.ndarray
    Sigma_e: np.ndarray

    def __post_init__(self):
        B = np.array(self.B, dtype=float)
        S = np.array(self.Sigma_e, dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ValueError(f"B must be square, got shape {B.shape}")
        if S.shape != B.shape:
            raise ValueError(f"Sigma_e shape {S.shape} does not match B {B.shape}")
        if np.any(np.diag(B) != 0.0):
            raise ValueError("diagonal of B must be exactly zero (no self-loops)")
        if not np.all(np.isfinite(B)) or not np.all(np.isfinite(S)):
            raise ValueError("model parameters must be finite")
        if not np.allclose(S, S.T, atol=1e-12):
            raise ValueError("Sigma_e must be symmetric")
        if np.linalg.eigvalsh(S).min() < -1e-9:
            raise ValueError("Sigma_e must be positive semidefinite")
        B.setflags(write=False)
        S.setflags(write=False)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Sigma_e", S)

    @property
    def n(self) -> int:
        return self.B.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        """Ordered pairs ``(i, j)`` with a nonzero direct effect ``x_i -> x_j``."""
        rows, cols = np.nonzero(self.B)
        return sorted(zip(cols.tolist(), rows.tolist()))

    def to_dict(self) -> dict:
        return {"n": self.n, "B": self.B.tolist(), "Sigma_e": self.Sigma_e.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearCyclicModel":
        try:
            n = int(d["n"])
            model = cls(np.asarray(d["B"], dtype=float), np.asarray(d["Sigma_e"], dtype=float))
        except KeyError as err:
            raise ValueError(f"model file missing field {err}") from None
        if model.n != n:
            raise ValueError(f"declared n={n} but matrices are {model.n}x{model.n}")
        return model

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "LinearCyclicModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class ManipulatedModel:
    """A model after a surgical intervention on the variables in ``J``."""

    base: LinearCyclicModel
    J: frozenset[int]
    B_tilde: np.ndarray
    Sigma_e_tilde: np.ndarray
    Sigma_c: np.ndarray

    @property
    def n(self) -> int:
        return self.base.n


def _check_indices(J: Iterable[int], n: int) -> frozenset[int]:
    J = frozenset(int(j) for j in J)
    bad = [j for j in J if not 0 <= j < n]
    if bad:
        raise IndexError(f"intervention indices {sorted(bad)} out of range for n={n}")
    return J


def manipulate(model: LinearCyclicModel, J: Iterable[int]) -> ManipulatedModel:
    """Cut all edges into ``J`` and replace their disturbances by unit-variance inputs."""
    J = _check_indices(J, model.n)
    idx = sorted(J)
    B_t = model.B.copy()
    S_t = model.Sigma_e.copy()
    S_c = np.zeros_like(S_t)
    B_t[idx, :] = 0.0
    S_t[idx, :] = 0.0
    S_t[:, idx] = 0.0
    S_c[idx, idx] = 1.0
    for M in (B_t, S_t, S_c):
        M.setflags(write=False)
    return ManipulatedModel(model, J, B_t, S_t, S_c)


def _inverse(M: np.ndarray, what: str) -> np.ndarray:
    if not is_invertible(M):
        raise StabilityError(f"{what} is singular; the model is not weakly stable")
    return np.linalg.inv(M)


def equilibrium_covariance(mmodel: ManipulatedModel) -> np.ndarray:
    """Covariance ``(I - B~)^-1 (Sigma_e~ + Sigma_c) (I - B~)^-T`` of the equilibrium."""
    n = mmodel.n
    T = _inverse(np.eye(n) - mmodel.B_tilde, f"I - B~ for J={sorted(mmodel.J)}")
    C = T @ (mmodel.Sigma_e_tilde + mmodel.Sigma_c) @ T.T
    return 0.5 * (C + C.T)


def total_effects(model: LinearCyclicModel) -> np.ndarray:
    """``T = (I - B)^-1``.

    Note that in cyclic models ``T[j, i]`` is ``T[i, i]`` times the effect seen
    in an experiment intervening on ``x_i`` alone; see
    :func:`single_intervention_effects`.
    """
    return _inverse(np.eye(model.n) - model.B, "I - B")


def single_intervention_effects(model: LinearCyclicModel) -> np.ndarray:
    """Matrix ``E`` with ``E[j, i] = t(x_i ~> x_j || {x_i})`` and unit diagonal."""
    T = total_effects(model)
    return T / np.diag(T)[None, :]


def experimental_effects(model: LinearCyclicModel, J: Iterable[int]) -> np.ndarray:
    """Column ``i`` (for ``i`` in ``J``) holds the effects of ``x_i`` under intervention ``J``."""
    mm = manipulate(model, J)
    return _inverse(np.eye(model.n) - mm.B_tilde, f"I - B~ for J={sorted(mm.J)}")


def true_experimental_effect(model: LinearCyclicModel, key) -> float:
    """Ground-truth value of the experimental effect identified by ``key``."""
    n = model.n
    if not (0 <= key.source < n and 0 <= key.target < n) or max(key.J, default=0) >= n:
        raise ValueError(f"effect key {key} does not fit a model with n={n}")
    return float(experimental_effects(model, key.J)[key.target, key.source])


@dataclass(frozen=True)
class StabilityReport:
    ok: bool
    violating_subset: Optional[frozenset[int]] = None
    subsets_checked: int = 0


def check_weak_stability(model: LinearCyclicModel, exhaustive: bool = True) -> StabilityReport:
    """Check invertibility of ``I - B~`` over intervention subsets.

    With ``exhaustive`` all ``2**n`` subsets are checked, otherwise only the
    null experiment and the single-variable interventions.
    """
    n = model.n
    if exhaustive:
        subsets: Iterable[tuple[int, ...]] = itertools.chain.from_iterable(
            itertools.combinations(range(n), k) for k in range(n + 1)
        )
    else:
        subsets = itertools.chain([()], ((i,) for i in range(n)))
    I = np.eye(n)
    count = 0
    for J in subsets:
        count += 1
        B_t = model.B.copy()
        B_t[list(J), :] = 0.0
        if not is_invertible(I - B_t):
            return StabilityReport(False, frozenset(J), count)
    return StabilityReport(True, None, count)


def random_model(
    n: int,
    edge_prob: float = 0.2,
    confounder_prob: float = 0.15,
    coeff_low: float = 0.2,
    coeff_high: float = 0.8,
    rng_seed: int | np.random.Generator | None = None,
    confounder_low: float = 0.1,
    confounder_high: float = 0.4,
    max_tries: int = 100,
) -> LinearCyclicModel:
    """Draw a sparse random model that is weakly stable under every intervention.

    Edge weights have magnitude uniform in ``[coeff_low, coeff_high]`` and a
    random sign. Disturbances have unit variance; each pair is correlated with
    probability ``confounder_prob``.
    """
    if not (0 <= edge_prob <= 1 and 0 <= confounder_prob <= 1):
        raise ValueError("probabilities must lie in [0, 1]")
    if not 0 < coeff_low < coeff_high:
        raise ValueError("need 0 < coeff_low < coeff_high")
    rng = np.random.default_rng(rng_seed)
    off = ~np.eye(n, dtype=bool)
    for attempt in range(max_tries):
        mask = (rng.random((n, n)) < edge_prob) & off
        mag = rng.uniform(coeff_low, coeff_high, (n, n))
        sign = rng.choice([-1.0, 1.0], (n, n))
        B = np.where(mask, mag * sign, 0.0)

        S = np.eye(n)
        iu = np.triu_indices(n, 1)
        conf = rng.random(len(iu[0])) < confounder_prob
        vals = rng.uniform(confounder_low, confounder_high, len(iu[0])) * rng.choice(
            [-1.0, 1.0], len(iu[0])
        )
        S[iu] = np.where(conf, vals, 0.0)
        S = np.triu(S, 1) + np.triu(S, 1).T + np.eye(n)
        lam = np.linalg.eigvalsh(S).min()
        if lam < 1e-6:
            S = S + (1e-6 - lam + 1e-3) * np.eye(n)
            d = np.sqrt(np.diag(S))
            S = S / np.outer(d, d)
            S = 0.5 * (S + S.T)
            np.fill_diagonal(S, 1.0)

        model = LinearCyclicModel(B, S)
        report = check_weak_stability(model, exhaustive=n <= EXHAUSTIVE_MAX_N)
        if report.ok:
            return model
        logger.debug("random_model attempt %d unstable at J=%s", attempt, report.violating_subset)
    raise RuntimeError(f"no weakly stable model found after {max_tries} attempts")
