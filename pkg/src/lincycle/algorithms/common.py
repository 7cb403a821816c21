"""Output type, configuration and shared plumbing of the discovery algorithms."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..experiments import DataSet
from ..faithfulness import ConstraintStore, derive_constraints
from ..independence import DEFAULT_ALPHA, find_minimal_records
from ..model import variable_names

logger = logging.getLogger(__name__)

PRESENT, ABSENT, UNKNOWN = "present", "absent", "unknown"


class EdgePredictionMatrix:
    """Status of every ordered pair ``(i -> j)``: present with a value, absent or unknown."""

    def __init__(self, n: int, names: Optional[Sequence[str]] = None):
        self.n = n
        self.names = list(names) if names is not None else variable_names(n)
        self.status: dict[tuple[int, int], str] = {
            (i, j): UNKNOWN for i in range(n) for j in range(n) if i != j
        }
        self.values: dict[tuple[int, int], float] = {}

    def _check(self, i: int, j: int):
        if (i, j) not in self.status:
            raise KeyError(f"no edge slot ({i}, {j}) for n={self.n}")

    def set_present(self, i: int, j: int, value: float) -> None:
        self._check(i, j)
        if not np.isfinite(value) or value == 0.0:
            raise ValueError(f"present edge x{i + 1}->x{j + 1} needs a finite nonzero value")
        self.status[i, j] = PRESENT
        self.values[i, j] = float(value)

    def set_absent(self, i: int, j: int) -> None:
        self._check(i, j)
        self.status[i, j] = ABSENT
        self.values.pop((i, j), None)

    def set_unknown(self, i: int, j: int) -> None:
        self._check(i, j)
        self.status[i, j] = UNKNOWN
        self.values.pop((i, j), None)

    def classify(self, i: int, j: int, value: float, zero_tol: float) -> None:
        if abs(value) < zero_tol:
            self.set_absent(i, j)
        else:
            self.set_present(i, j, value)

    def get(self, i: int, j: int) -> tuple[str, Optional[float]]:
        return self.status[i, j], self.values.get((i, j))

    def pairs(self, status: Optional[str] = None) -> list[tuple[int, int]]:
        return sorted(p for p, s in self.status.items() if status is None or s == status)

    def counts(self) -> dict[str, int]:
        out = {PRESENT: 0, ABSENT: 0, UNKNOWN: 0}
        for s in self.status.values():
            out[s] += 1
        return out

    def to_dict(self) -> dict:
        edges = []
        for (i, j) in self.pairs():
            s, v = self.get(i, j)
            edges.append({"from": self.names[i], "to": self.names[j], "status": s, "value": v})
        return {"n": self.n, "edges": edges}

    @classmethod
    def from_dict(cls, d: dict) -> "EdgePredictionMatrix":
        n = int(d["n"])
        names = variable_names(n)
        seen = {e["from"] for e in d["edges"]} | {e["to"] for e in d["edges"]}
        if not seen <= set(names):
            from ..experiments import natural_key
            names = sorted(seen, key=natural_key)
        pos = {nm: k for k, nm in enumerate(names)}
        out = cls(n, names)
        for e in d["edges"]:
            i, j = pos[e["from"]], pos[e["to"]]
            if e["status"] == PRESENT:
                out.set_present(i, j, float(e["value"]))
            elif e["status"] == ABSENT:
                out.set_absent(i, j)
            elif e["status"] != UNKNOWN:
                raise ValueError(f"unknown edge status {e['status']!r}")
        return out

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    def __eq__(self, other):
        return (isinstance(other, EdgePredictionMatrix) and self.n == other.n
                and self.status == other.status and self.values == other.values)

    def __repr__(self):
        c = self.counts()
        return f"EdgePredictionMatrix(n={self.n}, present={c[PRESENT]}, absent={c[ABSENT]}, unknown={c[UNKNOWN]})"

    def __str__(self):
        lines = []
        for i, j in self.pairs():
            s, v = self.get(i, j)
            val = f" {v:+.4f}" if v is not None else ""
            lines.append(f"{self.names[i]} -> {self.names[j]}: {s}{val}")
        return "\n".join(lines)


@dataclass(frozen=True)
class AlgorithmConfig:
    zero_tol: float = 1e-7
    det_tol: float = 1e-6
    rank_rtol: float = 1e-9
    # BILIN
    restarts: int = 20
    max_sweeps: int = 500
    convergence_tol: float = 1e-10
    stall_rtol: Optional[float] = None
    variance_tol: float = 1e-6
    # LININF
    max_rounds: Optional[int] = None
    bootstrap_replicates: int = 0
    max_n: int = 8
    # faithfulness search
    alpha: float = DEFAULT_ALPHA
    max_cond_size: Optional[int] = None
    use_faithfulness: bool = True
    seed: Optional[int] = 0

    def __post_init__(self):
        for name in ("zero_tol", "det_tol", "rank_rtol", "convergence_tol", "variance_tol", "alpha"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    @classmethod
    def exact(cls, **kw) -> "AlgorithmConfig":
        return cls(**kw)

    @classmethod
    def finite(cls, **kw) -> "AlgorithmConfig":
        base = dict(zero_tol=0.05, rank_rtol=1e-6, variance_tol=1e-3, stall_rtol=1e-3, max_rounds=1,
                    bootstrap_replicates=10, max_cond_size=1)
        base.update(kw)
        return cls(**base)

    @classmethod
    def for_datasets(cls, datasets: Sequence[DataSet], **kw) -> "AlgorithmConfig":
        return cls.exact(**kw) if all_exact(datasets) else cls.finite(**kw)

    def with_(self, **kw) -> "AlgorithmConfig":
        return replace(self, **kw)


def all_exact(datasets: Sequence[DataSet]) -> bool:
    return all(d.is_exact for d in datasets)


def universe_size(datasets: Sequence[DataSet], n: Optional[int] = None) -> int:
    sizes = {d.spec.n for d in datasets}
    if n is not None:
        sizes.add(n)
    if len(sizes) > 1:
        raise ValueError(f"data sets disagree on the variable universe: sizes {sorted(sizes)}")
    if not sizes:
        raise ValueError("cannot infer the number of variables from an empty data set list; pass n")
    return sizes.pop()


def universe_names(datasets: Sequence[DataSet], n: int) -> list[str]:
    return list(datasets[0].names) if datasets else variable_names(n)


def faithfulness_store(datasets: Sequence[DataSet], config: AlgorithmConfig) -> ConstraintStore:
    """Derive constraints from every data set into one store."""
    store = ConstraintStore()
    if not config.use_faithfulness:
        return store
    for k, d in enumerate(datasets):
        records = find_minimal_records(d, config.max_cond_size, alpha=config.alpha, experiment=k)
        for c in derive_constraints(records, d.spec):
            store.add(c)
    return store


@dataclass
class RunReport:
    algorithm: str
    rounds: int = 0
    inconsistent: bool = False
    notes: list[str] = field(default_factory=list)
