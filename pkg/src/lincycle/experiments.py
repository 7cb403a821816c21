"""Experiment specifications, data sets and the effects they reveal."""

from __future__ import annotations

import csv
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .model import (
    LinearCyclicModel,
    StabilityError,
    equilibrium_covariance,
    is_invertible,
    manipulate,
    variable_names,
)


@dataclass(frozen=True)
class EffectKey:
    """The experimental effect ``t(source ~> target || J)``.

    ``J`` is the intervention set of the (possibly hypothetical) experiment.
    ``J == {source}`` is the single-intervention (total) effect and
    ``J == V \\ {target}`` the direct effect.
    """

    source: int
    target: int
    J: frozenset[int]

    def __post_init__(self):
        J = frozenset(self.J)
        object.__setattr__(self, "J", J)
        if self.source == self.target:
            raise ValueError(f"source and target coincide in {self}")
        if self.source not in J:
            raise ValueError(f"source x{self.source + 1} must be intervened in {self}")
        if self.target in J:
            raise ValueError(f"target x{self.target + 1} must not be intervened in {self}")

    def sort_key(self) -> tuple:
        return (self.source, self.target, len(self.J), tuple(sorted(self.J)))

    def is_direct(self, n: int) -> bool:
        return len(self.J) == n - 1

    def is_total(self) -> bool:
        return len(self.J) == 1

    def __str__(self):
        js = ",".join(f"x{j + 1}" for j in sorted(self.J))
        return f"t(x{self.source + 1}~>x{self.target + 1}||{{{js}}})"

    def to_dict(self, names: Optional[Sequence[str]] = None) -> dict:
        nm = (lambda i: names[i]) if names else (lambda i: f"x{i + 1}")
        return {"source": nm(self.source), "target": nm(self.target),
                "J": [nm(j) for j in sorted(self.J)]}


def direct_key(source: int, target: int, n: int) -> EffectKey:
    return EffectKey(source, target, frozenset(range(n)) - {target})


def total_key(source: int, target: int) -> EffectKey:
    return EffectKey(source, target, frozenset([source]))


@dataclass(frozen=True)
class ExperimentSpec:
    """Partition of ``{0..n-1}`` into intervened ``J``, observed ``U`` and hidden ``L``."""

    J: frozenset[int]
    U: frozenset[int]
    L: frozenset[int]

    def __post_init__(self):
        J, U, L = frozenset(self.J), frozenset(self.U), frozenset(self.L)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "L", L)
        if J & U or J & L or U & L:
            raise ValueError("J, U and L must be disjoint")
        allv = J | U | L
        if allv and (min(allv) < 0 or allv != frozenset(range(len(allv)))):
            raise ValueError(f"J, U, L must partition 0..n-1, got {sorted(allv)}")

    @classmethod
    def make(cls, n: int, J: Iterable[int] = (), U: Optional[Iterable[int]] = None,
             L: Iterable[int] = ()) -> "ExperimentSpec":
        """Build a spec; if ``U`` is omitted every variable not in ``J`` or ``L`` is observed."""
        J, L = frozenset(J), frozenset(L)
        U = frozenset(range(n)) - J - L if U is None else frozenset(U)
        spec = cls(J, U, L)
        if spec.n != n:
            raise ValueError(f"spec covers {spec.n} variables, expected {n}")
        return spec

    @property
    def n(self) -> int:
        return len(self.J) + len(self.U) + len(self.L)

    @property
    def observed(self) -> list[int]:
        """Revealed variables ``J | U`` in ascending order."""
        return sorted(self.J | self.U)

    @property
    def is_null(self) -> bool:
        return not self.J

    def to_dict(self, names: Optional[Sequence[str]] = None) -> dict:
        nm = names or variable_names(self.n)
        return {k: [nm[i] for i in sorted(getattr(self, k))] for k in ("J", "U", "L")}

    @classmethod
    def from_dict(cls, d: Mapping, names: Optional[Sequence[str]] = None) -> "ExperimentSpec":
        if names is None:
            names = sorted([*d.get("J", []), *d.get("U", []), *d.get("L", [])], key=natural_key)
        pos = {nm: i for i, nm in enumerate(names)}
        try:
            return cls(*(frozenset(pos[v] for v in d.get(k, [])) for k in ("J", "U", "L")))
        except KeyError as err:
            raise ValueError(f"unknown variable {err} in spec") from None

    def __str__(self):
        f = lambda s: "{" + ",".join(f"x{i + 1}" for i in sorted(s)) + "}"
        return f"J={f(self.J)} U={f(self.U)} L={f(self.L)}"


def natural_key(name: str):
    return [int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name)]


@dataclass(frozen=True, eq=False)
class DataSet:
    """Samples or an exact covariance over the revealed variables of one experiment.

    ``samples`` has one column per entry of ``spec.observed``. Exact data sets
    carry ``covariance`` instead and have ``sample_count is None``.
    """

    spec: ExperimentSpec
    samples: Optional[np.ndarray] = None
    exact_covariance: Optional[np.ndarray] = None
    names: Optional[tuple[str, ...]] = None

    def __post_init__(self):
        k = len(self.spec.observed)
        if (self.samples is None) == (self.exact_covariance is None):
            raise ValueError("a data set holds either samples or an exact covariance")
        if self.samples is not None:
            X = np.asarray(self.samples, dtype=float)
            if X.ndim != 2 or X.shape[1] != k or X.shape[0] < 1:
                raise ValueError(f"samples must be N x {k}, got {X.shape}")
            X.setflags(write=False)
            object.__setattr__(self, "samples", X)
        else:
            C = np.asarray(self.exact_covariance, dtype=float)
            if C.shape != (k, k):
                raise ValueError(f"covariance must be {k} x {k}, got {C.shape}")
            if not np.allclose(C, C.T, atol=1e-10) or (k and np.linalg.eigvalsh(C).min() < -1e-9):
                raise ValueError("exact covariance must be symmetric PSD")
            C.setflags(write=False)
            object.__setattr__(self, "exact_covariance", C)
        if self.names is None:
            object.__setattr__(self, "names", tuple(variable_names(self.spec.n)))

    @property
    def is_exact(self) -> bool:
        return self.samples is None

    @property
    def sample_count(self) -> Optional[int]:
        """Number of rows, or ``None`` for the infinite-sample limit."""
        return None if self.samples is None else self.samples.shape[0]

    @property
    def covariance(self) -> np.ndarray:
        """Covariance over ``spec.observed``; ML normalisation, zero means assumed."""
        if self.exact_covariance is not None:
            return self.exact_covariance
        cov = self.__dict__.get("_cov")
        if cov is None:
            X = self.samples
            cov = X.T @ X / X.shape[0]
            cov.setflags(write=False)
            object.__setattr__(self, "_cov", cov)
        return cov

    def column(self, var: int) -> int:
        return self.spec.observed.index(var)

    def cov(self, a: int, b: int) -> float:
        obs = self.spec.observed
        return float(self.covariance[obs.index(a), obs.index(b)])

    def save(self, stem: str | Path) -> list[Path]:
        """Write ``stem.csv`` + ``stem.json`` (samples) or ``stem.json`` (exact)."""
        stem = Path(stem)
        names = list(self.names)
        meta = self.spec.to_dict(names)
        header = [names[i] for i in self.spec.observed]
        if self.is_exact:
            meta.update({"N": None, "variables": header, "covariance": self.covariance.tolist()})
            path = stem.with_suffix(".json")
            path.write_text(json.dumps(meta, indent=2))
            return [path]
        meta["N"] = self.sample_count
        csv_path, json_path = stem.with_suffix(".csv"), stem.with_suffix(".json")
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(self.samples.tolist())
        json_path.write_text(json.dumps(meta, indent=2))
        return [csv_path, json_path]

    @classmethod
    def load(cls, path: str | Path) -> "DataSet":
        """Load from either file of a pair, or an exact-covariance JSON file."""
        path = Path(path)
        json_path = path.with_suffix(".json")
        meta = json.loads(json_path.read_text())
        names = sorted([*meta.get("J", []), *meta.get("U", []), *meta.get("L", [])], key=natural_key)
        spec = ExperimentSpec.from_dict(meta, names)
        header_expected = [names[i] for i in spec.observed]
        if meta.get("covariance") is not None:
            header = meta.get("variables", header_expected)
            C = np.asarray(meta["covariance"], dtype=float)
            perm = [header.index(h) for h in header_expected]
            return cls(spec, exact_covariance=C[np.ix_(perm, perm)], names=tuple(names))
        csv_path = path.with_suffix(".csv")
        with open(csv_path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        if sorted(header) != sorted(header_expected):
            raise ValueError(f"{csv_path}: header {header} does not match spec {header_expected}")
        X = np.asarray(body, dtype=float).reshape(len(body), len(header))
        perm = [header.index(h) for h in header_expected]
        if meta.get("N") is not None and int(meta["N"]) != X.shape[0]:
            raise ValueError(f"{csv_path}: sidecar says N={meta['N']}, file has {X.shape[0]} rows")
        return cls(spec, samples=X[:, perm], names=tuple(names))


def _manipulated_inverse(model: LinearCyclicModel, spec: ExperimentSpec):
    if spec.n != model.n:
        raise ValueError(f"spec over {spec.n} variables, model has {model.n}")
    mm = manipulate(model, spec.J)
    A = np.eye(model.n) - mm.B_tilde
    if not is_invertible(A):
        raise StabilityError(f"I - B~ singular for J={sorted(spec.J)}")
    return mm, np.linalg.inv(A)


def sample_data(model: LinearCyclicModel, spec: ExperimentSpec, N: int,
                rng_seed: int | np.random.Generator | None = None) -> DataSet:
    """Draw ``N`` equilibrium samples of the manipulated model, hidden columns removed."""
    if N < 1:
        raise ValueError("N must be >= 1")
    mm, T = _manipulated_inverse(model, spec)
    rng = np.random.default_rng(rng_seed)
    n = model.n
    e = rng.multivariate_normal(np.zeros(n), mm.Sigma_e_tilde, size=N, method="eigh")
    J = sorted(spec.J)
    e[:, J] = rng.standard_normal((N, len(J)))
    X = e @ T.T
    return DataSet(spec, samples=X[:, spec.observed])


def exact_dataset(model: LinearCyclicModel, spec: ExperimentSpec) -> DataSet:
    """The infinite-sample limit: the exact covariance over the revealed variables."""
    mm, _ = _manipulated_inverse(model, spec)
    C = equilibrium_covariance(mm)
    obs = spec.observed
    return DataSet(spec, exact_covariance=C[np.ix_(obs, obs)])


def observed_effects(dataset: DataSet) -> dict[EffectKey, float]:
    """Every ``t(x_i ~> x_u || J)`` with ``x_i`` in ``J`` and ``x_u`` in ``U``."""
    spec = dataset.spec
    out: dict[EffectKey, float] = {}
    if len(spec.observed) < 2:
        return out
    C = dataset.covariance
    pos = {v: k for k, v in enumerate(spec.observed)}
    for i in sorted(spec.J):
        for u in sorted(spec.U):
            out[EffectKey(i, u, spec.J)] = float(C[pos[i], pos[u]])
    return out


def bootstrap_resample(dataset: DataSet, replicate_count: int,
                       rng_seed: int | np.random.Generator | None = None) -> list[DataSet]:
    """Row-resampled copies of a finite-sample data set."""
    if dataset.is_exact:
        raise ValueError("cannot bootstrap an exact (infinite-sample) data set")
    rng = np.random.default_rng(rng_seed)
    N = dataset.sample_count
    return [
        DataSet(dataset.spec, samples=dataset.samples[rng.integers(0, N, N)], names=dataset.names)
        for _ in range(replicate_count)
    ]

