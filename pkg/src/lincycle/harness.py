"""Simulation benchmark: random models, random overlapping experiments, scoring."""

from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .algorithms import ALGORITHMS, ABSENT, PRESENT, AlgorithmConfig, EdgePredictionMatrix, run_algorithm
from .algorithms.common import faithfulness_store
from .experiments import ExperimentSpec, exact_dataset, sample_data
from .model import LinearCyclicModel, random_model

logger = logging.getLogger(__name__)

INFINITE = "infinite"
SampleSize = Union[int, str]
COUNT_FIELDS = ("correct_absent", "incorrect_absent", "correct_present", "incorrect_present", "unknown")
# carried alongside the counts so "how much of the truth was found" can be computed
EXTRA_FIELDS = ("true_edges",)


def random_experiments(n: int, count: int, rng_seed=None) -> list[ExperimentSpec]:
    """Each variable lands in J, U or L uniformly; resample until J and U are nonempty."""
    if n < 2 or count < 1:
        raise ValueError("need n >= 2 and count >= 1")
    rng = np.random.default_rng(rng_seed)
    out = []
    while len(out) < count:
        roles = rng.integers(0, 3, n)
        if not (roles == 0).any() or not (roles == 1).any():
            continue
        out.append(ExperimentSpec(*(frozenset(np.flatnonzero(roles == r).tolist()) for r in range(3))))
    return out


def evaluate_predictions(pred: EdgePredictionMatrix, truth: LinearCyclicModel,
                         zero_tol: float = 1e-9) -> dict[str, int]:
    """Counts of correct/incorrect absences and presences, and unknowns.

    Only directed edges are scored; confounding is not part of the counts.
    """
    if pred.n != truth.n:
        raise ValueError(f"prediction has n={pred.n}, truth has n={truth.n}")
    out = dict.fromkeys(COUNT_FIELDS, 0)
    for (i, j) in pred.pairs():
        status, _ = pred.get(i, j)
        is_edge = abs(truth.B[j, i]) >= zero_tol
        if status == ABSENT:
            out["incorrect_absent" if is_edge else "correct_absent"] += 1
        elif status == PRESENT:
            out["correct_present" if is_edge else "incorrect_present"] += 1
        else:
            out["unknown"] += 1
    return out


@dataclass
class BenchmarkConfig:
    model_count: int = 20  # 100 for the full run
    n: int = 6
    edge_prob: float = 0.2
    confounder_prob: float = 0.15
    experiments_per_model: int = 5
    sample_sizes: list[SampleSize] = field(default_factory=lambda: [1000, 10000, INFINITE])
    algorithms: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    seed: int = 0
    output: Optional[str] = None
    alpha: float = 0.05
    max_cond_size: Optional[int] = None
    zero_tol: Optional[float] = None

    def __post_init__(self):
        self.sample_sizes = [INFINITE if s == INFINITE else int(s) for s in self.sample_sizes]
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}")
        if self.model_count < 1 or self.n < 2 or self.experiments_per_model < 1:
            raise ValueError("model_count, experiments_per_model >= 1 and n >= 2 required")

    @classmethod
    def full(cls, **kw) -> "BenchmarkConfig":
        return cls(model_count=100, **kw)

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> "BenchmarkConfig":
        return cls(**json.loads(Path(path).read_text()))

    def algorithm_config(self, size: SampleSize) -> AlgorithmConfig:
        kw = dict(alpha=self.alpha, seed=self.seed)
        if self.max_cond_size is not None:
            kw["max_cond_size"] = self.max_cond_size
        if self.zero_tol is not None:
            kw["zero_tol"] = self.zero_tol
        return AlgorithmConfig.exact(**kw) if size == INFINITE else AlgorithmConfig.finite(**kw)


@dataclass
class ScoreTable:
    """Summed counts per ``(algorithm, sample size)`` cell."""

    cells: dict[tuple[str, str], dict[str, int]] = field(default_factory=dict)
    models: int = 0
    failures: int = 0

    def add(self, algorithm: str, size: SampleSize, counts: dict[str, int]) -> None:
        cell = self.cells.setdefault((algorithm, str(size)),
                                     dict.fromkeys(COUNT_FIELDS + EXTRA_FIELDS, 0))
        for k in COUNT_FIELDS:
            cell[k] += counts[k]
        for k in EXTRA_FIELDS:
            cell[k] += counts.get(k, 0)

    def get(self, algorithm: str, size: SampleSize) -> dict[str, int]:
        return self.cells[(algorithm, str(size))]

    @staticmethod
    def percent(correct: int, incorrect: int) -> Optional[float]:
        tot = correct + incorrect
        return 100.0 * correct / tot if tot else None

    def rows(self) -> list[dict]:
        out = []
        for (alg, size), c in sorted(self.cells.items()):
            out.append({
                "algorithm": alg, "sample_size": size, **c,
                "pct_correct_absent": self.percent(c["correct_absent"], c["incorrect_absent"]),
                "pct_correct_present": self.percent(c["correct_present"], c["incorrect_present"]),
            })
        return out

    def to_json(self) -> str:
        return json.dumps({"models": self.models, "failures": self.failures, "cells": self.rows()},
                          indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        fields = ["algorithm", "sample_size", *COUNT_FIELDS, *EXTRA_FIELDS,
                  "pct_correct_absent", "pct_correct_present"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r[k] is None else r[k]) for k in fields})
        return buf.getvalue()

    def __str__(self):
        head = f"{'algorithm':<8} {'N':>9} {'abs ok':>7} {'abs bad':>7} {'pres ok':>7} {'pres bad':>8} {'unknown':>7}"
        lines = [head]
        for r in self.rows():
            lines.append(f"{r['algorithm']:<8} {r['sample_size']:>9} {r['correct_absent']:>7} "
                         f"{r['incorrect_absent']:>7} {r['correct_present']:>7} "
                         f"{r['incorrect_present']:>8} {r['unknown']:>7}")
        lines.append(f"models={self.models} failures={self.failures}")
        return "\n".join(lines)


def _model_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(count)


def run_model(config: BenchmarkConfig, index: int, ss: np.random.SeedSequence) -> list[dict]:
    """All algorithm x sample-size results for one model, as raw records."""
    model_ss, exp_ss, data_ss = ss.spawn(3)
    model = random_model(config.n, config.edge_prob, config.confounder_prob,
                         rng_seed=np.random.default_rng(model_ss))
    specs = random_experiments(config.n, config.experiments_per_model, np.random.default_rng(exp_ss))
    data_rng = np.random.default_rng(data_ss)
    true_edges = int(np.count_nonzero(model.B))
    records = []
    for size in config.sample_sizes:
        if size == INFINITE:
            datasets = [exact_dataset(model, s) for s in specs]
        else:
            datasets = [sample_data(model, s, size, data_rng) for s in specs]
        acfg = config.algorithm_config(size)
        store = None
        for alg in config.algorithms:
            t0 = time.perf_counter()
            if alg in ("heh", "bilin", "lininf"):
                # LININF grows the store, so each algorithm gets a fresh copy
                store = faithfulness_store(datasets, acfg)
            pred = run_algorithm(alg, datasets, acfg, config.n, store)
            counts = evaluate_predictions(pred, model)
            records.append({"model": index, "algorithm": alg, "sample_size": str(size),
                            "seconds": round(time.perf_counter() - t0, 4), "true_edges": true_edges,
                            **counts})
    return records


def run_benchmark(config: BenchmarkConfig, raw_path: Optional[Union[str, Path]] = None) -> ScoreTable:
    """Run the protocol; per-model failures are logged and counted, not dropped silently."""
    table = ScoreTable()
    raw = open(raw_path, "w") if raw_path else None
    try:
        for idx, ss in enumerate(_model_seeds(config.seed, config.model_count)):
            try:
                records = run_model(config, idx, ss)
            except Exception as err:  # one bad model must not sink the run
                logger.error("model %d failed: %s: %s", idx, type(err).__name__, err)
                table.failures += 1
                if raw:
                    raw.write(json.dumps({"model": idx, "error": f"{type(err).__name__}: {err}"}) + "\n")
                continue
            table.models += 1
            for r in records:
                table.add(r["algorithm"], r["sample_size"], r)
                if raw:
                    raw.write(json.dumps(r) + "\n")
    finally:
        if raw:
            raw.close()
    return table


def write_outputs(table: ScoreTable, stem: Union[str, Path]) -> list[Path]:
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    paths = [stem.with_suffix(".csv"), stem.with_suffix(".json")]
    paths[0].write_text(table.to_csv())
    paths[1].write_text(table.to_json())
    return paths


def config_dict(config: BenchmarkConfig) -> dict:
    return asdict(config)
