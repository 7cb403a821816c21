import itertools

import numpy as np
import pytest
from scipy import stats

from lincycle.experiments import ExperimentSpec, exact_dataset, sample_data
from lincycle.independence import (MinimalRecord, UntestableError, find_minimal_records,
                                   fisher_z_pvalue, partial_correlation, test_independence as ci_test)
from lincycle.model import LinearCyclicModel, manipulate, random_model

from oracles import series_covariance, spectral_radius

S = ExperimentSpec.make


def _records(recs):
    return {(r.kind, r.x, r.y, r.D, r.C) for r in recs}


def test_partial_correlation_against_regression():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(500, 4)) @ rng.normal(size=(4, 4))
    C = np.cov(X.T)
    # residual correlation after regressing out columns 2, 3
    Z = np.c_[X[:, 2:], np.ones(500)]
    rx = X[:, 0] - Z @ np.linalg.lstsq(Z, X[:, 0], rcond=None)[0]
    ry = X[:, 1] - Z @ np.linalg.lstsq(Z, X[:, 1], rcond=None)[0]
    assert partial_correlation(C, 0, 1, [2, 3]) == pytest.approx(np.corrcoef(rx, ry)[0, 1], abs=1e-10)
    with pytest.raises(UntestableError):
        partial_correlation(np.ones((3, 3)), 0, 1, [2])


def test_fisher_z():
    r, N = 0.1, 400
    z = np.sqrt(N - 3) * np.arctanh(r)
    assert fisher_z_pvalue(r, N, 0) == pytest.approx(2 * stats.norm.sf(z))
    assert fisher_z_pvalue(0.0, 100, 2) == pytest.approx(1.0)


def test_examples(M0, M4, M5):
    assert ci_test(exact_dataset(M0, S(2)), 0, 1)
    d4 = exact_dataset(M4, S(3, J=[1]))
    assert not ci_test(d4, 0, 2) and ci_test(d4, 0, 2, [1])
    d5 = exact_dataset(M5, S(3))
    assert ci_test(d5, 0, 1) and not ci_test(d5, 0, 1, [2])


def test_symmetry():
    m = random_model(5, edge_prob=0.4, rng_seed=1)
    d = sample_data(m, S(5, J=[0]), 300, rng_seed=2)
    for x, y in itertools.combinations(range(5), 2):
        rest = [v for v in range(5) if v not in (x, y)]
        for C in [(), rest[:1], rest[:2]]:
            assert ci_test(d, x, y, C) == ci_test(d, y, x, C)


def test_finite_sample_independence():
    m = LinearCyclicModel(np.zeros((2, 2)), np.eye(2))
    rejections = sum(not ci_test(sample_data(m, S(2), 500, rng_seed=s), 0, 1) for s in range(200))
    assert rejections < 25  # about alpha = 5% of 200


def test_hidden_variable_rejected(M3):
    d = exact_dataset(M3, S(3, J=[0], L=[1]))
    with pytest.raises(ValueError):
        ci_test(d, 0, 1)


def test_minimal_records_examples(M0, M4, M5):
    r4 = _records(find_minimal_records(exact_dataset(M4, S(3, J=[1])), 1))
    assert ("independence", 0, 2, frozenset(), frozenset({1})) in r4
    r5 = _records(find_minimal_records(exact_dataset(M5, S(3)), 1))
    assert ("independence", 0, 1, frozenset(), frozenset()) in r5
    assert ("dependence", 0, 1, frozenset(), frozenset({2})) in r5
    r0 = _records(find_minimal_records(exact_dataset(M0, S(2)), 0))
    assert r0 == {("independence", 0, 1, frozenset(), frozenset())}


def test_minimality_by_construction():
    for seed in range(5):
        m = random_model(5, edge_prob=0.3, rng_seed=seed)
        d = exact_dataset(m, S(5, J=[seed % 5]))
        for rec in find_minimal_records(d):
            full = ci_test(d, rec.x, rec.y, sorted(rec.D | rec.C))
            assert full == rec.independent
            for k in range(len(rec.C)):
                for sub in itertools.combinations(sorted(rec.C), k):
                    assert ci_test(d, rec.x, rec.y, sorted(rec.D | set(sub))) != rec.independent


def test_record_normalises_order():
    r = MinimalRecord("independence", 3, 1, frozenset(), frozenset({0}))
    assert (r.x, r.y) == (1, 3)
    assert str(r) == "x2 _||_ x4 | [x1]"
    with pytest.raises(ValueError):
        MinimalRecord("independence", 1, 2, frozenset(), frozenset({1}))


def test_exact_judgments_match_series_covariance():
    """Judgments on the closed form agree with judgments on a power-series covariance."""
    checked = 0
    for seed in range(30):
        m = random_model(4, edge_prob=0.35, rng_seed=seed)
        for J in [(), (0,), (2, 3)]:
            mm = manipulate(m, J)
            if spectral_radius(mm.B_tilde) > 0.8:
                continue
            spec = S(4, J=J)
            d = exact_dataset(m, spec)
            ref = series_covariance(mm.B_tilde, mm.Sigma_e_tilde + mm.Sigma_c, terms=400)
            for x, y in itertools.combinations(range(4), 2):
                rest = [v for v in range(4) if v not in (x, y)]
                for k in range(3):
                    for C in itertools.combinations(rest, k):
                        r = partial_correlation(ref, x, y, C)
                        assert ci_test(d, x, y, C) == (abs(r) < 1e-9)
                        checked += 1
    assert checked > 100
