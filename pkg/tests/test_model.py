import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lincycle.experiments import EffectKey
from lincycle.model import (LinearCyclicModel, StabilityError, check_weak_stability,
                            equilibrium_covariance, experimental_effects, manipulate, random_model,
                            single_intervention_effects, total_effects, true_experimental_effect)

from conftest import build_model
from oracles import is_nilpotent_support, series_covariance, simple_path_effect, spectral_radius


def test_model_validation():
    with pytest.raises(ValueError):
        LinearCyclicModel(np.ones((2, 2)), np.eye(2))  # nonzero diagonal
    with pytest.raises(ValueError):
        LinearCyclicModel(np.zeros((2, 2)), np.array([[1.0, 2.0], [2.0, 1.0]]))  # not PSD
    with pytest.raises(ValueError):
        LinearCyclicModel(np.zeros((2, 2)), np.array([[1.0, 0.3], [0.1, 1.0]]))  # not symmetric
    with pytest.raises(ValueError):
        LinearCyclicModel(np.zeros((2, 3)), np.eye(2))


def test_model_json_roundtrip(tmp_path, M2):
    p = tmp_path / "m.json"
    M2.save(p)
    back = LinearCyclicModel.load(p)
    assert np.array_equal(back.B, M2.B) and np.array_equal(back.Sigma_e, M2.Sigma_e)
    bad = M2.to_dict()
    bad["B"][0][0] = 0.3
    with pytest.raises(ValueError):
        LinearCyclicModel.from_dict(bad)


def test_manipulate_examples(M2, M3):
    mm = manipulate(M2, [0])
    assert np.array_equal(mm.B_tilde, [[0, 0], [0.5, 0]])
    assert np.array_equal(mm.Sigma_e_tilde, np.diag([0.0, 1.0]))
    assert np.array_equal(mm.Sigma_c, np.diag([1.0, 0.0]))

    null = manipulate(M2, [])
    assert np.array_equal(null.B_tilde, M2.B)
    assert np.array_equal(null.Sigma_e_tilde, M2.Sigma_e)
    assert not null.Sigma_c.any()

    mm3 = manipulate(M3, [1])
    assert mm3.B_tilde[1, 0] == 0.0 and mm3.B_tilde[2, 1] == 0.7

    with pytest.raises(IndexError):
        manipulate(M2, [5])


def test_equilibrium_covariance_examples(M0, M2):
    assert np.allclose(equilibrium_covariance(manipulate(M0, [])), np.eye(2))
    assert np.allclose(equilibrium_covariance(manipulate(M2, [0])), [[1, 0.5], [0.5, 1.25]])
    assert np.allclose(equilibrium_covariance(manipulate(M2, [])),
                       [[1.8125, 1.40625], [1.40625, 1.953125]])


def test_total_effects_examples(M0, M2, M3):
    assert np.allclose(total_effects(M0), np.eye(2))
    assert np.allclose(total_effects(M2), [[1.25, 0.5], [0.625, 1.25]])
    assert total_effects(M3)[2, 0] == pytest.approx(0.56)


def test_single_intervention_effects_cycle(M2):
    # in a cycle the total effect carries the loop gain, the single-intervention effect does not
    E = single_intervention_effects(M2)
    assert E[1, 0] == pytest.approx(0.5)
    assert E[1, 0] == pytest.approx(true_experimental_effect(M2, EffectKey(0, 1, frozenset({0}))))
    assert total_effects(M2)[1, 0] == pytest.approx(total_effects(M2)[0, 0] * E[1, 0])


def test_true_experimental_effect_examples(M2, M3):
    assert true_experimental_effect(M3, EffectKey(0, 2, frozenset({0}))) == pytest.approx(0.56)
    assert abs(true_experimental_effect(M3, EffectKey(0, 2, frozenset({0, 1})))) < 1e-15
    # with n = 2 the direct-effect key for x1 -> x2 intervenes on V \ {x2} = {x1}
    assert true_experimental_effect(M2, EffectKey(0, 1, frozenset({0}))) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        true_experimental_effect(M3, EffectKey(0, 5, frozenset({0})))


def test_singular_reported(M0):
    m = build_model(2, {(1, 2): 1.0, (2, 1): 1.0})
    rep = check_weak_stability(m)
    assert not rep.ok and rep.violating_subset == frozenset()
    with pytest.raises(StabilityError):
        total_effects(m)
    with pytest.raises(StabilityError):
        equilibrium_covariance(manipulate(m, []))


def test_weak_stability_examples(M0, M2):
    assert check_weak_stability(M2).ok and check_weak_stability(M2).subsets_checked == 4
    assert check_weak_stability(M0).ok
    assert check_weak_stability(M2, exhaustive=False).subsets_checked == 3


def test_weak_stability_catches_subset_only_failure():
    # I - B is invertible, but intervening on x3 leaves the unit 2-cycle x1 <-> x2
    m = build_model(3, {(1, 2): 1.0, (2, 1): 1.0, (3, 1): 0.5, (1, 3): 0.5})
    full = check_weak_stability(m)
    assert not full.ok
    assert np.linalg.matrix_rank(np.eye(3) - m.B) == 3  # the null experiment alone is fine
    assert full.violating_subset == frozenset({2})


def test_random_model_properties():
    assert not random_model(5, edge_prob=0.0, rng_seed=1).B.any()
    a, b = random_model(6, rng_seed=42), random_model(6, rng_seed=42)
    assert np.array_equal(a.B, b.B) and np.array_equal(a.Sigma_e, b.Sigma_e)
    for seed in range(20):
        m = random_model(6, rng_seed=seed)
        assert check_weak_stability(m).ok
        assert np.allclose(np.diag(m.Sigma_e), 1.0)
        assert np.linalg.eigvalsh(m.Sigma_e).min() > 0
        mags = np.abs(m.B[m.B != 0])
        assert np.all((mags >= 0.2) & (mags <= 0.8))
    with pytest.raises(ValueError):
        random_model(3, edge_prob=1.5)


def test_random_model_edge_density():
    # about 20% of the 30 possible edges per 6-variable model
    total = sum(int((random_model(6, rng_seed=s).B != 0).sum()) for s in range(100))
    assert 500 < total < 700


models = st.builds(
    lambda n, seed, p: random_model(n, edge_prob=p, rng_seed=seed),
    st.integers(2, 5), st.integers(0, 10_000), st.sampled_from([0.2, 0.4, 0.6]),
)


@settings(max_examples=60, deadline=None)
@given(models, st.data())
def test_inverse_identity_every_subset(model, data):
    n = model.n
    J = data.draw(st.sets(st.integers(0, n - 1)))
    mm = manipulate(model, J)
    T = experimental_effects(model, J)
    assert np.allclose(T @ (np.eye(n) - mm.B_tilde), np.eye(n), atol=1e-9)
    C = equilibrium_covariance(mm)
    assert np.allclose(C, C.T, atol=1e-12)
    assert np.linalg.eigvalsh(C).min() > -1e-9


@settings(max_examples=60, deadline=None)
@given(models)
def test_direct_effect_identity(model):
    n = model.n
    for i in range(n):
        for j in range(n):
            if i != j:
                key = EffectKey(i, j, frozenset(range(n)) - {j})
                assert true_experimental_effect(model, key) == pytest.approx(model.B[j, i], abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 10_000))
def test_acyclic_series_oracle(n, seed):
    rng = np.random.default_rng(seed)
    B = np.tril(rng.uniform(-0.9, 0.9, (n, n)) * (rng.random((n, n)) < 0.5), -1)
    perm = rng.permutation(n)
    B = B[np.ix_(perm, perm)]
    m = LinearCyclicModel(B, np.eye(n))
    assert is_nilpotent_support(B)
    series = sum(np.linalg.matrix_power(B, k) for k in range(n))
    assert np.allclose(total_effects(m), series, atol=1e-9)
    for J in [(), (0,), tuple(range(0, n, 2))]:
        for s in J or (0,):
            for t in range(n):
                if t in J or t == s:
                    continue
                key = EffectKey(s, t, frozenset(J) | {s})
                ref = simple_path_effect(B, s, t, key.J)
                assert true_experimental_effect(m, key) == pytest.approx(ref, abs=1e-9)


def test_covariance_matches_power_series():
    for seed in range(10):
        m = random_model(5, rng_seed=seed)
        for J in [(), (1,), (0, 3)]:
            mm = manipulate(m, J)
            if spectral_radius(mm.B_tilde) >= 0.9:
                continue
            ref = series_covariance(mm.B_tilde, mm.Sigma_e_tilde + mm.Sigma_c)
            assert np.allclose(equilibrium_covariance(mm), ref, atol=1e-9)
