import json

import numpy as np
import pytest

from lincycle.experiments import EffectKey, ExperimentSpec, exact_dataset
from lincycle.faithfulness import (ConstraintConflict, ConstraintStore, EffectZero, ProductZero,
                                   derive_constraints, expand_products, rule_no_common_cause,
                                   rule_no_directed_path, rule_unshielded_collider)
from lincycle.independence import MinimalRecord, find_minimal_records
from lincycle.model import random_model, true_experimental_effect

S = ExperimentSpec.make
K = lambda s, t, *J: EffectKey(s, t, frozenset(J))


def rec(kind, x, y, C=(), D=()):
    return MinimalRecord(kind, x, y, frozenset(D), frozenset(C))


def zeros_of(cs):
    return {c.key for c in cs if isinstance(c, EffectZero)}


def products_of(cs):
    return {(c.a, c.b) for c in cs if isinstance(c, ProductZero)}


def test_intervened_separator_example():
    cs = derive_constraints([rec("independence", 0, 2, C=[1])], S(3, J=[1]))
    assert zeros_of(cs) == {K(0, 2, 0, 1), K(2, 0, 2, 1)}


def test_marginal_independence_and_products_example(M5):
    cs = derive_constraints([rec("independence", 0, 1)], S(3))
    assert {K(0, 1, 0), K(1, 0, 1)} <= zeros_of(cs)
    assert (K(0, 2, 0), K(2, 1, 2)) in products_of(cs)
    # on the true collider the first factor is 0.8, so the second must vanish
    assert true_experimental_effect(M5, K(0, 2, 0)) == pytest.approx(0.8)
    assert true_experimental_effect(M5, K(2, 1, 2)) == 0.0


def test_empty_records():
    assert derive_constraints([], S(3)) == []


def test_unshielded_collider_rule(M5):
    d = exact_dataset(M5, S(3))
    recs = find_minimal_records(d)
    cs = list(rule_unshielded_collider(rec("dependence", 0, 1, C=[2]), d.spec))
    assert zeros_of(cs) == {K(2, 0, 2), K(2, 1, 2)}
    # an intervened middle variable is not a collider witness
    assert list(rule_unshielded_collider(rec("dependence", 0, 1, C=[2]), S(3, J=[2]))) == []
    assert {K(2, 0, 2), K(2, 1, 2)} <= zeros_of(derive_constraints(recs, d.spec))


def test_no_common_cause_rule():
    cs = list(rule_no_common_cause(rec("independence", 0, 1), S(3)))
    assert products_of(cs) == {(K(2, 0, 2), K(2, 1, 2))}
    assert list(rule_no_common_cause(rec("independence", 0, 1), S(3, J=[0]))) == []


def test_rules_ignore_wrong_kind():
    spec = S(3)
    assert list(rule_no_directed_path(rec("dependence", 0, 1), spec)) == []
    assert list(rule_no_directed_path(rec("independence", 0, 1, C=[2]), spec)) == []  # C not intervened
    assert list(rule_unshielded_collider(rec("independence", 0, 1, C=[2]), spec)) == []


def test_expand_products():
    ps = expand_products(EffectZero(K(0, 3, 0, 1)), 4)
    assert {(p.a, p.b) for p in ps} == {(K(0, 2, 0, 1), K(2, 3, 1, 2))}


def test_hidden_variable_record_rejected():
    with pytest.raises(ValueError):
        derive_constraints([rec("independence", 0, 1)], S(3, J=[2], L=[1]))


def test_implied_zero_examples():
    st = ConstraintStore([EffectZero(K(0, 2, 0, 1))])
    assert st.implied_zero(K(0, 2, 0, 1, 3))
    assert not st.implied_zero(K(0, 2, 0))
    assert not ConstraintStore().implied_zero(K(0, 2, 0))


def test_store_keeps_minimal_sets_and_is_monotone():
    st = ConstraintStore()
    assert st.add_zero(K(0, 2, 0, 1, 3))
    assert st.add_zero(K(0, 2, 0, 1))
    assert not st.add_zero(K(0, 2, 0, 1, 3))  # already implied
    assert st._zeros[(0, 2)] == [frozenset({0, 1})]
    assert st.implied_zero(K(0, 2, 0, 1, 3))


def test_product_superset_closure():
    st = ConstraintStore([ProductZero(K(0, 2, 0), K(2, 1, 2))])
    assert st.product_implied_zero(K(0, 2, 0, 3), K(2, 1, 2, 3))
    assert st.product_implied_zero(K(2, 1, 2), K(0, 2, 0))  # order-free
    assert not st.product_implied_zero(K(0, 2, 0), K(2, 3, 2))


def test_resolve_products_examples():
    a, b = K(0, 2, 0), K(2, 1, 2)
    st = ConstraintStore([ProductZero(a, b)])
    assert st.resolve_products({}) == []  # both unknown
    new = st.resolve_products({a: 0.8})
    assert [z.key for z in new] == [b] and st.implied_zero(b)

    st = ConstraintStore([ProductZero(a, b), EffectZero(a)])
    assert st.resolve_products({b: 0.5}) == []  # already satisfied

    st = ConstraintStore([ProductZero(a, b)])
    assert st.resolve_products({a: 0.8, b: 0.5}) == []
    assert len(st.conflicts) == 1
    st = ConstraintStore([ProductZero(a, b)])
    with pytest.raises(ConstraintConflict):
        st.resolve_products({a: 0.8, b: 0.5}, strict=True)


def test_jsonl():
    st = ConstraintStore([EffectZero(K(0, 1, 0), "r"), ProductZero(K(0, 2, 0), K(2, 1, 2), "p")])
    lines = [json.loads(l) for l in st.to_jsonl().splitlines()]
    assert [l["variant"] for l in lines] == ["effect_zero", "product_zero"]
    # a product with an already-zero factor adds nothing
    assert not st.add(ProductZero(K(0, 1, 0), K(1, 2, 1)))


def check_soundness(model, spec):
    d = exact_dataset(model, spec)
    bad = []
    for c in derive_constraints(find_minimal_records(d), spec):
        if isinstance(c, EffectZero):
            if abs(true_experimental_effect(model, c.key)) >= 1e-9:
                bad.append(c)
        elif min(abs(true_experimental_effect(model, c.a)),
                 abs(true_experimental_effect(model, c.b))) >= 1e-9:
            bad.append(c)
    return bad


def test_soundness_fixtures(M3, M4, M5):
    for m in (M3, M4, M5):
        for J in [(), (0,), (1,), (2,), (0, 1), (1, 2)]:
            assert check_soundness(m, S(3, J=J)) == []


def test_soundness_random_with_latents():
    rng = np.random.default_rng(1)
    for seed in range(15):
        m = random_model(4, edge_prob=0.25, rng_seed=seed)
        for _ in range(4):
            roles = rng.integers(0, 3, 4)
            if not (roles == 1).any():
                continue
            spec = ExperimentSpec(*(frozenset(np.flatnonzero(roles == r).tolist()) for r in range(3)))
            assert check_soundness(m, spec) == []
