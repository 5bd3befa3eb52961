import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from psmoa import formats
from psmoa.model import GB
from psmoa.policy import (AdaptationParams, Condition, ConditionalRule, ConstraintRule, PolicyConflictError,
                          PolicyError, PolicySpec, Signals, adapt, adapt_raw, apply_conditional_rules, classify,
                          effective_alpha, normalize_alpha)

from conftest import make_scenario

CRITICAL_RULE = """
format: psmoa-policy/1
alpha: [0.2, 0.4, 0.2, 0.2]
mode: multi_objective
hard_constraints:
  - {kind: max_storage_per_node, threshold: 500GB}
conditional_rules:
  - name: critical-data
    if: {data_type: critical}
    then: {min_replicas: 3, max_replication_time: 1hr}
"""


@pytest.mark.parametrize("raw,expected", [
    ((1, 1, 1, 1), (0.25, 0.25, 0.25, 0.25)),
    ((0.4, 0.2, 0.3, 0.1), (0.4, 0.2, 0.3, 0.1)),
    ((2, 0, 0, 0), (1, 0, 0, 0)),
])
def test_normalize_alpha(raw, expected):
    assert np.allclose(normalize_alpha(raw), expected, atol=1e-15)


@pytest.mark.parametrize("bad", [(0, 0, 0, 0), (1, -1, 1, 1), (1, 1, 1)])
def test_normalize_alpha_rejects(bad):
    with pytest.raises(PolicyError):
        normalize_alpha(bad)


def test_adapt_zero_signals_is_base():
    p = AdaptationParams(alpha_base=(0.4, 0.2, 0.3, 0.1))
    assert np.allclose(adapt(p, Signals()), [0.4, 0.2, 0.3, 0.1])


def test_adapt_caps_load():
    p = AdaptationParams(lam=5.0, alpha_max=0.4)
    raw = adapt_raw(p, Signals(utilization_rate=1.0))
    assert raw[3] == 0.4


def test_adapt_worked_example():
    p = AdaptationParams(lam=0.2, beta=0.0, gamma=0.0, alpha_max=0.4)
    raw = adapt_raw(p, Signals(utilization_rate=0.5), (0.25, 0.25, 0.25, 0.25))
    assert np.allclose(raw, [0.25, 0.25, 0.25, 0.35])
    out = adapt(p, Signals(utilization_rate=0.5), (0.25, 0.25, 0.25, 0.25))
    assert np.allclose(out, [0.25 / 1.1] * 3 + [0.35 / 1.1], rtol=1e-12)
    assert round(out[0], 4) == 0.2273 and round(out[3], 4) == 0.3182


def test_adapt_cost_and_popularity_rules():
    p = AdaptationParams(lam=0.0, beta=0.3, gamma=0.2)
    raw = adapt_raw(p, Signals(budget_proximity=1.0, access_frequency=0.5))
    assert np.allclose(raw, [0.25, 0.25 * 1.3, 0.25 * 1.1, 0.25])


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 3))
def test_adapt_invariants(u1, u2, budget, access):
    p = AdaptationParams()
    lo, hi = sorted((u1, u2))
    a = adapt(p, Signals(lo, budget, access))
    assert a.sum() == pytest.approx(1.0, abs=1e-9)
    assert a[3] <= p.alpha_max + 1e-12
    assert adapt_raw(p, Signals(lo, budget, access))[3] <= adapt_raw(p, Signals(hi, budget, access))[3]


def test_adaptation_param_validation():
    with pytest.raises(PolicyError):
        AdaptationParams(lam=-1)
    with pytest.raises(PolicyError):
        AdaptationParams(alpha_max=0.2, alpha_base=(0.1, 0.1, 0.1, 0.7))
    with pytest.raises(PolicyError):
        Signals(utilization_rate=1.5)


@pytest.mark.parametrize("policy,kind,index", [
    (None, "no_policy", None),
    (PolicySpec(), "no_policy", None),
    (PolicySpec(alpha=(1, 0, 0, 0)), "single_objective", 0),
    (PolicySpec(alpha=(0.2, 0.4, 0.2, 0.2), mode="multi_objective"), "multi_objective", None),
    (PolicySpec(alpha=(0.2, 0.4, 0.2, 0.2)), "multi_objective", None),
    (PolicySpec(mode="single_objective", single_index=2), "single_objective", 2),
])
def test_classify(policy, kind, index):
    c = classify(policy)
    assert (c.kind, c.index) == (kind, index)


def test_critical_object_rule():
    policy = formats.loads_policy(CRITICAL_RULE)
    sc = make_scenario([1 * GB, 2 * GB], [1.0, 1.0, 1.0], [0.0] * 3, tags=["critical", "normal"])
    eff = apply_conditional_rules(policy, sc)
    assert eff[0].thresholds == {"max_storage_per_node": 500 * GB, "min_replicas": 3,
                                 "max_replication_time": 3600}
    assert eff[0].triggered == ("critical-data",)
    assert eff[1].thresholds == {"max_storage_per_node": 500 * GB}


def test_no_rules_gives_hard_constraints_only():
    policy = PolicySpec(hard_constraints=(ConstraintRule("min_replicas", 2),))
    sc = make_scenario([1.0, 2.0], [1.0, 1.0], [0.0, 0.0])
    assert [e.thresholds for e in apply_conditional_rules(policy, sc)] == [{"min_replicas": 2}] * 2


def test_most_restrictive_wins_regardless_of_order():
    sc = make_scenario([10.0], [1.0, 1.0, 1.0], [0.0] * 3, tags=["critical"])
    r2 = ConditionalRule(Condition("critical"), (ConstraintRule("min_replicas", 2),
                                                 ConstraintRule("max_replication_time", 100)))
    r3 = ConditionalRule(Condition(min_size=5.0), (ConstraintRule("min_replicas", 3),
                                                   ConstraintRule("max_replication_time", 50)))
    for rules in ((r2, r3), (r3, r2)):
        eff = apply_conditional_rules(PolicySpec(conditional_rules=rules), sc)[0]
        assert eff.thresholds == {"min_replicas": 3, "max_replication_time": 50}


def test_conflicting_alpha_overrides():
    sc = make_scenario([10.0], [1.0], [0.0], tags=["critical"])
    a = ConditionalRule(Condition("critical"), alpha=(1, 0, 0, 0))
    b = ConditionalRule(Condition(min_size=1.0), alpha=(0, 1, 0, 0))
    with pytest.raises(PolicyConflictError):
        apply_conditional_rules(PolicySpec(conditional_rules=(a, b)), sc)


def test_effective_alpha_averages_overrides():
    sc = make_scenario([10.0, 1.0], [1.0], [0.0], tags=["critical", "normal"])
    rule = ConditionalRule(Condition("critical"), alpha=(1, 0, 0, 0))
    policy = PolicySpec(alpha=(0, 1, 0, 0), mode="multi_objective", conditional_rules=(rule,))
    assert np.allclose(effective_alpha(policy, sc), [0.5, 0.5, 0, 0])
    assert np.allclose(effective_alpha(PolicySpec(), sc), 0.25)


def test_invalid_constraint_kind():
    with pytest.raises(PolicyError, match="unknown constraint kind"):
        ConstraintRule("max_fun", 1.0)
    with pytest.raises(PolicyError):
        ConstraintRule("min_replicas", 0)


def test_policy_yaml_round_trip():
    policy = formats.loads_policy(CRITICAL_RULE)
    assert formats.loads_policy(formats.dumps_policy(policy)) == policy


def test_policy_errors_carry_line_numbers():
    bad = CRITICAL_RULE.replace("min_replicas: 3", "min_replicaz: 3")
    with pytest.raises(formats.ConfigError) as info:
        formats.loads_policy(bad, "p.yaml")
    assert info.value.line == 10
    assert "p.yaml:10" in str(info.value)
