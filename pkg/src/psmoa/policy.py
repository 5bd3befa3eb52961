"""Organizational policies: preference vectors, constraints and adaptation."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

OBJECTIVE_NAMES = ("time", "cost", "popularity", "load")
TIME, COST, POPULARITY, LOAD = range(4)

# kind -> True when a larger threshold is *more* restrictive
CONSTRAINT_KINDS: Dict[str, bool] = {
    "max_storage_per_node": False,
    "max_replication_rate": False,
    "monthly_cost_cap": False,
    "max_replication_time": False,
    "min_replicas": True,
    "min_regions": True,
}
PER_OBJECT_KINDS = ("max_replication_time", "min_replicas", "min_regions")
GLOBAL_KINDS = ("max_storage_per_node", "max_replication_rate", "monthly_cost_cap")

MODES = ("none", "single_objective", "multi_objective")
_MASS_EPS = 1e-9


class PolicyError(ValueError):
    """Invalid policy content."""


class PolicyConflictError(PolicyError):
    """Two triggered rules disagree on an object's preference vector."""


def normalize_alpha(alpha: Sequence[float]) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if a.shape != (4,):
        raise PolicyError(f"alpha needs 4 components, got {a.shape}")
    if np.any(a < 0) or not np.all(np.isfinite(a)):
        raise PolicyError("alpha components must be finite and >= 0")
    total = a.sum()
    if total <= 0:
        raise PolicyError("alpha has no mass")
    return a / total


@dataclass(frozen=True)
class ConstraintRule:
    kind: str
    threshold: float

    def __post_init__(self):
        if self.kind not in CONSTRAINT_KINDS:
            raise PolicyError(f"unknown constraint kind {self.kind!r}; valid: {sorted(CONSTRAINT_KINDS)}")
        if not self.threshold > 0:
            raise PolicyError(f"{self.kind}: threshold must be > 0")


@dataclass(frozen=True)
class Condition:
    """Predicate over a data object: type tag equality and/or minimum size in bytes."""

    type_tag: Optional[str] = None
    min_size: Optional[float] = None

    def __post_init__(self):
        if self.type_tag is None and self.min_size is None:
            raise PolicyError("condition needs a type_tag or a min_size")

    def matches(self, obj) -> bool:
        if self.type_tag is not None and obj.type_tag != self.type_tag:
            return False
        if self.min_size is not None and obj.size < self.min_size:
            return False
        return True


@dataclass(frozen=True)
class ConditionalRule:
    condition: Condition
    effects: Tuple[ConstraintRule, ...] = ()
    alpha: Optional[Tuple[float, ...]] = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "effects", tuple(self.effects))
        if not self.effects and self.alpha is None:
            raise PolicyError(f"rule {self.name or '?'}: effects must be nonempty")
        if self.alpha is not None:
            object.__setattr__(self, "alpha", tuple(float(x) for x in normalize_alpha(self.alpha)))


@dataclass(frozen=True)
class AdaptationParams:
    lam: float = 0.1
    beta: float = 0.3
    gamma: float = 0.2
    alpha_max: float = 0.4
    alpha_base: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if min(self.lam, self.beta, self.gamma) < 0:
            raise PolicyError("adaptation coefficients must be >= 0")
        if not 0 < self.alpha_max <= 1:
            raise PolicyError("alpha_max must lie in (0, 1]")
        if self.alpha_base is not None:
            base = normalize_alpha(self.alpha_base)
            if base[LOAD] > self.alpha_max + _MASS_EPS:
                raise PolicyError("alpha_base load component exceeds alpha_max")
            object.__setattr__(self, "alpha_base", tuple(float(x) for x in base))


@dataclass(frozen=True)
class Signals:
    utilization_rate: float = 0.0
    budget_proximity: float = 0.0
    access_frequency: float = 0.0

    def __post_init__(self):
        if not 0 <= self.utilization_rate <= 1:
            raise PolicyError("utilization_rate outside [0, 1]")
        if not 0 <= self.budget_proximity <= 1:
            raise PolicyError("budget_proximity outside [0, 1]")
        if self.access_frequency < 0:
            raise PolicyError("access_frequency must be >= 0")


@dataclass(frozen=True)
class PolicySpec:
    alpha: Tuple[float, ...] = (0.25, 0.25, 0.25, 0.25)
    mode: str = "none"
    single_index: Optional[int] = None
    hard_constraints: Tuple[ConstraintRule, ...] = ()
    conditional_rules: Tuple[ConditionalRule, ...] = ()
    adaptation: AdaptationParams = field(default_factory=AdaptationParams)

    def __post_init__(self):
        object.__setattr__(self, "alpha", tuple(float(x) for x in normalize_alpha(self.alpha)))
        object.__setattr__(self, "hard_constraints", tuple(self.hard_constraints))
        object.__setattr__(self, "conditional_rules", tuple(self.conditional_rules))
        if self.mode not in MODES:
            raise PolicyError(f"unknown mode {self.mode!r}; valid: {list(MODES)}")
        if self.mode == "single_objective":
            if self.single_index is None or not 0 <= self.single_index < 4:
                raise PolicyError("single_objective mode needs an objective index in [0, 3]")

    def base_alpha(self) -> np.ndarray:
        """Baseline for adaptation: explicit ``alpha_base`` or the policy's own alpha."""
        if self.adaptation.alpha_base is not None:
            return np.array(self.adaptation.alpha_base)
        return np.array(self.alpha)

    def with_alpha(self, alpha) -> "PolicySpec":
        return replace(self, alpha=tuple(float(x) for x in alpha))


@dataclass(frozen=True)
class PolicyClass:
    kind: str  # "no_policy" | "single_objective" | "multi_objective"
    index: Optional[int] = None


def classify(policy: Optional[PolicySpec]) -> PolicyClass:
    if policy is None:
        return PolicyClass("no_policy")
    if policy.mode == "single_objective":
        return PolicyClass("single_objective", policy.single_index)
    a = normalize_alpha(policy.alpha)
    top = int(np.argmax(a))
    if np.all(np.delete(a, top) < _MASS_EPS):
        return PolicyClass("single_objective", top)
    if policy.mode == "none" and np.allclose(a, 0.25, atol=_MASS_EPS, rtol=0):
        return PolicyClass("no_policy")
    return PolicyClass("multi_objective")


def adapt_raw(params: AdaptationParams, signals: Signals, base: Optional[Sequence[float]] = None) -> np.ndarray:
    """Apply the three update rules without the final renormalisation."""
    if base is None:
        base = params.alpha_base if params.alpha_base is not None else (0.25,) * 4
    b = normalize_alpha(base)
    out = b.copy()
    out[LOAD] = min(b[LOAD] + params.lam * signals.utilization_rate, params.alpha_max)
    out[COST] = b[COST] * (1.0 + params.beta * signals.budget_proximity)
    out[POPULARITY] = b[POPULARITY] * (1.0 + params.gamma * signals.access_frequency)
    return out


def adapt(params: AdaptationParams, signals: Signals, base: Optional[Sequence[float]] = None) -> np.ndarray:
    return normalize_alpha(adapt_raw(params, signals, base))


@dataclass(frozen=True)
class EffectiveConstraints:
    """Constraint set in force for one data object after rule merging."""

    thresholds: Dict[str, float]
    alpha: Optional[Tuple[float, ...]] = None
    triggered: Tuple[str, ...] = ()


def _merge(into: Dict[str, float], rule: ConstraintRule) -> None:
    current = into.get(rule.kind)
    if current is None:
        into[rule.kind] = rule.threshold
    elif CONSTRAINT_KINDS[rule.kind]:
        into[rule.kind] = max(current, rule.threshold)
    else:
        into[rule.kind] = min(current, rule.threshold)


def apply_conditional_rules(policy: PolicySpec, scenario) -> List[EffectiveConstraints]:
    """Per-object constraints: global rules plus every triggered conditional rule.

    Thresholds merge to the most restrictive value per kind, so the result does
    not depend on rule order. Differing alpha overrides on one object raise
    :class:`PolicyConflictError`.
    """
    out = []
    for obj in scenario.objects:
        thresholds: Dict[str, float] = {}
        for rule in policy.hard_constraints:
            _merge(thresholds, rule)
        alpha = None
        names = []
        for k, cond in enumerate(policy.conditional_rules):
            if not cond.condition.matches(obj):
                continue
            names.append(cond.name or f"rule{k}")
            for rule in cond.effects:
                _merge(thresholds, rule)
            if cond.alpha is not None:
                if alpha is not None and not np.allclose(alpha, cond.alpha, atol=1e-12, rtol=0):
                    raise PolicyConflictError(
                        f"object {obj.id}: conflicting alpha overrides {alpha} vs {cond.alpha}")
                alpha = cond.alpha
        out.append(EffectiveConstraints(thresholds, alpha, tuple(sorted(names))))
    return out


def effective_alpha(policy: PolicySpec, scenario) -> np.ndarray:
    """Run-level alpha: objects carrying an override contribute it, others the policy alpha."""
    per_object = apply_conditional_rules(policy, scenario)
    if all(e.alpha is None for e in per_object):
        return np.array(policy.alpha)
    rows = [e.alpha if e.alpha is not None else policy.alpha for e in per_object]
    return normalize_alpha(np.mean(np.array(rows), axis=0))
