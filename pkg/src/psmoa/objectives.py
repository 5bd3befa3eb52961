"""Objective evaluation and feasibility checks for replication plans.

Objective vectors use the minimization convention ``(time, cost, -popularity,
load_variance)``. Everything here is a pure function of the plan, the
scenario and (for feasibility) the policy, so populations can be evaluated
in any order or in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from .model import Scenario
from .policy import GLOBAL_KINDS, PolicySpec, apply_conditional_rules

DEFAULT_ROUND_SECONDS = 3600.0


class ReplicationPlan:
    """Binary object-by-node selection matrix."""

    __slots__ = ("selection",)

    def __init__(self, selection):
        sel = np.asarray(selection)
        if sel.ndim != 2:
            raise ValueError("selection must be a 2-D object x node matrix")
        if not np.all((sel == 0) | (sel == 1)):
            raise ValueError("selection entries must be 0 or 1")
        self.selection = sel.astype(bool)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.selection.shape

    def is_valid(self) -> bool:
        return bool(self.selection.any(axis=1).all())

    def replicas(self) -> np.ndarray:
        return self.selection.sum(axis=1)

    def __eq__(self, other):
        return isinstance(other, ReplicationPlan) and np.array_equal(self.selection, other.selection)

    def __repr__(self):
        return f"ReplicationPlan({self.selection.astype(int).tolist()})"


PlanLike = Union[ReplicationPlan, np.ndarray, Sequence[Sequence[int]]]


def _selection(plan: PlanLike, scenario: Scenario) -> np.ndarray:
    sel = plan.selection if isinstance(plan, ReplicationPlan) else np.asarray(plan).astype(bool)
    if sel.shape[-2:] != (scenario.n_objects, scenario.n_nodes):
        raise ValueError(f"plan shape {sel.shape} does not match scenario "
                         f"({scenario.n_objects} objects x {scenario.n_nodes} nodes)")
    if not sel.any(axis=-1).all():
        raise ValueError("every data object needs at least one selected node")
    return sel


class ObjectiveVector(NamedTuple):
    time: float
    cost: float
    neg_popularity: float
    load_variance: float


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    storage_violation: float = 0.0
    bandwidth_violation: float = 0.0
    policy_violations: Tuple[str, ...] = ()
    total_violation: float = 0.0


# ----------------------------------------------------------------------------
# vectorised kernels; ``sel`` may carry leading batch dimensions


def _time(sel: np.ndarray, sc: Scenario) -> np.ndarray:
    a = sc.arrays
    per_replica = a.sizes[:, None] / a.bandwidth[None, :] + a.rtt[None, :]
    return (sel * per_replica).sum(axis=(-2, -1))


def _mean_cost_coeff(sc: Scenario) -> float:
    a = sc.arrays
    return float(a.storage_cost.mean() + a.transfer_cost.mean())


def _cost(sel: np.ndarray, sc: Scenario) -> np.ndarray:
    counts = sel.sum(axis=-1)
    return (counts * sc.arrays.sizes).sum(axis=-1) * _mean_cost_coeff(sc)


def _popularity(sel: np.ndarray, sc: Scenario) -> np.ndarray:
    return (sel * sc.arrays.popularity).sum(axis=(-2, -1))


def node_loads(sel: np.ndarray, sc: Scenario, requests: Optional[np.ndarray] = None) -> np.ndarray:
    """Per-node load: mean of storage fill ratio and share of peak hourly requests.

    Each object's requests go to its selected replica with the highest node
    popularity (lowest index on ties).
    """
    a = sc.arrays
    req = a.requests if requests is None else np.asarray(requests, dtype=float)
    stored = (sel * a.sizes[:, None]).sum(axis=-2)
    masked = np.where(sel, a.popularity, -np.inf)
    target = masked.argmax(axis=-1)
    served = ((target[..., None] == np.arange(sc.n_nodes)) * req[:, None]).sum(axis=-2)
    return 0.5 * (stored / a.capacity + served / a.max_hourly_requests)


def load_variance(loads) -> np.ndarray:
    loads = np.asarray(loads, dtype=float)
    return ((loads - loads.mean(axis=-1, keepdims=True)) ** 2).mean(axis=-1)


def _load(sel: np.ndarray, sc: Scenario, requests=None) -> np.ndarray:
    return load_variance(node_loads(sel, sc, requests))


# ----------------------------------------------------------------------------
# public single-plan evaluators


def eval_time(plan: PlanLike, scenario: Scenario) -> float:
    return float(_time(_selection(plan, scenario), scenario))


def eval_cost(plan: PlanLike, scenario: Scenario) -> float:
    return float(_cost(_selection(plan, scenario), scenario))


def eval_popularity(plan: PlanLike, scenario: Scenario) -> float:
    """Raw popularity (to be maximised); :func:`evaluate` negates it."""
    return float(_popularity(_selection(plan, scenario), scenario))


def eval_load_balance(plan: PlanLike, scenario: Scenario, requests=None) -> float:
    return float(_load(_selection(plan, scenario), scenario, requests))


def evaluate(plan: PlanLike, scenario: Scenario, requests=None) -> ObjectiveVector:
    sel = _selection(plan, scenario)
    return ObjectiveVector(
        float(_time(sel, scenario)),
        float(_cost(sel, scenario)),
        -float(_popularity(sel, scenario)),
        float(_load(sel, scenario, requests)),
    )


def objective_matrix(selections: np.ndarray, scenario: Scenario, requests=None) -> np.ndarray:
    """Evaluate a stack of plans shaped ``(k, objects, nodes)`` into a ``(k, 4)`` matrix."""
    sel = _selection(selections, scenario)
    return np.stack([
        _time(sel, scenario),
        _cost(sel, scenario),
        -_popularity(sel, scenario),
        _load(sel, scenario, requests),
    ], axis=-1)


# ----------------------------------------------------------------------------
# feasibility


class Problem:
    """Scenario + policy bound together for repeated batch evaluation."""

    def __init__(self, scenario: Scenario, policy: Optional[PolicySpec] = None,
                 round_seconds: float = DEFAULT_ROUND_SECONDS, requests=None):
        self.scenario = scenario
        self.policy = policy
        self.round_seconds = float(round_seconds)
        self.requests = None if requests is None else np.asarray(requests, dtype=float)
        a = scenario.arrays
        m = scenario.n_objects
        self.min_replicas = np.zeros(m)
        self.min_regions = np.zeros(m)
        self.max_time = np.full(m, np.inf)
        self.node_cap = a.capacity.copy()
        self.node_bw = a.bandwidth * self.round_seconds
        self.policy_storage_cap = np.full(scenario.n_nodes, np.inf)
        self.policy_rate_cap = np.full(scenario.n_nodes, np.inf)
        self.cost_cap = np.inf
        if policy is not None:
            per_object = apply_conditional_rules(policy, scenario)
            for i, eff in enumerate(per_object):
                t = eff.thresholds
                self.min_replicas[i] = t.get("min_replicas", 0)
                self.min_regions[i] = t.get("min_regions", 0)
                self.max_time[i] = t.get("max_replication_time", np.inf)
            glob = {k: min((e.thresholds[k] for e in per_object if k in e.thresholds), default=np.inf)
                    for k in GLOBAL_KINDS}
            self.policy_storage_cap[:] = glob["max_storage_per_node"]
            self.policy_rate_cap[:] = glob["max_replication_rate"] * self.round_seconds
            self.cost_cap = glob["monthly_cost_cap"]
        self.has_policy_rules = bool(
            self.min_replicas.any() or self.min_regions.any() or np.isfinite(self.max_time).any()
            or np.isfinite(self.policy_storage_cap).any() or np.isfinite(self.policy_rate_cap).any()
            or np.isfinite(self.cost_cap))
        self._region_onehot = (a.region_index[:, None] == np.arange(a.n_regions)[None, :])
        self._per_replica_time = a.sizes[:, None] / a.bandwidth[None, :] + a.rtt[None, :]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.scenario.n_objects, self.scenario.n_nodes

    def objectives(self, sel: np.ndarray) -> np.ndarray:
        return objective_matrix(sel, self.scenario, self.requests)

    def _components(self, sel: np.ndarray):
        a = self.scenario.arrays
        stored = (sel * a.sizes[:, None]).sum(axis=-2)
        storage = np.maximum(stored - self.node_cap, 0.0)
        bandwidth = np.maximum(stored - self.node_bw, 0.0)
        parts = {}
        if self.has_policy_rules:
            counts = sel.sum(axis=-1)
            parts["min_replicas"] = np.maximum(self.min_replicas - counts, 0.0)
            if self.min_regions.any():
                regions = (sel[..., :, :, None] & self._region_onehot).any(axis=-2).sum(axis=-1)
                parts["min_regions"] = np.maximum(self.min_regions - regions, 0.0)
            if np.isfinite(self.max_time).any():
                t = (sel * self._per_replica_time).sum(axis=-1)
                with np.errstate(invalid="ignore"):
                    over = np.where(np.isfinite(self.max_time), (t - self.max_time) / self.max_time, 0.0)
                parts["max_replication_time"] = np.maximum(over, 0.0)
            if np.isfinite(self.policy_storage_cap).any():
                parts["max_storage_per_node"] = np.maximum(stored - self.policy_storage_cap, 0.0) / self.policy_storage_cap
            if np.isfinite(self.policy_rate_cap).any():
                parts["max_replication_rate"] = np.maximum(stored - self.policy_rate_cap, 0.0) / self.policy_rate_cap
            if np.isfinite(self.cost_cap):
                cost = _cost(sel, self.scenario)
                parts["monthly_cost_cap"] = (np.maximum(cost - self.cost_cap, 0.0) / self.cost_cap)[..., None]
        return storage, bandwidth, parts

    def violations(self, sel: np.ndarray) -> np.ndarray:
        """Scalar constraint violation per plan (0 means feasible)."""
        storage, bandwidth, parts = self._components(sel)
        total = storage.sum(axis=-1) / self.node_cap.mean() + bandwidth.sum(axis=-1) / self.node_bw.mean()
        for v in parts.values():
            total = total + v.sum(axis=-1)
        return total

    def report(self, sel: np.ndarray) -> FeasibilityReport:
        storage, bandwidth, parts = self._components(sel)
        ids: List[str] = []
        for kind, v in parts.items():
            label = "obj" if kind in ("min_replicas", "min_regions", "max_replication_time") else "node"
            if kind == "monthly_cost_cap":
                if v[0] > 0:
                    ids.append(kind)
                continue
            ids.extend(f"{kind}[{label}={k}]" for k in np.flatnonzero(v > 0))
        total = float(self.violations(sel))
        s, b = float(storage.sum()), float(bandwidth.sum())
        return FeasibilityReport(
            feasible=(s == 0 and b == 0 and not ids),
            storage_violation=s,
            bandwidth_violation=b,
            policy_violations=tuple(ids),
            total_violation=total,
        )


def check_feasibility(plan: PlanLike, scenario: Scenario, policy: Optional[PolicySpec] = None,
                      round_seconds: float = DEFAULT_ROUND_SECONDS) -> FeasibilityReport:
    sel = _selection(plan, scenario)
    return Problem(scenario, policy, round_seconds).report(sel)
