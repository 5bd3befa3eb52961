"""Domain types for the simulated decentralized storage system.

All quantities are SI: sizes and capacities in bytes, bandwidth in bytes/s,
latency in seconds, cost coefficients in currency per byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Tuple

import numpy as np

GB = 1e9

SCALES: Dict[str, Tuple[int, int]] = {
    "small": (10, 20),
    "medium": (30, 60),
    "large": (80, 150),
}

TYPE_TAGS = ("critical", "normal", "large")
PHASE_LABELS = ("peak", "off_peak", "night")
REGIONS = ("eu-west", "eu-central", "us-east", "us-west", "asia")

LARGE_OBJECT_BYTES = 8 * GB
CRITICAL_FRACTION = 0.2
CAPACITY_HEADROOM = 3.0


@dataclass(frozen=True)
class Node:
    id: int
    storage_capacity: float
    bandwidth: float
    rtt_to_user: float
    storage_cost_coeff: float
    transfer_cost_coeff: float
    popularity_score: float
    current_load: float = 0.0
    region: str = "default"

    def __post_init__(self):
        if self.storage_capacity <= 0:
            raise ValueError(f"node {self.id}: storage_capacity must be > 0")
        if self.bandwidth <= 0:
            raise ValueError(f"node {self.id}: bandwidth must be > 0")
        if self.rtt_to_user < 0:
            raise ValueError(f"node {self.id}: rtt_to_user must be >= 0")
        if self.popularity_score < 0 or self.current_load < 0:
            raise ValueError(f"node {self.id}: popularity and load must be >= 0")


@dataclass(frozen=True)
class DataObject:
    id: int
    size: float
    type_tag: str = "normal"
    request_count: int = 0

    def __post_init__(self):
        if self.size <= 0:
            raise ValueError(f"object {self.id}: size must be > 0")
        if self.type_tag not in TYPE_TAGS:
            raise ValueError(f"object {self.id}: unknown type_tag {self.type_tag!r}")
        if self.request_count < 0:
            raise ValueError(f"object {self.id}: request_count must be >= 0")


@dataclass(frozen=True)
class WorkloadPhase:
    label: str
    start_hour: int
    end_hour: int
    requests_per_hour: Tuple[int, int]
    cost_strictness: float = 0.0

    def __post_init__(self):
        if self.label not in PHASE_LABELS:
            raise ValueError(f"unknown phase label {self.label!r}")
        if not (0 <= self.start_hour < self.end_hour <= 24):
            raise ValueError(f"phase {self.label}: bad hours [{self.start_hour}, {self.end_hour})")
        lo, hi = self.requests_per_hour
        if lo > hi or lo < 0:
            raise ValueError(f"phase {self.label}: bad request range {self.requests_per_hour}")
        if not 0.0 <= self.cost_strictness <= 1.0:
            raise ValueError(f"phase {self.label}: cost_strictness outside [0, 1]")

    def covers(self, hour: int) -> bool:
        return self.start_hour <= hour < self.end_hour


# peak 8-17, off-peak 17-22, night 22-8 (split at midnight so phases tile [0, 24))
DEFAULT_PHASES = (
    WorkloadPhase("night", 0, 8, (50, 70), 0.2),
    WorkloadPhase("peak", 8, 17, (200, 300), 0.9),
    WorkloadPhase("off_peak", 17, 22, (100, 150), 0.4),
    WorkloadPhase("night", 22, 24, (50, 70), 0.2),
)


def check_phase_partition(phases) -> None:
    """Raise ValueError unless ``phases`` tile [0, 24) without gaps or overlap."""
    ordered = sorted(phases, key=lambda p: p.start_hour)
    cursor = 0
    for phase in ordered:
        if phase.start_hour != cursor:
            raise ValueError(f"workload phases leave a gap or overlap at hour {cursor}")
        cursor = phase.end_hour
    if cursor != 24:
        raise ValueError("workload phases must end at hour 24")


@dataclass(frozen=True)
class Scenario:
    nodes: Tuple[Node, ...]
    objects: Tuple[DataObject, ...]
    user_node: int = 0
    workload_phases: Tuple[WorkloadPhase, ...] = DEFAULT_PHASES
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "workload_phases", tuple(self.workload_phases))
        if not self.nodes or not self.objects:
            raise ValueError("scenario needs at least one node and one object")
        if [n.id for n in self.nodes] != list(range(len(self.nodes))):
            raise ValueError("node ids must be dense, unique and zero-based")
        if [o.id for o in self.objects] != list(range(len(self.objects))):
            raise ValueError("object ids must be dense, unique and zero-based")
        if not 0 <= self.user_node < len(self.nodes):
            raise ValueError(f"user_node {self.user_node} is not a valid node index")
        check_phase_partition(self.workload_phases)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    @cached_property
    def arrays(self) -> "ScenarioArrays":
        return ScenarioArrays.from_scenario(self)

    def phase_at(self, hour: int) -> WorkloadPhase:
        for phase in self.workload_phases:
            if phase.covers(hour):
                return phase
        raise ValueError(f"hour {hour} outside [0, 24)")

    @property
    def max_hourly_requests(self) -> int:
        return max(p.requests_per_hour[1] for p in self.workload_phases)


@dataclass(frozen=True)
class ScenarioArrays:
    """Column views of a scenario used by the vectorised evaluators."""

    sizes: np.ndarray
    bandwidth: np.ndarray
    rtt: np.ndarray
    capacity: np.ndarray
    storage_cost: np.ndarray
    transfer_cost: np.ndarray
    popularity: np.ndarray
    requests: np.ndarray
    region_index: np.ndarray
    n_regions: int
    max_hourly_requests: float

    @classmethod
    def from_scenario(cls, sc: Scenario) -> "ScenarioArrays":
        regions = sorted({n.region for n in sc.nodes})
        lookup = {r: i for i, r in enumerate(regions)}
        arrs = cls(
            sizes=np.array([o.size for o in sc.objects], dtype=float),
            bandwidth=np.array([n.bandwidth for n in sc.nodes], dtype=float),
            rtt=np.array([n.rtt_to_user for n in sc.nodes], dtype=float),
            capacity=np.array([n.storage_capacity for n in sc.nodes], dtype=float),
            storage_cost=np.array([n.storage_cost_coeff for n in sc.nodes], dtype=float),
            transfer_cost=np.array([n.transfer_cost_coeff for n in sc.nodes], dtype=float),
            popularity=np.array([n.popularity_score for n in sc.nodes], dtype=float),
            requests=np.array([o.request_count for o in sc.objects], dtype=float),
            region_index=np.array([lookup[n.region] for n in sc.nodes], dtype=int),
            n_regions=len(regions),
            max_hourly_requests=float(sc.max_hourly_requests),
        )
        for a in (arrs.sizes, arrs.bandwidth, arrs.rtt, arrs.capacity, arrs.popularity,
                  arrs.requests, arrs.storage_cost, arrs.transfer_cost, arrs.region_index):
            a.setflags(write=False)
        return arrs


def _first_fit_decreasing(sizes: np.ndarray, capacity: np.ndarray) -> bool:
    free = capacity.copy()
    for size in np.sort(sizes)[::-1]:
        fits = np.flatnonzero(free >= size)
        if fits.size == 0:
            return False
        free[fits[0]] -= size
    return True


def generate_scenario(scale: str, seed: int) -> Scenario:
    """Build the synthetic scenario for ``scale`` ("small", "medium" or "large").

    Pure function of ``(scale, seed)``. Capacities are rescaled so the
    network holds at least three copies of every object, and a single-replica
    placement is constructed to prove the instance admits a feasible plan.
    """
    if scale not in SCALES:
        raise ValueError(f"unknown scale {scale!r}; choose from {sorted(SCALES)}")
    n, m = SCALES[scale]
    rng = np.random.default_rng(seed)

    sizes = rng.uniform(1.0, 10.0, m) * GB
    bandwidth = rng.uniform(0.1, 1.25, n) * GB
    rtt = rng.uniform(0.005, 0.200, n)
    capacity = rng.uniform(50.0, 500.0, n) * GB
    c1 = rng.uniform(0.005, 0.02, n) / GB
    c2 = rng.uniform(0.005, 0.02, n) / GB
    regions = rng.integers(0, len(REGIONS), n)
    background = rng.uniform(0.0, 0.3, n)

    need = CAPACITY_HEADROOM * sizes.sum()
    if capacity.sum() < need:
        capacity *= need / capacity.sum()
    if not _first_fit_decreasing(sizes, capacity):
        # cannot happen with the ranges above, kept as the constructive guarantee
        raise RuntimeError("generated scenario admits no feasible placement")

    # Historical request share per node: bandwidth rank with +-20% noise.
    rank = np.empty(n)
    rank[np.argsort(bandwidth)] = np.arange(1, n + 1)
    history = rank * rng.uniform(0.8, 1.2, n)
    popularity = history / history.sum()

    # Object demand is heavy-tailed; counts are requests/hour at typical peak load.
    demand = rng.pareto(1.5, m) + 1.0
    peak_lo, peak_hi = DEFAULT_PHASES[1].requests_per_hour
    counts = rng.multinomial((peak_lo + peak_hi) // 2, demand / demand.sum())

    tags = []
    for i in range(m):
        if sizes[i] >= LARGE_OBJECT_BYTES:
            tags.append("large")
        elif rng.random() < CRITICAL_FRACTION:
            tags.append("critical")
        else:
            tags.append("normal")

    user = 0
    rtt[user] = 0.0
    nodes = [
        Node(
            id=j,
            storage_capacity=float(capacity[j]),
            bandwidth=float(bandwidth[j]),
            rtt_to_user=float(rtt[j]),
            storage_cost_coeff=float(c1[j]),
            transfer_cost_coeff=float(c2[j]),
            popularity_score=float(popularity[j]),
            current_load=float(background[j]),
            region=REGIONS[int(regions[j])],
        )
        for j in range(n)
    ]
    objects = [
        DataObject(id=i, size=float(sizes[i]), type_tag=tags[i], request_count=int(counts[i]))
        for i in range(m)
    ]
    return Scenario(nodes=tuple(nodes), objects=tuple(objects), user_node=user,
                    workload_phases=DEFAULT_PHASES, seed=int(seed))


@dataclass(frozen=True)
class HourlyLoad:
    hour: int
    requests: Dict[int, int] = field(hash=False)
    utilization_rate: float
    phase: str

    @property
    def total(self) -> int:
        return sum(self.requests.values())

    def request_vector(self, n_objects: int) -> np.ndarray:
        vec = np.zeros(n_objects)
        for i, r in self.requests.items():
            vec[i] = r
        return vec


def generate_daily_workload(scenario: Scenario, seed: int) -> List[HourlyLoad]:
    """Draw a 24-hour request trace.

    Each hour's total is uniform within its phase's declared range and is
    split across objects in proportion to their historical request counts.
    """
    check_phase_partition(scenario.workload_phases)
    rng = np.random.default_rng(seed)
    counts = scenario.arrays.requests
    share = counts + 1.0  # objects with no history still see occasional traffic
    share = share / share.sum()
    peak = scenario.max_hourly_requests
    trace = []
    for hour in range(24):
        phase = scenario.phase_at(hour)
        lo, hi = phase.requests_per_hour
        total = int(rng.integers(lo, hi + 1))
        split = rng.multinomial(total, share)
        trace.append(HourlyLoad(
            hour=hour,
            requests={i: int(v) for i, v in enumerate(split)},
            utilization_rate=min(1.0, total / peak),
            phase=phase.label,
        ))
    return trace
