"""Comparative sweeps, the 24-hour adaptation scenario and the scale study."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import metrics
from .entropy_topsis import adjust_weights
from .metrics import FrontArchive
from .model import Scenario, generate_daily_workload, generate_scenario
from .moea import ALGORITHMS, EvolutionConfig
from .objectives import Problem, objective_matrix
from .policy import COST, PolicySpec, Signals, adapt
from .runner import (PolicySchedule, RunResult, RunState, ScheduleEntry, compromise_index,
                     run_algorithm)

logger = logging.getLogger(__name__)

OBJECTIVE_KEYS = ("time", "cost", "popularity", "load")


def max_workers() -> int:
    try:
        cap = int(os.environ.get("PSMOA_THREADS", "1"))
    except ValueError:
        cap = 1
    return max(1, cap)


# ----------------------------------------------------------------------------
# algorithm comparison


@dataclass
class CompareResult:
    rows: List[dict]
    truth: FrontArchive
    bounds: tuple
    hv_reference: np.ndarray
    archives: Dict[str, List[FrontArchive]]
    summary: dict


def _one_run(args):
    scenario, config, policy = args
    res = run_algorithm(scenario, config, policy)
    return config.algorithm, config.seed, res.archive


def compare(scenario: Scenario, seeds: Sequence[int], population_size: int = 100, generations: int = 200,
            policy: Optional[PolicySpec] = None, algorithms: Sequence[str] = ALGORITHMS,
            label: str = "small") -> CompareResult:
    """Run every algorithm on every seed and score each archive against merged-run truth."""
    jobs = [(scenario, EvolutionConfig(population_size, generations, seed=s, algorithm=a), policy)
            for a in algorithms for s in seeds]
    workers = min(max_workers(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one_run, jobs))
    else:
        results = [_one_run(j) for j in jobs]
    archives: Dict[str, List[FrontArchive]] = {a: [] for a in algorithms}
    for alg, _, arch in results:
        archives[alg].append(arch)
    every = [a for alg in algorithms for a in archives[alg]]
    truth = metrics.build_truth_front(scenario, "merged_runs", every)
    bounds = metrics.bounds_of(*[a.points for a in every])
    ref = metrics.hv_reference(truth, bounds)
    rows = []
    for alg, seed, arch in results:
        normed = arch.normalized(bounds)
        inside = normed[np.all(normed <= ref, axis=1)]
        rows.append({
            "algorithm": alg,
            "scenario": label,
            "seed": seed,
            "HV": metrics.hypervolume(inside, ref) if len(inside) else 0.0,
            "GD": metrics.generational_distance(arch, truth, bounds),
            "IGD": metrics.inverted_generational_distance(arch, truth, bounds),
            "GD_raw": metrics.generational_distance(arch, truth),
            "IGD_raw": metrics.inverted_generational_distance(arch, truth),
            "front_size": len(arch),
        })
    return CompareResult(rows, truth, bounds, ref, archives, summarize(rows, algorithms))


def summarize(rows: List[dict], algorithms: Sequence[str] = ALGORITHMS) -> dict:
    medians = {}
    for alg in algorithms:
        mine = [r for r in rows if r["algorithm"] == alg]
        medians[alg] = {k: float(np.median([r[k] for r in mine]))
                        for k in ("HV", "GD", "IGD", "GD_raw", "IGD_raw")}
    orderings = {}
    for k, better in (("HV", "high"), ("GD", "low"), ("IGD", "low"), ("GD_raw", "low"), ("IGD_raw", "low")):
        orderings[k] = sorted(algorithms, key=lambda a: medians[a][k], reverse=(better == "high"))
    return {"medians": medians, "orderings": orderings}


# ----------------------------------------------------------------------------
# 24-hour adaptation


@dataclass
class DayCycleResult:
    hours: List[int]
    alpha: np.ndarray            # (24, 4)
    adjusted: np.ndarray         # (24, 4)
    signals: List[Signals]
    performance: Dict[str, np.ndarray]   # percent of hour-0 baseline, per objective
    chosen: np.ndarray           # (24, 4) objectives of the compromise plan under that hour's load
    trace: List[dict] = field(default_factory=list)


def day_signals(scenario: Scenario, workload, daily_budget: float, hourly_spend: Sequence[float]) -> List[Signals]:
    """Hourly adaptation inputs derived from the request trace and running spend."""
    totals = np.array([h.total for h in workload], dtype=float)
    peak_hist = totals.max()
    spent = np.cumsum(hourly_spend)
    out = []
    for h, load in enumerate(workload):
        strict = scenario.phase_at(h).cost_strictness
        # stricter phases tighten the budget the spend is measured against
        budget = daily_budget * (1.0 - 0.5 * strict)
        out.append(Signals(
            utilization_rate=float(load.utilization_rate),
            budget_proximity=float(min(1.0, spent[h] / budget)),
            access_frequency=float(totals[h] / peak_hist),
        ))
    return out


def daycycle(scenario: Scenario, seed: int = 0, population_size: int = 100, generations: int = 240,
             policy: Optional[PolicySpec] = None) -> DayCycleResult:
    """Run one PSMOA process through a simulated day.

    Hours map onto generations proportionally. At every hour boundary alpha
    is recomputed from that hour's signals. The plan in force at hour ``h``
    is the TOPSIS compromise of the feasible population at the end of the
    hour, and its performance is reported relative to the hour-0 plan evaluated
    under the same hour's requests (100 = no change, above 100 = better).
    """
    policy = policy or PolicySpec()
    workload = generate_daily_workload(scenario, seed)
    requests = [h.request_vector(scenario.n_objects) for h in workload]
    totals = np.array([h.total for h in workload], dtype=float)

    # Spend accrues with traffic against a cost reference plan of one replica per object.
    single = np.zeros((scenario.n_objects, scenario.n_nodes), dtype=bool)
    single[:, scenario.user_node] = True
    ref_cost = float(objective_matrix(single[None], scenario)[0, COST])
    hourly_spend = ref_cost * totals / totals.sum()
    cap = next((r.threshold for r in policy.hard_constraints if r.kind == "monthly_cost_cap"), None)
    daily_budget = cap / 30.0 if cap is not None else 1.5 * ref_cost
    signals = day_signals(scenario, workload, daily_budget, hourly_spend)

    base = policy.base_alpha()
    params = policy.adaptation
    alpha0 = adapt(params, signals[0], base)
    start = policy.with_alpha(alpha0) if policy.mode != "none" else PolicySpec(
        alpha=alpha0, mode="multi_objective", hard_constraints=policy.hard_constraints,
        conditional_rules=policy.conditional_rules, adaptation=params)
    schedule = PolicySchedule(tuple(ScheduleEntry(h, alpha=tuple(base), signals=signals[h]) for h in range(1, 24)),
                              unit="hour")
    config = EvolutionConfig(population_size, generations, seed=seed, algorithm="psmoa")
    hour_end = {schedule.generation_of(e, generations) for e in schedule.entries}
    snapshots: Dict[int, tuple] = {}

    def observe(state: RunState) -> None:
        if state.generation + 1 in hour_end or state.generation == generations:
            feas = [ind for ind in state.population if ind.feasible] or state.population
            objs = np.array([ind.objectives for ind in feas])
            k = compromise_index(objs, state.adjusted_weights)
            snapshots[state.generation] = (feas[k].plan.copy(), state.current_alpha.copy(),
                                           state.adjusted_weights.weights.copy())

    res = run_algorithm(scenario, config, start, schedule, observe)
    boundaries = sorted(hour_end) + [generations]
    # hour h runs from its trigger up to the next trigger
    picks = []
    for h in range(24):
        g = boundaries[h] - 1 if h < 23 else generations
        g = max(g, 1)
        key = max(k for k in snapshots if k <= g) if any(k <= g for k in snapshots) else min(snapshots)
        picks.append(snapshots[key])
    baseline_plan = picks[0][0]
    perf = {k: np.zeros(24) for k in OBJECTIVE_KEYS}
    chosen = np.zeros((24, 4))
    for h, (plan, _, _) in enumerate(picks):
        now = objective_matrix(plan[None], scenario, requests[h])[0]
        then = objective_matrix(baseline_plan[None], scenario, requests[h])[0]
        chosen[h] = now
        for j, key in enumerate(OBJECTIVE_KEYS):
            a, b = abs(now[j]), abs(then[j])
            if key == "popularity":
                perf[key][h] = 100.0 * a / b if b > 0 else 100.0
            else:
                perf[key][h] = 100.0 * b / a if a > 0 else 100.0
    return DayCycleResult(
        hours=list(range(24)),
        alpha=np.array([p[1] for p in picks]),
        adjusted=np.array([p[2] for p in picks]),
        signals=signals,
        performance=perf,
        chosen=chosen,
        trace=res.trace,
    )


# ----------------------------------------------------------------------------
# scale study

SCATTER_PAIRS = {
    "small": ("cost", "time"),
    "medium": ("popularity", "load"),
    "large": ("load", "cost"),
}


def objective_columns(points: np.ndarray) -> Dict[str, np.ndarray]:
    pts = np.atleast_2d(points)
    return {"time": pts[:, 0], "cost": pts[:, 1], "popularity": -pts[:, 2], "load": pts[:, 3]}


def evaluation_seconds(scenario: Scenario, population_size: int = 100, repeats: int = 20, seed: int = 0) -> float:
    """Median wall time to evaluate one population's objectives and constraints."""
    from .moea import random_plans
    rng = np.random.default_rng(seed)
    problem = Problem(scenario)
    plans = random_plans(population_size, problem.shape, rng)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        problem.objectives(plans)
        problem.violations(plans)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def scaling_slope(seconds: Dict[str, float]) -> float:
    from .model import SCALES
    n = np.log([SCALES[s][0] for s in seconds])
    t = np.log(list(seconds.values()))
    return float(np.polyfit(n, t, 1)[0])
