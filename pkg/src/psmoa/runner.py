"""PSMOA orchestration plus the NSGA-II / NSGA-III baselines.

All three algorithms share the genome, operators, repair and evaluation in
:mod:`psmoa.moea`; they differ only in survival selection and in how the
reference directions are built and refreshed.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import moea
from .entropy_topsis import (ReferencePointSet, TopsisScores, WeightVector, adjust_weights,
                             entropy_weights, generate_reference_points, topsis_score)
from .metrics import FrontArchive
from .model import Scenario
from .moea import EvolutionConfig, Individual
from .objectives import Problem
from .policy import PolicySpec, Signals, adapt, classify, effective_alpha, normalize_alpha

logger = logging.getLogger(__name__)

UNIFORM = np.full(4, 0.25)


@dataclass(frozen=True)
class ScheduleEntry:
    """A policy change taking effect at ``trigger`` (an hour or a generation).

    ``alpha`` replaces the explicit preference vector, ``policy`` replaces the
    whole policy, and ``signals`` runs the adaptation rules on top of
    whichever explicit alpha is then in force.
    """

    trigger: float
    alpha: Optional[Tuple[float, ...]] = None
    policy: Optional[PolicySpec] = None
    signals: Optional[Signals] = None
    note: str = ""


@dataclass(frozen=True)
class PolicySchedule:
    entries: Tuple[ScheduleEntry, ...]
    unit: str = "generation"  # or "hour"

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.unit not in ("generation", "hour"):
            raise ValueError(f"schedule unit must be 'generation' or 'hour', not {self.unit!r}")
        triggers = [e.trigger for e in self.entries]
        if any(b <= a for a, b in zip(triggers, triggers[1:])):
            raise ValueError("schedule triggers must be strictly increasing")
        if self.unit == "hour" and any(not 0 <= t < 24 for t in triggers):
            raise ValueError("hour triggers must lie in [0, 24)")

    def generation_of(self, entry: ScheduleEntry, max_generations: int) -> int:
        if self.unit == "generation":
            return int(entry.trigger)
        return int(np.floor(entry.trigger * max_generations / 24.0))


@dataclass
class RunState:
    generation: int
    current_alpha: np.ndarray
    raw_entropy_weights: WeightVector
    adjusted_weights: WeightVector
    reference_points: Optional[ReferencePointSet]
    population: List[Individual]
    policy_epoch: int = 1
    regenerations: int = 0
    policy: Optional[PolicySpec] = None

    def check(self) -> None:
        expected = adjust_weights(self.raw_entropy_weights, self.current_alpha)
        if not np.allclose(expected.weights, self.adjusted_weights.weights, rtol=0, atol=1e-12):
            raise AssertionError("adjusted weights drifted from adjust(raw, alpha)")
        if self.reference_points is not None and self.reference_points.bias_weights != self.adjusted_weights:
            raise AssertionError("reference points were biased with stale weights")


@dataclass
class RunResult:
    archive: FrontArchive
    trace: List[dict]
    state: Optional[RunState]
    population: List[Individual]
    algorithm: str
    initial_topsis: Optional[TopsisScores] = None
    best: Optional[Individual] = None


Observer = Callable[[RunState], None]


# ----------------------------------------------------------------------------
# helpers


def performance_matrix(objectives: np.ndarray) -> np.ndarray:
    """Non-negative magnitudes ``(T, C, P, L)`` used as entropy ratings."""
    perf = np.abs(np.asarray(objectives, dtype=float))
    dead = perf.sum(axis=0) <= 0
    # an all-zero column carries no information; rating it uniformly gives d_j = 0
    perf[:, dead] = 1.0
    return perf


def minmax(objs: np.ndarray) -> np.ndarray:
    lo, hi = objs.min(axis=0), objs.max(axis=0)
    return (objs - lo) / np.where(hi > lo, hi - lo, 1.0)


def compromise_index(objs: np.ndarray, weights: WeightVector) -> int:
    """Row with the highest TOPSIS closeness on min-max scaled objectives."""
    return topsis_score(minmax(np.asarray(objs, dtype=float)), weights).best()


def archive_from(population: Sequence[Individual], label: str) -> FrontArchive:
    """Non-dominated feasible members, or the least-violation set if none is feasible."""
    feasible = [ind for ind in population if ind.feasible]
    if feasible:
        objs = np.array([ind.objectives for ind in feasible])
        plans = np.array([ind.plan for ind in feasible])
        return FrontArchive.from_points(objs, label, plans=plans)
    least = min(ind.violation for ind in population)
    pool = [ind for ind in population if ind.violation == least]
    return FrontArchive.from_points(np.array([ind.objectives for ind in pool]), label,
                                    plans=np.array([ind.plan for ind in pool]), feasible=False)


def trace_record(state: RunState, algorithm: str) -> dict:
    pop = state.population
    objs = np.array([ind.objectives for ind in pop])
    feas = np.array([ind.feasible for ind in pop])
    basis = objs[feas] if feas.any() else objs
    rec = {
        "generation": state.generation,
        "algorithm": algorithm,
        "policy_epoch": state.policy_epoch,
        "alpha": None if algorithm != "psmoa" else [float(x) for x in state.current_alpha],
        "adjusted_weights": None if algorithm != "psmoa" else [float(x) for x in state.adjusted_weights.weights],
        "n_reference_points": None if state.reference_points is None else len(state.reference_points),
        "front0_size": int(sum(1 for ind in pop if ind.rank == 0)),
        "feasible_fraction": float(feas.mean()),
        "best": [float(x) for x in basis.min(axis=0)],
        "median": [float(x) for x in np.median(basis, axis=0)],
    }
    return rec


def _select(algorithm: str, merged, n, refs, rng):
    if algorithm == "nsga2":
        return moea.nsga2_select(merged, n, rng)
    return moea.nsga3_select(merged, n, refs, rng)


def _evolve(problem: Problem, config: EvolutionConfig, state: RunState, rng: np.random.Generator,
            on_change: Optional[Callable[[int, RunState], None]] = None,
            observer: Optional[Observer] = None) -> List[dict]:
    trace = []
    algorithm = config.algorithm
    moea.non_dominated_sort(state.population)
    for t in range(config.max_generations):
        offspring = moea.make_offspring(state.population, problem, config, rng)
        merged = moea.merge_unique(state.population, offspring, config.population_size)
        state.population = _select(algorithm, merged, config.population_size, state.reference_points, rng)
        state.generation = t + 1
        if on_change is not None:
            on_change(t + 1, state)
        trace.append(trace_record(state, algorithm))
        if observer is not None:
            observer(state)
    return trace


# ----------------------------------------------------------------------------
# PSMOA


def run(scenario: Scenario, policy: Optional[PolicySpec] = None, schedule: Optional[PolicySchedule] = None,
        config: EvolutionConfig = EvolutionConfig(), observer: Optional[Observer] = None,
        problem: Optional[Problem] = None) -> RunResult:
    """Run PSMOA and return the final non-dominated feasible set plus its trace."""
    if config.algorithm != "psmoa":
        raise ValueError("run() executes PSMOA; use run_baseline() for nsga2/nsga3")
    problem = problem or Problem(scenario, policy)
    rng = np.random.default_rng(config.seed)
    label = f"psmoa/seed={config.seed}"

    alpha = UNIFORM.copy()
    population = moea.initialize_population(problem, config, rng)
    objs = np.array([ind.objectives for ind in population])
    raw = entropy_weights(performance_matrix(objs))
    initial = topsis_score(minmax(objs), raw)

    kind = classify(policy)
    if kind.kind == "single_objective":
        best = run_single_objective(scenario, kind.index, policy, config, problem=problem)
        arch = FrontArchive.from_points(best.objectives[None], label, plans=best.plan[None],
                                        feasible=best.feasible)
        return RunResult(arch, [], None, [best], "psmoa", initial, best)
    if kind.kind == "multi_objective":
        alpha = effective_alpha(policy, scenario)

    adjusted = adjust_weights(raw, alpha)
    refs = generate_reference_points(adjusted, config.divisions or 6, initial.closeness)
    state = RunState(0, alpha, raw, adjusted, refs, population, policy=policy)
    moea.non_dominated_sort(state.population)
    trace = [trace_record(state, "psmoa")]

    pending: Dict[int, List[ScheduleEntry]] = {}
    if schedule is not None:
        for entry in schedule.entries:
            pending.setdefault(schedule.generation_of(entry, config.max_generations), []).append(entry)

    def apply(entry: ScheduleEntry, st: RunState) -> None:
        if entry.policy is not None:
            st.policy = entry.policy
            explicit = np.array(entry.policy.alpha)
        elif entry.alpha is not None:
            explicit = normalize_alpha(entry.alpha)
        else:
            explicit = st.policy.base_alpha() if st.policy is not None else UNIFORM
        if entry.signals is not None:
            params = st.policy.adaptation if st.policy is not None else PolicySpec().adaptation
            explicit = adapt(params, entry.signals, explicit)
        st.current_alpha = explicit
        st.adjusted_weights = adjust_weights(st.raw_entropy_weights, explicit)
        st.reference_points = generate_reference_points(st.adjusted_weights, st.reference_points.divisions)
        st.policy_epoch += 1
        st.regenerations += 1
        logger.debug("policy change at generation %d: alpha=%s", st.generation, explicit)

    def on_change(gen: int, st: RunState) -> None:
        for entry in pending.pop(gen, ()):
            apply(entry, st)

    on_change(0, state)
    if state.regenerations:
        trace[0] = trace_record(state, "psmoa")
    trace.extend(_evolve(problem, config, state, rng, on_change, observer))
    state.check()
    return RunResult(archive_from(state.population, label), trace, state, state.population, "psmoa", initial)


def _scalar_order(objectives: np.ndarray, violation: np.ndarray, index: int) -> np.ndarray:
    feasible = violation <= 0
    return np.lexsort((objectives[:, index], np.where(feasible, 0.0, violation), ~feasible))


def run_single_objective(scenario: Scenario, objective_index: int, policy: Optional[PolicySpec] = None,
                         config: EvolutionConfig = EvolutionConfig(), problem: Optional[Problem] = None) -> Individual:
    """Best individual for one objective under feasibility-first comparison."""
    if not 0 <= objective_index < 4:
        raise ValueError("objective_index must lie in [0, 3]")
    problem = problem or Problem(scenario, policy)
    rng = np.random.default_rng(config.seed)
    n = config.population_size
    pop = moea.initialize_population(problem, config, rng)

    def rerank(individuals):
        objs = np.array([ind.objectives for ind in individuals])
        viol = np.array([ind.violation for ind in individuals])
        order = _scalar_order(objs, viol, objective_index)
        for r, k in enumerate(order):
            individuals[k].rank = r
        return [individuals[k] for k in order]

    pop = rerank(pop)
    for _ in range(config.max_generations):
        offspring = moea.make_offspring(pop, problem, config, rng)
        merged = moea.merge_unique(pop, offspring, n)
        pop = rerank(merged)[:n]
    return pop[0]


def run_baseline(scenario: Scenario, config: EvolutionConfig, observer: Optional[Observer] = None,
                 problem: Optional[Problem] = None, policy: Optional[PolicySpec] = None) -> RunResult:
    """NSGA-II (crowding) or NSGA-III (uniform reference lattice) on the same problem."""
    if config.algorithm not in ("nsga2", "nsga3"):
        raise ValueError("run_baseline() handles nsga2 and nsga3 only")
    problem = problem or Problem(scenario, policy)
    rng = np.random.default_rng(config.seed)
    population = moea.initialize_population(problem, config, rng)
    uniform = WeightVector(UNIFORM, "raw_entropy")
    refs = None
    if config.algorithm == "nsga3":
        refs = generate_reference_points(uniform, config.divisions or 6)
    state = RunState(0, UNIFORM.copy(), uniform, adjust_weights(uniform, UNIFORM), refs, population)
    moea.non_dominated_sort(state.population)
    trace = [trace_record(state, config.algorithm)]
    trace.extend(_evolve(problem, config, state, rng, observer=observer))
    label = f"{config.algorithm}/seed={config.seed}"
    return RunResult(archive_from(state.population, label), trace, None, state.population, config.algorithm)


def run_algorithm(scenario: Scenario, config: EvolutionConfig, policy: Optional[PolicySpec] = None,
                  schedule: Optional[PolicySchedule] = None, observer: Optional[Observer] = None) -> RunResult:
    if config.algorithm == "psmoa":
        return run(scenario, policy, schedule, config, observer)
    return run_baseline(scenario, config, observer, policy=policy)
