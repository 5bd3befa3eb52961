"""Genetic machinery shared by NSGA-II, NSGA-III and PSMOA.

Genomes are boolean ``objects x nodes`` matrices. Constraint handling is
feasibility-first: a feasible plan beats an infeasible one, two infeasible
plans compare by total violation, and two feasible plans by Pareto dominance.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .entropy_topsis import ReferencePointSet
from .objectives import FeasibilityReport, ObjectiveVector, Problem

logger = logging.getLogger(__name__)

ALGORITHMS = ("nsga2", "nsga3", "psmoa")


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 100
    max_generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float = 1.0
    seed: int = 0
    algorithm: str = "psmoa"
    divisions: Optional[int] = None

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2:
            raise ValueError("population_size must be even and >= 4")
        if not 0 <= self.crossover_rate <= 1 or not 0 <= self.mutation_rate <= 1:
            raise ValueError("crossover and mutation rates must lie in [0, 1]")
        if self.max_generations < 0:
            raise ValueError("max_generations must be >= 0")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; valid choices: {', '.join(ALGORITHMS)}")


@dataclass
class Individual:
    plan: np.ndarray
    objectives: np.ndarray
    violation: float
    rank: int = -1
    diversity_key: float = 0.0
    _problem: Optional[Problem] = field(default=None, repr=False, compare=False)
    _report: Optional[FeasibilityReport] = field(default=None, repr=False, compare=False)

    @property
    def feasible(self) -> bool:
        return self.violation <= 0.0

    @property
    def feasibility(self) -> FeasibilityReport:
        if self._report is None:
            self._report = self._problem.report(self.plan)
        return self._report

    @property
    def objective_vector(self) -> ObjectiveVector:
        return ObjectiveVector(*map(float, self.objectives))

    def key(self) -> bytes:
        return np.packbits(self.plan).tobytes()


def make_individuals(plans: np.ndarray, problem: Problem) -> List[Individual]:
    objs = problem.objectives(plans)
    viol = problem.violations(plans)
    return [Individual(plans[k], objs[k], float(viol[k]), _problem=problem) for k in range(len(plans))]


# ----------------------------------------------------------------------------
# dominance and sorting


def dominates(a: Individual, b: Individual) -> bool:
    """Feasibility-first (constrained) dominance."""
    if a.feasible != b.feasible:
        return a.feasible
    if not a.feasible:
        return a.violation < b.violation
    return bool(np.all(a.objectives <= b.objectives) and np.any(a.objectives < b.objectives))


def dominance_matrix(objs: np.ndarray, violation: Optional[np.ndarray] = None) -> np.ndarray:
    """``D[i, j]`` is True when row i constrained-dominates row j."""
    objs = np.asarray(objs, dtype=float)
    le = (objs[:, None, :] <= objs[None, :, :]).all(axis=2)
    lt = (objs[:, None, :] < objs[None, :, :]).any(axis=2)
    pareto = le & lt
    if violation is None:
        return pareto
    v = np.asarray(violation, dtype=float)
    feas = v <= 0
    both = feas[:, None] & feas[None, :]
    only_i = feas[:, None] & ~feas[None, :]
    neither = ~feas[:, None] & ~feas[None, :]
    return (both & pareto) | only_i | (neither & (v[:, None] < v[None, :]))


def fronts_from_matrix(dom: np.ndarray) -> List[List[int]]:
    dominated_by = dom.sum(axis=0).astype(int)
    done = np.zeros(dom.shape[0], dtype=bool)
    fronts = []
    while True:
        current = np.flatnonzero((dominated_by == 0) & ~done)
        if current.size == 0:
            break
        fronts.append(current.tolist())
        done[current] = True
        dominated_by -= dom[current].sum(axis=0)
    return fronts


def non_dominated_sort(population: Sequence[Individual]) -> List[List[int]]:
    """Fast non-dominated sort; returns fronts as lists of population indices."""
    if not population:
        return []
    objs = np.array([ind.objectives for ind in population])
    viol = np.array([ind.violation for ind in population])
    fronts = fronts_from_matrix(dominance_matrix(objs, viol))
    for r, front in enumerate(fronts):
        for i in front:
            population[i].rank = r
    return fronts


# ----------------------------------------------------------------------------
# variation


def random_plans(k: int, shape: Tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """``k`` plans whose rows are uniform over the nonempty node subsets."""
    plans = rng.random((k,) + shape) < 0.5
    empty = ~plans.any(axis=2)
    while empty.any():
        plans[empty] = rng.random((int(empty.sum()), shape[1])) < 0.5
        empty = ~plans.any(axis=2)
    return plans


def repair(plan: np.ndarray, problem: Problem, rng: np.random.Generator) -> np.ndarray:
    """Give empty rows a random node, then shed replicas from overfull nodes.

    Replicas are removed from the most overloaded node first, always taking
    the object with the most replicas, and never emptying a row. If no such
    removal exists the residual overload is left for the dominance rule.
    """
    x = np.array(plan, dtype=bool, copy=True)
    for i in np.flatnonzero(~x.any(axis=1)):
        x[i, rng.integers(x.shape[1])] = True
    sizes = problem.scenario.arrays.sizes
    cap = problem.node_cap
    over = x.T.astype(float) @ sizes - cap
    if not (over > 0).any():
        return x
    counts = x.sum(axis=1)
    stuck = np.zeros(x.shape[1], dtype=bool)
    while True:
        cand = np.where((over > 0) & ~stuck, over, -np.inf)
        j = int(np.argmax(cand))
        if not np.isfinite(cand[j]):
            break
        removable = np.flatnonzero(x[:, j] & (counts > 1))
        if removable.size == 0:
            stuck[j] = True
            continue
        most = removable[counts[removable] == counts[removable].max()]
        i = int(most[0]) if most.size == 1 else int(rng.choice(most))
        x[i, j] = False
        counts[i] -= 1
        over[j] -= sizes[i]
    return x


def crossover_plans(a: np.ndarray, b: np.ndarray, rng: np.random.Generator,
                    rate: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """Row-wise uniform crossover: each object's node set is swapped with probability 0.5."""
    if rate <= 0 or rng.random() >= rate:
        return a.copy(), b.copy()
    swap = rng.random(a.shape[0]) < 0.5
    c1, c2 = a.copy(), b.copy()
    c1[swap], c2[swap] = b[swap], a[swap]
    return c1, c2


def mutate_plan(plan: np.ndarray, rng: np.random.Generator, rate: float) -> np.ndarray:
    """Flip each bit with probability ``rate / n_nodes``."""
    if rate <= 0:
        return plan.copy()
    flips = rng.random(plan.shape) < rate / plan.shape[1]
    return plan ^ flips


def crossover(parent_a: Individual, parent_b: Individual, rng: np.random.Generator,
              problem: Problem, rate: float = 1.0) -> Tuple[Individual, Individual]:
    c1, c2 = crossover_plans(parent_a.plan, parent_b.plan, rng, rate)
    plans = np.stack([repair(c1, problem, rng), repair(c2, problem, rng)])
    first, second = make_individuals(plans, problem)
    return first, second


def mutate(individual: Individual, rng: np.random.Generator, rate: float, problem: Problem) -> Individual:
    if rate <= 0:
        return individual
    x = repair(mutate_plan(individual.plan, rng, rate), problem, rng)
    return make_individuals(x[None], problem)[0]


def initialize_population(problem: Problem, config: EvolutionConfig,
                          rng: Optional[np.random.Generator] = None) -> List[Individual]:
    rng = np.random.default_rng(config.seed) if rng is None else rng
    plans = random_plans(config.population_size, problem.shape, rng)
    plans = np.stack([repair(p, problem, rng) for p in plans])
    return make_individuals(plans, problem)


def tournament(population: Sequence[Individual], k: int, rng: np.random.Generator) -> List[int]:
    """``k`` binary tournaments on front rank; equal ranks resolve at random."""
    n = len(population)
    ranks = np.array([ind.rank for ind in population])
    a = rng.integers(n, size=k)
    b = rng.integers(n, size=k)
    coin = rng.random(k) < 0.5
    return np.where(ranks[a] < ranks[b], a, np.where(ranks[b] < ranks[a], b, np.where(coin, a, b))).tolist()


def make_offspring(population: Sequence[Individual], problem: Problem, config: EvolutionConfig,
                   rng: np.random.Generator) -> List[Individual]:
    n = config.population_size
    parents = tournament(population, n, rng)
    children = []
    for k in range(0, n, 2):
        a, b = population[parents[k]].plan, population[parents[k + 1]].plan
        c1, c2 = crossover_plans(a, b, rng, config.crossover_rate)
        for c in (c1, c2):
            children.append(repair(mutate_plan(c, rng, config.mutation_rate), problem, rng))
    return make_individuals(np.stack(children), problem)


def merge_unique(parents: Sequence[Individual], offspring: Sequence[Individual], n: int) -> List[Individual]:
    """Union of both generations with duplicate genomes removed (kept if needed to reach ``n``)."""
    seen = set()
    unique, dupes = [], []
    for ind in list(parents) + list(offspring):
        k = ind.key()
        if k in seen:
            dupes.append(ind)
        else:
            seen.add(k)
            unique.append(ind)
    if len(unique) < n:
        unique.extend(dupes[:n - len(unique)])
    return unique


# ----------------------------------------------------------------------------
# NSGA-II survival


def crowding_distance(objs: np.ndarray) -> np.ndarray:
    objs = np.asarray(objs, dtype=float)
    n, m = objs.shape
    dist = np.zeros(n)
    if n <= 2:
        return np.full(n, np.inf)
    for k in range(m):
        order = np.argsort(objs[:, k], kind="stable")
        col = objs[order, k]
        span = col[-1] - col[0]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0:
            dist[order[1:-1]] += (col[2:] - col[:-2]) / span
    return dist


def nsga2_select(merged: List[Individual], n: int, rng: Optional[np.random.Generator] = None) -> List[Individual]:
    if len(merged) < n:
        raise ValueError("cannot select more individuals than offered")
    fronts = non_dominated_sort(merged)
    chosen: List[Individual] = []
    for front in fronts:
        members = [merged[i] for i in front]
        cd = crowding_distance(np.array([m.objectives for m in members]))
        for m, d in zip(members, cd):
            m.diversity_key = float(d)
        if len(chosen) + len(members) <= n:
            chosen.extend(members)
            if len(chosen) == n:
                break
            continue
        tie = rng.permutation(len(members)) if rng is not None else np.arange(len(members))
        order = sorted(range(len(members)), key=lambda k: (-cd[k], tie[k]))
        chosen.extend(members[k] for k in order[: n - len(chosen)])
        break
    return chosen


# ----------------------------------------------------------------------------
# NSGA-III survival


def normalize_objectives(objs: np.ndarray, first_front: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Translate by the ideal point and scale by hyperplane intercepts.

    Returns ``(normalized, ideal, intercepts)``. When the extreme points are
    linearly dependent or yield non-positive intercepts, the per-objective
    maximum of the translated first front is used instead.
    """
    objs = np.asarray(objs, dtype=float)
    ideal = objs.min(axis=0)
    shifted = objs - ideal
    m = objs.shape[1]
    weights = np.full((m, m), 1e-6) + np.eye(m) * (1 - 1e-6)
    asf = (shifted[:, None, :] / weights[None, :, :]).max(axis=2)
    extremes = shifted[np.argmin(asf, axis=0)]
    intercepts = None
    try:
        if np.linalg.matrix_rank(extremes) == m:
            b = np.linalg.solve(extremes, np.ones(m))
            if np.all(b > 1e-12):
                cand = 1.0 / b
                if np.all(np.isfinite(cand)) and np.all(cand > 1e-6):
                    intercepts = cand
    except np.linalg.LinAlgError:
        intercepts = None
    if intercepts is None:
        intercepts = (np.asarray(first_front, dtype=float) - ideal).max(axis=0)
    intercepts = np.where(intercepts > 1e-12, intercepts, 1.0)
    return shifted / intercepts, ideal, intercepts


def associate(normalized: np.ndarray, refs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Nearest reference direction (by perpendicular distance) for each point."""
    dirs = np.asarray(refs, dtype=float)
    unit = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    proj = normalized @ unit.T
    perp = np.linalg.norm(normalized[:, None, :] - proj[:, :, None] * unit[None, :, :], axis=2)
    nearest = perp.argmin(axis=1)
    return nearest, perp[np.arange(len(normalized)), nearest]


def niche_select(assoc: np.ndarray, dist: np.ndarray, niche: np.ndarray, candidates: Sequence[int],
                 k: int, rng: np.random.Generator) -> List[int]:
    """Pick ``k`` of ``candidates`` by repeatedly serving the least-crowded reference point.

    The chosen reference point contributes its closest unassigned candidate;
    points with no candidates left are retired. Ties go to ``rng``.
    """
    niche = niche.astype(float).copy()
    pool = {int(c) for c in candidates}
    active = np.ones(len(niche), dtype=bool)
    picked: List[int] = []
    while len(picked) < k:
        counts = np.where(active, niche, np.inf)
        lowest = np.flatnonzero(counts == counts.min())
        j = int(lowest[0]) if lowest.size == 1 else int(rng.choice(lowest))
        members = sorted(c for c in pool if assoc[c] == j)
        if not members:
            active[j] = False
            continue
        d = np.array([dist[c] for c in members])
        best = [members[t] for t in np.flatnonzero(d == d.min())]
        pick = best[0] if len(best) == 1 else int(rng.choice(best))
        picked.append(pick)
        pool.discard(pick)
        niche[j] += 1
    return picked


def nsga3_select(merged: List[Individual], n: int, refs, rng: np.random.Generator) -> List[Individual]:
    if len(merged) < n:
        raise ValueError("cannot select more individuals than offered")
    points = refs.points if isinstance(refs, ReferencePointSet) else np.asarray(refs, dtype=float)
    if len(points) == 0:
        raise ValueError("reference set is empty")
    fronts = non_dominated_sort(merged)
    pool: List[int] = []
    last: List[int] = []
    for front in fronts:
        if len(pool) + len(front) <= n:
            pool.extend(front)
            if len(pool) == n:
                break
        else:
            last = front
            break
    if not last:
        for i in pool:
            merged[i].diversity_key = 0.0
        return [merged[i] for i in pool]

    considered = pool + last
    objs = np.array([merged[i].objectives for i in considered])
    first = np.array([merged[i].objectives for i in fronts[0]])
    normed, _, _ = normalize_objectives(objs, first)
    assoc, dist = associate(normed, points)
    niche = np.bincount(assoc[: len(pool)], minlength=len(points))
    local = niche_select(assoc, dist, niche, range(len(pool), len(considered)), n - len(pool), rng)
    for pos, idx in enumerate(considered):
        merged[idx].diversity_key = float(dist[pos])
    return [merged[i] for i in pool] + [merged[considered[p]] for p in local]
