"""Pareto-front quality indicators: hypervolume, GD and IGD."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

EXHAUSTIVE_LIMIT_BITS = 24


def nondominated_mask(points: np.ndarray) -> np.ndarray:
    """Mask of rows not Pareto-dominated by any other row (minimization)."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        dominated = np.all(pts[i] <= pts, axis=1) & np.any(pts[i] < pts, axis=1)
        keep &= ~dominated
    return keep


def _unique_rows(points: np.ndarray) -> np.ndarray:
    if len(points) == 0:
        return points
    _, idx = np.unique(points, axis=0, return_index=True)
    return points[np.sort(idx)]


@dataclass
class FrontArchive:
    """Mutually non-dominated objective vectors (minimization) with a label."""

    points: np.ndarray
    label: str = ""
    normalization: Optional[Tuple[np.ndarray, np.ndarray]] = None
    feasible: bool = True
    plans: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(0, 0) if pts.size == 0 else pts[None, :]
        self.points = pts

    @classmethod
    def from_points(cls, points, label: str = "", plans=None, feasible: bool = True,
                    normalization=None) -> "FrontArchive":
        """Filter ``points`` down to unique non-dominated rows."""
        pts = np.asarray(points, dtype=float)
        if len(pts) == 0:
            return cls(pts.reshape(0, pts.shape[1] if pts.ndim == 2 else 0), label, normalization, feasible)
        mask = nondominated_mask(pts)
        pts = pts[mask]
        sel = None if plans is None else np.asarray(plans)[mask]
        _, idx = np.unique(pts, axis=0, return_index=True)
        idx = np.sort(idx)
        return cls(pts[idx], label, normalization, feasible, None if sel is None else sel[idx])

    def __len__(self):
        return len(self.points)

    def normalized(self, bounds=None) -> np.ndarray:
        bounds = bounds if bounds is not None else self.normalization
        return normalize(self.points, bounds)


def normalize(points: np.ndarray, bounds) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if bounds is None:
        return pts
    lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    return (pts - lo) / span


def bounds_of(*point_sets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    allpts = np.vstack([np.asarray(p, dtype=float) for p in point_sets if len(p)])
    return allpts.min(axis=0), allpts.max(axis=0)


def _as_points(front) -> np.ndarray:
    return front.points if isinstance(front, FrontArchive) else np.atleast_2d(np.asarray(front, dtype=float))


# ----------------------------------------------------------------------------
# hypervolume


def _hv2d(pts: np.ndarray, ref: np.ndarray) -> float:
    order = np.argsort(pts[:, 0], kind="stable")
    total, best_y = 0.0, ref[1]
    for x, y in pts[order]:
        if y < best_y:
            total += (ref[0] - x) * (best_y - y)
            best_y = y
    return total


def _wfg(pts: np.ndarray, ref: np.ndarray) -> float:
    if len(pts) == 0:
        return 0.0
    if pts.shape[1] == 1:
        return float(ref[0] - pts[:, 0].min())
    if pts.shape[1] == 2:
        return _hv2d(pts, ref)
    if len(pts) == 1:
        return float(np.prod(ref - pts[0]))
    # sorting on the last objective keeps the limit sets small
    pts = pts[np.argsort(pts[:, -1], kind="stable")[::-1]]
    total = 0.0
    for k in range(len(pts)):
        p = pts[k]
        rest = pts[k + 1:]
        total += float(np.prod(ref - p))
        if len(rest):
            limited = np.maximum(rest, p)
            limited = limited[nondominated_mask(limited)]
            total -= _wfg(limited, ref)
    return total


def hypervolume(front, reference) -> float:
    """Exact dominated volume between the front and ``reference`` (minimization).

    Uses the WFG exclusive-volume recursion with a 2-D sweep base case.
    """
    pts = _as_points(front)
    ref = np.asarray(reference, dtype=float)
    if len(pts) == 0:
        return 0.0
    if pts.shape[1] != ref.size:
        raise ValueError("reference point dimension does not match the front")
    bad = np.flatnonzero(~np.all(pts <= ref, axis=1))
    if bad.size:
        raise ValueError(f"point {pts[bad[0]].tolist()} does not dominate the reference point {ref.tolist()}")
    pts = _unique_rows(pts[nondominated_mask(pts)])
    return float(_wfg(pts, ref))


def hypervolume_monte_carlo(front, reference, samples: int = 1_000_000, seed: int = 0,
                            chunk: int = 100_000) -> float:
    """Monte Carlo estimate of the dominated volume inside the bounding box."""
    pts = _as_points(front)
    ref = np.asarray(reference, dtype=float)
    lo = pts.min(axis=0)
    box = float(np.prod(ref - lo))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        s = lo + rng.random((k, ref.size)) * (ref - lo)
        dominated = np.zeros(k, dtype=bool)
        for p in pts:
            dominated |= np.all(p <= s, axis=1)
        hits += int(dominated.sum())
        done += k
    return box * hits / samples


# ----------------------------------------------------------------------------
# distance indicators


def _min_distances(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    diff = src[:, None, :] - dst[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=2)).min(axis=1)


def _check_nonempty(*fronts):
    for f in fronts:
        if len(_as_points(f)) == 0:
            raise ValueError("GD/IGD need nonempty fronts")


def _bounds(front, truth, bounds):
    if bounds is not None:
        return bounds
    for f in (truth, front):
        if isinstance(f, FrontArchive) and f.normalization is not None:
            return f.normalization
    return None


def generational_distance(front, truth, bounds=None, p: float = 2.0) -> float:
    """``(mean d_i^p)^(1/p)`` over obtained points; d_i is the distance to the nearest truth point."""
    _check_nonempty(front, truth)
    b = _bounds(front, truth, bounds)
    a, t = normalize(_as_points(front), b), normalize(_as_points(truth), b)
    d = _min_distances(a, t)
    return float(np.mean(d ** p) ** (1.0 / p))


def inverted_generational_distance(front, truth, bounds=None, p: float = 2.0) -> float:
    _check_nonempty(front, truth)
    b = _bounds(front, truth, bounds)
    a, t = normalize(_as_points(front), b), normalize(_as_points(truth), b)
    d = _min_distances(t, a)
    return float(np.mean(d ** p) ** (1.0 / p))


# ----------------------------------------------------------------------------
# truth fronts


def enumerate_plans(n_objects: int, n_nodes: int) -> np.ndarray:
    """Every plan with a nonempty node set per object, shaped ``(k, objects, nodes)``."""
    if n_objects * n_nodes > EXHAUSTIVE_LIMIT_BITS:
        raise ValueError(f"exhaustive enumeration of {n_objects} objects x {n_nodes} nodes "
                         f"= 2^{n_objects * n_nodes} plans exceeds the 2^{EXHAUSTIVE_LIMIT_BITS} limit")
    rows = np.array([[(s >> j) & 1 for j in range(n_nodes)] for s in range(1, 2 ** n_nodes)], dtype=bool)
    idx = np.array(list(product(range(len(rows)), repeat=n_objects)))
    return rows[idx]


def build_truth_front(scenario, budget: str = "exhaustive", archives: Iterable[FrontArchive] = (),
                      policy=None, label: str = "truth") -> FrontArchive:
    """Reference Pareto front for metric computation.

    ``exhaustive`` enumerates every valid plan and keeps the feasible
    non-dominated ones; ``merged_runs`` takes the non-dominated union of the
    given run archives.
    """
    if budget == "exhaustive":
        from .objectives import Problem
        plans = enumerate_plans(scenario.n_objects, scenario.n_nodes)
        problem = Problem(scenario, policy)
        objs = problem.objectives(plans)
        ok = problem.violations(plans) <= 0
        return FrontArchive.from_points(objs[ok], label, plans=plans[ok])
    if budget == "merged_runs":
        archives = list(archives)
        if not archives:
            raise ValueError("merged_runs needs at least one archive")
        pts = np.vstack([a.points for a in archives if len(a)])
        return FrontArchive.from_points(pts, label)
    raise ValueError(f"unknown truth budget {budget!r}")


def hv_reference(truth: FrontArchive, bounds=None, factor: float = 1.1) -> np.ndarray:
    """``factor`` times the (normalized) nadir of the truth front."""
    return factor * normalize(truth.points, bounds).max(axis=0)


def coverage(front, truth, tol: float = 1e-9) -> float:
    """Fraction of truth points matched by some front point within ``tol``."""
    t, a = _as_points(truth), _as_points(front)
    if len(a) == 0:
        return 0.0
    hit = np.abs(t[:, None, :] - a[None, :, :]).max(axis=2).min(axis=1) <= tol * np.maximum(1.0, np.abs(t).max(axis=1))
    return float(hit.mean())
