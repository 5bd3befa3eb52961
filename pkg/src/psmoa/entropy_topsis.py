"""Entropy weighting, preference adjustment, TOPSIS scoring and reference points."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Optional, Sequence

import numpy as np

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class WeightVector:
    weights: np.ndarray
    kind: str = "raw_entropy"  # or "policy_adjusted"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < -_SUM_TOL) or np.any(w > 1 + _SUM_TOL) or abs(w.sum() - 1.0) > _SUM_TOL:
            raise ValueError(f"weights must lie in [0, 1] and sum to 1, got {w}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    def __eq__(self, other):
        return (isinstance(other, WeightVector) and self.kind == other.kind
                and np.array_equal(self.weights, other.weights))


@dataclass(frozen=True)
class TopsisScores:
    ideal: np.ndarray
    anti_ideal: np.ndarray
    d_plus: np.ndarray
    d_minus: np.ndarray
    closeness: np.ndarray

    def best(self) -> int:
        return int(np.argmax(self.closeness))


@dataclass(frozen=True)
class ReferencePointSet:
    points: np.ndarray
    divisions: int
    bias_weights: WeightVector

    def __len__(self):
        return len(self.points)


def entropy_weights(performance) -> WeightVector:
    """Shannon-entropy objective weights for a non-negative alternatives x criteria matrix."""
    x = np.asarray(performance, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("entropy weighting needs at least 2 alternatives")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("performance ratings must be finite and non-negative")
    col = x.sum(axis=0)
    if np.any(col <= 0):
        raise ValueError(f"columns {np.flatnonzero(col <= 0).tolist()} have no positive entry")
    p = x / col
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    e = -plogp.sum(axis=0) / np.log(x.shape[0])
    d = 1.0 - e
    # float noise can push e a hair above 1 for near-uniform columns
    d = np.clip(d, 0.0, None)
    if d.sum() <= 0:
        return WeightVector(np.full(x.shape[1], 1.0 / x.shape[1]), "raw_entropy")
    return WeightVector(d / d.sum(), "raw_entropy")


def adjust_weights(w: WeightVector, alpha: Sequence[float]) -> WeightVector:
    a = np.asarray(alpha, dtype=float)
    if a.shape != w.weights.shape:
        raise ValueError(f"alpha has {a.size} components, weights have {len(w)}")
    if np.any(a < 0):
        raise ValueError("preference factors must be >= 0")
    if a[0] > 0 and np.all(a == a[0]):
        # equal factors cancel in the ratio; skip the renormalisation round-off
        return WeightVector(w.weights.copy(), "policy_adjusted")
    mass = a * w.weights
    total = mass.sum()
    if total <= 0:
        raise ValueError("alpha removes all weight mass")
    return WeightVector(mass / total, "policy_adjusted")


def topsis_score(objectives, w, sense: Optional[Sequence[str]] = None) -> TopsisScores:
    """Weighted closeness of each solution to the ideal point.

    ``sense`` gives "min" or "max" per column (default all "min"). When every
    solution coincides with both ideals the closeness is 0.5 by convention.
    """
    z = np.atleast_2d(np.asarray(objectives, dtype=float))
    weights = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=float)
    if z.shape[0] < 1:
        raise ValueError("TOPSIS needs at least one solution")
    if sense is None:
        sense = ["min"] * z.shape[1]
    maximize = np.array([s == "max" for s in sense])
    lo, hi = z.min(axis=0), z.max(axis=0)
    ideal = np.where(maximize, hi, lo)
    anti = np.where(maximize, lo, hi)
    d_plus = np.sqrt((weights * (ideal - z) ** 2).sum(axis=1))
    d_minus = np.sqrt((weights * (anti - z) ** 2).sum(axis=1))
    denom = d_plus + d_minus
    with np.errstate(invalid="ignore", divide="ignore"):
        closeness = np.where(denom > 0, d_minus / denom, 0.5)
    return TopsisScores(ideal, anti, d_plus, d_minus, closeness)


def das_dennis(n_obj: int, divisions: int) -> np.ndarray:
    """All points of the simplex lattice with ``divisions`` steps per axis."""
    if divisions < 1 or n_obj < 1:
        raise ValueError("need divisions >= 1 and at least one objective")
    # stars and bars: choose bar positions among divisions + n_obj - 1 slots
    pts = []
    for bars in combinations(range(divisions + n_obj - 1), n_obj - 1):
        edges = (-1,) + bars + (divisions + n_obj - 1,)
        pts.append([edges[k + 1] - edges[k] - 1 for k in range(n_obj)])
    return np.array(pts, dtype=float) / divisions


def divisions_for(n_obj: int, target: int) -> int:
    """Smallest lattice density giving at least ``target`` points."""
    p = 1
    while comb(p + n_obj - 1, n_obj - 1) < target:
        p += 1
    return p


def _dedupe(points: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    keep = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= tol for q in keep):
            keep.append(p)
    return np.array(keep)


def generate_reference_points(w_adj: WeightVector, divisions: Optional[int] = None,
                              closeness=None) -> ReferencePointSet:
    """Lattice reference directions pulled toward the adjusted weights.

    Every lattice point is multiplied coordinate-wise by the weights and put
    back on the simplex; points that vanish under the bias are dropped and
    coincident points merged. Uniform weights leave the lattice untouched.
    Without explicit ``divisions`` the density is chosen so the lattice has
    about as many points as there are scored solutions in ``closeness``.
    """
    m = len(w_adj)
    if divisions is None:
        divisions = divisions_for(m, len(closeness)) if closeness is not None else 6
    if divisions < 1:
        raise ValueError("divisions must be >= 1")
    lattice = das_dennis(m, divisions)
    w = w_adj.weights
    if np.allclose(w, w[0], rtol=0, atol=1e-15):
        return ReferencePointSet(lattice, divisions, w_adj)
    biased = lattice * w
    mass = biased.sum(axis=1)
    biased = biased[mass > 0] / mass[mass > 0, None]
    return ReferencePointSet(_dedupe(biased), divisions, w_adj)
