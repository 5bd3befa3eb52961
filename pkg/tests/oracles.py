"""Plain-loop reference implementations used to check the vectorised code."""

import math
from itertools import product

import numpy as np


def time_oracle(x, sc):
    total = 0.0
    for i, obj in enumerate(sc.objects):
        for j, node in enumerate(sc.nodes):
            if x[i][j]:
                total += obj.size / node.bandwidth + node.rtt_to_user
    return total


def cost_oracle(x, sc):
    n = len(sc.nodes)
    c1 = sum(node.storage_cost_coeff for node in sc.nodes) / n
    c2 = sum(node.transfer_cost_coeff for node in sc.nodes) / n
    total = 0.0
    for i, obj in enumerate(sc.objects):
        k = sum(1 for j in range(n) if x[i][j])
        total += k * obj.size * c1 + k * obj.size * c2
    return total


def popularity_oracle(x, sc):
    return sum(node.popularity_score for i in range(len(sc.objects))
               for j, node in enumerate(sc.nodes) if x[i][j])


def loads_oracle(x, sc, requests=None):
    n = len(sc.nodes)
    peak = max(p.requests_per_hour[1] for p in sc.workload_phases)
    stored = [0.0] * n
    served = [0.0] * n
    for i, obj in enumerate(sc.objects):
        req = obj.request_count if requests is None else requests[i]
        best, best_p = None, -1.0
        for j, node in enumerate(sc.nodes):
            if x[i][j]:
                stored[j] += obj.size
                if node.popularity_score > best_p:
                    best, best_p = j, node.popularity_score
        served[best] += req
    return [0.5 * (stored[j] / sc.nodes[j].storage_capacity + served[j] / peak) for j in range(n)]


def variance_oracle(values):
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values) / len(values)


def load_oracle(x, sc, requests=None):
    return variance_oracle(loads_oracle(x, sc, requests))


def entropy_oracle(matrix):
    rows, cols = len(matrix), len(matrix[0])
    d = []
    for j in range(cols):
        col = [matrix[i][j] for i in range(rows)]
        s = sum(col)
        e = 0.0
        for v in col:
            p = v / s
            if p > 0:
                e -= p * math.log(p)
        e /= math.log(rows)
        d.append(1.0 - e)
    total = sum(d)
    return [v / total for v in d]


def topsis_oracle(z, w):
    rows, cols = len(z), len(z[0])
    best = [min(z[i][j] for i in range(rows)) for j in range(cols)]
    worst = [max(z[i][j] for i in range(rows)) for j in range(cols)]
    dp, dm, c = [], [], []
    for i in range(rows):
        a = math.sqrt(sum(w[j] * (best[j] - z[i][j]) ** 2 for j in range(cols)))
        b = math.sqrt(sum(w[j] * (worst[j] - z[i][j]) ** 2 for j in range(cols)))
        dp.append(a)
        dm.append(b)
        c.append(b / (a + b) if a + b > 0 else 0.5)
    return best, worst, dp, dm, c


def pareto_dominates(a, b):
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def fronts_oracle(points):
    """Rank by repeated O(n^2) peeling."""
    remaining = list(range(len(points)))
    fronts = []
    while remaining:
        front = [i for i in remaining
                 if not any(pareto_dominates(points[j], points[i]) for j in remaining if j != i)]
        fronts.append(sorted(front))
        remaining = [i for i in remaining if i not in front]
    return fronts


def all_plans(m, n):
    rows = [r for r in product((0, 1), repeat=n) if any(r)]
    for combo in product(rows, repeat=m):
        yield np.array(combo, dtype=bool)
