"""Brute-force reference implementations, written from the definitions and
sharing no code with the package."""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations


def nint_dist(a, b) -> int:
    return int(math.floor(math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) + 0.5))


def cost(coords, perm) -> int:
    n = len(perm)
    return sum(nint_dist(coords[perm[i]], coords[perm[(i + 1) % n]]) for i in range(n))


def cost_from_table(dist, perm) -> int:
    n = len(perm)
    return sum(int(dist[perm[i]][perm[(i + 1) % n]]) for i in range(n))


def edges(perm) -> set:
    n = len(perm)
    return {frozenset((int(perm[i]), int(perm[(i + 1) % n]))) for i in range(n)}


def distance(p, q) -> Fraction:
    return 1 - Fraction(len(edges(p) & edges(q)), len(p))


def d1(perms) -> Fraction:
    mu = len(perms)
    total = sum(distance(perms[i], perms[j]) for i in range(mu) for j in range(mu) if i != j)
    return total / (mu * (mu - 1))


def d2(perms) -> Fraction:
    mu = len(perms)
    return sum(min(distance(perms[i], perms[j]) for j in range(mu) if j != i)
               for i in range(mu)) / mu


def survivor_removal(perms, offspring, measure) -> int:
    """Index (offspring = len(perms)) whose removal maximises ``measure``;
    ties go to the lowest index."""
    pool = list(perms) + [offspring]
    best, best_val = None, None
    for r in range(len(pool)):
        val = measure(pool[:r] + pool[r + 1:])
        if best is None or val > best_val:
            best, best_val = r, val
    return best


def gmm(D, k) -> list[int]:
    """Farthest pair first (first in row-major order on ties), then repeatedly
    the point with the largest distance to the chosen set (lowest index on ties)."""
    m = len(D)
    best = None
    for i, j in combinations(range(m), 2):
        if best is None or D[i][j] > D[best[0]][best[1]]:
            best = (i, j)
    chosen = list(best)
    while len(chosen) < k:
        pick, pick_val = None, None
        for c in range(m):
            if c in chosen:
                continue
            v = min(D[c][s] for s in chosen)
            if pick is None or v > pick_val:
                pick, pick_val = c, v
        chosen.append(pick)
    return chosen


def reversed_tour(perm, i, j):
    p = list(perm)
    p[i:j + 1] = p[i:j + 1][::-1]
    return p


def improving_reversal_exists(dist, perm) -> bool:
    """Any segment reversal that strictly lowers the full recomputed cost."""
    base = cost_from_table(dist, perm)
    n = len(perm)
    for i in range(n):
        for j in range(i + 1, n):
            if cost_from_table(dist, reversed_tour(perm, i, j)) < base:
                return True
    return False


def clusters(D, cutoff) -> int:
    """Union-find over pairs closer than ``cutoff``."""
    parent = list(range(len(D)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in combinations(range(len(D)), 2):
        if D[i][j] < cutoff:
            parent[find(i)] = find(j)
    return len({find(i) for i in range(len(D))})
