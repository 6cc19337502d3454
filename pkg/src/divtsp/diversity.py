"""Population diversity scores and set-level reporting metrics."""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._backend import kernels
from .tour import Tour
from .tsplib import Instance


def _perm_matrix(pop: Sequence[Tour] | np.ndarray) -> np.ndarray:
    if isinstance(pop, np.ndarray):
        return np.ascontiguousarray(pop, dtype=np.int32)
    n = {t.n for t in pop}
    if len(n) > 1:
        raise ValueError(f"population mixes tour sizes {sorted(n)}")
    return np.ascontiguousarray(np.stack([t.perm for t in pop]), dtype=np.int32)


def shared_matrix(pop) -> np.ndarray:
    """Pairwise shared-edge counts (diagonal = n)."""
    return kernels.shared_counts(_perm_matrix(pop))


def distance_matrix(pop) -> np.ndarray:
    perms = _perm_matrix(pop)
    return 1.0 - shared_matrix(perms) / perms.shape[1]


def _check_size(pop):
    if len(pop) < 2:
        raise ValueError("diversity needs at least 2 tours")


def d1(pop) -> float:
    """Mean edge distance over ordered pairs of distinct members."""
    _check_size(pop)
    D = distance_matrix(pop)
    mu = len(D)
    return float(D.sum() / (mu * (mu - 1)))


def d2(pop) -> float:
    """Mean distance from each member to its nearest other member."""
    _check_size(pop)
    D = distance_matrix(pop)
    np.fill_diagonal(D, np.inf)
    return float(D.min(axis=1).mean())


class EdgeFrequencyTable:
    """Occurrence count of every undirected edge across a population."""

    def __init__(self, n: int, pop: Sequence[Tour] = ()):
        self.n = n
        self.size = 0
        self.counts = np.zeros((n, n), dtype=np.int64)
        for t in pop:
            self.add(t)

    def _edges(self, t):
        perm = t.perm if isinstance(t, Tour) else np.asarray(t)
        nxt = np.roll(perm, -1)
        return np.minimum(perm, nxt), np.maximum(perm, nxt)

    def add(self, t) -> None:
        lo, hi = self._edges(t)
        np.add.at(self.counts, (lo, hi), 1)
        self.size += 1

    def remove(self, t) -> None:
        lo, hi = self._edges(t)
        if (self.counts[lo, hi] <= 0).any():
            raise ValueError("removing a tour whose edges are not in the table")
        np.add.at(self.counts, (lo, hi), -1)
        self.size -= 1

    def count(self, a: int, b: int) -> int:
        return int(self.counts[min(a, b), max(a, b)])

    def total(self) -> int:
        return int(self.counts.sum())

    def collisions(self) -> int:
        """``sum_e c(e) (c(e) - 1)``: ordered member pairs sharing an edge."""
        c = self.counts
        return int((c * (c - 1)).sum())

    def d1(self) -> float:
        mu = self.size
        if mu < 2:
            raise ValueError("diversity needs at least 2 tours")
        return 1.0 - self.collisions() / (self.n * mu * (mu - 1))

    def __eq__(self, other):
        return (isinstance(other, EdgeFrequencyTable) and self.size == other.size
                and np.array_equal(self.counts, other.counts))


def d1_from_frequencies(pop: Sequence[Tour]) -> float:
    return EdgeFrequencyTable(pop[0].n, pop).d1()


def gmm_order(D: np.ndarray, k: int) -> list[int]:
    """Greedy max-min selection on a distance matrix.

    Starts from the farthest pair (lexicographically lowest on ties) and adds
    the point farthest from the chosen set until ``k`` are chosen.
    """
    m = len(D)
    if not 2 <= k <= m:
        raise ValueError(f"need 2 <= k <= {m}, got k={k}")
    flat = int(np.argmax(np.triu(D, 1) - np.tril(np.ones_like(D))))
    i, j = divmod(flat, m)
    chosen = [i, j]
    mind = np.minimum(D[i], D[j])
    mind[chosen] = -np.inf
    while len(chosen) < k:
        nxt = int(np.argmax(mind))
        chosen.append(nxt)
        mind = np.minimum(mind, D[nxt])
        mind[chosen] = -np.inf
    return chosen


def gmm_select(pop: Sequence[Tour], k: int) -> list[Tour]:
    if k > len(pop):
        raise ValueError(f"cannot select {k} of {len(pop)} tours")
    return [pop[i] for i in gmm_order(distance_matrix(pop), k)]


def cluster_count(pop, cutoff: float = 0.2) -> int:
    """Single-linkage clusters when merging only pairs closer than ``cutoff``.

    The comparison is exact: ``1 - s/n < cutoff`` becomes an integer test on
    the shared-edge count ``s``, with ``cutoff`` read as the decimal it prints as.
    """
    if len(pop) == 1:
        return 1
    perms = _perm_matrix(pop)
    n = perms.shape[1]
    c = Fraction(repr(float(cutoff)))
    S = shared_matrix(perms).astype(np.int64)
    adj = csr_matrix(S * c.denominator > n * (c.denominator - c.numerator))
    ncomp, _ = connected_components(adj, directed=False)
    return int(ncomp)


def mean_gap(pop: Sequence[Tour], inst: Instance) -> float:
    if not inst.optimum_cost:
        raise ValueError("mean gap needs a positive optimum cost")
    return float(np.mean([t.cost for t in pop]) / inst.optimum_cost)
