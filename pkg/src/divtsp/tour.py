"""Tours, edge sets, the edge distance and the variation operators."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .tsplib import Instance


class LsState(enum.Enum):
    UNKNOWN = "unknown"
    LOCAL_OPTIMUM = "local_optimum"
    THRESHOLD_SATISFIED = "threshold_satisfied"


@dataclass(eq=False)
class Tour:
    """A permutation of cities with its cached cost.

    ``cost is None`` marks a stale cache (an operator changed the permutation
    and nobody has evaluated it yet).
    """

    perm: np.ndarray
    cost: int | None = None
    ls_state: LsState = LsState.UNKNOWN

    def __post_init__(self):
        self.perm = np.ascontiguousarray(self.perm, dtype=np.int32)

    @property
    def n(self) -> int:
        return len(self.perm)

    def copy(self) -> "Tour":
        return Tour(self.perm.copy(), self.cost, self.ls_state)

    def same_cycle(self, other: "Tour") -> bool:
        return shared_edges(self.perm, other.perm) == self.n

    def __repr__(self):
        head = " ".join(map(str, self.perm[:8]))
        more = " ..." if self.n > 8 else ""
        return f"Tour([{head}{more}], cost={self.cost}, {self.ls_state.value})"


def is_permutation(perm, n: int | None = None) -> bool:
    perm = np.asarray(perm)
    n = len(perm) if n is None else n
    return len(perm) == n and np.array_equal(np.sort(perm), np.arange(n))


def tour_cost(inst: Instance, perm) -> int:
    perm = np.asarray(perm)
    return int(inst.dist[perm, np.roll(perm, -1)].sum(dtype=np.int64))


def evaluate(inst: Instance, tour: Tour) -> Tour:
    tour.cost = tour_cost(inst, tour.perm)
    return tour


class EdgeSet(frozenset):
    """The ``n`` undirected edges of a tour as ``(min, max)`` city pairs."""

    @classmethod
    def of(cls, perm) -> "EdgeSet":
        perm = np.asarray(perm)
        nxt = np.roll(perm, -1)
        lo = np.minimum(perm, nxt).tolist()
        hi = np.maximum(perm, nxt).tolist()
        return cls(zip(lo, hi))

    def degrees(self) -> dict[int, int]:
        deg: dict[int, int] = {}
        for a, b in self:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        return deg


def edge_set(perm) -> EdgeSet:
    return EdgeSet.of(perm)


def successors(perm) -> np.ndarray:
    perm = np.asarray(perm)
    succ = np.empty(len(perm), dtype=np.int64)
    succ[perm] = np.roll(perm, -1)
    return succ


def predecessors(perm) -> np.ndarray:
    perm = np.asarray(perm)
    pred = np.empty(len(perm), dtype=np.int64)
    pred[perm] = np.roll(perm, 1)
    return pred


def shared_edges(perm_a, perm_b) -> int:
    """``|E(a) & E(b)|`` in O(n) via successor/predecessor lookup."""
    if len(perm_a) != len(perm_b):
        raise ValueError(f"tours have different sizes ({len(perm_a)} vs {len(perm_b)})")
    sa = successors(perm_a)
    return int(np.count_nonzero((successors(perm_b) == sa) | (predecessors(perm_b) == sa)))


def _perm(t):
    return t.perm if isinstance(t, Tour) else np.asarray(t)


def edge_distance(a, b) -> float:
    """``1 - |E(a) & E(b)| / n``; zero exactly for the same cycle."""
    pa, pb = _perm(a), _perm(b)
    return 1.0 - shared_edges(pa, pb) / len(pa)


def pmx_child(template, donor, lo: int, hi: int) -> np.ndarray:
    """PMX child keeping ``template[lo..hi]`` (inclusive), the rest from ``donor``."""
    template = np.asarray(template)
    donor = np.asarray(donor)
    n = len(template)
    child = donor.copy()
    child[lo : hi + 1] = template[lo : hi + 1]
    pos_in_template = np.empty(n, dtype=np.int64)
    pos_in_template[template] = np.arange(n)
    in_seg = np.zeros(n, dtype=bool)
    in_seg[template[lo : hi + 1]] = True
    outside = np.r_[0:lo, hi + 1 : n]
    conflicts = outside[in_seg[donor[outside]]]
    for q in conflicts.tolist():
        v = int(donor[q])
        while in_seg[v]:
            v = int(donor[pos_in_template[v]])
        child[q] = v
    return child


def random_cuts(n: int, rng: np.random.Generator) -> tuple[int, int]:
    """Two distinct cut points in ``0..n``; returns the inclusive segment."""
    c1, c2 = sorted(rng.choice(n + 1, size=2, replace=False).tolist())
    return c1, c2 - 1


def pmx_crossover(p1: Tour, p2: Tour, rng: np.random.Generator,
                  segment: tuple[int, int] | None = None) -> tuple[Tour, Tour]:
    if p1.n != p2.n:
        raise ValueError("parents have different sizes")
    lo, hi = segment if segment is not None else random_cuts(p1.n, rng)
    c1 = pmx_child(p1.perm, p2.perm, lo, hi)
    c2 = pmx_child(p2.perm, p1.perm, lo, hi)
    return Tour(c1), Tour(c2)


def swap_positions(perm, i: int, j: int) -> np.ndarray:
    out = np.array(perm, copy=True)
    out[i], out[j] = out[j], out[i]
    return out


def swap_mutation(t: Tour, rng: np.random.Generator) -> Tour:
    """Exchange the cities at two distinct uniformly drawn positions.

    The returned tour's cost is stale.
    """
    i, j = rng.choice(t.n, size=2, replace=False).tolist()
    return Tour(swap_positions(t.perm, i, j))


def reversal_delta(inst: Instance, perm, i: int, j: int) -> int:
    n = len(perm)
    a, b = perm[i - 1], perm[i]
    c, d = perm[j], perm[(j + 1) % n]
    dist = inst.dist
    return int(dist[a, c]) + int(dist[b, d]) - int(dist[a, b]) - int(dist[c, d])


def reverse_segment(t: Tour, i: int, j: int, inst: Instance) -> Tour:
    """Reverse positions ``i..j`` and update the cached cost by the delta.

    Reversing the whole tour (``i == 0, j == n - 1``) exchanges no edges and is
    returned unchanged.
    """
    n = t.n
    if not 0 <= i < j < n:
        raise ValueError(f"need 0 <= i < j < n, got i={i}, j={j}, n={n}")
    if i == 0 and j == n - 1:
        return t.copy()
    delta = reversal_delta(inst, t.perm, i, j)
    perm = t.perm.copy()
    perm[i : j + 1] = perm[i : j + 1][::-1]
    cost = None if t.cost is None else t.cost + delta
    return Tour(perm, cost)


def greedy_randomized_init(inst: Instance, rng: np.random.Generator) -> Tour:
    """Random prefix of ``n // 2`` cities, then nearest-neighbour completion.

    Nearest-neighbour ties go to the lowest city index.
    """
    n = inst.n
    half = n // 2
    prefix = rng.permutation(n)[:half]
    perm = np.empty(n, dtype=np.int32)
    perm[:half] = prefix
    visited = np.zeros(n, dtype=bool)
    visited[prefix] = True
    dist = inst.dist
    big = np.iinfo(np.int64).max
    last = int(prefix[-1])
    for q in range(half, n):
        row = np.where(visited, big, dist[last].astype(np.int64))
        nxt = int(np.argmin(row))
        perm[q] = nxt
        visited[nxt] = True
        last = nxt
    return Tour(perm, tour_cost(inst, perm))


def format_tour(perm, name: str = "tour", comment: str = "") -> str:
    out = [f"NAME : {name}"]
    if comment:
        out.append(f"COMMENT : {comment}")
    out += ["TYPE : TOUR", f"DIMENSION : {len(perm)}", "TOUR_SECTION"]
    out += [str(int(c) + 1) for c in perm]
    out += ["-1", "EOF"]
    return "\n".join(out) + "\n"


def format_tours(tours: Iterable[Tour], prefix: str = "tour") -> str:
    return "".join(
        format_tour(t.perm, f"{prefix}{k}", f"cost {t.cost}") for k, t in enumerate(tours)
    )
