"""Stage 1: niching memetic search for many distinct tours under a cost cap."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .budget import EvalBudget
from .diversity import shared_matrix
from .local_search import improve
from .tour import (LsState, Tour, greedy_randomized_init, pmx_crossover, swap_mutation,
                   tour_cost)
from .tsplib import Instance

log = logging.getLogger(__name__)


@dataclass
class NichingParams:
    pop_size: int
    m_min: int = 4
    m_max: int = 12
    crossover_rate: float = 0.9
    mutation_rate: float = 0.01

    def __post_init__(self):
        if not 2 <= self.m_min <= self.m_max <= self.pop_size:
            raise ValueError(
                f"need 2 <= m_min <= m_max <= pop_size, got {self.m_min}, {self.m_max}, "
                f"{self.pop_size}")

    @classmethod
    def for_mu(cls, mu: int, pop_size: int | None = None, **kw) -> "NichingParams":
        """Defaults for a target set size ``mu``; the group-size range is
        clipped to the population size for tiny populations."""
        pop_size = 3 * mu if pop_size is None else pop_size
        m_max = min(kw.pop("m_max", 12), pop_size)
        m_min = min(kw.pop("m_min", 4), m_max)
        return cls(pop_size=pop_size, m_min=m_min, m_max=m_max, **kw)


@dataclass
class Grouping:
    groups: list[list[int]]
    leaders: list[int]

    def group_of(self, i: int) -> int:
        for g, members in enumerate(self.groups):
            if i in members:
                return g
        raise KeyError(i)


@dataclass
class NmaResult:
    feasible: list[Tour]
    population: list[Tour]
    evals_used: float
    generations: int
    trace: list[dict] = field(default_factory=list)

    @property
    def failure(self) -> bool:
        return not self.feasible


def initialize(inst: Instance, params: NichingParams, budget: EvalBudget,
               rng: np.random.Generator) -> list[Tour]:
    if not budget.can_evaluate(params.pop_size):
        raise ValueError(
            f"budget of {budget.total} evaluations cannot pay for the initial "
            f"population of {params.pop_size}")
    pop = [greedy_randomized_init(inst, rng) for _ in range(params.pop_size)]
    budget.charge_evaluations(params.pop_size)
    return pop


def neighborhood_strategy(pop: list[Tour], params: NichingParams,
                          shared: np.ndarray | None = None) -> Grouping:
    """Leader-centred groups whose sizes grow with leader quality.

    The cheapest unassigned tour leads a group of
    ``m_min + round((m_max - m_min) * (worst - c_leader) / (worst - best))``
    members (``m_max`` when all costs are equal), filled with the nearest
    unassigned tours by edge distance.
    """
    k = len(pop)
    if shared is None:
        shared = shared_matrix(pop)
    costs = np.array([t.cost for t in pop], dtype=np.int64)
    best, worst = int(costs.min()), int(costs.max())
    span = worst - best
    idx = np.arange(k)
    unassigned = np.ones(k, dtype=bool)
    groups: list[list[int]] = []
    leaders: list[int] = []
    for leader in np.lexsort((idx, costs)).tolist():
        if not unassigned[leader]:
            continue
        if span == 0:
            size = params.m_max
        else:
            num = (params.m_max - params.m_min) * (worst - int(costs[leader]))
            size = params.m_min + (2 * num + span) // (2 * span)
        unassigned[leader] = False
        cand = np.flatnonzero(unassigned)
        size = min(size, len(cand) + 1)
        # nearest = most shared edges; ties to the lowest index
        near = cand[np.lexsort((cand, -shared[leader, cand]))][: size - 1]
        unassigned[near] = False
        groups.append([leader] + near.tolist())
        leaders.append(leader)
    return Grouping(groups, leaders)


def diversity_enhancement(pop: list[Tour], grouping: Grouping, rng: np.random.Generator,
                          shared: np.ndarray | None = None) -> Grouping:
    """Swap every duplicate of a group's leader with a random non-leader of
    another random group. Tours are untouched; only memberships move."""
    if len(grouping.groups) < 2:
        return grouping
    n = pop[0].n
    if shared is None:
        shared = shared_matrix(pop)
    groups = [list(g) for g in grouping.groups]
    leaders = list(grouping.leaders)
    for gi, g in enumerate(groups):
        lead = leaders[gi]
        for i in [m for m in g if m != lead]:
            if shared[i, lead] != n:
                continue
            others = [h for h in range(len(groups)) if h != gi and len(groups[h]) >= 2]
            if not others:
                continue
            h = others[int(rng.integers(len(others)))]
            movable = [m for m in groups[h] if m != leaders[h]]
            j = movable[int(rng.integers(len(movable)))]
            g[g.index(i)] = j
            groups[h][groups[h].index(j)] = i
    return Grouping(groups, leaders)


def _make_offspring(pop, members, params, rng):
    """PMX + swap mutation inside one group. Returns ``(child, template)`` pairs."""
    order = rng.permutation(members).tolist()
    pairs = [(order[q], order[q + 1], True) for q in range(0, len(order) - 1, 2)]
    if len(order) % 2:
        last = order[-1]
        if len(order) > 1:
            mates = [m for m in members if m != last]
            pairs.append((last, mates[int(rng.integers(len(mates)))], False))
        else:
            pairs.append((last, last, False))
    out = []
    for i, j, both in pairs:
        if i != j and rng.random() < params.crossover_rate:
            c1, c2 = pmx_crossover(pop[i], pop[j], rng)
        else:
            c1, c2 = Tour(pop[i].perm.copy()), Tour(pop[j].perm.copy())
        out.append((c1, i))
        if both:
            out.append((c2, j))
    for q, (child, tmpl) in enumerate(out):
        if rng.random() < params.mutation_rate:
            out[q] = (swap_mutation(child, rng), tmpl)
    return out


def nma_generation(pop: list[Tour], grouping: Grouping, inst: Instance, threshold,
                   params: NichingParams, budget: EvalBudget,
                   rng: np.random.Generator) -> tuple[list[Tour], bool]:
    """One generation over all groups. Returns ``(population, out_of_budget)``."""
    thr = float(getattr(threshold, "value", threshold))
    new_pop = list(pop)
    out_of_budget = False
    for members in grouping.groups:
        size = len(members)
        offspring: list[Tour] = []
        for child, tmpl in _make_offspring(pop, members, params, rng):
            parent = pop[tmpl]
            if np.array_equal(child.perm, parent.perm):
                # selective evaluation: an unchanged copy keeps its cost and flag
                child.cost = parent.cost
                child.ls_state = parent.ls_state
            elif budget.can_evaluate():
                child.cost = tour_cost(inst, child.perm)
                budget.charge_evaluations()
            else:
                out_of_budget = True
                continue
            offspring.append(child)

        pool = [q for q, c in enumerate(offspring)
                if c.cost > thr and c.ls_state is not LsState.LOCAL_OPTIMUM]
        pool.sort(key=lambda q: (offspring[q].cost, q))
        for q in pool[: math.ceil(size / 2)]:
            if budget.exhausted:
                out_of_budget = True
                break
            offspring[q] = improve(offspring[q], inst, thr, budget, rng).tour

        # group-wide elitism over parents followed by offspring; ties keep
        # the earlier entry, so a parent beats an equally good child
        union = [pop[m] for m in sorted(members)] + offspring
        ranked = sorted(range(len(union)), key=lambda u: (union[u].cost, u))
        for slot, u in zip(sorted(members), ranked[:size]):
            new_pop[slot] = union[u]
    return new_pop, out_of_budget


def count_feasible(pop: list[Tour], thr: float) -> int:
    return sum(1 for t in pop if t.cost <= thr)


def run_nma(inst: Instance, threshold, mu: int, params: NichingParams, budget: EvalBudget,
            rng: np.random.Generator) -> NmaResult:
    """Evolve until ``mu`` tours meet the threshold or the budget runs out;
    return every satisfactory tour."""
    thr = float(getattr(threshold, "value", threshold))
    pop = initialize(inst, params, budget, rng)
    gen = 0
    trace = []
    while count_feasible(pop, thr) < mu and not budget.exhausted:
        before = budget.used_units
        shared = shared_matrix(pop)
        grouping = neighborhood_strategy(pop, params, shared)
        grouping = diversity_enhancement(pop, grouping, rng, shared)
        pop, out_of_budget = nma_generation(pop, grouping, inst, thr, params, budget, rng)
        gen += 1
        rec = dict(generation=gen, best=min(t.cost for t in pop),
                   feasible=count_feasible(pop, thr), evals=budget.used,
                   groups=len(grouping.groups))
        trace.append(rec)
        log.debug("nma gen %(generation)d best=%(best)d feasible=%(feasible)d "
                  "evals=%(evals).1f groups=%(groups)d", rec)
        if out_of_budget:
            break
        if budget.used_units == before:
            # nothing was evaluated or searched, so nothing can change
            break
    feasible = [t for t in pop if t.cost <= thr]
    return NmaResult(feasible, pop, budget.used, gen, trace)
