"""Stage 2: (mu+1)-EA that keeps every tour under the threshold while
pushing the population apart under one of two diversity measures."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._backend import kernels
from ._pykernels import MUTATION_SWAP, MUTATION_TWO_OPT, VARIANT_ED, VARIANT_PD
from .budget import EvalBudget
from .diversity import d1, d2
from .local_search import two_opt_moves
from .tour import Tour, tour_cost
from .tsplib import Instance

log = logging.getLogger(__name__)

CHUNK = 1 << 16


class Variant(str, enum.Enum):
    ED = "ED"
    PD = "PD"

    @classmethod
    def parse(cls, s) -> "Variant":
        return s if isinstance(s, cls) else cls(str(s).upper())

    def measure(self, pop) -> float:
        return d1(pop) if self is Variant.ED else d2(pop)

    def score(self, key: int, n: int, mu: int) -> float:
        """Diversity value for a kernel key."""
        if self is Variant.ED:
            return 1.0 - key / (n * mu * (mu - 1))
        return 1.0 - key / (n * mu)


class Mutation(str, enum.Enum):
    TWO_OPT = "2opt"
    SWAP = "swap"


@lru_cache(maxsize=16)
def swap_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All position pairs ``i < j`` for the swap mutation."""
    a, b = np.triu_indices(n, k=1)
    a = np.ascontiguousarray(a, dtype=np.int32)
    b = np.ascontiguousarray(b, dtype=np.int32)
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def operation_table(n: int, mutation: Mutation) -> tuple[np.ndarray, np.ndarray]:
    return two_opt_moves(n) if mutation is Mutation.TWO_OPT else swap_pairs(n)


@dataclass
class EaResult:
    population: list[Tour]
    last_improvement: float
    steps: int
    accepted: int
    diversity: float


class DiversityEA:
    """State of the (mu+1)-EA: the population as a ``mu x n`` matrix.

    Every step draws a uniform parent and a uniform mutation, pays one
    evaluation, and lets a feasible offspring replace whichever member's
    removal leaves the highest diversity (the offspring itself included).
    """

    def __init__(self, pop: list[Tour], inst: Instance, threshold, variant,
                 mutation: Mutation | str = Mutation.TWO_OPT):
        if len(pop) < 2:
            raise ValueError("the diversity EA needs at least 2 tours")
        self.inst = inst
        self.thr = float(getattr(threshold, "value", threshold))
        self.variant = Variant.parse(variant)
        self.mutation = Mutation(mutation)
        self.perms = np.ascontiguousarray(np.stack([t.perm for t in pop]), dtype=np.int32)
        costs = [t.cost if t.cost is not None else tour_cost(inst, t.perm) for t in pop]
        self.costs = np.asarray(costs, dtype=np.int64)
        if (self.costs > self.thr).any():
            raise ValueError("every tour in the initial population must meet the threshold")
        self.op_a, self.op_b = operation_table(inst.n, self.mutation)
        self.steps = 0
        self.accepted = 0
        self.key = None

    @property
    def mu(self) -> int:
        return len(self.perms)

    @property
    def population(self) -> list[Tour]:
        return [Tour(p.copy(), int(c)) for p, c in zip(self.perms, self.costs)]

    def diversity(self) -> float:
        return self.variant.measure(self.perms)

    def _draw(self, rng, count):
        parents = rng.integers(0, self.mu, size=count, dtype=np.int64)
        ops = rng.integers(0, len(self.op_a), size=count, dtype=np.int64)
        return parents, ops

    def advance(self, parents: np.ndarray, ops: np.ndarray, trace=None) -> int:
        """Run the given steps without touching any budget; returns the index
        of the last step that strictly improved diversity (or -1)."""
        v = VARIANT_ED if self.variant is Variant.ED else VARIANT_PD
        m = MUTATION_TWO_OPT if self.mutation is Mutation.TWO_OPT else MUTATION_SWAP
        acc, last, key = kernels.ea_steps(
            self.perms, self.costs, self.inst.dist, self.op_a, self.op_b,
            np.ascontiguousarray(parents, dtype=np.int64),
            np.ascontiguousarray(ops, dtype=np.int64),
            self.thr, v, m, trace)
        self.steps += len(parents)
        self.accepted += int(acc)
        self.key = int(key)
        return int(last)

    def run(self, budget: EvalBudget, rng: np.random.Generator, max_steps: int | None = None,
            check: bool = False, chunk: int = CHUNK) -> float:
        """Spend the remaining budget (one evaluation per step).

        Returns the ledger reading just after the last step that strictly
        improved diversity, or the reading at entry when none did. With
        ``check`` the diversity key is verified to never increase and to
        match a from-scratch recomputation at the end.
        """
        last_improvement = budget.used
        total = budget.remaining_evaluations()
        if max_steps is not None:
            total = min(total, max_steps)
        done = 0
        prev_key = None
        while done < total:
            c = min(chunk, total - done)
            parents, ops = self._draw(rng, c)
            trace = np.empty(c, dtype=np.int64) if check else None
            start_units = budget.used_units
            last = self.advance(parents, ops, trace)
            budget.charge_evaluations(c)
            if last >= 0:
                last_improvement = (start_units + (last + 1) * budget.n) / budget.n
            if check:
                seq = trace if prev_key is None else np.r_[prev_key, trace]
                if (np.diff(seq) > 0).any():
                    raise AssertionError("diversity decreased during the EA")
                prev_key = int(trace[-1])
            done += c
            log.debug("ea %s steps=%d accepted=%d diversity=%.6f", self.variant.value,
                      self.steps, self.accepted, self.score())
        if check:
            if not np.isclose(self.score(), self.diversity(), rtol=0, atol=1e-12):
                raise AssertionError("incremental diversity disagrees with recomputation")
            for p, c in zip(self.perms, self.costs):
                if tour_cost(self.inst, p) != c or c > self.thr:
                    raise AssertionError("EA population holds a wrong or infeasible cost")
        return last_improvement

    def score(self) -> float:
        if self.key is None:
            return self.diversity()
        return self.variant.score(self.key, self.inst.n, self.mu)


def ea_step(pop: list[Tour], inst: Instance, threshold, variant, budget: EvalBudget,
            rng: np.random.Generator, mutation: Mutation | str = Mutation.TWO_OPT
            ) -> list[Tour]:
    """A single EA step; returns the new population (``pop`` is untouched)."""
    ea = DiversityEA(pop, inst, threshold, variant, mutation)
    if budget.can_evaluate():
        ea.run(budget, rng, max_steps=1)
    return ea.population


def run_ea(pop: list[Tour], inst: Instance, threshold, variant, budget: EvalBudget,
           rng: np.random.Generator, mutation: Mutation | str = Mutation.TWO_OPT,
           check: bool = False) -> EaResult:
    ea = DiversityEA(pop, inst, threshold, variant, mutation)
    last = ea.run(budget, rng, check=check)
    return EaResult(ea.population, last, ea.steps, ea.accepted, ea.diversity())
