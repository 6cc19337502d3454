"""Randomized improvement-first 2-opt with a per-call lookup allowance."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._backend import kernels
from ._pykernels import PASS_CAPPED, PASS_THRESHOLD
from .budget import LOOKUP_UNITS, EvalBudget
from .tour import LsState, Tour
from .tsplib import Instance


class LsReason(enum.Enum):
    THRESHOLD_REACHED = "threshold_reached"
    BUDGET_EXHAUSTED = "budget_exhausted"
    LOCAL_OPTIMUM = "local_optimum"


@dataclass
class LsOutcome:
    tour: Tour
    lookups: int
    reason: LsReason
    n: int

    @property
    def evals_spent(self) -> Fraction:
        return Fraction(self.lookups * LOOKUP_UNITS, self.n)


@lru_cache(maxsize=16)
def two_opt_moves(n: int) -> tuple[np.ndarray, np.ndarray]:
    """The ``n(n-3)/2`` non-degenerate 2-opt moves as edge-position pairs.

    Move ``k`` is the pair ``(a, b)`` with ``0 <= a``, ``a + 2 <= b <= n - 1``
    and ``(a, b) != (0, n - 1)``, enumerated in lexicographic order. It removes
    the edges leaving positions ``a`` and ``b`` and is applied by reversing
    positions ``a+1..b``.
    """
    a, b = np.triu_indices(n, k=2)
    keep = ~((a == 0) & (b == n - 1))
    ma = np.ascontiguousarray(a[keep], dtype=np.int32)
    mb = np.ascontiguousarray(b[keep], dtype=np.int32)
    ma.setflags(write=False)
    mb.setflags(write=False)
    return ma, mb


def call_allowance(n: int) -> int:
    """Lookups allowed per call: ``4(n-3)`` evaluations at ``4/n`` each."""
    return n * (n - 3)


def improve(t: Tour, inst: Instance, threshold, budget: EvalBudget,
            rng: np.random.Generator, allowance: int | None = None) -> LsOutcome:
    """Improvement-first 2-opt over freshly shuffled neighbourhood passes.

    Stops when the cost reaches ``threshold`` (a :class:`QualityThreshold` or
    a number), when a full pass finds no improvement (the tour is then marked
    a local optimum), or when the call allowance or the global budget runs out.
    The input tour is not modified.
    """
    n = inst.n
    thr = float(getattr(threshold, "value", threshold))
    if t.cost is None:
        raise ValueError("local search needs an evaluated tour")
    out = t.copy()
    if out.cost <= thr:
        out.ls_state = LsState.THRESHOLD_SATISFIED
        return LsOutcome(out, 0, LsReason.THRESHOLD_REACHED, n)

    ma, mb = two_opt_moves(n)
    allowance = call_allowance(n) if allowance is None else allowance
    perm = out.perm
    cost = out.cost
    used = 0
    reason = LsReason.BUDGET_EXHAUSTED
    while True:
        cap = min(allowance - used, budget.remaining_lookups())
        if cap <= 0:
            break
        order = rng.permutation(len(ma))
        cost, looked, improved, status = kernels.two_opt_pass(
            perm, inst.dist, ma, mb, order, cost, thr, cap)
        used += looked
        budget.charge_lookups(looked)
        if status == PASS_THRESHOLD:
            reason = LsReason.THRESHOLD_REACHED
            break
        if status == PASS_CAPPED:
            break
        if improved == 0:
            reason = LsReason.LOCAL_OPTIMUM
            break

    out.cost = int(cost)
    if reason is LsReason.LOCAL_OPTIMUM:
        out.ls_state = LsState.LOCAL_OPTIMUM
    elif reason is LsReason.THRESHOLD_REACHED:
        out.ls_state = LsState.THRESHOLD_SATISFIED
    elif out.cost != t.cost:
        out.ls_state = LsState.UNKNOWN
    return LsOutcome(out, used, reason, n)


def is_two_opt_local_optimum(inst: Instance, perm) -> bool:
    """Exhaustive check that no 2-opt move strictly improves ``perm``."""
    perm = np.asarray(perm)
    ma, mb = two_opt_moves(len(perm))
    d = inst.dist
    nxt_b = np.where(mb + 1 == len(perm), 0, mb + 1)
    u1, v1, u2, v2 = perm[ma], perm[ma + 1], perm[mb], perm[nxt_b]
    delta = (d[u1, u2].astype(np.int64) + d[v1, v2] - d[u1, v1] - d[u2, v2])
    return bool((delta >= 0).all())
