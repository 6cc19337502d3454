"""Fractional evaluation budget shared by both search stages."""
from __future__ import annotations

import math
from fractions import Fraction

LOOKUP_UNITS = 4


class BudgetExhausted(RuntimeError):
    pass


class EvalBudget:
    """Evaluation ledger with exact integer accounting.

    The ledger counts in units of ``1/n`` evaluation: a full tour evaluation
    costs ``n`` units and a 2-opt neighbour lookup ``4`` units (``4/n``
    evaluations). Nothing is ever charged beyond the cap.
    """

    def __init__(self, total: float, n: int):
        if total < 0:
            raise ValueError("budget must be non-negative")
        self.n = int(n)
        self.total = total
        self.total_units = math.floor(Fraction(total) * self.n)
        self.used_units = 0
        self.evaluations = 0
        self.lookups = 0

    @property
    def used(self) -> float:
        """Evaluations consumed so far."""
        return self.used_units / self.n

    @property
    def used_exact(self) -> Fraction:
        return Fraction(self.used_units, self.n)

    @property
    def remaining_units(self) -> int:
        return self.total_units - self.used_units

    @property
    def fraction_used(self) -> float:
        return self.used_units / self.total_units if self.total_units else 1.0

    def remaining_evaluations(self) -> int:
        return self.remaining_units // self.n

    def remaining_lookups(self) -> int:
        return self.remaining_units // LOOKUP_UNITS

    def can_evaluate(self, count: int = 1) -> bool:
        return self.remaining_units >= count * self.n

    @property
    def exhausted(self) -> bool:
        """True once not even a single lookup is affordable."""
        return self.remaining_units < LOOKUP_UNITS

    def charge_evaluations(self, count: int = 1) -> None:
        units = count * self.n
        if units > self.remaining_units:
            raise BudgetExhausted(f"cannot charge {count} evaluations")
        self.used_units += units
        self.evaluations += count

    def charge_lookups(self, count: int) -> None:
        units = count * LOOKUP_UNITS
        if units > self.remaining_units:
            raise BudgetExhausted(f"cannot charge {count} lookups")
        self.used_units += units
        self.lookups += count

    def __repr__(self):
        return (f"EvalBudget(used={self.used:.3f}/{self.total}, evaluations={self.evaluations}, "
                f"lookups={self.lookups})")


def default_budget(mu: int, n: int, factor: float = 40) -> float:
    """``factor * floor(mu * n * sqrt(n))`` evaluations (the floor is exact)."""
    base = math.isqrt(mu * mu * n**3)
    return int(factor) * base if float(factor).is_integer() else factor * base
