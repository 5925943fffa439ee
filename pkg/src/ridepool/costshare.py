"""Ex-post division of a pooled run's fare among its customers.

For every run the provider has collected one total fare.  Each customer i
has a frozen solitary-ride total cost ``c_i`` and a pooled cost of time
``a_i``; her relative saving ``s_i`` is defined through
``fare_i + a_i = (1 - s_i) * c_i``.  Fares must sum to the run fare exactly
and nobody may end up worse off than riding alone (``s_i >= 0``).

Two schemes are implemented:

* ``shapley_split`` -- the two-rider surplus is shared equally, so both
  customers save the same absolute amount.
* ``goalprog_split`` -- lexicographically maximizes, threshold by
  threshold, the number of customers whose relative saving reaches that
  threshold, never lowering an earlier count.  The run-level problem
  decomposes into exact budget checks over selections of the smallest
  solitary costs, so no mathematical-programming solver is involved.

``oracle_split`` re-derives the optimal counts by brute-force enumeration
and exists purely as an independent cross-check.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class InfeasibleRun(Exception):
    """The run fare exceeds the customers' combined willingness to pay."""


class InvalidThresholds(Exception):
    """Thresholds must be strictly increasing and inside (0, 1)."""


class TooLarge(Exception):
    """The enumeration oracle only handles runs of up to four customers."""


@dataclass(frozen=True)
class RunMember:
    customer: int
    solitary_cost: int  # mils, frozen baseline c_i
    pooled_time_cost: int  # mils, a_i


@dataclass(frozen=True)
class RunAccount:
    """Billing view of one pooled run."""

    run_id: str
    members: tuple[RunMember, ...]
    run_fare: int  # mils

    def budget(self) -> int:
        """Total surplus available for distribution (may not be negative)."""
        return sum(m.solitary_cost - m.pooled_time_cost for m in self.members) - self.run_fare


@dataclass(frozen=True)
class SplitEntry:
    customer: int
    fare: Fraction  # mils
    saving: Fraction  # relative saving s_i


@dataclass(frozen=True)
class SplitResult:
    entries: tuple[SplitEntry, ...]
    counts: tuple[int, ...] | None = None

    def fares(self) -> dict[int, Fraction]:
        return {e.customer: e.fare for e in self.entries}


def _check_feasible(acct: RunAccount) -> int:
    budget = acct.budget()
    if budget < 0:
        raise InfeasibleRun(
            f"run {acct.run_id}: fare {acct.run_fare} exceeds willingness {acct.run_fare + budget}"
        )
    for m in acct.members:
        if m.solitary_cost <= 0:
            raise InfeasibleRun(f"run {acct.run_id}: non-positive solitary cost for {m.customer}")
    return budget


def _entry(member: RunMember, saving: Fraction) -> SplitEntry:
    fare = member.solitary_cost - member.pooled_time_cost - saving * member.solitary_cost
    return SplitEntry(customer=member.customer, fare=fare, saving=saving)


def shapley_split(acct: RunAccount) -> SplitResult:
    """Equal split of a two-rider surplus: both save budget/2 in absolute terms."""
    if len(acct.members) != 2:
        raise ValueError(
            "shapley_split handles rider pairs; longer chains are priced per pooling event"
        )
    budget = _check_feasible(acct)
    half = Fraction(budget, 2)
    entries = tuple(_entry(m, half / m.solitary_cost) for m in acct.members)
    return SplitResult(entries=entries)


def _validate_thresholds(thresholds: Sequence) -> list[Fraction]:
    sigmas = [Fraction(t) if not isinstance(t, float) else Fraction(str(t)) for t in thresholds]
    if not sigmas:
        raise InvalidThresholds("need at least one threshold")
    if any(not 0 < s < 1 for s in sigmas):
        raise InvalidThresholds(f"thresholds must lie in (0, 1): {sigmas}")
    if any(b <= a for a, b in zip(sigmas, sigmas[1:])):
        raise InvalidThresholds(f"thresholds must be strictly increasing: {sigmas}")
    return sigmas


def goalprog_split(acct: RunAccount, thresholds: Sequence) -> SplitResult:
    """Lexicographic maximization of per-threshold saver counts.

    At each level the cheapest-to-satisfy customers (smallest solitary
    cost, then lowest id) are promoted while earlier levels' counts are
    preserved; leftover budget is spread over the final selected set in
    proportion to solitary cost, i.e. as a uniform bump of everyone's
    relative saving.
    """
    sigmas = _validate_thresholds(thresholds)
    budget = Fraction(_check_feasible(acct))

    order = sorted(acct.members, key=lambda m: (m.solitary_cost, m.customer))
    prefix = [0]
    for m in order:
        prefix.append(prefix[-1] + m.solitary_cost)

    counts: list[int] = []
    consumed = Fraction(0)
    prev_sigma = Fraction(0)
    prev_count = len(order)
    for sigma in sigmas:
        step = sigma - prev_sigma
        m_level = prev_count
        while m_level > 0 and consumed + step * prefix[m_level] > budget:
            m_level -= 1
        consumed += step * prefix[m_level]
        counts.append(m_level)
        prev_sigma = sigma
        prev_count = m_level

    level_of = [-1] * len(order)
    for lvl, cnt in enumerate(counts):
        for idx in range(cnt):
            level_of[idx] = lvl

    savings = [sigmas[lvl] if lvl >= 0 else Fraction(0) for lvl in level_of]
    residual = budget - sum(s * m.solitary_cost for s, m in zip(savings, order))
    if residual:
        recipients = next((c for c in reversed(counts) if c), 0) or len(order)
        bump = residual / prefix[recipients]
        for idx in range(recipients):
            savings[idx] += bump

    by_customer = {m.customer: s for m, s in zip(order, savings)}
    entries = tuple(_entry(m, by_customer[m.customer]) for m in acct.members)
    return SplitResult(entries=entries, counts=tuple(counts))


def oracle_split(acct: RunAccount, thresholds: Sequence) -> tuple[int, ...]:
    """Brute-force lexicographic optimum over all per-customer saver levels.

    Assigning customer i the deepest threshold she reaches costs
    ``sigma_level * c_i`` of the run budget; a level vector is feasible iff
    those requirements fit the budget.  Counts follow by nesting.
    """
    if len(acct.members) > 4:
        raise TooLarge("oracle enumerates runs of at most 4 customers")
    sigmas = _validate_thresholds(thresholds)
    budget = _check_feasible(acct)

    best: tuple[int, ...] | None = None
    levels = range(-1, len(sigmas))
    for assignment in itertools.product(levels, repeat=len(acct.members)):
        need = Fraction(0)
        for lvl, m in zip(assignment, acct.members):
            if lvl >= 0:
                need += sigmas[lvl] * m.solitary_cost
        if need > budget:
            continue
        counts = tuple(
            sum(1 for lvl in assignment if lvl >= k) for k in range(len(sigmas))
        )
        if best is None or counts > best:
            best = counts
    assert best is not None  # the all -1 assignment is always feasible
    return best
