"""Exhaustive-enumeration ground truth for small systems.

All n^m equally likely arrival sequences are replayed through the real
deposition dynamics; expectations come out as exact rationals with
denominator n^m. Deposits are shared across the enumeration tree (a
deposit at depth d covers n^(m-d-1) leaves), so the walk visits far
fewer deposit operations than sequences. Poissonization then converts
the conditional results into exact-up-to-tail time-dependent densities.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

from .analytic import DiscreteDist, poisson_pmf, poisson_tail
from .lattice import LatticeState

ENUM_BUDGET = 20_000_000


class OracleBudgetError(ValueError):
    """Enumeration size n^m exceeds the configured budget."""


@dataclass(frozen=True)
class ExactOccupancy:
    """Exact expected occupancy per (site, layer) after m uniform arrivals."""

    n_sites: int
    m: int
    occ: dict

    def probability(self, x: int, r: int) -> Fraction:
        return self.occ.get((x, r), Fraction(0))

    def max_layer(self) -> int:
        return max((r for _, r in self.occ), default=0)

    def rows(self):
        for (x, r) in sorted(self.occ):
            yield x, r, self.occ[(x, r)]


@lru_cache(maxsize=None)
def exact_after_m_arrivals(n_sites: int, m: int) -> ExactOccupancy:
    """Exact occupancy expectations after m uniform arrivals, by enumeration."""
    if n_sites < 1 or m < 0:
        raise ValueError("need n_sites >= 1 and m >= 0")
    if n_sites**m > ENUM_BUDGET:
        raise OracleBudgetError(
            f"{n_sites}^{m} sequences exceed the enumeration budget of {ENUM_BUDGET}"
        )
    state = LatticeState.empty(n_sites)
    counts: dict = {}

    def walk(depth: int) -> None:
        if depth == m:
            return
        weight = n_sites ** (m - depth - 1)
        for x in range(n_sites):
            r = state.deposit(x)
            key = (x, r)
            counts[key] = counts.get(key, 0) + weight
            walk(depth + 1)
            state.undo_deposit(x, r)

    walk(0)
    total = n_sites**m
    occ = {key: Fraction(c, total) for key, c in counts.items()}
    return ExactOccupancy(n_sites=n_sites, m=m, occ=occ)


def exact_density_poissonized(
    n_sites: int, t: float, r: int, x: int, m_max: int
) -> tuple[float, float]:
    """Time-t density at (x, r) by conditioning on the total arrival count.

    The total over n sites is Poisson(n*t) and, given the total, the order
    is uniform. Returns (value, tail_bound); the truncation at m_max
    underestimates by at most the reported Poisson tail mass.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if n_sites ** m_max > ENUM_BUDGET:
        raise OracleBudgetError(
            f"m_max={m_max} infeasible: {n_sites}^{m_max} exceeds the budget"
        )
    lam = n_sites * t
    value = 0.0
    for m in range(m_max + 1):
        p = exact_after_m_arrivals(n_sites, m).probability(x, r)
        if p:
            value += poisson_pmf(m, lam) * float(p)
    return value, poisson_tail(m_max, lam)


def exact_height_dist(m: int, n_sites: int = 3) -> DiscreteDist:
    """Exact height distribution after m uniform arrivals (3-site system)."""
    if n_sites != 3:
        raise ValueError("the height observable is defined for n_sites=3 only")
    if n_sites**m > ENUM_BUDGET:
        raise OracleBudgetError(
            f"{n_sites}^{m} sequences exceed the enumeration budget of {ENUM_BUDGET}"
        )
    state = LatticeState.empty(n_sites)
    hist = [0] * (m + 1)

    def walk(depth: int, height: int) -> None:
        if depth == m:
            hist[height] += 1
            return
        for x in range(n_sites):
            r = state.deposit(x)
            walk(depth + 1, max(height, r))
            state.undo_deposit(x, r)

    walk(0, 0)
    total = n_sites**m
    return DiscreteDist(
        offset=0, probs=tuple(Fraction(c, total) for c in hist), tail=0.0
    )


def height_dist_multinomial(m: int) -> DiscreteDist:
    """Height distribution of m0 + max(m_left, m_right) under Multinomial(m; 1/3,1/3,1/3).

    Independent combinatorial route used to cross-check the enumeration.
    """
    hist = [Fraction(0)] * (m + 1)
    total = 3**m
    for a in range(m + 1):
        for b in range(m + 1 - a):
            c = m - a - b
            weight = Fraction(factorial(m) // (factorial(a) * factorial(b) * factorial(c)), total)
            hist[b + max(a, c)] += weight
    return DiscreteDist(offset=0, probs=tuple(hist), tail=0.0)
