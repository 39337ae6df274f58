"""Closed-form densities for the 3-site multilayer parking system.

Two evaluation paths coexist on purpose: exact big-rational arithmetic for
every time-independent quantity (end densities, polynomial coefficients),
and log-space floating point for the time-dependent pmfs. End densities
have denominators dividing 3^(2r-1) and must be bit-exact; the pmfs only
need ~1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from scipy import special

HALF = Fraction(1, 2)
THIRD = Fraction(1, 3)


def poisson_pmf(k: int, t: float) -> float:
    """Poisson(t) mass at k, computed in log space for large k."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    if t == 0:
        return 1.0 if k == 0 else 0.0
    return math.exp(-t + k * math.log(t) - math.lgamma(k + 1))


def poisson_cdf(k: int, t: float) -> float:
    """Pr(Poisson(t) <= k); returns 0 for k < 0."""
    if k < 0:
        return 0.0
    return float(special.gammaincc(k + 1, t))


def poisson_tail(k: int, t: float) -> float:
    """Pr(Poisson(t) > k)."""
    return float(special.gammainc(k + 1, t))


def max_poisson_pmf(n: int, t: float) -> float:
    """Mass of max(N, N') at n for two independent Poisson(t) counts N, N'.

    p_n^2 + 2 p_n Pr(N < n), with p_n the Poisson(t) mass at n.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    p = poisson_pmf(n, t)
    return p * p + 2.0 * p * poisson_cdf(n - 1, t)


def max_poisson_pmf_alt(n: int, t: float) -> float:
    """Equivalent form 2 p_n Pr(N <= n) - p_n^2; kept as a cross-check."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    p = poisson_pmf(n, t)
    return 2.0 * p * poisson_cdf(n, t) - p * p


def height_pmf(h: int, t: float) -> float:
    """Pr(height of the 3-site system = h) at time t.

    The height decomposes as center count plus the max of the two side
    counts, so the pmf is the convolution of a Poisson(t) mass with the
    max-of-two-Poissons mass.
    """
    if h < 0:
        raise ValueError(f"h must be >= 0, got {h}")
    return sum(poisson_pmf(h - k, t) * max_poisson_pmf(k, t) for k in range(h + 1))


@dataclass(frozen=True)
class DiscreteDist:
    """Truncated distribution on offset, offset+1, ... with tracked tail mass."""

    offset: int
    probs: tuple
    tail: float

    def __post_init__(self):
        if self.tail < 0:
            raise ValueError("tail bound must be nonnegative")

    def pmf(self, k: int):
        i = k - self.offset
        if 0 <= i < len(self.probs):
            return self.probs[i]
        return 0 * self.probs[0] if self.probs else 0.0

    def total_mass(self):
        return sum(self.probs)


def height_dist(t: float, tail_bound: float = 1e-16) -> DiscreteDist:
    """Height distribution truncated where the Poisson(3t) tail drops below bound.

    The height is at most the total arrival count, which is Poisson(3t),
    so that tail bounds the discarded mass.
    """
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    h_max = 0
    while poisson_tail(h_max, 3 * t) >= tail_bound:
        h_max += 1
    probs = tuple(height_pmf(h, t) for h in range(h_max + 1))
    return DiscreteDist(offset=0, probs=probs, tail=poisson_tail(h_max, 3 * t))


@dataclass(frozen=True)
class ExpPolyDensity:
    """Center-site density at one layer: constant - P(t) * exp(-3t).

    constant is the exact end density; coeffs are the exact rational
    coefficients c_0..c_d of P, with c_0 == constant so the density
    vanishes at t = 0.
    """

    layer: int
    constant: Fraction
    coeffs: tuple

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def evaluate(self, t: float) -> float:
        if t < 0:
            raise ValueError(f"t must be >= 0, got {t}")
        poly = 0.0
        for c in reversed(self.coeffs):
            poly = poly * t + float(c)
        return float(self.constant) - poly * math.exp(-3.0 * t)


def _density_terms(r: int):
    """Weight/power pairs (w, s) of the density sum for layer r.

    Each pair contributes w * (1 - exp(-3t) * sum_{i<=s} (3t)^i / i!)
    to the density; summing the weights alone gives the end density.
    """
    h = r - 1
    terms = []
    for k in range(h + 1):
        terms.append(
            (math.comb(h, k) * math.comb(h + k, k) * THIRD ** (h + k + 1), h + k)
        )
        for j in range(k):
            terms.append(
                (2 * math.comb(h, k) * math.comb(h + j, j) * THIRD ** (h + j + 1), h + j)
            )
    return terms


@lru_cache(maxsize=None)
def density_symbolic(r: int) -> ExpPolyDensity:
    """Exact closed form of the layer-r center density as constant and polynomial.

    Coefficient sizes grow quickly with r (hundreds of digits by r ~ 50);
    everything stays rational until evaluation.
    """
    if r < 1:
        raise ValueError(f"layer index must be >= 1, got {r}")
    terms = _density_terms(r)
    constant = sum(w for w, _ in terms)
    degree = max(s for _, s in terms)
    coeffs = []
    fact = 1
    for i in range(degree + 1):
        if i > 0:
            fact *= i
        coeffs.append(sum(w for w, s in terms if s >= i) * Fraction(3**i, fact))
    return ExpPolyDensity(layer=r, constant=constant, coeffs=tuple(coeffs))


def density_time(r: int, t: float) -> float:
    """Center-site density at layer r and time t."""
    return density_symbolic(r).evaluate(t)


@lru_cache(maxsize=None)
def end_density(r: int) -> Fraction:
    """Exact t -> infinity center density at layer r."""
    if r < 1:
        raise ValueError(f"layer index must be >= 1, got {r}")
    return sum(w for w, _ in _density_terms(r))


def end_density_unreduced(r: int) -> tuple[int, int]:
    """(numerator, denominator) over the canonical denominator 3^(2r-1)."""
    d = 3 ** (2 * r - 1)
    q = end_density(r)
    return (q.numerator * (d // q.denominator), d)


def binomial_pmf(n: int, k: int, p: Fraction) -> Fraction:
    if not 0 <= k <= n:
        return Fraction(0)
    return math.comb(n, k) * p**k * (1 - p) ** (n - k)


def neg_binomial_pmf(r: int, k: int, p: Fraction) -> Fraction:
    """Mass at k successes before the r-th failure, success probability p."""
    if k < 0:
        return Fraction(0)
    return math.comb(r + k - 1, k) * (1 - p) ** r * p**k


def end_density_split(r: int) -> tuple[Fraction, Fraction]:
    """Exact split of the end density into collision and cdf terms.

    term1 = (1/2) Pr(Y = X) with X ~ Binomial(r-1, 1/2) and
    Y ~ NegBinomial(r, 1/3); term2 collects the Pr(Y < k) mass.
    term1 + term2 == end_density(r) exactly.
    """
    if r < 1:
        raise ValueError(f"layer index must be >= 1, got {r}")
    term1 = HALF * sum(
        binomial_pmf(r - 1, k, HALF) * neg_binomial_pmf(r, k, THIRD) for k in range(r)
    )
    term2 = Fraction(0)
    nb_cdf = Fraction(0)  # Pr(Y < k), built incrementally
    for k in range(r):
        if k > 0:
            nb_cdf += neg_binomial_pmf(r, k - 1, THIRD)
        term2 += binomial_pmf(r - 1, k, HALF) * nb_cdf
    return term1, term2


@dataclass(frozen=True)
class LayerDiagnostics:
    layer: int
    end_density: Fraction
    gap_to_half: Fraction
    term1: Fraction
    term2: Fraction


def limit_diagnostics(r_max: int) -> list[LayerDiagnostics]:
    """Per-layer convergence diagnostics up to r_max.

    Asserts the end density is strictly increasing and the gap to 1/2
    strictly decreasing over the computed range.
    """
    if r_max < 1:
        raise ValueError(f"r_max must be >= 1, got {r_max}")
    rows = []
    for r in range(1, r_max + 1):
        ed = end_density(r)
        t1, t2 = end_density_split(r)
        rows.append(
            LayerDiagnostics(
                layer=r, end_density=ed, gap_to_half=HALF - ed, term1=t1, term2=t2
            )
        )
    for a, b in zip(rows, rows[1:]):
        assert b.end_density > a.end_density, "end density failed to increase"
        assert b.gap_to_half < a.gap_to_half, "gap to 1/2 failed to shrink"
    return rows


def exp_poly_integral(s: int, a: float, x: float) -> float:
    """Closed form of the definite integral of u^s exp(-a u) over [0, x]."""
    if s < 0 or a <= 0:
        raise ValueError("need s >= 0 and a > 0")
    partial = sum((a * x) ** i / math.factorial(i) for i in range(s + 1))
    return math.factorial(s) / a ** (s + 1) * (1.0 - math.exp(-a * x) * partial)
