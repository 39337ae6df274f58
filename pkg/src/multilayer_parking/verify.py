"""Cross-module consistency checks behind the `verify` CLI command.

Each check pits two independent routes against each other (closed form vs
quadrature, enumeration vs simulation, ...) and reports the measured
deviation against its tolerance. `quick` keeps everything in seconds;
`full` pushes the enumeration and replication budgets up.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from scipy import integrate

from . import analytic, oracle
from .simulate import RunConfig, raise_fraction, run

TABLE_END_DENSITIES = {
    1: Fraction(1, 3),
    2: Fraction(11, 27),
    3: Fraction(35, 81),
    4: Fraction(971, 2187),
    5: Fraction(8881, 19683),
    6: Fraction(80811, 177147),
    7: Fraction(733209, 1594323),
    8: Fraction(6640491, 14348907),
    9: Fraction(60067809, 129140163),
    10: Fraction(542880971, 1162261467),
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: str
    tolerance: str


def _check(name, passed, measured, tolerance) -> CheckResult:
    return CheckResult(name, bool(passed), str(measured), str(tolerance))


def check_end_density_table() -> CheckResult:
    bad = [r for r, v in TABLE_END_DENSITIES.items() if analytic.end_density(r) != v]
    return _check(
        "end-density table (layers 1-10, exact)",
        not bad,
        f"mismatched layers: {bad or 'none'}",
        "rational equality",
    )


def check_closed_form_coefficients() -> CheckResult:
    # published closed forms for layers 1-4 (layer 4 carries an extra
    # (1/108) t^6 term required by the derivative identity)
    golden = {
        1: [Fraction(1, 3)],
        2: [Fraction(11, 27), Fraction(11, 9), Fraction(1, 3)],
        3: [
            Fraction(35, 81),
            Fraction(35, 27),
            Fraction(35, 18),
            Fraction(7, 9),
            Fraction(1, 12),
        ],
        4: [
            Fraction(971, 2187),
            Fraction(971, 729),
            Fraction(971, 486),
            Fraction(971, 486),
            Fraction(283, 324),
            Fraction(17, 108),
            Fraction(1, 108),
        ],
    }
    bad = []
    for r, coeffs in golden.items():
        d = analytic.density_symbolic(r)
        if list(d.coeffs) != coeffs or d.constant != coeffs[0]:
            bad.append(r)
    return _check(
        "closed-form coefficients (layers 1-4, exact)",
        not bad,
        f"mismatched layers: {bad or 'none'}",
        "rational equality",
    )


def check_derivative_consistency() -> CheckResult:
    tol = 1e-6
    eps = 1e-5
    worst = 0.0
    for r in range(1, 7):
        for t in (0.5, 1.0, 2.0):
            fd = (analytic.density_time(r, t + eps) - analytic.density_time(r, t - eps)) / (
                2 * eps
            )
            worst = max(worst, abs(fd - analytic.height_pmf(r - 1, t)))
    return _check(
        "time-derivative vs height pmf (r<=6)", worst < tol, f"{worst:.3e}", f"< {tol}"
    )


def check_height_normalization() -> CheckResult:
    tol = 1e-12
    worst = 0.0
    for t in (0.1, 1.0, 5.0, 10.0):
        dist = analytic.height_dist(t)
        worst = max(worst, abs(1.0 - dist.total_mass() - dist.tail))
    return _check(
        "height pmf normalization", worst < tol, f"{worst:.3e}", f"< {tol}"
    )


def check_quadrature_agreement() -> CheckResult:
    tol = 1e-9
    worst = 0.0
    for r, t in ((3, 2.5), (4, 1.0), (4, 5.0), (2, 0.5), (5, 1.5)):
        ref, _ = integrate.quad(
            lambda s, h=r - 1: analytic.height_pmf(h, s), 0, t, limit=200
        )
        worst = max(worst, abs(analytic.density_time(r, t) - ref))
    return _check(
        "closed form vs quadrature of height pmf", worst < tol, f"{worst:.3e}", f"< {tol}"
    )


def check_oracle_vs_analytic(m_max: int) -> CheckResult:
    worst = 0.0
    ok = True
    for t in (0.25, 0.5, 1.0):
        for r in (1, 2, 3):
            value, tail = oracle.exact_density_poissonized(3, t, r, 1, m_max)
            dev = abs(value - analytic.density_time(r, t))
            worst = max(worst, dev - tail)
            ok = ok and dev <= tail + 1e-12
    return _check(
        f"poissonized enumeration vs closed form (m_max={m_max})",
        ok,
        f"worst deviation beyond tail: {worst:.3e}",
        "<= tail + 1e-12",
    )


def check_oracle_vs_simulator(reps: int) -> CheckResult:
    m = 8
    exact = oracle.exact_after_m_arrivals(3, m)
    layers = exact.max_layer()
    result = run(
        RunConfig(
            n_sites=3,
            mode="fixed_arrivals",
            arrivals=m,
            replications=reps,
            layers=layers,
            observe_sites=(0, 1, 2),
            seed=20240817,
        )
    )
    worst = 0.0
    ok = True
    for e in result.estimates:
        p = float(exact.probability(e.site, e.layer))
        se = max(e.stderr, 1e-12)
        z = abs(e.mean - p) / se
        worst = max(worst, z)
        ok = ok and z <= 4.0
    return _check(
        f"simulator vs enumeration after {m} arrivals ({reps} reps)",
        ok,
        f"worst z-score: {worst:.2f}",
        "<= 4 standard errors",
    )


def check_simulator_vs_table(reps: int) -> CheckResult:
    result = run(
        RunConfig(
            n_sites=3,
            mode="fixed_arrivals",
            arrivals=600,
            replications=reps,
            layers=10,
            seed=7,
        )
    )
    worst = 0.0
    ok = True
    for e in result.estimates:
        target = float(TABLE_END_DENSITIES[e.layer])
        z = abs(e.mean - target) / e.stderr
        worst = max(worst, z)
        ok = ok and z <= 4.0
    return _check(
        f"simulated end densities vs exact table ({reps} reps)",
        ok,
        f"worst z-score: {worst:.2f}",
        "<= 4 standard errors",
    )


def check_limit_trend() -> CheckResult:
    rows = analytic.limit_diagnostics(200)
    t1_monotone = all(
        a.term1 > b.term1 for a, b in zip(rows, rows[1:])
    )
    split_ok = all(
        r.term1 + r.term2 == analytic.end_density(r.layer) for r in rows
    )
    below_half = all(r.end_density < Fraction(1, 2) for r in rows)
    ok = t1_monotone and split_ok and below_half
    return _check(
        "limit trend (r<=200): split identity, monotone collision term, < 1/2",
        ok,
        f"split={split_ok} term1_monotone={t1_monotone} below_half={below_half}",
        "exact",
    )


def check_raise_fraction(reps: int, tol: float) -> CheckResult:
    stats = raise_fraction(
        RunConfig(
            n_sites=3,
            mode="fixed_arrivals",
            arrivals=30_000,
            replications=reps,
            layers=1,
            seed=11,
        )
    )
    dev = abs(stats.fraction - 2.0 / 3.0)
    return _check(
        f"height-raising fraction vs 2/3 ({reps} reps)", dev < tol, f"{dev:.4f}", f"< {tol}"
    )


def check_height_identity_pathwise(reps: int) -> CheckResult:
    result = run(
        RunConfig(
            n_sites=3,
            mode="fixed_arrivals",
            arrivals=200,
            replications=reps,
            layers=1,
            seed=101,
        )
    )
    return _check(
        f"pathwise height decomposition ({reps} reps)",
        result.height_identity_violations == 0,
        f"{result.height_identity_violations} violations",
        "0 violations",
    )


def run_checks(level: str = "quick") -> list[CheckResult]:
    if level not in ("quick", "full"):
        raise ValueError(f"unknown level {level!r}")
    full = level == "full"
    return [
        check_end_density_table(),
        check_closed_form_coefficients(),
        check_derivative_consistency(),
        check_height_normalization(),
        check_quadrature_agreement(),
        check_limit_trend(),
        check_oracle_vs_analytic(m_max=12 if full else 8),
        check_oracle_vs_simulator(reps=1_000_000 if full else 100_000),
        check_simulator_vs_table(reps=1_000_000 if full else 100_000),
        check_raise_fraction(
            reps=100 if full else 30, tol=0.005 if full else 0.01
        ),
        check_height_identity_pathwise(reps=100_000 if full else 10_000),
    ]
