import math

import numpy as np
import pytest

from multilayer_parking import analytic
from multilayer_parking.lattice import LatticeState, UnsupportedConfigError
from multilayer_parking.simulate import (
    RunConfig,
    _replay_sequence,
    center_sites,
    raise_fraction,
    run,
    sample_arrivals_fixed_count,
    sample_arrivals_fixed_time,
)


def cfg(**kw):
    base = dict(
        n_sites=3, mode="fixed_arrivals", arrivals=60, replications=1000, layers=5, seed=1
    )
    base.update(kw)
    return RunConfig(**base)


class TestKernelAgainstLattice:
    def test_replay_matches_reference_dynamics(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            n = int(rng.integers(1, 7))
            m = int(rng.integers(0, 40))
            labels = rng.integers(0, n, size=m).astype(np.int64)
            grid = _replay_sequence(n, labels, 15)
            state = LatticeState.empty(n)
            for x in labels:
                state.deposit(int(x))
            for x in range(n):
                for l in range(1, 16):
                    assert bool(grid[x, l - 1]) == state.occupied(x, l)


class TestSampling:
    def test_fixed_time_zero(self):
        rng = np.random.default_rng(0)
        assert sample_arrivals_fixed_time(3, 0.0, rng).size == 0

    def test_fixed_time_mean_length(self):
        rng = np.random.default_rng(0)
        n_draws = 100_000
        lengths = [sample_arrivals_fixed_time(3, 1.0, rng).size for _ in range(n_draws)]
        assert np.mean(lengths) == pytest.approx(3.0, abs=3 * math.sqrt(3 / n_draws))

    def test_fixed_time_empty_probability(self):
        rng = np.random.default_rng(1)
        n_draws = 100_000
        empty = sum(
            sample_arrivals_fixed_time(3, 1.0, rng).size == 0 for _ in range(n_draws)
        )
        p = math.exp(-3)
        se = math.sqrt(p * (1 - p) / n_draws)
        assert empty / n_draws == pytest.approx(p, abs=4 * se)

    def test_fixed_count(self):
        rng = np.random.default_rng(2)
        assert sample_arrivals_fixed_count(3, 0, rng).size == 0
        m = 30_000
        labels = sample_arrivals_fixed_count(3, m, rng)
        for x in range(3):
            se = math.sqrt(m * (1 / 3) * (2 / 3))
            assert abs((labels == x).sum() - m / 3) <= 4 * se


class TestRun:
    def test_deterministic_given_seed(self):
        a = run(cfg(replications=5000))
        b = run(cfg(replications=5000))
        assert [e.mean for e in a.estimates] == [e.mean for e in b.estimates]

    def test_thread_count_does_not_change_results(self):
        a = run(cfg(replications=5000, threads=1))
        b = run(cfg(replications=5000, threads=4))
        assert [e.mean for e in a.estimates] == [e.mean for e in b.estimates]

    def test_seed_changes_results(self):
        a = run(cfg(replications=5000, seed=1))
        b = run(cfg(replications=5000, seed=2))
        assert [e.mean for e in a.estimates] != [e.mean for e in b.estimates]

    def test_fixed_time_layer1_matches_closed_form(self):
        result = run(
            cfg(mode="fixed_time", t=1.0, arrivals=None, replications=100_000, layers=1)
        )
        e = result.estimates[0]
        expected = analytic.density_time(1, 1.0)
        assert abs(e.mean - expected) <= 4 * e.stderr

    def test_fixed_arrivals_layer2_near_end_density(self):
        result = run(cfg(arrivals=600, replications=50_000, layers=2))
        e = [x for x in result.estimates if x.layer == 2][0]
        assert abs(e.mean - 11 / 27) <= 4 * e.stderr

    def test_end_density_plateau_under_doubling(self):
        r = 5
        a = run(cfg(arrivals=60 * r, replications=50_000, layers=r, seed=3))
        b = run(cfg(arrivals=120 * r, replications=50_000, layers=r, seed=4))
        ea = [x for x in a.estimates if x.layer == r][0]
        eb = [x for x in b.estimates if x.layer == r][0]
        assert abs(ea.mean - eb.mean) <= 2 * (ea.stderr + eb.stderr)

    def test_height_identity_pathwise(self):
        result = run(cfg(arrivals=200, replications=20_000))
        assert result.height_identity_violations == 0

    def test_stderr_formula(self):
        result = run(cfg(replications=2000))
        for e in result.estimates:
            assert e.stderr == pytest.approx(
                math.sqrt(e.mean * (1 - e.mean) / e.replications)
            )

    def test_shallow_budget_warning(self):
        result = run(cfg(arrivals=30, layers=10))
        assert result.warnings

    def test_even_n_observes_both_middle_sites(self):
        assert center_sites(4) == (1, 2)
        result = run(cfg(n_sites=4, replications=100))
        assert sorted({e.site for e in result.estimates}) == [1, 2]

    def test_larger_system_runs(self):
        result = run(cfg(n_sites=9, arrivals=900, replications=2000, layers=4))
        assert all(0.0 <= e.mean <= 1.0 for e in result.estimates)


class TestRaiseFraction:
    def test_single_arrival_always_raises(self):
        stats = raise_fraction(cfg(arrivals=1, replications=500, layers=1))
        assert stats.fraction == 1.0

    def test_converges_to_two_thirds(self):
        stats = raise_fraction(cfg(arrivals=30_000, replications=50, layers=1))
        assert abs(stats.fraction - 2 / 3) < 0.01

    def test_side_imbalance_grows_like_sqrt_m(self):
        a = raise_fraction(cfg(arrivals=10_000, replications=500, layers=1, seed=6))
        b = raise_fraction(cfg(arrivals=40_000, replications=500, layers=1, seed=7))
        ratio = b.mean_abs_side_diff / a.mean_abs_side_diff
        assert ratio == pytest.approx(2.0, rel=0.15)

    def test_requires_three_site_fixed_arrivals(self):
        with pytest.raises(UnsupportedConfigError):
            raise_fraction(cfg(n_sites=5))
        with pytest.raises(UnsupportedConfigError):
            raise_fraction(cfg(mode="fixed_time", t=1.0, arrivals=None))


class TestRunConfig:
    def test_mode_validation(self):
        with pytest.raises(ValueError):
            RunConfig(n_sites=3, mode="bogus", replications=1, layers=1)
        with pytest.raises(ValueError):
            RunConfig(n_sites=3, mode="fixed_arrivals", replications=1, layers=1)
        with pytest.raises(ValueError):
            RunConfig(
                n_sites=3, mode="fixed_time", t=-1.0, replications=1, layers=1
            )

    def test_observe_site_validation(self):
        with pytest.raises(ValueError):
            cfg(observe_sites=(5,))

    def test_roundtrip_dict(self):
        c = cfg(observe_sites=(0, 2), seed=99)
        assert RunConfig.from_dict(c.to_dict()) == c

    def test_from_file(self, tmp_path):
        p = tmp_path / "run.cfg"
        p.write_text(
            "n_sites = 3\nmode = fixed_arrivals\narrivals = 600\n"
            "replications = 100  # comment\nlayers = 10\nseed = 42\n"
            "observe_sites = 1\n"
        )
        c = RunConfig.from_file(str(p))
        assert c.arrivals == 600
        assert c.replications == 100
        assert c.resolved_observe_sites() == (1,)
