"""Seeded Monte Carlo engine for multilayer parking on finite lattices.

Replications are independent: replication i reseeds the generator from a
splitmix64 hash of (seed, i), so results are bit-identical regardless of
worker count. Work is partitioned into a fixed number of blocks (not
threads); per-block integer partial counts are summed at the end, which
keeps the reduction deterministic. The kernel is compiled serially:
numba's parallel accelerator (0.66) intermittently corrupts the heap on
the variable-size fixed-time path, and the block structure already makes
any future parallel execution order-independent.

Arrival order is sampled directly instead of simulating timestamps: the
final configuration is a function of the merged order only. Fixed-time
mode draws per-site Poisson counts and shuffles the label multiset;
fixed-arrival mode draws uniform site labels (the t -> infinity race).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import numba
from numba import njit

N_BLOCKS = 64

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)


@njit(inline="always")
def _rep_seed(seed, rep):
    # splitmix64 finalizer; collapsed to a 31-bit seed for np.random.seed
    z = np.uint64(seed) + np.uint64(rep + 1) * _SPLITMIX_GAMMA
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return int(z % np.uint64(2147483647))


@njit(inline="always")
def _deposit_fast(occ, ptr, x):
    # occ has virtual boundary columns at 0 and n_sites+1 (always empty)
    # and 1-based layers; ptr[x] is a monotone lower bound on the lowest
    # layer whose neighborhood is free, so the scan is amortized O(1).
    r = ptr[x]
    while occ[x - 1, r] or occ[x, r] or occ[x + 1, r]:
        r += 1
    occ[x, r] = True
    ptr[x] = r + 1
    return r


@njit(cache=True)
def _replay_sequence(n_sites, labels, n_layers):
    """Replay one arrival sequence; returns the occupancy grid (site, layer-1)."""
    m = labels.shape[0]
    occ = np.zeros((n_sites + 2, m + 2), np.bool_)
    ptr = np.ones(n_sites + 2, np.int64)
    for a in range(m):
        _deposit_fast(occ, ptr, labels[a] + 1)
    out = np.zeros((n_sites, n_layers), np.bool_)
    for x in range(n_sites):
        for l in range(min(n_layers, m)):
            out[x, l] = occ[x + 1, l + 1]
    return out


@njit(cache=True)
def _mc_kernel(n_sites, fixed_time, m_arrivals, t, reps, n_layers, obs, seed):
    n_obs = obs.shape[0]
    counts = np.zeros((N_BLOCKS, n_obs, n_layers), np.int64)
    raised = np.zeros(N_BLOCKS, np.int64)
    total = np.zeros(N_BLOCKS, np.int64)
    height_viol = np.zeros(N_BLOCKS, np.int64)
    abs_side_diff = np.zeros(N_BLOCKS, np.int64)
    per_block = (reps + N_BLOCKS - 1) // N_BLOCKS
    for b in range(N_BLOCKS):
        lo = b * per_block
        hi = min(reps, lo + per_block)
        occ = np.zeros((n_sites + 2, max(m_arrivals, n_layers) + 2), np.bool_)
        ptr = np.empty(n_sites + 2, np.int64)
        labels = np.empty(0, np.int64)
        site_counts = np.empty(n_sites + 2, np.int64)
        for rep in range(lo, hi):
            np.random.seed(_rep_seed(seed, rep))
            if fixed_time:
                m = 0
                for x in range(n_sites):
                    c = np.random.poisson(t)
                    site_counts[x + 1] = c
                    m += c
                labels = np.empty(m, np.int64)
                pos = 0
                for x in range(n_sites):
                    for _ in range(site_counts[x + 1]):
                        labels[pos] = x
                        pos += 1
                np.random.shuffle(labels)
                if max(m, n_layers) + 2 > occ.shape[1]:
                    occ = np.zeros((n_sites + 2, max(m, n_layers) + 2), np.bool_)
                else:
                    occ[:, :] = False
            else:
                m = m_arrivals
                occ[:, :] = False
            for x in range(n_sites + 2):
                ptr[x] = 1
                site_counts[x] = 0
            height = 0
            for a in range(m):
                if fixed_time:
                    x = labels[a] + 1
                else:
                    x = np.random.randint(0, n_sites) + 1
                r = _deposit_fast(occ, ptr, x)
                site_counts[x] += 1
                if r > height:
                    # layers 1..height are never all-empty, so r == height+1
                    height = r
                    raised[b] += 1
            total[b] += m
            if n_sites == 3:
                if height != site_counts[2] + max(site_counts[1], site_counts[3]):
                    height_viol[b] += 1
                abs_side_diff[b] += abs(site_counts[1] - site_counts[3])
            for oi in range(n_obs):
                for l in range(n_layers):
                    if occ[obs[oi] + 1, l + 1]:
                        counts[b, oi, l] += 1
    return counts, raised, total, height_viol, abs_side_diff


def center_sites(n_sites: int) -> tuple[int, ...]:
    """Middle site for odd n, both middle sites for even n."""
    if n_sites % 2 == 1:
        return (n_sites // 2,)
    return (n_sites // 2 - 1, n_sites // 2)


@dataclass(frozen=True)
class RunConfig:
    n_sites: int
    mode: str  # "fixed_time" | "fixed_arrivals"
    replications: int
    layers: int
    t: float | None = None
    arrivals: int | None = None
    observe_sites: tuple[int, ...] | None = None
    seed: int = 0
    track_raise: bool = False
    threads: int | None = None

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.mode == "fixed_time":
            if self.t is None or self.t < 0:
                raise ValueError("fixed_time mode needs t >= 0")
        elif self.mode == "fixed_arrivals":
            if self.arrivals is None or self.arrivals < 1:
                raise ValueError("fixed_arrivals mode needs arrivals >= 1")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        for x in self.resolved_observe_sites():
            if not 0 <= x < self.n_sites:
                raise ValueError(f"observe site {x} out of range")

    def resolved_observe_sites(self) -> tuple[int, ...]:
        if self.observe_sites is not None:
            return tuple(self.observe_sites)
        return center_sites(self.n_sites)

    def to_dict(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "mode": self.mode,
            "t": self.t,
            "arrivals": self.arrivals,
            "replications": self.replications,
            "layers": self.layers,
            "observe_sites": list(self.resolved_observe_sites()),
            "seed": self.seed,
            "track_raise": self.track_raise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        obs = d.get("observe_sites")
        return cls(
            n_sites=int(d["n_sites"]),
            mode=str(d["mode"]),
            t=None if d.get("t") is None else float(d["t"]),
            arrivals=None if d.get("arrivals") is None else int(d["arrivals"]),
            replications=int(d["replications"]),
            layers=int(d["layers"]),
            observe_sites=None if obs is None else tuple(int(x) for x in obs),
            seed=int(d.get("seed", 0)),
            track_raise=bool(d.get("track_raise", False)),
        )

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        """Parse a plain-text key=value config file (# comments allowed)."""
        d: dict = {}
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, _, value = line.partition("=")
                key = key.strip()
                value = value.strip()
                if key == "observe_sites":
                    d[key] = [int(v) for v in value.split(",") if v.strip()]
                elif key == "track_raise":
                    d[key] = value.lower() in ("1", "true", "yes")
                else:
                    d[key] = value
        return cls.from_dict(d)


@dataclass(frozen=True)
class DensityEstimate:
    site: int
    layer: int
    mean: float
    stderr: float
    replications: int


@dataclass(frozen=True)
class RaiseStats:
    raised: int
    total: int
    mean_abs_side_diff: float

    @property
    def fraction(self) -> float:
        return self.raised / self.total if self.total else 0.0


@dataclass
class SimulationResult:
    config: RunConfig
    estimates: list[DensityEstimate]
    raise_stats: RaiseStats | None
    height_identity_violations: int
    warnings: list[str] = field(default_factory=list)


def set_threads(threads: int | None) -> int:
    """Clamp and apply the numba thread count; thread count never affects results."""
    available = numba.config.NUMBA_NUM_THREADS
    n = available if threads is None else max(1, min(threads, available))
    numba.set_num_threads(n)
    return n


def run(config: RunConfig) -> SimulationResult:
    """Run the replicated simulation described by config."""
    set_threads(config.threads)
    obs = np.asarray(config.resolved_observe_sites(), np.int64)
    fixed_time = config.mode == "fixed_time"
    m_arrivals = 0 if fixed_time else config.arrivals
    t = config.t if fixed_time else 0.0
    counts, raised, total, viol, absdiff = _mc_kernel(
        config.n_sites,
        fixed_time,
        m_arrivals,
        float(t),
        config.replications,
        config.layers,
        obs,
        np.uint64(config.seed),
    )
    counts = counts.sum(axis=0)
    reps = config.replications
    estimates = []
    for oi, x in enumerate(obs):
        for l in range(config.layers):
            mean = counts[oi, l] / reps
            stderr = math.sqrt(mean * (1.0 - mean) / reps)
            estimates.append(
                DensityEstimate(
                    site=int(x), layer=l + 1, mean=mean, stderr=stderr, replications=reps
                )
            )
    warnings = []
    if not fixed_time and config.arrivals < 60 * config.layers * config.n_sites / 3:
        warnings.append(
            f"arrival budget {config.arrivals} may be too small for layer "
            f"{config.layers} end-density convergence "
            f"(want >= {20 * config.layers * config.n_sites})"
        )
    raise_stats = None
    if config.track_raise:
        if config.n_sites != 3 or fixed_time:
            from .lattice import UnsupportedConfigError

            raise UnsupportedConfigError(
                "raise statistics need n_sites=3 in fixed_arrivals mode"
            )
        raise_stats = RaiseStats(
            raised=int(raised.sum()),
            total=int(total.sum()),
            mean_abs_side_diff=float(absdiff.sum()) / reps,
        )
    return SimulationResult(
        config=config,
        estimates=estimates,
        raise_stats=raise_stats,
        height_identity_violations=int(viol.sum()) if config.n_sites == 3 else 0,
        warnings=warnings,
    )


def raise_fraction(config: RunConfig) -> RaiseStats:
    """Fraction of arrivals whose deposit raised the overall height (n=3)."""
    from .lattice import UnsupportedConfigError

    if config.n_sites != 3 or config.mode != "fixed_arrivals":
        raise UnsupportedConfigError(
            "raise_fraction needs n_sites=3 in fixed_arrivals mode"
        )
    cfg = RunConfig(**{**config.to_dict(), "track_raise": True})
    result = run(cfg)
    assert result.raise_stats is not None
    return result.raise_stats


def sample_arrivals_fixed_time(n_sites: int, t: float, rng: np.random.Generator):
    """Uniformly interleaved per-site Poisson(t) arrival labels."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    counts = rng.poisson(t, size=n_sites)
    labels = np.repeat(np.arange(n_sites, dtype=np.int64), counts)
    rng.shuffle(labels)
    return labels


def sample_arrivals_fixed_count(n_sites: int, m: int, rng: np.random.Generator):
    """M independent uniform site labels (the end-density arrival race)."""
    if m < 0:
        raise ValueError(f"m must be >= 0, got {m}")
    return rng.integers(0, n_sites, size=m, dtype=np.int64)
