"""Lattice state and deposition dynamics for the multilayer parking model.

Particles arrive at sites 0..n_sites-1 and settle in the lowest layer in
which the site and both horizontal neighbors are empty (no screening).
Positions outside [0, n_sites-1] are silent boundaries: never occupied,
never blocking. Layers are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class UnsupportedConfigError(ValueError):
    """Raised when an observable is only defined for a specific system size."""


@dataclass(frozen=True)
class LatticeConfig:
    n_sites: int

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError(f"n_sites must be >= 1, got {self.n_sites}")

    def in_range(self, x: int) -> bool:
        return 0 <= x < self.n_sites

    def neighborhood(self, x: int) -> tuple[int, ...]:
        """Sites within distance 1 of x, clipped to occupiable positions."""
        return tuple(y for y in (x - 1, x, x + 1) if self.in_range(y))


@dataclass
class LatticeState:
    config: LatticeConfig
    columns: list[set[int]] = field(default_factory=list)
    arrivals: list[int] = field(default_factory=list)
    total_arrivals: int = 0

    @classmethod
    def empty(cls, n_sites: int) -> "LatticeState":
        return cls(
            config=LatticeConfig(n_sites),
            columns=[set() for _ in range(n_sites)],
            arrivals=[0] * n_sites,
        )

    @property
    def n_sites(self) -> int:
        return self.config.n_sites

    def occupied(self, x: int, r: int) -> bool:
        """Occupancy of cell (x, r); boundary positions always report False."""
        if r < 1:
            raise ValueError(f"layer index must be >= 1, got {r}")
        if not self.config.in_range(x):
            return False
        return r in self.columns[x]

    def deposit(self, x: int) -> int:
        """Deposit a particle arriving at site x; returns the settling layer.

        The particle takes the smallest layer r >= 1 with the whole
        neighborhood of x empty at r. Deterministic given state and x.
        """
        if not self.config.in_range(x):
            raise ValueError(f"site index {x} out of range [0, {self.n_sites})")
        nbhd = self.config.neighborhood(x)
        r = 1
        while any(r in self.columns[y] for y in nbhd):
            r += 1
        self.columns[x].add(r)
        self.arrivals[x] += 1
        self.total_arrivals += 1
        return r

    def undo_deposit(self, x: int, r: int) -> None:
        """Reverse a deposit; used by exhaustive-enumeration backtracking."""
        self.columns[x].remove(r)
        self.arrivals[x] -= 1
        self.total_arrivals -= 1

    def height_center(self) -> int:
        """Number of layers holding at least one particle (3-site system only)."""
        if self.n_sites != 3:
            raise UnsupportedConfigError(
                "height_center is defined only for the 3-site system"
            )
        return len(set().union(*self.columns))

    def occupied_cells(self) -> int:
        return sum(len(col) for col in self.columns)

    def check_invariants(self) -> None:
        """Assert exclusion and conservation; raises AssertionError on breakage."""
        assert self.occupied_cells() == self.total_arrivals
        assert sum(self.arrivals) == self.total_arrivals
        for x in range(self.n_sites - 1):
            clash = self.columns[x] & self.columns[x + 1]
            assert not clash, f"adjacent occupancy at sites {x},{x + 1}: {clash}"
