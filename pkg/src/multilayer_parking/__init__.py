"""Multilayer parking: exact densities, Monte Carlo simulation, enumeration oracles."""

__version__ = "0.1.0"

from .analytic import (
    DiscreteDist,
    ExpPolyDensity,
    density_symbolic,
    density_time,
    end_density,
    end_density_split,
    height_pmf,
    limit_diagnostics,
    max_poisson_pmf,
    poisson_pmf,
)
from .lattice import LatticeConfig, LatticeState, UnsupportedConfigError
from .oracle import (
    ExactOccupancy,
    OracleBudgetError,
    exact_after_m_arrivals,
    exact_density_poissonized,
    exact_height_dist,
)
from .simulate import (
    DensityEstimate,
    RaiseStats,
    RunConfig,
    SimulationResult,
    center_sites,
    raise_fraction,
    run,
    sample_arrivals_fixed_count,
    sample_arrivals_fixed_time,
)

__all__ = [
    "DiscreteDist",
    "ExpPolyDensity",
    "density_symbolic",
    "density_time",
    "end_density",
    "end_density_split",
    "height_pmf",
    "limit_diagnostics",
    "max_poisson_pmf",
    "poisson_pmf",
    "LatticeConfig",
    "LatticeState",
    "UnsupportedConfigError",
    "ExactOccupancy",
    "OracleBudgetError",
    "exact_after_m_arrivals",
    "exact_density_poissonized",
    "exact_height_dist",
    "DensityEstimate",
    "RaiseStats",
    "RunConfig",
    "SimulationResult",
    "center_sites",
    "raise_fraction",
    "run",
    "sample_arrivals_fixed_count",
    "sample_arrivals_fixed_time",
    "__version__",
]
