"""Hierarchical direct solver for Q1 finite elements of -Δu = f on a rectangle.

Leaves are condensed to boundary operators, merged pairwise up a
nested-dissection tree, and solved top-down for any boundary data.
"""
from .errors import ConfigurationError, HpsError, NumericError, ResourceGuardError, UsageError
from .fields import exact_solution, parse_preset
from .geometry import Domain, PartitionSpec, build_grid
from .oracle import oracle_solve
from .solve import solve
from .tree import build, refresh_rhs

__all__ = [
    "ConfigurationError", "HpsError", "NumericError", "ResourceGuardError", "UsageError",
    "Domain", "PartitionSpec", "build_grid", "parse_preset", "exact_solution",
    "build", "refresh_rhs", "solve", "oracle_solve",
]
