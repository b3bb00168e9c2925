"""Downward sweep: Dirichlet data at the root, skeleton values, interiors."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .fem_q1 import sample_dirichlet
from .leaf import reconstruct_interior
from .tree import HpsFactorization


@dataclass
class SolveContext:
    """Workspace of one solve; ``u`` has one slot per global node."""

    g: np.ndarray
    u: np.ndarray


def dirichlet_values(fact: HpsFactorization, g) -> np.ndarray:
    grid = fact.grid
    ids = fact.root_ext
    return sample_dirichlet(g, grid.coords(ids), grid.domain)


def solve_skeleton(fact: HpsFactorization, g_values: np.ndarray) -> SolveContext:
    """Fill every skeleton node from boundary values on ``fact.root_ext``."""
    g_values = np.asarray(g_values, float)
    if g_values.shape != (len(fact.root_ext),):
        raise UsageError(f"expected {len(fact.root_ext)} boundary values, got {g_values.shape}")
    rhs = fact.rhs
    u = np.full(fact.grid.n_nodes, np.nan)
    u[fact.root_ext] = g_values
    for ops, w, wc in zip(reversed(fact.levels), reversed(rhs.W), reversed(rhs.WC)):
        c = ops.corner
        if c is not None:
            u[c["ids"]] = np.einsum("kj,kj->k", c["t"], u[ops.ext_ids]) - wc
        if ops.iface_ids.shape[1]:
            uV = u[ops.parent_ext_ids]
            u[ops.iface_ids] = np.matmul(ops.T, uV[:, :, None])[:, :, 0] - w
    return SolveContext(g=g_values, u=u)


def reconstruct(fact: HpsFactorization, ctx: SolveContext) -> np.ndarray:
    u = ctx.u
    for op, ext, it, fi in zip(fact.leaves, fact.leaf_ext, fact.leaf_int, fact.rhs.f_int):
        if len(it):
            u[it] = reconstruct_interior(op, u[ext], fi)
    return u


def solve(fact: HpsFactorization, g) -> np.ndarray:
    """Global nodal solution for Dirichlet data ``g`` and the installed load."""
    if fact.grid.n_nodes <= int(np.max(fact.root_ext)):
        raise UsageError("factorization does not belong to this grid")
    ctx = solve_skeleton(fact, dirichlet_values(fact, g))
    return reconstruct(fact, ctx)


def residual_check(grid, u: np.ndarray, f, g) -> float:
    """‖K u - b‖∞ over all rows that are not Dirichlet rows."""
    from .oracle import assemble_full

    K, b = assemble_full(grid, f)
    free = np.ones(grid.n_nodes, bool)
    free[grid.boundary_ids()] = False
    r = K @ np.asarray(u, float) - b
    return float(np.max(np.abs(r[free]))) if free.any() else 0.0


def format_solution(grid, u: np.ndarray) -> list[str]:
    """``x,y,u`` lines with 17 significant digits, sorted by (y, x)."""
    xy = grid.all_coords()
    order = np.lexsort((xy[:, 0], xy[:, 1]))
    return [f"{xy[k, 0]:.17g},{xy[k, 1]:.17g},{u[k]:.17g}" for k in order]
