"""Reference solver: global Q1 assembly and a one-shot sparse direct solve.

Shares the element kernels of :mod:`fem_q1` but nothing of the
hierarchical code path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NumericError
from .fem_q1 import element_loads, element_stiffness, sample_dirichlet


def _global_connectivity(Nx: int, Ny: int) -> np.ndarray:
    I, J = np.meshgrid(np.arange(Nx), np.arange(Ny))
    I, J = I.ravel(), J.ravel()
    n = lambda a, b: b * (Nx + 1) + a  # noqa: E731
    return np.column_stack([n(I, J), n(I + 1, J), n(I + 1, J + 1), n(I, J + 1)])


def assemble_full(grid, f) -> tuple[sp.csr_matrix, np.ndarray]:
    """Unconstrained global stiffness and load over all nodes."""
    Nx, Ny = grid.shape
    conn = _global_connectivity(Nx, Ny)
    d = grid.domain
    hx, hy = (d.beta - d.alpha) / Nx, (d.delta - d.gamma) / Ny
    n = grid.n_nodes
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    vals = np.tile(element_stiffness(hx, hy).ravel(), conn.shape[0])
    K = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    X0, Y0 = np.meshgrid(grid.xs[:-1], grid.ys[:-1])
    fe = element_loads(X0, Y0, hx, hy, f)
    b = np.bincount(conn.ravel(), weights=fe.ravel(), minlength=n)
    return K, b


@dataclass
class GlobalSystem:
    """Dirichlet-reduced system ``K u_free = rhs``."""

    K: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    fixed: np.ndarray
    g_fixed: np.ndarray
    n_nodes: int

    def expand(self, u_free: np.ndarray) -> np.ndarray:
        u = np.empty(self.n_nodes)
        u[self.free] = u_free
        u[self.fixed] = self.g_fixed
        return u


def assemble_global(grid, f, g) -> GlobalSystem:
    K, b = assemble_full(grid, f)
    fixed = grid.boundary_ids()
    mask = np.ones(grid.n_nodes, bool)
    mask[fixed] = False
    free = np.flatnonzero(mask)
    gv = sample_dirichlet(g, grid.coords(fixed), grid.domain)
    rhs = b[free] - K[free][:, fixed] @ gv
    return GlobalSystem(K=K[free][:, free].tocsr(), rhs=rhs, free=free, fixed=fixed,
                        g_fixed=gv, n_nodes=grid.n_nodes)


def factorize(K: sp.spmatrix):
    """Sparse direct factorization with a symmetric fill-reducing ordering."""
    try:
        return spla.splu(sp.csc_matrix(K), permc_spec="MMD_AT_PLUS_A",
                         diag_pivot_thresh=0.0, options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise NumericError(f"direct factorization failed: {exc}") from None


def direct_solve(sys: GlobalSystem) -> np.ndarray:
    if sys.K.shape[0] == 0:
        return sys.expand(np.zeros(0))
    return sys.expand(factorize(sys.K).solve(sys.rhs))


def oracle_solve(grid, f, g) -> np.ndarray:
    return direct_solve(assemble_global(grid, f, g))


@dataclass
class SkeletonSystem:
    """Subassembled leaf DtN maps on the free skeleton nodes.

    Built from condensed leaves, so it is a benchmark baseline (the
    conventional direct solve of the skeleton problem), not an
    independent reference.
    """

    K: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray


def assemble_skeleton(fact, g_values: np.ndarray) -> SkeletonSystem:
    grid = fact.grid
    rows, cols, vals = [], [], []
    h = np.zeros(grid.n_nodes)
    for k, (op, ext) in enumerate(zip(fact.leaves, fact.leaf_ext)):
        rows.append(np.repeat(ext, len(ext)))
        cols.append(np.tile(ext, len(ext)))
        vals.append(op.S.ravel())
        np.add.at(h, ext, fact.rhs.H[0][k])
    n = grid.n_nodes
    S = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n)).tocsr()
    skel = grid.skeleton_ids()
    fixed = fact.root_ext
    mask = np.zeros(n, bool)
    mask[skel] = True
    mask[fixed] = False
    free = np.flatnonzero(mask)
    rhs = -h[free] - S[free][:, fixed] @ g_values
    return SkeletonSystem(K=S[free][:, free].tocsr(), rhs=rhs, free=free)
