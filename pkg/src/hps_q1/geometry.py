"""Tensor-product grid, rectangular subdomain partition and index sets.

Global nodes live on a single ``(Nx+1) x (Ny+1)`` tensor grid with
``Nx = nsub_x * nelem_x``.  Node ``(I, J)`` has global id ``J*(Nx+1) + I``.
Coordinates are evaluated once on the global grid and sliced by every
subdomain, so a node shared by neighbours has bit-identical coordinates
on both sides.

Local nodes of a subdomain are enumerated row-major: local index
``k = j*(mx+1) + i`` for ``0 <= i <= mx``, ``0 <= j <= my``.  Inside each
boundary/interior set the nodes are ordered lexicographically by
``(x, then y)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, HpsError


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Domain:
    """The rectangle ``(alpha, beta) x (gamma, delta)``."""

    alpha: float = 0.0
    beta: float = 1.0
    gamma: float = 0.0
    delta: float = 1.0

    def __post_init__(self):
        if not (self.beta > self.alpha and self.delta > self.gamma):
            raise ConfigurationError(
                f"degenerate domain ({self.alpha},{self.beta})x({self.gamma},{self.delta})"
            )

    @property
    def area(self) -> float:
        return (self.beta - self.alpha) * (self.delta - self.gamma)


@dataclass(frozen=True)
class PartitionSpec:
    nsub_x: int
    nsub_y: int
    nelem_x: int
    nelem_y: int

    def __post_init__(self):
        for name in ("nsub_x", "nsub_y", "nelem_x", "nelem_y"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ConfigurationError(f"{name} must be an integer, got {v!r}")
        if self.nelem_x < 1 or self.nelem_y < 1:
            raise ConfigurationError(
                f"elements per subdomain must be >= 1, got {self.nelem_x}x{self.nelem_y}"
            )
        if not (_is_pow2(self.nsub_x) and _is_pow2(self.nsub_y)):
            raise ConfigurationError(
                f"subdomain counts must be powers of two, got {self.nsub_x}x{self.nsub_y}"
            )

    @property
    def global_elems(self) -> tuple[int, int]:
        return self.nsub_x * self.nelem_x, self.nsub_y * self.nelem_y


@dataclass(frozen=True)
class BoundaryMaps:
    """Partition of the local nodes of one subdomain.

    Edge sets exclude the four corners; ``iota_C`` holds them.
    ``iota_bdry`` is the concatenation L, R, T, B, C and fixes the row
    ordering of every boundary operator built for the subdomain.
    """

    iota_int: np.ndarray
    iota_L: np.ndarray
    iota_R: np.ndarray
    iota_T: np.ndarray
    iota_B: np.ndarray
    iota_C: np.ndarray

    @property
    def iota_bdry(self) -> np.ndarray:
        return np.concatenate([self.iota_L, self.iota_R, self.iota_T, self.iota_B, self.iota_C])

    def edge(self, side: str) -> np.ndarray:
        return getattr(self, "iota_" + side)


@lru_cache(maxsize=None)
def boundary_maps(mx: int, my: int) -> BoundaryMaps:
    """Index sets for an ``mx x my``-element local grid (shared, read-only)."""
    def k(i, j):
        return np.asarray(j) * (mx + 1) + np.asarray(i)

    ii, jj = np.meshgrid(np.arange(1, mx), np.arange(1, my), indexing="ij")
    inner_y = np.arange(1, my)
    inner_x = np.arange(1, mx)
    maps = BoundaryMaps(
        iota_int=k(ii.ravel(), jj.ravel()),
        iota_L=k(0, inner_y),
        iota_R=k(mx, inner_y),
        iota_T=k(inner_x, my),
        iota_B=k(inner_x, 0),
        iota_C=k(np.array([0, 0, mx, mx]), np.array([0, my, 0, my])),
    )
    for name in ("iota_int", "iota_L", "iota_R", "iota_T", "iota_B", "iota_C"):
        getattr(maps, name).setflags(write=False)
    return maps


@dataclass(frozen=True, eq=False)
class Subdomain:
    """One rectangle of the partition (or a union block of them).

    ``origin`` is the global node index ``(I0, J0)`` of the lower-left
    corner; ``x`` and ``y`` are views into the global coordinate arrays.
    """

    id: int
    bounds: tuple[float, float, float, float]
    grid_pos: tuple[int, int] | None
    nelem: tuple[int, int]
    origin: tuple[int, int]
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    @property
    def spacing(self) -> tuple[float, float]:
        a1, b1, a2, b2 = self.bounds
        return (b1 - a1) / self.nelem[0], (b2 - a2) / self.nelem[1]

    @property
    def maps(self) -> BoundaryMaps:
        return boundary_maps(*self.nelem)


class TensorGrid:
    """Immutable partitioned grid; see module docstring for numbering."""

    def __init__(self, domain: Domain, spec: PartitionSpec):
        self.domain = domain
        self.spec = spec
        Nx, Ny = spec.global_elems
        self.shape = (Nx, Ny)
        # Nodes on subdomain interfaces are evaluated here once; every
        # subdomain slices these arrays instead of recomputing them.
        self.xs = domain.alpha + (domain.beta - domain.alpha) * (np.arange(Nx + 1) / Nx)
        self.ys = domain.gamma + (domain.delta - domain.gamma) * (np.arange(Ny + 1) / Ny)
        self.xs[-1] = domain.beta
        self.ys[-1] = domain.delta
        self.xs.setflags(write=False)
        self.ys.setflags(write=False)

        mx, my = spec.nelem_x, spec.nelem_y
        subs = []
        for row in range(spec.nsub_y):
            for col in range(spec.nsub_x):
                subs.append(self.block(col * mx, row * my, mx, my,
                                       id=row * spec.nsub_x + col, grid_pos=(row, col)))
        self.subdomains: tuple[Subdomain, ...] = tuple(subs)

    # -- node bookkeeping -------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return (self.shape[0] + 1) * (self.shape[1] + 1)

    def node_id(self, I, J):
        return np.asarray(J) * (self.shape[0] + 1) + np.asarray(I)

    def node_ij(self, ids):
        ids = np.asarray(ids)
        return ids % (self.shape[0] + 1), ids // (self.shape[0] + 1)

    def coords(self, ids) -> np.ndarray:
        """``(n, 2)`` coordinates of global node ids."""
        I, J = self.node_ij(ids)
        return np.column_stack([self.xs[I], self.ys[J]])

    def all_coords(self) -> np.ndarray:
        return self.coords(np.arange(self.n_nodes))

    def boundary_ids(self) -> np.ndarray:
        """Global ids on the outer boundary, sorted by id."""
        Nx, Ny = self.shape
        I, J = np.meshgrid(np.arange(Nx + 1), np.arange(Ny + 1))
        mask = (I == 0) | (I == Nx) | (J == 0) | (J == Ny)
        return self.node_id(I[mask], J[mask])

    def skeleton_ids(self) -> np.ndarray:
        """Global ids lying on at least one subdomain boundary."""
        Nx, Ny = self.shape
        mx, my = self.spec.nelem_x, self.spec.nelem_y
        I, J = np.meshgrid(np.arange(Nx + 1), np.arange(Ny + 1))
        mask = (I % mx == 0) | (J % my == 0)
        return np.sort(self.node_id(I[mask], J[mask]))

    def block(self, I0: int, J0: int, mx: int, my: int, id: int = -1,
              grid_pos: tuple[int, int] | None = None) -> Subdomain:
        """Subdomain view of the element block ``[I0, I0+mx] x [J0, J0+my]``."""
        Nx, Ny = self.shape
        if not (0 <= I0 and I0 + mx <= Nx and 0 <= J0 and J0 + my <= Ny and mx >= 1 and my >= 1):
            raise ConfigurationError(f"block ({I0},{J0},{mx},{my}) outside the grid")
        x = self.xs[I0:I0 + mx + 1]
        y = self.ys[J0:J0 + my + 1]
        return Subdomain(id=id, bounds=(float(x[0]), float(x[-1]), float(y[0]), float(y[-1])),
                         grid_pos=grid_pos, nelem=(mx, my), origin=(I0, J0), x=x, y=y)

    def local_to_global(self, sub: Subdomain, local=None) -> np.ndarray:
        """Global ids of local node indices of ``sub`` (all nodes by default)."""
        mx, my = sub.nelem
        if local is None:
            local = np.arange((mx + 1) * (my + 1))
        local = np.asarray(local)
        i, j = local % (mx + 1), local // (mx + 1)
        return self.node_id(sub.origin[0] + i, sub.origin[1] + j)

    def subdomain_at(self, row: int, col: int) -> Subdomain:
        return self.subdomains[row * self.spec.nsub_x + col]


def build_grid(domain: Domain, spec: PartitionSpec) -> TensorGrid:
    return TensorGrid(domain, spec)


def local_nodes(sub: Subdomain) -> np.ndarray:
    """Local node coordinates in row-major ``(i, j)`` order, shape ``(n, 2)``."""
    X, Y = np.meshgrid(sub.x, sub.y)
    return np.column_stack([X.ravel(), Y.ravel()])


def interface_sets(grid: TensorGrid, a: Subdomain, b: Subdomain):
    """Matching interface edge sets of two adjacent subdomains, or ``None``.

    Returns local indices ``(iota_a, iota_b)`` such that
    ``local_to_global(a, iota_a) == local_to_global(b, iota_b)``.
    Corners are excluded.
    """
    (ia, ja), (ib, jb) = a.origin, b.origin
    (ma, na), (mb, nb) = a.nelem, b.nelem
    if ja == jb and na == nb and ia + ma == ib:
        pair = (a.maps.iota_R, b.maps.iota_L)
    elif ja == jb and na == nb and ib + mb == ia:
        pair = (a.maps.iota_L, b.maps.iota_R)
    elif ia == ib and ma == mb and ja + na == jb:
        pair = (a.maps.iota_T, b.maps.iota_B)
    elif ia == ib and ma == mb and jb + nb == ja:
        pair = (a.maps.iota_B, b.maps.iota_T)
    else:
        return None
    ga, gb = grid.local_to_global(a, pair[0]), grid.local_to_global(b, pair[1])
    if not np.array_equal(ga, gb):
        raise HpsError("non-conforming interface between subdomains")
    return pair
