"""Bilinear (Q1) finite elements on rectangles.

Element-local node order is counter-clockwise starting at the lower-left
corner: (0,0), (1,0), (1,1), (0,1) in reference coordinates.  The
discretized operator is -Δ (weak form ∫∇u·∇φ = ∫fφ).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, HpsError
from .geometry import BoundaryMaps, Domain, Subdomain

_REF_X = np.array([0, 1, 1, 0])
_REF_Y = np.array([0, 0, 1, 1])
_K1 = np.array([[1.0, -1.0], [-1.0, 1.0]])
_M1 = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0

_GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_GAUSS3_PTS = 0.5 + 0.5 * np.array([-np.sqrt(0.6), 0.0, np.sqrt(0.6)])
_GAUSS3_WTS = np.array([5.0, 8.0, 5.0]) / 18.0


def element_stiffness(hx: float, hy: float) -> np.ndarray:
    """Exact 4x4 stiffness of one ``hx x hy`` element.

    Tensor-product form: (hy/hx) K1⊗M1 + (hx/hy) M1⊗K1 with the 1D
    stiffness K1 and mass M1 on the unit interval.
    """
    if not (hx > 0 and hy > 0):
        raise ConfigurationError(f"element sizes must be positive, got {hx}, {hy}")
    ix, iy = np.meshgrid(_REF_X, _REF_X, indexing="ij"), np.meshgrid(_REF_Y, _REF_Y, indexing="ij")
    return (hy / hx) * _K1[ix] * _M1[iy] + (hx / hy) * _M1[ix] * _K1[iy]


def shape_functions(xi, eta) -> np.ndarray:
    """Bilinear basis values at reference points in [0,1]², shape ``(..., 4)``."""
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    return np.stack([(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta], axis=-1)


def element_loads(x0, y0, hx: float, hy: float, f) -> np.ndarray:
    """Load vectors ∫ f φ_a over elements with lower-left corners ``(x0, y0)``.

    2x2 Gauss quadrature per element; returns shape ``(n_elem, 4)``.
    """
    x0, y0 = np.asarray(x0, float).ravel(), np.asarray(y0, float).ravel()
    out = np.zeros((x0.size, 4))
    w = 0.25 * hx * hy
    for xi in _GAUSS2:
        for eta in _GAUSS2:
            fq = np.asarray(f(x0 + xi * hx, y0 + eta * hy), float)
            out += w * fq[:, None] * shape_functions(xi, eta)
    return out


def element_connectivity(mx: int, my: int) -> np.ndarray:
    """Local node indices of each element (row-major element order), ``(mx*my, 4)``."""
    i, j = np.meshgrid(np.arange(mx), np.arange(my))
    i, j = i.ravel(), j.ravel()
    k = lambda a, b: b * (mx + 1) + a  # noqa: E731
    return np.column_stack([k(i, j), k(i + 1, j), k(i + 1, j + 1), k(i, j + 1)])


@dataclass(frozen=True)
class LeafSystem:
    """Subdomain system blocked by (interior, boundary).

    ``A`` and ``B`` are sparse CSR, ``C = B.T``; ``D`` is dense with rows
    in ``maps.iota_bdry`` order.
    """

    A: sp.csr_matrix
    B: sp.csr_matrix
    C: sp.csr_matrix
    D: np.ndarray
    f_int: np.ndarray
    f_bdry: np.ndarray


def local_stiffness(sub: Subdomain) -> sp.csr_matrix:
    """Unblocked subdomain stiffness in local (row-major) node order."""
    mx, my = sub.nelem
    hx, hy = sub.spacing
    ke = element_stiffness(hx, hy)
    conn = element_connectivity(mx, my)
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    vals = np.tile(ke.ravel(), conn.shape[0])
    n = (mx + 1) * (my + 1)
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def local_loads(sub: Subdomain, f) -> np.ndarray:
    """Assembled load vector of ``sub`` in local node order."""
    mx, my = sub.nelem
    hx, hy = sub.spacing
    X0, Y0 = np.meshgrid(sub.x[:-1], sub.y[:-1])
    fe = element_loads(X0, Y0, hx, hy, f)
    conn = element_connectivity(mx, my)
    return np.bincount(conn.ravel(), weights=fe.ravel(), minlength=(mx + 1) * (my + 1))


def assemble_leaf_loads(sub: Subdomain, maps: BoundaryMaps, f) -> tuple[np.ndarray, np.ndarray]:
    floc = local_loads(sub, f)
    return floc[maps.iota_int], floc[maps.iota_bdry]


def assemble_leaf(sub: Subdomain, maps: BoundaryMaps, f) -> LeafSystem:
    K = local_stiffness(sub)
    it, ib = maps.iota_int, maps.iota_bdry
    A = K[it][:, it].tocsr()
    B = K[it][:, ib].tocsr()
    D = K[ib][:, ib].toarray()
    f_int, f_bdry = assemble_leaf_loads(sub, maps, f)
    return LeafSystem(A=A, B=B, C=B.T.tocsr(), D=D, f_int=f_int, f_bdry=f_bdry)


def on_boundary(domain: Domain, xy: np.ndarray) -> np.ndarray:
    x, y = xy[:, 0], xy[:, 1]
    return (x == domain.alpha) | (x == domain.beta) | (y == domain.gamma) | (y == domain.delta)


def sample_dirichlet(g, xy: np.ndarray, domain: Domain | None = None) -> np.ndarray:
    """Nodal interpolation of g at boundary nodes ``xy`` (shape ``(n, 2)``)."""
    xy = np.asarray(xy, float).reshape(-1, 2)
    if domain is not None and not on_boundary(domain, xy).all():
        raise HpsError("Dirichlet sample requested at a node off the outer boundary")
    return np.asarray(g(xy[:, 0], xy[:, 1]), float) * np.ones(len(xy))


def l2_error(xs: np.ndarray, ys: np.ndarray, u: np.ndarray, exact) -> float:
    """‖u_h - exact‖_L2 on the tensor grid ``xs x ys`` (3x3 Gauss per element).

    ``u`` holds nodal values in global order (x fastest).
    """
    nx, ny = len(xs) - 1, len(ys) - 1
    U = np.asarray(u).reshape(ny + 1, nx + 1)
    corners = np.stack([U[:-1, :-1], U[:-1, 1:], U[1:, 1:], U[1:, :-1]], axis=-1)
    hx = np.diff(xs)[None, :]
    hy = np.diff(ys)[:, None]
    X0, Y0 = np.meshgrid(xs[:-1], ys[:-1])
    total = 0.0
    for xi, wx in zip(_GAUSS3_PTS, _GAUSS3_WTS):
        for eta, wy in zip(_GAUSS3_PTS, _GAUSS3_WTS):
            uh = corners @ shape_functions(xi, eta)
            ue = exact(X0 + xi * hx, Y0 + eta * hy)
            total += np.sum(wx * wy * hx * hy * (uh - ue) ** 2)
    return float(np.sqrt(total))
