"""Static condensation of a leaf system into its discrete DtN pair (S, h)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import UsageError
from .fem_q1 import LeafSystem
from .linalg import BandedCholesky


@dataclass(frozen=True)
class LeafOperator:
    """Boundary residual map r = S u_bdry + h of one subdomain.

    ``factor``, ``B`` and ``f_int`` are kept so the interior can be
    recovered and ``h`` recomputed for another load without condensing
    again.
    """

    S: np.ndarray
    h: np.ndarray
    factor: BandedCholesky
    B: sp.csr_matrix
    f_int: np.ndarray

    @property
    def n_bdry(self) -> int:
        return self.B.shape[1]

    @property
    def n_int(self) -> int:
        return self.factor.n

    def load_flux(self, f_int: np.ndarray, f_bdry: np.ndarray) -> np.ndarray:
        """h = C A⁻¹ f_int - f_bdry for a new load."""
        if self.n_int == 0:
            return -np.asarray(f_bdry, float)
        return self.B.T @ self.factor.solve(f_int) - f_bdry

    def with_load(self, f_int: np.ndarray, f_bdry: np.ndarray) -> "LeafOperator":
        return LeafOperator(S=self.S, h=self.load_flux(f_int, f_bdry), factor=self.factor,
                            B=self.B, f_int=np.asarray(f_int, float))


def condense(sys: LeafSystem) -> LeafOperator:
    factor = BandedCholesky(sys.A)
    if factor.n == 0:
        S = np.array(sys.D, dtype=float)
    else:
        AinvB = factor.solve(sys.B.toarray())
        S = sys.D - sys.C @ AinvB
        S = 0.5 * (S + S.T)
    op = LeafOperator(S=S, h=np.empty(0), factor=factor, B=sys.B, f_int=sys.f_int)
    return op.with_load(sys.f_int, sys.f_bdry)


def reconstruct_interior(op: LeafOperator, u_bdry: np.ndarray, f_int: np.ndarray | None = None) -> np.ndarray:
    """u_int = A⁻¹ (f_int - B u_bdry)."""
    u_bdry = np.asarray(u_bdry, float)
    if u_bdry.shape[0] != op.n_bdry:
        raise UsageError(f"boundary vector has length {u_bdry.shape[0]}, expected {op.n_bdry}")
    if op.n_int == 0:
        return np.zeros((0,) + u_bdry.shape[1:])
    rhs = (op.f_int if f_int is None else f_int)
    if u_bdry.ndim == 2:
        rhs = rhs[:, None]
    return op.factor.solve(rhs - op.B @ u_bdry)
