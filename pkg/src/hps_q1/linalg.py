"""Symmetric positive-definite factorizations used by the leaves and merges.

Every factorization bumps :data:`counter`, which lets tests assert that
a right-hand-side refresh never refactorizes anything.
"""
from __future__ import annotations

import threading

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.linalg.lapack import dpotrs

from .errors import NumericError


class FactorizationCounter:
    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0

    def bump(self):
        with self._lock:
            self.count += 1


counter = FactorizationCounter()


class DenseCholesky:
    """Lower Cholesky factor of a dense SPD matrix."""

    def __init__(self, X: np.ndarray):
        self.n = X.shape[0]
        counter.bump()
        if self.n == 0:
            self.L = np.zeros((0, 0))
            return
        try:
            self.L = sla.cholesky(X, lower=True, check_finite=False)
        except sla.LinAlgError as exc:
            raise NumericError(f"interface pivot is not positive definite: {exc}") from None

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.n == 0:
            return np.zeros_like(b, dtype=float)
        x, info = dpotrs(self.L, b, lower=1)
        if info != 0:
            raise NumericError(f"potrs failed with info={info}")
        return x

    def half_solve(self, b: np.ndarray) -> np.ndarray:
        """``L^{-1} b``."""
        if self.n == 0:
            return np.zeros((0,) + b.shape[1:])
        return sla.solve_triangular(self.L, b, lower=True, check_finite=False)


class BandedCholesky:
    """Cholesky factor of a sparse SPD matrix in LAPACK lower-band storage.

    The interior block of a tensor-product leaf has bandwidth equal to
    its shorter node-line length, so band storage stays small.
    """

    def __init__(self, A: sp.spmatrix):
        A = sp.coo_matrix(A)
        self.n = A.shape[0]
        counter.bump()
        if self.n == 0:
            self.cb = np.zeros((1, 0))
            return
        lower = A.row >= A.col
        r, c, v = A.row[lower], A.col[lower], A.data[lower]
        bw = int((r - c).max())
        ab = np.zeros((bw + 1, self.n))
        np.add.at(ab, (r - c, c), v)
        try:
            self.cb = sla.cholesky_banded(ab, lower=True, check_finite=False)
        except sla.LinAlgError as exc:
            raise NumericError(f"interior block is not positive definite: {exc}") from None

    @property
    def bandwidth(self) -> int:
        return self.cb.shape[0] - 1

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.n == 0:
            return np.zeros_like(b, dtype=float)
        return sla.cho_solve_banded((self.cb, True), b, check_finite=False)
