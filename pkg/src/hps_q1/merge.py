"""Pairwise merging of boundary residual maps ``r = S u + h``.

Operators are indexed by global node ids (``ext`` arrays).  A pair
merge eliminates the shared interface ``I``:

    X  = S1(I,I) + S2(I,I)
    S  = blkdiag(S1(E,E), S2(E,E)) - [S1(E,I); S2(E,I)] X⁻¹ [S1(I,E)  S2(I,E)]
    h  = [h1(E); h2(E)]            - [S1(E,I); S2(E,I)] X⁻¹ (h1(I) + h2(I))

Retained nodes present in both children (endpoints of the shared edge)
are subassembled: their rows and columns are summed, which is the flux
balance ``r1 + r2`` at a node where ``u1 = u2``.  The one exception is a
designated *corner*: it stays duplicated after the pair merge and is
removed by :func:`merge_corner`, which first sums its two copies and
then eliminates it with a scalar pivot.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from .errors import NumericError, UsageError
from .linalg import DenseCholesky


@dataclass(frozen=True, eq=False)
class MergeIndexPlan:
    """Where every child row goes in the merged operator.

    ``I1``/``I2`` are interface positions in the children (matched
    pairwise: ``ext1[I1] == ext2[I2] == iface``); ``E1``/``E2`` are the
    retained positions and ``p1``/``p2`` their slots in ``parent_ext``.
    """

    ext1: np.ndarray
    ext2: np.ndarray
    iface: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    parent_ext: np.ndarray
    corner: int | None = None
    corner_slots: tuple[int, int] | None = None

    @property
    def n_parent(self) -> int:
        return len(self.parent_ext)


def _positions(ext: np.ndarray, ids: np.ndarray, what: str) -> np.ndarray:
    order = np.argsort(ext, kind="stable")
    loc = np.searchsorted(ext, ids, sorter=order)
    loc = np.minimum(loc, len(ext) - 1) if len(ext) else loc
    pos = order[loc] if len(ext) else loc
    if len(ids) and not np.array_equal(ext[pos], ids):
        raise UsageError(f"{what} ids are not all present in the child exterior")
    return pos


def plan_merge(ext1, ext2, iface, corner: int | None = None) -> MergeIndexPlan:
    """Build the index plan for merging operators on ``ext1`` and ``ext2``.

    ``iface`` lists the global ids to eliminate (each must appear once in
    both children).  ``corner``, if given, must be retained by both and
    ends up duplicated in ``parent_ext``.
    """
    ext1, ext2 = np.asarray(ext1, np.int64), np.asarray(ext2, np.int64)
    iface = np.asarray(iface, np.int64)
    if len(np.unique(ext1)) != len(ext1) or len(np.unique(ext2)) != len(ext2):
        raise UsageError("child exterior sets must not contain duplicates")
    if corner is not None and corner in set(iface.tolist()):
        raise UsageError("the corner must not be part of the interface")
    I1 = _positions(ext1, iface, "interface")
    I2 = _positions(ext2, iface, "interface")

    keep1 = np.ones(len(ext1), bool)
    keep1[I1] = False
    keep2 = np.ones(len(ext2), bool)
    keep2[I2] = False
    E1, E2 = np.flatnonzero(keep1), np.flatnonzero(keep2)

    slot_of = {int(g): k for k, g in enumerate(ext1[E1])}
    p1 = np.arange(len(E1))
    p2 = np.empty(len(E2), np.int64)
    extra = []
    nxt = len(E1)
    corner_slots = None
    for k, g in enumerate(ext2[E2].tolist()):
        if g in slot_of and g != corner:
            p2[k] = slot_of[g]
        else:
            if g == corner:
                if g not in slot_of:
                    raise UsageError("the corner must be retained by both children")
                corner_slots = (slot_of[g], nxt)
            p2[k] = nxt
            nxt += 1
            extra.append(g)
    if corner is not None and corner_slots is None:
        raise UsageError("the corner must be retained by both children")
    parent_ext = np.concatenate([ext1[E1], np.asarray(extra, np.int64)])
    return MergeIndexPlan(ext1=ext1, ext2=ext2, iface=iface, I1=I1, I2=I2, E1=E1, E2=E2,
                          p1=p1, p2=p2, parent_ext=parent_ext, corner=corner,
                          corner_slots=corner_slots)


@dataclass(frozen=True, eq=False)
class CornerData:
    """Scalar elimination of the identified corner.

    ``keep`` are positions of the pair-merged exterior that survive the
    identification (the second corner copy is dropped); ``E`` are the
    positions within ``keep`` other than the corner slot ``a``.
    """

    id: int
    a: int
    b: int
    keep: np.ndarray
    E: np.ndarray
    pivot: float
    t: np.ndarray


@dataclass(frozen=True, eq=False)
class MergeNode:
    """Merged operator plus everything the downward sweep needs.

    ``S``, ``h`` and ``ext`` describe the final operator (after the corner
    merge, when there is one).  ``T = -X⁻¹ [S1(I,E) S2(I,E)]`` maps the
    pair-merged exterior values to interface values, and ``w = X⁻¹ (h1(I)
    + h2(I))`` is its load part, so ``u_I = T u_V - w``.
    """

    plan: MergeIndexPlan
    S: np.ndarray
    h: np.ndarray
    ext: np.ndarray
    factor: DenseCholesky
    T: np.ndarray
    w: np.ndarray
    corner: CornerData | None = None
    wc: float = 0.0

    @property
    def n_iface(self) -> int:
        return len(self.plan.iface)


def _scatter_pair(plan: MergeIndexPlan, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    out = np.zeros(plan.n_parent)
    out[plan.p1] += v1[plan.E1]
    out[plan.p2] += v2[plan.E2]
    return out


def pair_rhs(plan: MergeIndexPlan, factor: DenseCholesky, T: np.ndarray,
             h1: np.ndarray, h2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(h_V, w)`` of a pair merge for child load fluxes ``h1``, ``h2``."""
    hI = h1[plan.I1] + h2[plan.I2]
    w = factor.solve(hI)
    hV = _scatter_pair(plan, h1, h2)
    if len(hI):
        hV += T.T @ hI
    return hV, w


def merge_pair(first, second, plan: MergeIndexPlan) -> MergeNode:
    """Eliminate the interface of ``plan`` from two ``(S, h)`` children.

    ``first`` is the left (horizontal) or bottom (vertical) child.
    """
    S1, h1 = first
    S2, h2 = second
    if S1.shape[0] != len(plan.ext1) or S2.shape[0] != len(plan.ext2):
        raise UsageError("child operators do not match the merge plan")
    I1, I2, E1, E2, p1, p2 = plan.I1, plan.I2, plan.E1, plan.E2, plan.p1, plan.p2
    n, nI = plan.n_parent, len(plan.iface)

    factor = DenseCholesky(S1[np.ix_(I1, I1)] + S2[np.ix_(I2, I2)])

    S = np.zeros((n, n))
    S[np.ix_(p1, p1)] += S1[np.ix_(E1, E1)]
    S[np.ix_(p2, p2)] += S2[np.ix_(E2, E2)]
    if nI:
        Q = np.zeros((n, nI))
        Q[p1] += S1[np.ix_(E1, I1)]
        Q[p2] += S2[np.ix_(E2, I2)]
        W = factor.half_solve(Q.T)
        S -= W.T @ W
        S = 0.5 * (S + S.T)
        T = -sla.solve_triangular(factor.L, W, lower=True, trans="T", check_finite=False)
    else:
        T = np.zeros((0, n))
    hV, w = pair_rhs(plan, factor, T, np.asarray(h1, float), np.asarray(h2, float))
    return MergeNode(plan=plan, S=S, h=hV, ext=plan.parent_ext, factor=factor, T=T, w=w)


def corner_rhs(cd: CornerData, hV: np.ndarray) -> tuple[np.ndarray, float]:
    """``(h_corner, w_c)`` where ``u(c) = t·u(E) - w_c``."""
    hk = hV[cd.keep]
    hk[cd.a] += hV[cd.b]
    hc = hk[cd.a]
    return hk[cd.E] + cd.t * hc, float(hc / cd.pivot)


def merge_corner(node: MergeNode, c: int | None = None) -> MergeNode:
    """Identify the two copies of the enclosed corner and eliminate it."""
    plan = node.plan
    if plan.corner is None or node.corner is not None:
        raise UsageError("node has no pending corner")
    if c is not None and c != plan.corner:
        raise UsageError(f"corner {c} does not match the planned corner {plan.corner}")
    a, b = plan.corner_slots
    SV, hV = node.S, node.h
    n = SV.shape[0]
    keep = np.delete(np.arange(n), b)
    Sk = SV[np.ix_(keep, keep)]
    # a < b, so slot a keeps its position inside ``keep``
    Sk[a, :] += SV[b, keep]
    Sk[:, a] += SV[keep, b]
    Sk[a, a] += SV[b, b]
    pivot = float(Sk[a, a])
    if not pivot > 0.0:
        raise NumericError(f"corner pivot {pivot} is not positive")
    E = np.delete(np.arange(n - 1), a)
    row = Sk[a, E]
    t = -row / pivot
    S = Sk[np.ix_(E, E)] + np.outer(row, t)
    S = 0.5 * (S + S.T)
    cd = CornerData(id=int(plan.corner), a=a, b=b, keep=keep, E=E, pivot=pivot, t=t)
    hc, wc = corner_rhs(cd, hV)
    return replace(node, S=S, h=hc, ext=node.ext[keep][E], corner=cd, wc=wc)


def solve_interface(node: MergeNode, u_V: np.ndarray, w: np.ndarray | None = None) -> np.ndarray:
    """Interface values from values on the pair-merged exterior.

    ``u_V`` follows ``node.plan.parent_ext`` (corner duplicated).
    """
    u_V = np.asarray(u_V, float)
    if u_V.shape[0] != node.plan.n_parent:
        raise UsageError(f"exterior vector has length {u_V.shape[0]}, expected {node.plan.n_parent}")
    return node.T @ u_V - (node.w if w is None else w)


def solve_corner(node: MergeNode, u_E: np.ndarray, wc: float | None = None) -> float:
    """Corner value from values on the final exterior ``node.ext``."""
    if node.corner is None:
        raise UsageError("corner merge not performed")
    u_E = np.asarray(u_E, float)
    if u_E.shape[0] != len(node.ext):
        raise UsageError(f"exterior vector has length {u_E.shape[0]}, expected {len(node.ext)}")
    return float(node.corner.t @ u_E - (node.wc if wc is None else wc))


def expand_corner(node: MergeNode, u_E: np.ndarray, u_c: float) -> np.ndarray:
    """Values on the pair-merged exterior from final-exterior values and u(c)."""
    cd = node.corner
    u_V = np.empty(node.plan.n_parent)
    u_V[cd.keep[cd.E]] = u_E
    u_V[cd.a] = u_V[cd.b] = u_c
    return u_V
