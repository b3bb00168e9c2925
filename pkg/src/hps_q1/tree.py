"""Nested-dissection merge hierarchy: schedule, upward build, load refresh."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, HpsError, UsageError
from .fem_q1 import assemble_leaf, assemble_leaf_loads
from .geometry import TensorGrid
from .leaf import condense
from .merge import MergeNode, merge_corner, merge_pair, plan_merge

HORIZONTAL = "horizontal"
VERTICAL = "vertical"


@dataclass(frozen=True)
class Block:
    """Rectangle of subdomains ``cols [c0, c1) x rows [r0, r1)``."""

    c0: int
    c1: int
    r0: int
    r1: int


@dataclass(frozen=True)
class MergeTask:
    level: int
    orientation: str
    first: int
    second: int
    result: int
    block: Block
    iface: np.ndarray = field(repr=False, compare=False)
    corner: int | None = None


@dataclass(frozen=True)
class MergeSchedule:
    n_leaves: int
    levels: tuple[tuple[MergeTask, ...], ...]
    root: int

    @property
    def tasks(self):
        return [t for lvl in self.levels for t in lvl]


def plan_schedule(grid: TensorGrid) -> MergeSchedule:
    """Alternating-axis dyadic merge schedule.

    Horizontal first, then vertical; once one axis is a single block the
    remaining levels all use the other axis.  Node keys ``0..n_leaves-1``
    are the subdomains (``row*nsub_x + col``), merged nodes follow in
    creation order.  Horizontal tasks are listed row-major, vertical
    tasks column-major.
    """
    spec = grid.spec
    if not isinstance(grid, TensorGrid):
        raise ConfigurationError("plan_schedule needs a TensorGrid")
    mx, my = spec.nelem_x, spec.nelem_y
    keys = np.arange(spec.nsub_x * spec.nsub_y).reshape(spec.nsub_y, spec.nsub_x)
    bw, bh = 1, 1  # block width/height in subdomains
    nxt = keys.size
    levels = []
    axis = HORIZONTAL
    while keys.size > 1:
        ny, nx = keys.shape
        if axis == HORIZONTAL and nx == 1:
            axis = VERTICAL
        elif axis == VERTICAL and ny == 1:
            axis = HORIZONTAL
        lvl = len(levels) + 1
        tasks = []
        if axis == HORIZONTAL:
            new = np.empty((ny, nx // 2), np.int64)
            for r in range(ny):
                for c in range(nx // 2):
                    blk = Block(2 * c * bw, (2 * c + 2) * bw, r * bh, (r + 1) * bh)
                    I_line = (blk.c0 + bw) * mx
                    J = np.arange(blk.r0 * my + 1, blk.r1 * my)
                    tasks.append(MergeTask(lvl, HORIZONTAL, int(keys[r, 2 * c]), int(keys[r, 2 * c + 1]),
                                           nxt, blk, grid.node_id(I_line, J)))
                    new[r, c] = nxt
                    nxt += 1
            bw *= 2
        else:
            new = np.empty((ny // 2, nx), np.int64)
            for c in range(nx):
                for r in range(ny // 2):
                    blk = Block(c * bw, (c + 1) * bw, 2 * r * bh, (2 * r + 2) * bh)
                    J_line = (blk.r0 + bh) * my
                    I = np.arange(blk.c0 * mx + 1, blk.c1 * mx)
                    corner = None
                    if bw >= 2:
                        Ic = (blk.c0 + bw // 2) * mx
                        corner = int(grid.node_id(Ic, J_line))
                        I = I[I != Ic]
                    tasks.append(MergeTask(lvl, VERTICAL, int(keys[2 * r, c]), int(keys[2 * r + 1, c]),
                                           nxt, blk, grid.node_id(I, J_line), corner))
                    new[r, c] = nxt
                    nxt += 1
            bh *= 2
        levels.append(tuple(tasks))
        keys = new
        axis = VERTICAL if axis == HORIZONTAL else HORIZONTAL
    return MergeSchedule(n_leaves=spec.nsub_x * spec.nsub_y, levels=tuple(levels), root=int(keys.ravel()[0]))


@dataclass
class RhsState:
    """Load-dependent data, stacked per level; replaced wholesale on refresh.

    ``H[0]`` holds the leaf fluxes (one row per subdomain), ``H[l]`` the
    final fluxes of the level-``l`` nodes in task order.  ``W[l-1]`` and
    ``WC[l-1]`` are the interface and corner load terms of level ``l``.
    """

    f_int: list
    f_bdry: list
    H: list
    W: list = field(default_factory=list)
    WC: list = field(default_factory=list)


@dataclass(eq=False)
class LevelOps:
    """Stacked downward/upward data of one level.

    All tasks of a level share the same index patterns (the partition is
    uniform), so positions are stored once and per-task matrices are
    stacked along axis 0.  ``MergeNode.T`` of each task is a view into
    ``T``.
    """

    first_rows: np.ndarray
    second_rows: np.ndarray
    I1: np.ndarray
    I2: np.ndarray
    E1: np.ndarray
    E2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    n_parent: int
    T: np.ndarray  # (k, nI, nV)
    factors: list
    iface_ids: np.ndarray  # (k, nI)
    parent_ext_ids: np.ndarray  # (k, nV)
    ext_ids: np.ndarray  # (k, nE)
    corner: dict | None = None  # keep, E, a, b, t (k, nE), pivot (k,), ids (k,)


@dataclass
class HpsFactorization:
    grid: TensorGrid
    schedule: MergeSchedule
    leaves: list  # LeafOperator per subdomain
    leaf_ext: list  # global ids of each leaf's boundary (iota_bdry order)
    leaf_int: list  # global ids of each leaf's interior
    nodes: dict  # key -> MergeNode
    levels: list  # LevelOps per schedule level
    rhs: RhsState | None = None
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.where = {k: (0, k) for k in range(len(self.leaves))}
        for lvl in self.schedule.levels:
            for row, task in enumerate(lvl):
                self.where[task.result] = (task.level, row)

    @property
    def root(self) -> int:
        return self.schedule.root

    def h(self, key: int) -> np.ndarray:
        lvl, row = self.where[key]
        return self.rhs.H[lvl][row]

    def operator(self, key: int):
        """``(S, h, ext)`` of a leaf or merged node under the current load."""
        if key < self.schedule.n_leaves:
            return self.leaves[key].S, self.h(key), self.leaf_ext[key]
        node = self.nodes[key]
        return node.S, self.h(key), node.ext

    @property
    def root_ext(self) -> np.ndarray:
        return self.operator(self.root)[2]


def _map(fn, items, threads: int):
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _same(arrays) -> bool:
    first = arrays[0]
    return all(np.array_equal(first, a) for a in arrays[1:])


def _stack_level(tasks, nodes: dict, rows_prev: dict) -> LevelOps:
    ns = [nodes[t.result] for t in tasks]
    plans = [n.plan for n in ns]
    for name in ("I1", "I2", "E1", "E2", "p1", "p2"):
        if not _same([getattr(p, name) for p in plans]):
            raise HpsError(f"merge index pattern {name} differs within a level")
    T = np.stack([n.T for n in ns])
    corner = None
    if ns[0].corner is not None:
        cds = [n.corner for n in ns]
        if not (_same([c.keep for c in cds]) and _same([c.E for c in cds])
                and len({(c.a, c.b) for c in cds}) == 1):
            raise HpsError("corner index pattern differs within a level")
        corner = dict(keep=cds[0].keep, E=cds[0].E, a=cds[0].a, b=cds[0].b,
                      t=np.stack([c.t for c in cds]), pivot=np.array([c.pivot for c in cds]),
                      ids=np.array([c.id for c in cds], np.int64))
    p = plans[0]
    ops = LevelOps(
        first_rows=np.array([rows_prev[t.first] for t in tasks]),
        second_rows=np.array([rows_prev[t.second] for t in tasks]),
        I1=p.I1, I2=p.I2, E1=p.E1, E2=p.E2, p1=p.p1, p2=p.p2, n_parent=p.n_parent,
        T=T, factors=[n.factor for n in ns],
        iface_ids=np.stack([pl.iface for pl in plans]),
        parent_ext_ids=np.stack([pl.parent_ext for pl in plans]),
        ext_ids=np.stack([n.ext for n in ns]),
        corner=corner,
    )
    for t, k in zip(tasks, range(len(tasks))):
        nodes[t.result] = replace(nodes[t.result], T=T[k])
    return ops


def build(grid: TensorGrid, f, threads: int = 1, keep_operators: bool = True) -> HpsFactorization:
    """Condense every leaf, then run the merge schedule up to the root.

    With ``keep_operators=False`` the dense ``S`` of a merged node is
    dropped once its parent exists; leaves and the root keep theirs.
    """
    schedule = plan_schedule(grid)
    timings = {}
    t0 = time.perf_counter()

    def do_leaf(sub):
        sys = assemble_leaf(sub, sub.maps, f)
        return condense(sys), sys.f_bdry

    leaves, f_bdry = map(list, zip(*_map(do_leaf, list(grid.subdomains), threads)))
    leaf_ext = [grid.local_to_global(s, s.maps.iota_bdry) for s in grid.subdomains]
    leaf_int = [grid.local_to_global(s, s.maps.iota_int) for s in grid.subdomains]
    timings["leaves"] = time.perf_counter() - t0

    ops = {k: (op.S, op.h, leaf_ext[k]) for k, op in enumerate(leaves)}
    nodes: dict[int, MergeNode] = {}
    levels = []
    rows_prev = {k: k for k in range(len(leaves))}
    for lvl in schedule.levels:
        t1 = time.perf_counter()

        def do_task(task):
            S1, h1, e1 = ops[task.first]
            S2, h2, e2 = ops[task.second]
            plan = plan_merge(e1, e2, task.iface, task.corner)
            node = merge_pair((S1, h1), (S2, h2), plan)
            if task.corner is not None:
                node = merge_corner(node, task.corner)
            return node

        for task, node in zip(lvl, _map(do_task, list(lvl), threads)):
            nodes[task.result] = node
            ops[task.result] = (node.S, node.h, node.ext)
            if not keep_operators:
                for child in (task.first, task.second):
                    if child in nodes:
                        nodes[child] = replace(nodes[child], S=None)
                    del ops[child]
        levels.append(_stack_level(lvl, nodes, rows_prev))
        rows_prev = {t.result: r for r, t in enumerate(lvl)}
        timings[f"level{lvl[0].level}"] = time.perf_counter() - t1
    timings["build"] = time.perf_counter() - t0

    fact = HpsFactorization(grid=grid, schedule=schedule, leaves=leaves, leaf_ext=leaf_ext,
                            leaf_int=leaf_int, nodes=nodes, levels=levels, timings=timings)
    state = propagate_rhs(fact, np.stack([op.h for op in leaves]))
    state.f_int = [op.f_int for op in leaves]
    state.f_bdry = f_bdry
    fact.rhs = state
    return fact


def leaf_loads(fact: HpsFactorization, f):
    """Per-leaf ``(f_int, f_bdry)`` for a new load field."""
    return [assemble_leaf_loads(s, s.maps, f) for s in fact.grid.subdomains]


def propagate_rhs(fact: HpsFactorization, leaf_h: np.ndarray) -> RhsState:
    """Upward sweep of the load fluxes only; no factorization is touched.

    ``leaf_h`` is ``(n_leaves, n_bdry)``.  Each level is processed in
    batch: gather the children's interface fluxes, subassemble the
    retained ones, add ``T^T h_I`` and eliminate the corner.
    """
    H = [np.asarray(leaf_h, float)]
    W, WC = [], []
    for ops in fact.levels:
        H1 = H[-1][ops.first_rows]
        H2 = H[-1][ops.second_rows]
        hI = H1[:, ops.I1] + H2[:, ops.I2]
        hV = np.zeros((len(H1), ops.n_parent))
        hV[:, ops.p1] += H1[:, ops.E1]
        hV[:, ops.p2] += H2[:, ops.E2]
        if hI.shape[1]:
            hV += np.matmul(hI[:, None, :], ops.T)[:, 0, :]
            w = np.stack([fac.solve(v) for fac, v in zip(ops.factors, hI)])
        else:
            w = hI
        c = ops.corner
        if c is not None:
            hk = hV[:, c["keep"]]
            hk[:, c["a"]] += hV[:, c["b"]]
            hc = hk[:, c["a"]]
            hV = hk[:, c["E"]] + c["t"] * hc[:, None]
            WC.append(hc / c["pivot"])
        else:
            WC.append(np.zeros(len(H1)))
        W.append(w)
        H.append(hV)
    return RhsState(f_int=[], f_bdry=[], H=H, W=W, WC=WC)


def refresh_rhs(fact: HpsFactorization, f, loads=None) -> RhsState:
    """Install the load ``f`` (or precomputed per-leaf ``loads``) in ``fact``."""
    if loads is None:
        loads = leaf_loads(fact, f)
    if len(loads) != len(fact.leaves):
        raise UsageError("one (f_int, f_bdry) pair per leaf is required")
    leaf_h = np.stack([op.load_flux(fi, fb) for op, (fi, fb) in zip(fact.leaves, loads)])
    state = propagate_rhs(fact, leaf_h)
    state.f_int = [fi for fi, _ in loads]
    state.f_bdry = [fb for _, fb in loads]
    fact.rhs = state
    return state


@dataclass(frozen=True)
class EliminationRecord:
    level: int
    orientation: str
    result: int
    merge_ids: np.ndarray  # interface ids eliminated by the pair merge
    corner_id: int | None
    n_exterior: int  # |E| after this merge
    n_merge: int  # |M| eliminated (interface + corner)


def skeleton_view(fact: HpsFactorization) -> list[EliminationRecord]:
    """Per-task record of the skeleton ids eliminated at each level."""
    out = []
    for lvl in fact.schedule.levels:
        for task in lvl:
            node = fact.nodes[task.result]
            out.append(EliminationRecord(
                level=task.level, orientation=task.orientation, result=task.result,
                merge_ids=np.asarray(node.plan.iface), corner_id=task.corner,
                n_exterior=len(node.ext), n_merge=len(node.plan.iface) + (task.corner is not None)))
    return out
