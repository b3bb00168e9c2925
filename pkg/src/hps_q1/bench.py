"""Build-once / apply-many timing against a one-shot sparse direct solve.

Per configuration we time

* ``build``: leaf condensation plus all merges (once),
* ``apply_skeleton``: upward load sweep + downward skeleton sweep for
  given leaf fluxes,
* ``apply_full``: leaf fluxes from given leaf loads, the skeleton apply
  and interior reconstruction,
* ``baseline_skeleton``: factor + solve of the subassembled skeleton
  system (what a backslash call on that system costs),
* ``baseline_full``: factor + solve of the global Q1 system,
* ``baseline_solve_only``: repeat solve with a stored global factor.

Apply and baseline times are medians over ``solves`` right-hand sides.
Speedup and break-even use the skeleton pair; the ``_full`` columns use
the full-solution pair.
"""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ResourceGuardError
from .fields import parse_preset
from .geometry import Domain, PartitionSpec, build_grid
from .oracle import assemble_global, assemble_skeleton, factorize
from .solve import dirichlet_values, reconstruct, solve_skeleton
from .tree import build, leaf_loads, propagate_rhs

FULL_SWEEP = (4, 8, 16, 32)
REDUCED_SWEEP = (4, 8, 16)
MIN_REPS = 5


@dataclass
class BenchRecord:
    nsub: int
    nelem: int
    build: float
    apply_skeleton: float
    apply_full: float
    baseline_skeleton: float
    baseline_full: float
    baseline_solve_only: float

    @property
    def speedup(self) -> float:
        return self.baseline_skeleton / self.apply_skeleton

    @property
    def break_even(self) -> int | None:
        return break_even(self.build, self.apply_skeleton, self.baseline_skeleton)

    @property
    def speedup_full(self) -> float:
        return self.baseline_full / self.apply_full

    @property
    def break_even_full(self) -> int | None:
        return break_even(self.build, self.apply_full, self.baseline_full)

    def row(self) -> dict:
        d = asdict(self)
        d.update(speedup=self.speedup, break_even=self.break_even,
                 speedup_full=self.speedup_full, break_even_full=self.break_even_full)
        return d


def break_even(build: float, apply: float, baseline: float) -> int | None:
    """Smallest k with ``build + k*apply <= k*baseline``; None if never."""
    gain = baseline - apply
    if not gain > 0:
        return None
    b = max(1, math.ceil(build / gain))
    while b > 1 and (b - 1) * gain >= build:
        b -= 1
    while b * gain < build:
        b += 1
    return b


def root_operator_bytes(nsub: int, nelem: int) -> int:
    n = 4 * nsub * nelem
    return 8 * n * n


def _median_time(fn, args_list) -> float:
    ts = []
    for args in args_list:
        t = time.perf_counter()
        fn(*args)
        ts.append(time.perf_counter() - t)
    return float(np.median(ts))


def run_cell(nsub: int, nelem: int, solves: int = MIN_REPS, domain: Domain | None = None,
             threads: int = 1, memory_budget: float = 512 * 2**20, seed: int = 0) -> BenchRecord:
    if root_operator_bytes(nsub, nelem) > memory_budget:
        raise ResourceGuardError(
            f"{nsub}x{nsub} subdomains of {nelem}x{nelem} elements: dense root operator needs "
            f"{root_operator_bytes(nsub, nelem) / 2**20:.0f} MiB > budget {memory_budget / 2**20:.0f} MiB")
    solves = max(MIN_REPS, solves)
    grid = build_grid(domain or Domain(), PartitionSpec(nsub, nsub, nelem, nelem))
    presets = [parse_preset(f"random-poly:{seed + k}") for k in range(solves)]

    t = time.perf_counter()
    fact = build(grid, presets[0].load, threads=threads, keep_operators=False)
    t_build = time.perf_counter() - t

    loads = [leaf_loads(fact, p.load) for p in presets]
    leaf_h = [np.stack([op.load_flux(fi, fb) for op, (fi, fb) in zip(fact.leaves, ld)]) for ld in loads]
    gvals = [dirichlet_values(fact, p.trace) for p in presets]

    def apply_skeleton(hs, gv):
        fact.rhs = propagate_rhs(fact, hs)
        return solve_skeleton(fact, gv)

    def apply_full(ld, gv):
        hs = np.stack([op.load_flux(fi, fb) for op, (fi, fb) in zip(fact.leaves, ld)])
        fact.rhs = propagate_rhs(fact, hs)
        fact.rhs.f_int = [fi for fi, _ in ld]
        return reconstruct(fact, solve_skeleton(fact, gv))

    t_apply_skel = _median_time(apply_skeleton, list(zip(leaf_h, gvals)))
    t_apply_full = _median_time(apply_full, list(zip(loads, gvals)))

    skel = []
    for hs, gv in zip(leaf_h, gvals):
        fact.rhs = propagate_rhs(fact, hs)
        skel.append((assemble_skeleton(fact, gv),))
    t_base_skel = _median_time(lambda s: factorize(s.K).solve(s.rhs), skel)

    systems = [(assemble_global(grid, p.load, p.trace),) for p in presets]
    t_base_full = _median_time(lambda s: factorize(s.K).solve(s.rhs), systems)
    lu = factorize(systems[0][0].K)
    t_solve_only = _median_time(lambda s: lu.solve(s.rhs), systems)

    return BenchRecord(nsub=nsub, nelem=nelem, build=t_build, apply_skeleton=t_apply_skel,
                       apply_full=t_apply_full, baseline_skeleton=t_base_skel,
                       baseline_full=t_base_full, baseline_solve_only=t_solve_only)


def sweep(subdomains=REDUCED_SWEEP, elements=REDUCED_SWEEP, log=None, **kw) -> dict:
    """Run every cell; refused cells map to the guard message."""
    out = {}
    for ns in subdomains:
        for ne in elements:
            try:
                out[(ns, ne)] = run_cell(ns, ne, **kw)
            except ResourceGuardError as exc:
                out[(ns, ne)] = str(exc)
            if log is not None:
                r = out[(ns, ne)]
                log(f"{ns}x{ns} / {ne}x{ne}: " + (r if isinstance(r, str) else
                    f"build {r.build:.3f}s apply {r.apply_skeleton * 1e3:.3f}ms "
                    f"baseline {r.baseline_skeleton * 1e3:.3f}ms speedup {r.speedup:.1f} "
                    f"break-even {r.break_even or 'N/A'}"))
    return out


def _fmt_be(b) -> str:
    return "N/A" if b is None else str(b)


def table_rows(results: dict, subdomains, elements) -> list[list[str]]:
    """Speedup and break-even matrices side by side, one row per subdomain count."""
    header = (["subdomains"] + [f"speedup_{e}x{e}" for e in elements]
              + [f"break_even_{e}x{e}" for e in elements])
    rows = [header]
    for ns in subdomains:
        sp_cells, be_cells = [], []
        for ne in elements:
            r = results.get((ns, ne))
            if isinstance(r, BenchRecord):
                sp_cells.append(f"{r.speedup:.2f}")
                be_cells.append(_fmt_be(r.break_even))
            else:
                sp_cells.append("guard")
                be_cells.append("guard")
        rows.append([f"{ns}x{ns}"] + sp_cells + be_cells)
    return rows


DETAIL_COLUMNS = ["nsub", "nelem", "build", "apply_skeleton", "apply_full", "baseline_skeleton",
                  "baseline_full", "baseline_solve_only", "speedup", "break_even", "speedup_full",
                  "break_even_full"]


def detail_rows(results: dict) -> list[list[str]]:
    rows = [DETAIL_COLUMNS]
    for (ns, ne), r in results.items():
        if not isinstance(r, BenchRecord):
            continue
        d = r.row()
        rows.append([_fmt_be(d[c]) if c.startswith("break_even") else
                     (str(d[c]) if isinstance(d[c], int) else f"{d[c]:.6g}") for c in DETAIL_COLUMNS])
    return rows
