"""HPS-vs-oracle agreement matrix and per-node operator invariants."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import parse_preset
from .geometry import Domain, PartitionSpec, build_grid
from .oracle import oracle_solve
from .solve import solve
from .tree import build, refresh_rhs

SUBDOMAINS = (1, 2, 4, 8)
ELEMENTS = (1, 2, 4, 8)
PRESET_PAIRS = (
    ("zero", "zero"),
    ("const:1", "const:2.5"),
    ("linear:1,2,-3", "linear:1,2,-3"),
    ("sinsin", "sinsin"),
    ("random-poly:1", "random-poly:1"),
    ("random-poly:2", "random-poly:2"),
    ("random-poly:3", "random-poly:3"),
)
SOLVE_TOL = 1e-10
SYMMETRY_TOL = 1e-12
KERNEL_TOL = 1e-11


def rel_inf(u: np.ndarray, ref: np.ndarray) -> float:
    """‖u - ref‖∞ / ‖ref‖∞ (absolute when ref vanishes)."""
    d = float(np.max(np.abs(u - ref))) if len(ref) else 0.0
    nrm = float(np.max(np.abs(ref))) if len(ref) else 0.0
    return d / nrm if nrm > 0 else d


def operator_invariants(S: np.ndarray) -> tuple[float, float]:
    """Relative asymmetry and relative constant-kernel defect of ``S``."""
    nrm = np.linalg.norm(S, np.inf)
    if nrm == 0:
        return 0.0, 0.0
    return (float(np.linalg.norm(S - S.T, np.inf) / nrm),
            float(np.linalg.norm(S.sum(axis=1), np.inf) / nrm))


def fact_invariants(fact) -> tuple[float, float]:
    sym = kern = 0.0
    keys = list(range(len(fact.leaves))) + list(fact.nodes)
    for k in keys:
        S = fact.operator(k)[0]
        if S is None:
            continue
        a, b = operator_invariants(S)
        sym, kern = max(sym, a), max(kern, b)
    return sym, kern


@dataclass
class GridReport:
    nsub: int
    nelem: int
    errors: dict = field(default_factory=dict)
    symmetry: float = 0.0
    kernel: float = 0.0
    failure: str | None = None

    @property
    def label(self) -> str:
        return f"{self.nsub}x{self.nsub} subdomains / {self.nelem}x{self.nelem} elements"

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return (self.failure is None and self.max_error <= SOLVE_TOL
                and self.symmetry <= SYMMETRY_TOL and self.kernel <= KERNEL_TOL)


def _inject(fact, fault: str):
    if fault == "sign-flip":
        for ops in fact.levels:
            ops.T *= -1.0
    else:
        raise ValueError(f"unknown fault {fault!r}")


def verify_grid(nsub: int, nelem: int, pairs=PRESET_PAIRS, domain: Domain | None = None,
                threads: int = 1, fault: str | None = None) -> GridReport:
    rep = GridReport(nsub, nelem)
    grid = build_grid(domain or Domain(), PartitionSpec(nsub, nsub, nelem, nelem))
    try:
        presets = [(parse_preset(f), parse_preset(g)) for f, g in pairs]
        fact = build(grid, presets[0][0].load, threads=threads)
        if fault:
            _inject(fact, fault)
        rep.symmetry, rep.kernel = fact_invariants(fact)
        for k, ((fs, gs), (f, g)) in enumerate(zip(pairs, presets)):
            if k:
                refresh_rhs(fact, f.load)
            u = solve(fact, g.trace)
            rep.errors[f"{fs}|{gs}"] = rel_inf(u, oracle_solve(grid, f.load, g.trace))
    except Exception as exc:  # reported, not raised: every grid is run
        rep.failure = f"{type(exc).__name__}: {exc}"
    return rep


def run_suite(subdomains=SUBDOMAINS, elements=ELEMENTS, log=None, **kw) -> list[GridReport]:
    reports = []
    for ns in subdomains:
        for ne in elements:
            rep = verify_grid(ns, ne, **kw)
            reports.append(rep)
            if log is not None:
                status = "PASS" if rep.passed else "FAIL"
                extra = f" ({rep.failure})" if rep.failure else ""
                log(f"{status} {rep.label}: max rel err {rep.max_error:.3e}, "
                    f"asym {rep.symmetry:.1e}, kernel {rep.kernel:.1e}{extra}")
    return reports
