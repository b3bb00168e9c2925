"""Command-line front end: ``solve``, ``verify``, ``converge`` and ``bench``.

The equation solved is -Δu = f in the rectangle with u = g on its boundary.
Every output file starts with ``#`` lines echoing the configuration.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from . import verify as verify_mod
from .errors import ConfigurationError, HpsError, ResourceGuardError, UsageError
from .fem_q1 import l2_error
from .fields import exact_solution, parse_preset
from .geometry import Domain, PartitionSpec, build_grid
from .solve import format_solution, solve
from .tree import build

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_VERIFY, EXIT_GUARD = 0, 1, 2, 3, 4
DEFAULT_BUDGET_MIB = 512.0
ROUNDOFF_ERROR = 1e-12


@dataclass
class RunConfig:
    command: str
    domain: Domain
    partition: PartitionSpec
    f: str
    g: str
    seed: int = 0
    solves: int = bench_mod.MIN_REPS
    threads: int = 1
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def header(self) -> list[str]:
        d, p = self.domain, self.partition
        lines = [
            f"# command={self.command}",
            f"# domain={d.alpha!r},{d.beta!r},{d.gamma!r},{d.delta!r}",
            f"# subdomains={p.nsub_x},{p.nsub_y}",
            f"# elements={p.nelem_x},{p.nelem_y}",
            f"# f={self.f}",
            f"# g={self.g}",
            f"# seed={self.seed}",
            f"# solves={self.solves}",
            f"# threads={self.threads}",
        ]
        lines += [f"# {k}={v}" for k, v in self.extra.items()]
        lines.append("# equation=-laplace(u)=f, u=g on boundary")
        return lines


def _ints(text: str, n: int, name: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise ConfigurationError(f"--{name} expects {n} comma-separated integers, got {text!r}") from None
    if len(vals) != n:
        raise ConfigurationError(f"--{name} expects {n} comma-separated integers, got {text!r}")
    return vals


def _domain(text: str) -> Domain:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigurationError(f"--domain expects a,b,c,d, got {text!r}") from None
    if len(vals) != 4 or not all(map(math.isfinite, vals)):
        raise ConfigurationError(f"--domain expects four finite numbers, got {text!r}")
    return Domain(*vals)


def make_config(args) -> RunConfig:
    sx, sy = _ints(args.subdomains, 2, "subdomains")
    ex, ey = _ints(args.elements, 2, "elements")
    if args.threads < 1:
        raise ConfigurationError("--threads must be >= 1")
    if getattr(args, "solves", 1) < 1:
        raise ConfigurationError("--solves must be >= 1")
    cfg = RunConfig(command=args.command, domain=_domain(args.domain),
                    partition=PartitionSpec(sx, sy, ex, ey), f=args.f, g=args.g,
                    seed=args.seed, solves=getattr(args, "solves", bench_mod.MIN_REPS),
                    threads=args.threads, out=args.out)
    # presets are validated up front
    parse_preset(cfg.f, cfg.seed)
    parse_preset(cfg.g, cfg.seed)
    return cfg


def _write(cfg: RunConfig, lines: list[str], out: str | None = None):
    text = "\n".join(cfg.header() + lines) + "\n"
    out = out if out is not None else cfg.out
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _csv_lines(rows) -> list[str]:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue().splitlines()


def _guard(cfg: RunConfig, budget_mib: float):
    p = cfg.partition
    n = 2 * (p.nsub_x * p.nelem_x + p.nsub_y * p.nelem_y)
    need = 8 * n * n
    if need > budget_mib * 2**20:
        raise ResourceGuardError(
            f"dense root operator needs {need / 2**20:.1f} MiB > budget {budget_mib:g} MiB")


def cmd_solve(cfg: RunConfig, budget_mib: float = DEFAULT_BUDGET_MIB, log=print) -> np.ndarray:
    _guard(cfg, budget_mib)
    f = parse_preset(cfg.f, cfg.seed)
    g = parse_preset(cfg.g, cfg.seed)
    grid = build_grid(cfg.domain, cfg.partition)
    t0 = time.perf_counter()
    fact = build(grid, f.load, threads=cfg.threads)
    t1 = time.perf_counter()
    u = solve(fact, g.trace)
    t2 = time.perf_counter()
    cfg.extra = {"nodes": grid.n_nodes, "skeleton_nodes": len(grid.skeleton_ids()),
                 "leaves": len(fact.leaves), "levels": len(fact.levels)}
    _write(cfg, format_solution(grid, u))
    log(f"nodes {grid.n_nodes}, skeleton {len(grid.skeleton_ids())}, leaves {len(fact.leaves)}, "
        f"levels {len(fact.levels)}, build {t1 - t0:.4f}s, solve {t2 - t1:.4f}s")
    return u


def cmd_verify(cfg: RunConfig, empty: bool = False, fault: str | None = None, log=print) -> bool:
    if empty:
        cfg.extra = {"suite": "empty"}
        _write(cfg, ["grid,max_rel_error,asymmetry,kernel,status"])
        log("empty suite: nothing to verify")
        return True
    lines = []
    reports = verify_mod.run_suite(log=log, domain=cfg.domain, threads=cfg.threads, fault=fault)
    rows = [["grid", "max_rel_error", "asymmetry", "kernel", "status"]]
    for r in reports:
        rows.append([f"{r.nsub}x{r.nsub}/{r.nelem}x{r.nelem}", f"{r.max_error:.3e}",
                     f"{r.symmetry:.3e}", f"{r.kernel:.3e}",
                     "pass" if r.passed else f"FAIL {r.failure or ''}".strip()])
    lines += _csv_lines(rows)
    cfg.extra = {"suite": "default", "fault": fault or "none"}
    if cfg.out is not None:
        _write(cfg, lines)
    failed = [r for r in reports if not r.passed]
    log(f"{len(reports) - len(failed)}/{len(reports)} grids passed")
    return not failed


def converge_rows(cfg: RunConfig, refinements: int) -> list[tuple[float, float, str]]:
    f = parse_preset(cfg.f, cfg.seed)
    g = parse_preset(cfg.g, cfg.seed)
    exact = exact_solution(f, g)
    if exact is None:
        raise UsageError(f"no exact solution known for f={cfg.f}, g={cfg.g}")
    if refinements < 1:
        raise ConfigurationError("--refinements must be >= 1")
    p = cfg.partition
    errs, hs = [], []
    for k in range(refinements):
        spec = PartitionSpec(p.nsub_x, p.nsub_y, p.nelem_x * 2**k, p.nelem_y * 2**k)
        grid = build_grid(cfg.domain, spec)
        fact = build(grid, f.load, threads=cfg.threads, keep_operators=False)
        u = solve(fact, g.trace)
        errs.append(l2_error(grid.xs, grid.ys, u, exact))
        hs.append(max(np.diff(grid.xs).max(), np.diff(grid.ys).max()))
    rows = []
    for k, (h, e) in enumerate(zip(hs, errs)):
        if k == 0:
            order = ""
        elif max(e, errs[k - 1]) <= ROUNDOFF_ERROR:
            order = "exact"
        else:
            order = f"{math.log2(errs[k - 1] / e):.6f}"
        rows.append((h, e, order))
    return rows


def cmd_converge(cfg: RunConfig, refinements: int, log=print):
    rows = converge_rows(cfg, refinements)
    cfg.extra = {"refinements": refinements}
    _write(cfg, _csv_lines([["h", "l2_error", "order"]]
                           + [[f"{h:.17g}", f"{e:.17g}", o] for h, e, o in rows]))
    for h, e, o in rows:
        log(f"h={h:.5g} L2 error={e:.6e} order={o or '-'}")
    return rows


def _detail_path(out: str) -> str:
    p = Path(out)
    return str(p.with_name(p.stem + "_detail" + (p.suffix or ".csv")))


def cmd_bench(cfg: RunConfig, subdomains, elements, budget_mib: float, log=print) -> dict:
    results = bench_mod.sweep(subdomains, elements, log=log, solves=cfg.solves, domain=cfg.domain,
                              threads=cfg.threads, memory_budget=budget_mib * 2**20, seed=cfg.seed)
    cfg.extra = {"sweep_subdomains": ",".join(map(str, subdomains)),
                 "sweep_elements": ",".join(map(str, elements)),
                 "memory_budget_mib": f"{budget_mib:g}",
                 "speedup": "baseline_skeleton/apply_skeleton",
                 "break_even": "ceil(build/(baseline_skeleton-apply_skeleton))"}
    table = _csv_lines(bench_mod.table_rows(results, subdomains, elements))
    detail = _csv_lines(bench_mod.detail_rows(results))
    _write(cfg, table)
    if cfg.out not in (None, "-"):
        _write(cfg, detail, _detail_path(cfg.out))
    else:
        sys.stdout.write("\n".join(detail) + "\n")
    for (ns, ne), r in results.items():
        if isinstance(r, str):
            log(f"guard {ns}x{ns}/{ne}x{ne}: {r}")
    if all(isinstance(r, str) for r in results.values()):
        raise ResourceGuardError("memory guard refused every configuration")
    return results


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", default="0,1,0,1", help="a,b,c,d for (a,b)x(c,d)")
    common.add_argument("--subdomains", default="2,2", help="nx,ny (powers of two)")
    common.add_argument("--elements", default="4,4", help="mx,my elements per subdomain")
    common.add_argument("--f", default="sinsin", help="load preset for -laplace(u)=f")
    common.add_argument("--g", default="sinsin", help="boundary preset")
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int, default=0, help="seed for random-poly without :s")
    common.add_argument("--memory-budget", type=float, default=DEFAULT_BUDGET_MIB,
                        help="MiB allowed for the dense root operator")

    ap = argparse.ArgumentParser(prog="hps-q1", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="solve one problem, write x,y,u")
    v = sub.add_parser("verify", parents=[common], help="HPS vs direct solve on the test matrix")
    v.add_argument("--empty", action="store_true", help="run an empty suite")
    v.add_argument("--inject", choices=["sign-flip"], default=None, help=argparse.SUPPRESS)
    c = sub.add_parser("converge", parents=[common], help="L2 error under refinement")
    c.add_argument("--refinements", type=int, default=5, help="number of rows")
    b = sub.add_parser("bench", parents=[common], help="build/apply timing vs direct solve")
    b.add_argument("--solves", type=int, default=bench_mod.MIN_REPS)
    b.add_argument("--reduced", action="store_true", help="sweep {4,8,16} instead of {4,...,32}")
    b.add_argument("--sweep-subdomains", default=None, help="comma list overriding the sweep")
    b.add_argument("--sweep-elements", default=None, help="comma list overriding the sweep")
    return ap


def _sweep_list(text: str | None, default) -> tuple[int, ...]:
    if text is None:
        return tuple(default)
    vals = _ints(text, len(text.split(",")), "sweep")
    for v in vals:
        PartitionSpec(v, v, 1, 1)
    return vals


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    err = lambda msg: print(msg, file=sys.stderr)  # noqa: E731
    try:
        cfg = make_config(args)
        if args.memory_budget <= 0:
            raise ConfigurationError("--memory-budget must be positive")
        if args.command == "solve":
            cmd_solve(cfg, args.memory_budget, log=err)
        elif args.command == "verify":
            if not cmd_verify(cfg, empty=args.empty, fault=args.inject, log=print):
                err("verification FAILED")
                return EXIT_VERIFY
        elif args.command == "converge":
            cmd_converge(cfg, args.refinements, log=err)
        elif args.command == "bench":
            default = bench_mod.REDUCED_SWEEP if args.reduced else bench_mod.FULL_SWEEP
            cmd_bench(cfg, _sweep_list(args.sweep_subdomains, default),
                      _sweep_list(args.sweep_elements, default), args.memory_budget, log=err)
    except (ConfigurationError, UsageError) as exc:
        err(f"error: {exc}")
        return EXIT_CONFIG
    except ResourceGuardError as exc:
        err(f"refused: {exc}")
        return EXIT_GUARD
    except HpsError as exc:
        err(f"error: {exc}")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
