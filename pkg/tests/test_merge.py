import numpy as np
import pytest

from _oracles import rel, reorder, union_operator
from hps_q1.errors import UsageError
from hps_q1.fem_q1 import assemble_leaf
from hps_q1.fields import parse_preset
from hps_q1.geometry import Domain, PartitionSpec, build_grid
from hps_q1.leaf import condense
from hps_q1.merge import (expand_corner, merge_corner, merge_pair, plan_merge, solve_corner,
                          solve_interface)
from hps_q1.oracle import oracle_solve

ZERO = lambda x, y: 0.0 * x  # noqa: E731


def _leaves(grid, f):
    out = []
    for s in grid.subdomains:
        op = condense(assemble_leaf(s, s.maps, f))
        out.append((op.S, op.h, grid.local_to_global(s, s.maps.iota_bdry)))
    return out


def _hmerge(grid, ops, a, b):
    (S1, h1, e1), (S2, h2, e2) = ops[a], ops[b]
    sa = grid.subdomains[a]
    I_line = sa.origin[0] + sa.nelem[0]
    J = np.arange(sa.origin[1] + 1, sa.origin[1] + sa.nelem[1])
    plan = plan_merge(e1, e2, grid.node_id(I_line, J))
    return merge_pair((S1, h1), (S2, h2), plan)


def _quad(m=2, f=ZERO, dom=None):
    """Two horizontal merges then the vertical pair merge of a 2x2 quad."""
    grid = build_grid(dom or Domain(), PartitionSpec(2, 2, m, m))
    ops = _leaves(grid, f)
    bottom = _hmerge(grid, ops, 0, 1)
    top = _hmerge(grid, ops, 2, 3)
    c = int(grid.node_id(m, m))
    I = np.array([i for i in range(1, 2 * m) if i != m])
    plan = plan_merge(bottom.ext, top.ext, grid.node_id(I, m), corner=c)
    node = merge_pair((bottom.S, bottom.h), (top.S, top.h), plan)
    return grid, bottom, top, node, c


def test_empty_interface_concatenates():
    grid = build_grid(Domain(0, 2, 0, 1), PartitionSpec(2, 1, 1, 1))
    ops = _leaves(grid, ZERO)
    node = _hmerge(grid, ops, 0, 1)
    assert node.n_iface == 0
    S_ref, h_ref, ids = union_operator(grid, 0, 2, 0, 1, ZERO)
    S, h = reorder(node.S, node.h, node.ext, ids)
    assert rel(S, S_ref) <= 1e-14


@pytest.mark.parametrize("preset", ["zero", "random-poly:5"])
def test_horizontal_matches_union(preset):
    f = parse_preset(preset).load
    grid = build_grid(Domain(), PartitionSpec(2, 1, 2, 2))
    node = _hmerge(grid, _leaves(grid, f), 0, 1)
    S_ref, h_ref, ids = union_operator(grid, 0, 2, 0, 1, f)
    S, h = reorder(node.S, node.h, node.ext, ids)
    assert rel(S, S_ref) <= 1e-12
    if preset != "zero":
        assert rel(h, h_ref) <= 1e-12


def test_corner_duplicated_until_corner_merge():
    grid, bottom, top, node, c = _quad(3)
    assert np.count_nonzero(node.plan.parent_ext == c) == 2
    done = merge_corner(node, c)
    assert np.count_nonzero(done.ext == c) == 0
    # the other shared nodes (outer ends of the interface line) were subassembled
    assert len(np.unique(done.ext)) == len(done.ext)


@pytest.mark.parametrize("m,preset", [(2, "random-poly:2"), (4, "random-poly:9"), (3, "sinsin")])
def test_corner_merge_matches_union(m, preset):
    f = parse_preset(preset).load
    grid, _, _, node, c = _quad(m, f, Domain(0, 2, 0, 1))
    done = merge_corner(node, c)
    S_ref, h_ref, ids = union_operator(grid, 0, 2, 0, 2, f)
    S, h = reorder(done.S, done.h, done.ext, ids)
    assert rel(S, S_ref) <= 1e-12
    assert rel(h, h_ref) <= 1e-12


def test_merged_invariants():
    _, _, _, node, c = _quad(4, parse_preset("random-poly:1").load)
    for S in (node.S, merge_corner(node, c).S):
        assert np.linalg.norm(S - S.T, np.inf) <= 1e-12 * np.linalg.norm(S, np.inf)
        assert np.linalg.norm(S.sum(axis=1), np.inf) <= 1e-11 * np.linalg.norm(S, np.inf)


def test_flux_balance_on_interface():
    # children's residuals r = S u + h cancel on the eliminated interface
    f = parse_preset("random-poly:4").load
    grid = build_grid(Domain(), PartitionSpec(2, 1, 3, 3))
    ops = _leaves(grid, f)
    node = _hmerge(grid, ops, 0, 1)
    uV = np.random.default_rng(1).normal(size=node.plan.n_parent)
    uI = solve_interface(node, uV)
    u = dict(zip(node.plan.parent_ext.tolist(), uV))
    u.update(zip(node.plan.iface.tolist(), uI))
    r = 0.0
    for S, h, e in ops[:2]:
        ue = np.array([u[int(g)] for g in e])
        re = S @ ue + h
        pos = {int(g): k for k, g in enumerate(e)}
        r = r + re[[pos[int(g)] for g in node.plan.iface]]
    assert np.abs(r).max() <= 1e-12 * max(1.0, np.abs(uV).max() * np.abs(node.S).max())


def test_interface_constant_and_linear():
    grid = build_grid(Domain(), PartitionSpec(2, 1, 3, 2))
    node = _hmerge(grid, _leaves(grid, ZERO), 0, 1)
    uI = solve_interface(node, np.full(node.plan.n_parent, -1.25))
    assert np.allclose(uI, -1.25, rtol=0, atol=1e-12)
    lin = lambda ids: (lambda p: 1 + p[:, 0] - 2 * p[:, 1])(grid.coords(ids))  # noqa: E731
    uI = solve_interface(node, lin(node.plan.parent_ext))
    assert np.abs(uI - lin(node.plan.iface)).max() <= 1e-12


def test_interface_matches_oracle():
    p = parse_preset("sinsin")
    grid = build_grid(Domain(), PartitionSpec(2, 1, 4, 4))
    node = _hmerge(grid, _leaves(grid, p.load), 0, 1)
    ref = oracle_solve(grid, p.load, p.trace)
    uI = solve_interface(node, ref[node.plan.parent_ext])
    assert np.abs(uI - ref[node.plan.iface]).max() <= 1e-11


def test_corner_value_constant_and_oracle():
    grid, _, _, node, c = _quad(2)
    done = merge_corner(node, c)
    assert solve_corner(done, np.full(len(done.ext), 0.5)) == pytest.approx(0.5, abs=1e-13)

    p = parse_preset("sinsin")
    grid, _, _, node, c = _quad(2, p.load)
    done = merge_corner(node, c)
    ref = oracle_solve(grid, p.load, p.trace)
    uc = solve_corner(done, ref[done.ext])
    assert grid.coords([c])[0].tolist() == [0.5, 0.5]
    assert abs(uc - ref[c]) <= 1e-11
    uV = expand_corner(done, ref[done.ext], uc)
    uI = solve_interface(done, uV)
    assert np.abs(uI - ref[done.plan.iface]).max() <= 1e-11


def test_plan_errors():
    with pytest.raises(UsageError):
        plan_merge([1, 2, 3], [3, 4], [5])
    with pytest.raises(UsageError):
        plan_merge([1, 2, 3], [3, 4], [3], corner=3)
    with pytest.raises(UsageError):
        plan_merge([1, 1, 3], [3, 4], [3])
    _, _, _, node, c = _quad(2)
    with pytest.raises(UsageError):
        merge_corner(node, c + 1)
    with pytest.raises(UsageError):
        merge_corner(merge_corner(node, c))
