import numpy as np
import pytest

from _oracles import dense_schur
from hps_q1.errors import UsageError
from hps_q1.fem_q1 import assemble_leaf
from hps_q1.fields import parse_preset
from hps_q1.geometry import Domain, PartitionSpec, build_grid, local_nodes
from hps_q1.leaf import condense, reconstruct_interior
from hps_q1.oracle import oracle_solve

ZERO = lambda x, y: 0.0 * x  # noqa: E731


def _sub(mx, my, dom=None):
    g = build_grid(dom or Domain(), PartitionSpec(1, 1, mx, my))
    return g, g.subdomains[0]


def test_1x1_leaf_is_element():
    _, sub = _sub(1, 1)
    f = parse_preset("random-poly:3").load
    sys = assemble_leaf(sub, sub.maps, f)
    op = condense(sys)
    assert np.array_equal(op.S, sys.D)
    assert np.array_equal(op.h, -sys.f_bdry)


def test_constant_kernel_2x2():
    _, sub = _sub(2, 2)
    op = condense(assemble_leaf(sub, sub.maps, ZERO))
    assert np.abs(op.S @ np.ones(op.n_bdry)).max() <= 1e-13


@pytest.mark.parametrize("mx,my", [(4, 4), (3, 5), (8, 2)])
def test_matches_dense_schur_oracle(mx, my):
    _, sub = _sub(mx, my, Domain(0, 1.5, -0.5, 0.5))
    f = parse_preset("random-poly:7").load
    sys = assemble_leaf(sub, sub.maps, f)
    op = condense(sys)
    S_ref, h_ref = dense_schur(sub, sub.maps, sys.f_int, sys.f_bdry)
    assert np.linalg.norm(op.S - S_ref) <= 1e-12 * np.linalg.norm(S_ref)
    assert np.linalg.norm(op.h - h_ref) <= 1e-12 * np.linalg.norm(h_ref)
    assert np.array_equal(op.S, op.S.T)


def test_reconstruct_constant():
    _, sub = _sub(3, 3)
    op = condense(assemble_leaf(sub, sub.maps, ZERO))
    u = reconstruct_interior(op, np.full(op.n_bdry, 2.75))
    assert np.allclose(u, 2.75, rtol=0, atol=1e-13)


def test_reconstruct_linear_patch():
    _, sub = _sub(4, 3)
    op = condense(assemble_leaf(sub, sub.maps, ZERO))
    xy = local_nodes(sub)
    lin = lambda p: 0.5 - 2 * p[:, 0] + 3 * p[:, 1]  # noqa: E731
    u = reconstruct_interior(op, lin(xy[sub.maps.iota_bdry]))
    assert np.abs(u - lin(xy[sub.maps.iota_int])).max() <= 1e-12


def test_reconstruct_matches_leaf_oracle():
    g, sub = _sub(6, 6)
    p = parse_preset("sinsin")
    op = condense(assemble_leaf(sub, sub.maps, p.load))
    u = reconstruct_interior(op, np.zeros(op.n_bdry))
    ref = oracle_solve(g, p.load, ZERO)
    ids = g.local_to_global(sub, sub.maps.iota_int)
    assert np.abs(u - ref[ids]).max() <= 1e-12 * np.abs(ref).max()


def test_load_flux_reuses_factor():
    _, sub = _sub(4, 4)
    a = condense(assemble_leaf(sub, sub.maps, parse_preset("random-poly:1").load))
    sys_b = assemble_leaf(sub, sub.maps, parse_preset("random-poly:2").load)
    b = condense(sys_b)
    assert np.allclose(a.load_flux(sys_b.f_int, sys_b.f_bdry), b.h, rtol=1e-14, atol=1e-15)


def test_reconstruct_bad_length():
    _, sub = _sub(2, 2)
    op = condense(assemble_leaf(sub, sub.maps, ZERO))
    with pytest.raises(UsageError):
        reconstruct_interior(op, np.zeros(3))
