import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hps_q1.errors import ConfigurationError
from hps_q1.geometry import (Domain, PartitionSpec, boundary_maps, build_grid, interface_sets,
                             local_nodes)


def grid(nx=2, ny=2, mx=2, my=2, dom=None):
    return build_grid(dom or Domain(), PartitionSpec(nx, ny, mx, my))


def test_smallest_grid():
    g = grid(1, 1, 1, 1)
    assert g.n_nodes == 4
    m = g.subdomains[0].maps
    assert len(m.iota_int) == 0
    assert len(m.iota_C) == 4
    for side in "LRTB":
        assert len(m.edge(side)) == 0


def test_node_count_2x2_of_2x2():
    assert grid().n_nodes == 25


@pytest.mark.parametrize("spec", [(3, 2, 1, 1), (2, 6, 1, 1), (0, 1, 1, 1), (2, 2, 0, 1), (2, 2, 1, 0)])
def test_partition_rejected(spec):
    with pytest.raises(ConfigurationError):
        PartitionSpec(*spec)


def test_partition_accepts_one_row():
    g = grid(2, 1, 2, 2, Domain(0, 2, 0, 1))
    assert g.shape == (4, 2)


def test_degenerate_domain():
    with pytest.raises(ConfigurationError):
        Domain(0, 0, 0, 1)


def test_local_nodes():
    sub = grid(1, 1, 1, 1).subdomains[0]
    assert sorted(map(tuple, local_nodes(sub))) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    sub = grid(1, 1, 2, 2).subdomains[0]
    pts = local_nodes(sub)
    assert len(pts) == 9
    assert set(np.unique(pts)) == {0.0, 0.5, 1.0}


def test_spacing():
    sub = grid(1, 1, 2, 4, Domain(0, 1, 0, 2)).subdomains[0]
    assert sub.spacing == (0.5, 0.5)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9))
def test_boundary_maps_partition(mx, my):
    m = boundary_maps(mx, my)
    allk = np.concatenate([m.iota_int, m.iota_bdry])
    assert np.array_equal(np.sort(allk), np.arange((mx + 1) * (my + 1)))
    assert len(m.iota_int) == (mx - 1) * (my - 1)


def test_boundary_order_is_x_then_y():
    sub = grid(1, 1, 3, 3).subdomains[0]
    xy = local_nodes(sub)
    for name in ("iota_int", "iota_L", "iota_R", "iota_T", "iota_B", "iota_C"):
        pts = xy[getattr(sub.maps, name)]
        assert np.array_equal(np.lexsort((pts[:, 1], pts[:, 0])), np.arange(len(pts)))


def test_local_to_global_coordinates():
    g = grid(4, 2, 3, 2, Domain(-1, 2, 0.5, 1.5))
    for sub in g.subdomains:
        ids = g.local_to_global(sub)
        assert np.array_equal(g.coords(ids), local_nodes(sub))


def test_subdomains_row_major():
    g = grid(4, 2, 1, 1)
    for sub in g.subdomains:
        row, col = sub.grid_pos
        assert sub.id == row * 4 + col
        assert g.subdomain_at(row, col) is sub


def test_interface_sets():
    g = grid(2, 2, 4, 3)
    a, b = g.subdomain_at(0, 0), g.subdomain_at(0, 1)
    ia, ib = interface_sets(g, a, b)
    assert len(ia) == 2  # 4 rows of nodes minus the two corners
    assert np.array_equal(g.local_to_global(a, ia), g.local_to_global(b, ib))
    top = g.subdomain_at(1, 0)
    ia, ib = interface_sets(g, a, top)
    assert len(ia) == 3
    assert interface_sets(g, a, g.subdomain_at(1, 1)) is None


def test_interface_2x2_elements_vertical():
    g = grid(1, 2, 2, 2)
    ia, ib = interface_sets(g, *g.subdomains)
    assert len(ia) == len(ib) == 1


def test_skeleton_ids():
    g = grid(2, 2, 2, 2)
    # every node except the four leaf centres
    assert len(g.skeleton_ids()) == 21
    assert set(g.boundary_ids()) <= set(g.skeleton_ids())
    assert len(g.boundary_ids()) == 16


def test_shared_coordinates_bit_identical():
    g = grid(4, 4, 3, 3, Domain(0, 0.7, 0, 0.3))
    a, b = g.subdomain_at(1, 1), g.subdomain_at(1, 2)
    assert a.x[-1] == b.x[0]
    assert g.xs[-1] == 0.7 and g.ys[-1] == 0.3
