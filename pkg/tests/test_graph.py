"""Graph construction and lift-slot layout tests.

The kNN oracle here is a from-scratch exhaustive distance sort, so the edge
sets are cross-checked rather than trusted.  Slot-layout tests pin the
deterministic ordering the lifting and solver modules rely on.
"""

from __future__ import annotations

import numpy as np
import pytest

from eqnrsfm.graph import (
    THETA_PAIRS,
    SimplicialGraph,
    build_e2,
    build_e3,
    build_graph,
    build_lift_maps,
    complete_graph,
)

RNG = np.random.default_rng(7)


def _brute_knn_edges(pts: np.ndarray, k: int) -> set[tuple[int, int]]:
    m = len(pts)
    edges = set()
    for j in range(m):
        d = [(np.sum((pts[j] - pts[q]) ** 2), q) for q in range(m) if q != j]
        d.sort()
        for _, q in d[:k]:
            edges.add((min(j, q), max(j, q)))
    return edges


def test_e2_three_points_complete():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    assert build_e2(pts, 2) == ((0, 1), (0, 2), (1, 2))


def test_e2_collinear_chain_k1():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]])
    edges = build_e2(pts, 1)
    assert edges == tuple(sorted(_brute_knn_edges(pts, 1)))
    # mutual nearest neighbours under lower-index tie-breaking
    assert edges == ((0, 1), (1, 2), (2, 3))


def test_e2_grid_degrees():
    xs, ys = np.meshgrid(np.arange(4.0), np.arange(4.0))
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    edges = build_e2(pts, 4)
    deg = np.zeros(16, dtype=int)
    for j, q in edges:
        deg[j] += 1
        deg[q] += 1
    assert np.all(deg >= 4)
    assert set(edges) == _brute_knn_edges(pts, 4)


def test_e2_matches_bruteforce_random():
    for _ in range(20):
        m = int(RNG.integers(6, 25))
        k = int(RNG.integers(1, min(m - 1, 6)))
        pts = RNG.normal(size=(m, 2))
        assert set(build_e2(pts, k)) == _brute_knn_edges(pts, k)


def test_e2_rejects_duplicate_points():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [2.0, 1.0]])
    with pytest.raises(ValueError, match="duplicate reference points"):
        build_e2(pts, 2)


def test_e2_rejects_bad_k():
    pts = RNG.normal(size=(5, 2))
    with pytest.raises(ValueError):
        build_e2(pts, 0)
    with pytest.raises(ValueError):
        build_e2(pts, 5)


def test_e3_complete_k3_is_one_triangle():
    assert build_e3(((0, 1), (0, 2), (1, 2))) == ((0, 1, 2),)


def test_e3_square_without_chords_has_none():
    assert build_e3(((0, 1), (1, 2), (2, 3), (0, 3))) == ()


def test_e3_complete_k5():
    g = complete_graph(5)
    assert build_e3(g.e2) == g.e3
    assert g.p2 == 10
    assert g.p2_tilde == 10
    assert g.p1 == 10


def test_e3_triangles_are_e2_closed_random():
    for _ in range(10):
        pts = RNG.normal(size=(15, 2))
        e2 = build_e2(pts, 4)
        e2set = set(e2)
        for j, q, r in build_e3(e2):
            assert {(j, q), (j, r), (q, r)} <= e2set
            assert j < q < r


def test_graph_validate_rejects_open_triangle():
    g = SimplicialGraph(m=4, e2=((0, 1), (1, 2)), e3=((0, 1, 2),))
    with pytest.raises(ValueError, match="outside e2"):
        g.validate()


def test_lift_maps_single_triangle_dims():
    g = complete_graph(3)
    maps = build_lift_maps(g)
    assert maps.t_dim == 6
    assert maps.u_dim == 28


def test_lift_maps_no_triangles():
    g = SimplicialGraph(m=4, e2=((0, 1), (1, 2), (2, 3), (0, 3)), e3=())
    maps = build_lift_maps(g)
    assert maps.t_dim == 4
    assert maps.u_dim == 13
    assert maps.edge_slot == {}


def test_lift_maps_omega_sorted_edge_order():
    # m=4, one triangle on the first three vertices: edge slots follow the
    # sorted edge list ((0,1),(0,2),(1,2)) -> (4,5,6)
    g = SimplicialGraph(m=4, e2=((0, 1), (0, 2), (1, 2), (2, 3)), e3=((0, 1, 2),))
    maps = build_lift_maps(g)
    assert maps.omega[(0, 1, 2)] == (4, 5, 6)
    assert maps.edge_slot == {(0, 1): 4, (0, 2): 5, (1, 2): 6}


def test_lift_maps_slot_ranges_and_bijection():
    pts = RNG.normal(size=(20, 2))
    g = build_graph(pts, 4)
    maps = build_lift_maps(g)
    m, pt = g.m, g.p2_tilde
    edge_vals = sorted(maps.edge_slot.values())
    assert edge_vals == list(range(m, m + pt))
    theta_vals = sorted(maps.theta_slot.values())
    assert theta_vals == [1 + 3 * m + 6 * i for i in range(pt)]
    # slot -> edge -> slot round trip
    inv = {v: e for e, v in maps.edge_slot.items()}
    assert all(maps.edge_slot[inv[v]] == v for v in edge_vals)
    for (j, q, r), rows in maps.rho.items():
        assert len(rows) == 18
        assert rows[0:6] == tuple(range(maps.theta_slot[(j, q)], maps.theta_slot[(j, q)] + 6))
        assert rows[6:12] == tuple(range(maps.theta_slot[(q, r)], maps.theta_slot[(q, r)] + 6))
        assert rows[12:18] == tuple(range(maps.theta_slot[(j, r)], maps.theta_slot[(j, r)] + 6))
    assert maps.u_dim == 3 * m + 1 + 6 * pt


def test_theta_pairs_layout():
    # six ordered cross-coordinate products, no same-coordinate pairs
    assert THETA_PAIRS == ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))


def test_build_graph_deterministic():
    pts = RNG.normal(size=(18, 2))
    g1 = build_graph(pts, 3)
    g2 = build_graph(pts, 3)
    assert g1 == g2


def test_build_graph_cap_per_edge():
    pts = RNG.normal(size=(15, 2))
    full = build_graph(pts, 5, triangles="all")
    capped = build_graph(pts, 5, triangles=2)
    assert set(capped.e3) <= set(full.e3)
    count: dict[tuple[int, int], int] = {}
    for j, q, r in capped.e3:
        for e in ((j, q), (j, r), (q, r)):
            count[e] = count.get(e, 0) + 1
    assert max(count.values()) <= 2


def test_build_graph_cap_prefers_large_area():
    # two triangles share edge (0,1); cap=1 keeps the bigger one
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 2.0], [0.5, -0.3]])
    g = build_graph(pts, 3, triangles=1)
    assert (0, 1, 2) in g.e3
    assert (0, 1, 3) not in g.e3


def test_build_graph_adaptive_covers_and_connects():
    pts = RNG.normal(size=(25, 2))
    full = build_graph(pts, 5, triangles="all")
    adaptive = build_graph(pts, 5, triangles="adaptive")
    assert set(adaptive.e3) <= set(full.e3)
    coverable = {v for t in full.e3 for v in t}
    covered = {v for t in adaptive.e3 for v in t}
    assert covered == coverable
    # single connected component over the union of triangle edges
    parent = {v: v for v in covered}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for j, q, r in adaptive.e3:
        parent[find(j)] = find(q)
        parent[find(q)] = find(r)
    assert len({find(v) for v in covered}) == 1
    assert adaptive.p2 <= full.p2


def test_build_graph_drops_degenerate_reference_triangles():
    # three collinear points plus one off-axis: the collinear triangle on
    # (0,1,2) has zero reference area and must not enter e3
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [1.0, 0.8]])
    g = build_graph(pts, 3, triangles="all")
    assert (0, 1, 2) not in g.e3
