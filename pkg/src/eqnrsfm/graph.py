"""Simplicial structure on the reference image and lifted-monomial index maps.

The reconstruction programs constrain depths (or points) along the 1-simplices
``e2`` and triangle areas along the 2-simplices ``e3``.  ``e2`` is a symmetric
k-nearest-neighbour graph on the first image's normalized points; ``e3``
collects triangles whose three edges all lie in ``e2``.

The quartic area constraints act on rank-1 lifts of the depth/point vectors:

* ``T`` lift — monomial vector (d_1, ..., d_m, ..., d_j*d_q, ...) with one
  tail slot per unique edge of ``e3``; the Gram matrix has side m + p2_tilde.
* ``U`` lift — monomial vector (1, P_1, ..., P_m, ..., theta(j,q), ...) where
  each theta block holds the six cross-coordinate products
  (Xj*Yq, Xj*Zq, Yj*Xq, Yj*Zq, Zj*Xq, Zj*Yq); side 3m + 1 + 6*p2_tilde.

:func:`build_lift_maps` pins the deterministic slot layout (depths first,
then one slot/block per unique edge in sorted-edge order) that the lifting
and solver modules rely on.  All indices in this package are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .config import DEFAULT_TOL

# ordered coordinate pairs (row of the first point, row of the second) for one
# theta block: Xj*Yq, Xj*Zq, Yj*Xq, Yj*Zq, Zj*Xq, Zj*Yq
THETA_PAIRS: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1))


@dataclass(frozen=True)
class SimplicialGraph:
    """Vertices [0, m), 1-simplices ``e2`` (j<q), 2-simplices ``e3`` (j<q<r)."""

    m: int
    e2: tuple[tuple[int, int], ...]
    e3: tuple[tuple[int, int, int], ...]

    @property
    def p1(self) -> int:
        return len(self.e2)

    @property
    def p2(self) -> int:
        return len(self.e3)

    @property
    def p2_tilde(self) -> int:
        return len(self.unique_e3_edges())

    def unique_e3_edges(self) -> tuple[tuple[int, int], ...]:
        """Unique edges of the 2-simplices, sorted; these get lift slots."""
        edges = set()
        for j, q, r in self.e3:
            edges.update([(j, q), (j, r), (q, r)])
        return tuple(sorted(edges))

    def validate(self) -> None:
        e2set = set(self.e2)
        if len(e2set) != len(self.e2):
            raise ValueError("duplicate 1-simplices")
        for j, q in self.e2:
            if not (0 <= j < q < self.m):
                raise ValueError(f"bad 1-simplex ({j},{q}) for m={self.m}")
        if len(set(self.e3)) != len(self.e3):
            raise ValueError("duplicate 2-simplices")
        for j, q, r in self.e3:
            if not (0 <= j < q < r < self.m):
                raise ValueError(f"bad 2-simplex ({j},{q},{r}) for m={self.m}")
            for edge in ((j, q), (j, r), (q, r)):
                if edge not in e2set:
                    raise ValueError(f"2-simplex ({j},{q},{r}) has edge {edge} outside e2")
        assert self.p2_tilde <= 3 * self.p2 and self.p2_tilde <= self.p1


def build_e2(reference_points: np.ndarray, k: int) -> tuple[tuple[int, int], ...]:
    """Symmetric kNN graph on the reference points, deduplicated, j<q.

    Distances are Euclidean in the given coordinates (2D normalized image
    coordinates in the pipeline).  Ties break toward the lower vertex index.
    Coincident points make nearest-neighbour ranks ill-defined and are
    rejected.
    """
    pts = np.asarray(reference_points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise ValueError(f"reference points must be (m, 2) or (m, 3), got {pts.shape}")
    m = pts.shape[0]
    if k < 1:
        raise ValueError(f"neighbor count must be >= 1, got {k}")
    if m <= k:
        raise ValueError(f"need more points than neighbors: m={m}, k={k}")

    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    off = ~np.eye(m, dtype=bool)
    if np.any(d2[off] < DEFAULT_TOL.duplicate_points**2):
        a, b = np.argwhere((d2 < DEFAULT_TOL.duplicate_points**2) & off)[0]
        raise ValueError(f"duplicate reference points {a} and {b} (kNN ties degenerate)")

    np.fill_diagonal(d2, np.inf)
    edges: set[tuple[int, int]] = set()
    idx = np.arange(m)
    for j in range(m):
        order = np.lexsort((idx, d2[j]))[:k]
        for q in order:
            edges.add((min(j, int(q)), max(j, int(q))))
    return tuple(sorted(edges))


def build_e3(e2: tuple[tuple[int, int], ...]) -> tuple[tuple[int, int, int], ...]:
    """All triangles (j<q<r) whose three edges lie in ``e2``."""
    e2set = set(e2)
    adj: dict[int, set[int]] = {}
    for j, q in e2:
        adj.setdefault(j, set()).add(q)
        adj.setdefault(q, set()).add(j)
    triangles = []
    for j, q in e2:
        for r in sorted(adj[j] & adj[q]):
            if r > q and (j, r) in e2set and (q, r) in e2set:
                triangles.append((j, q, r))
    return tuple(sorted(triangles))


def _triangle_areas(points: np.ndarray, triangles) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape[1] == 2:
        pts = np.concatenate([pts, np.zeros((pts.shape[0], 1))], axis=1)
    from .geometry import area_sq

    tri = np.asarray(triangles, dtype=int)
    return area_sq(pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]])


def _cap_per_edge(
    triangles: tuple[tuple[int, int, int], ...],
    areas: np.ndarray,
    cap: int,
) -> tuple[tuple[int, int, int], ...]:
    """Greedy largest-area-first selection keeping <= cap triangles per edge."""
    order = np.argsort(-areas, kind="stable")
    count: dict[tuple[int, int], int] = {}
    kept = []
    for t in order:
        j, q, r = triangles[t]
        edges = ((j, q), (j, r), (q, r))
        if all(count.get(e, 0) < cap for e in edges):
            kept.append((j, q, r))
            for e in edges:
                count[e] = count.get(e, 0) + 1
    return tuple(sorted(kept))


def _adaptive_select(
    m: int,
    triangles: tuple[tuple[int, int, int], ...],
    areas: np.ndarray,
) -> tuple[tuple[int, int, int], ...]:
    """Grow e3 largest-area-first until the selected triangles cover every
    coverable vertex and their edge-union graph has a single component."""
    order = np.argsort(-areas, kind="stable")
    coverable = set()
    for j, q, r in triangles:
        coverable.update((j, q, r))

    parent = list(range(m))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a: int, b: int) -> bool:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
        return True

    kept = []
    covered: set[int] = set()
    for t in order:
        j, q, r = triangles[t]
        new_vertex = not {j, q, r} <= covered
        merged = union(j, q) | union(q, r) | union(j, r)
        if new_vertex or merged:
            kept.append((j, q, r))
            covered.update((j, q, r))
        if covered == coverable and len({find(v) for v in covered}) <= 1:
            break
    return tuple(sorted(kept))


def build_graph(
    reference_points: np.ndarray,
    k: int,
    triangles: str | int = "all",
    area_floor: float = 1e-12,
) -> SimplicialGraph:
    """Build the full simplicial structure from the reference image.

    ``triangles`` selects the 2-simplex strategy: ``"all"`` keeps every
    e2-closed triangle, an integer caps triangles per edge (largest
    reference-image area first), and ``"adaptive"`` grows the largest-area
    triangles until vertex coverage and connectivity are reached.  Triangles
    degenerate in the reference image (area below ``area_floor``) are dropped.
    """
    pts = np.asarray(reference_points, dtype=float)
    e2 = build_e2(pts, k)
    e3 = build_e3(e2)
    if e3:
        areas = _triangle_areas(pts, e3)
        keep = areas > area_floor
        e3 = tuple(t for t, ok in zip(e3, keep) if ok)
        areas = areas[keep]
    if e3 and triangles != "all":
        if triangles == "adaptive":
            e3 = _adaptive_select(pts.shape[0], e3, areas)
        elif isinstance(triangles, int) and triangles >= 1:
            e3 = _cap_per_edge(e3, areas, triangles)
        else:
            raise ValueError(f"triangles must be 'all', 'adaptive', or a positive int, got {triangles!r}")
    graph = SimplicialGraph(m=pts.shape[0], e2=e2, e3=e3)
    graph.validate()
    return graph


@dataclass(frozen=True)
class LiftIndexMaps:
    """Slot layout of the T and U lifted Gram matrices for one graph.

    * depth slot of point j in T: j
    * edge slot of (j,q) in T: ``edge_slot[(j,q)]`` in [m, m + p2_tilde)
    * constant slot in U: 0; coordinate slot of (point j, coord c): 1 + 3j + c
    * theta block of (j,q) in U: six rows starting at ``theta_slot[(j,q)]``,
      ordered as :data:`THETA_PAIRS`
    """

    m: int
    t_dim: int
    u_dim: int
    edge_slot: dict[tuple[int, int], int] = field(repr=False)
    theta_slot: dict[tuple[int, int], int] = field(repr=False)
    omega: dict[tuple[int, int, int], tuple[int, int, int]] = field(repr=False)
    rho: dict[tuple[int, int, int], tuple[int, ...]] = field(repr=False)

    def point_slot(self, j: int, coord: int) -> int:
        """Row of coordinate ``coord`` of point ``j`` in the U lift."""
        return 1 + 3 * j + coord


def build_lift_maps(graph: SimplicialGraph) -> LiftIndexMaps:
    """Deterministic monomial slot assignment for the T and U lifts.

    ``omega[(j,q,r)]`` returns the three edge slots in sorted-edge order
    ((j,q), (j,r), (q,r)); ``rho[(j,q,r)]`` returns the 18 theta rows in the
    order (theta(j,q), theta(q,r), theta(j,r)) — the order the 18x18 area
    blocks of the accelerated program are written in.
    """
    graph.validate()
    m = graph.m
    edges = graph.unique_e3_edges()
    edge_slot = {e: m + i for i, e in enumerate(edges)}
    theta_slot = {e: 1 + 3 * m + 6 * i for i, e in enumerate(edges)}

    omega = {}
    rho = {}
    for j, q, r in graph.e3:
        omega[(j, q, r)] = (edge_slot[(j, q)], edge_slot[(j, r)], edge_slot[(q, r)])
        rows = []
        for e in ((j, q), (q, r), (j, r)):
            base = theta_slot[e]
            rows.extend(range(base, base + 6))
        rho[(j, q, r)] = tuple(rows)

    return LiftIndexMaps(
        m=m,
        t_dim=m + len(edges),
        u_dim=3 * m + 1 + 6 * len(edges),
        edge_slot=edge_slot,
        theta_slot=theta_slot,
        omega=omega,
        rho=rho,
    )


def complete_graph(m: int) -> SimplicialGraph:
    """Complete graph with all triangles; handy for small exact tests."""
    e2 = tuple(combinations(range(m), 2))
    e3 = tuple(combinations(range(m), 3))
    graph = SimplicialGraph(m=m, e2=e2, e3=e3)
    graph.validate()
    return graph
