"""Gram-matrix parameterizations and the linear functionals over their entries.

Every cost and constraint of the reconstruction programs is affine in the
entries of a handful of PSD matrix variables:

* ``DGM``      — depth Gram matrix R = D D^T, side m;
* ``PGM_AUG``  — augmented point Gram matrix S' = (1, P^T; P, S), side 3m+1;
* ``T_LIFT``   — Gram of (d_1..d_m, d_j*d_q, ...), side m + p2_tilde;
* ``U_LIFT``   — Gram of (1, P_1..P_m, theta blocks), side 3m+1 + 6*p2_tilde;
* ``V_AUX``    — diagonal surrogate for the theta-square monomials, side
  6*p2_tilde (accelerated variant).

A :class:`LinearFunctional` stores upper-triangular entries once; an
off-diagonal coefficient already contains any doubling implied by matrix
symmetry, so ``evaluate`` reads each stored entry exactly once.  The master
property test evaluates every functional on exact rank-1 lifts of known
configurations and compares against the geometric oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import AreaQuarticCoeffs
from .graph import THETA_PAIRS, LiftIndexMaps, SimplicialGraph

GRAM_KINDS = ("DGM", "PGM_AUG", "T_LIFT", "U_LIFT", "V_AUX")


@dataclass(frozen=True)
class GramLayout:
    """A PSD matrix variable: its kind, side length, and slot maps."""

    kind: str
    dim: int
    maps: LiftIndexMaps | None = None

    def __post_init__(self) -> None:
        if self.kind not in GRAM_KINDS:
            raise ValueError(f"unknown Gram kind {self.kind!r}")
        if self.maps is not None:
            m, pt = self.maps.m, len(self.maps.edge_slot)
            expected = {
                "DGM": m,
                "PGM_AUG": 3 * m + 1,
                "T_LIFT": m + pt,
                "U_LIFT": 3 * m + 1 + 6 * pt,
                "V_AUX": 6 * pt,
            }[self.kind]
            if self.dim != expected:
                raise ValueError(f"{self.kind} dim {self.dim} != expected {expected}")

    @classmethod
    def for_kind(cls, kind: str, maps: LiftIndexMaps) -> "GramLayout":
        m, pt = maps.m, len(maps.edge_slot)
        dim = {
            "DGM": m,
            "PGM_AUG": 3 * m + 1,
            "T_LIFT": m + pt,
            "U_LIFT": 3 * m + 1 + 6 * pt,
            "V_AUX": 6 * pt,
        }[kind]
        return cls(kind=kind, dim=dim, maps=maps)


@dataclass
class LinearFunctional:
    """Affine functional sum(coeff * M[r, c]) + constant over one matrix block.

    Entries are stored with row <= col and deduplicated; evaluating reads each
    stored entry once (coefficients on off-diagonals therefore carry the
    symmetry factor whenever the underlying formula sums both (r,c) and (c,r)).
    """

    block_id: str
    entries: list[tuple[int, int, float]] = field(default_factory=list)
    constant: float = 0.0

    def add(self, row: int, col: int, coeff: float) -> "LinearFunctional":
        if row > col:
            row, col = col, row
        self.entries.append((row, col, float(coeff)))
        return self

    def merged(self) -> "LinearFunctional":
        """Return a copy with duplicate (row, col) entries summed and sorted."""
        acc: dict[tuple[int, int], float] = {}
        for r, c, v in self.entries:
            acc[(r, c)] = acc.get((r, c), 0.0) + v
        entries = [(r, c, v) for (r, c), v in sorted(acc.items()) if v != 0.0]
        return LinearFunctional(self.block_id, entries, self.constant)

    def evaluate(self, M: np.ndarray) -> float:
        total = self.constant
        for r, c, v in self.entries:
            total += v * M[r, c]
        return total

    def scaled(self, alpha: float) -> "LinearFunctional":
        return LinearFunctional(
            self.block_id,
            [(r, c, alpha * v) for r, c, v in self.entries],
            alpha * self.constant,
        )


def _pgm_row(j: int, coord: int) -> int:
    """Row of coordinate ``coord`` of point ``j`` in the augmented point Gram."""
    return 1 + 3 * j + coord


# ---------------------------------------------------------------------------
# isometry (distance) functionals
# ---------------------------------------------------------------------------


def g_I_dsl(j: int, q: int, dot_jq: float, block: str = "dgm") -> LinearFunctional:
    """Squared distance between depth-parameterized points:
    R_jj + R_qq - 2 <d_j, d_q> R_jq."""
    if j == q:
        raise ValueError("distance functional needs two distinct points")
    f = LinearFunctional(block)
    f.add(j, j, 1.0)
    f.add(q, q, 1.0)
    f.add(j, q, -2.0 * dot_jq)
    return f.merged()


def g_I_pp(j: int, q: int, block: str = "pgm") -> LinearFunctional:
    """Squared distance ||P_j - P_q||^2 on the augmented point Gram."""
    if j == q:
        raise ValueError("distance functional needs two distinct points")
    f = LinearFunctional(block)
    for c in range(3):
        a, b = _pgm_row(j, c), _pgm_row(q, c)
        f.add(a, a, 1.0)
        f.add(b, b, 1.0)
        f.add(a, b, -2.0)
    return f.merged()


# ---------------------------------------------------------------------------
# reprojection and maximum-depth functionals
# ---------------------------------------------------------------------------


def f_reproj(j: int, d: np.ndarray, block: str = "pgm") -> LinearFunctional:
    """Squared reprojection offset ||P_j x d||^2 for a unit sightline d."""
    x, y, z = (float(v) for v in np.asarray(d, dtype=float))
    rx, ry, rz = _pgm_row(j, 0), _pgm_row(j, 1), _pgm_row(j, 2)
    f = LinearFunctional(block)
    f.add(rx, rx, y * y + z * z)
    f.add(ry, ry, x * x + z * z)
    f.add(rz, rz, x * x + y * y)
    f.add(rx, ry, -2.0 * x * y)
    f.add(rx, rz, -2.0 * x * z)
    f.add(ry, rz, -2.0 * y * z)
    return f.merged()


def f_mdh_pp(j: int, d: np.ndarray, block: str = "pgm") -> LinearFunctional:
    """Depth surrogate <P_j, d> read off the augmented first row."""
    f = LinearFunctional(block)
    for c in range(3):
        f.add(0, _pgm_row(j, c), float(d[c]))
    return f.merged()


def f_mdh_completion(
    j: int,
    pseudo_neighbors: list[int],
    sightlines: np.ndarray,
    block: str = "pgm",
    is_visible: bool = False,
) -> LinearFunctional:
    """Depth surrogate for an invisible point: sum over pseudo-neighbours l of
    <P_j, d_l>, i.e. hallucinated correspondences along the neighbours'
    sightlines in the same image."""
    if is_visible:
        raise ValueError(f"point {j} is visible; completion surrogate not applicable")
    if not pseudo_neighbors:
        raise ValueError("need at least one pseudo-neighbour")
    f = LinearFunctional(block)
    for l in pseudo_neighbors:
        d = sightlines[l]
        for c in range(3):
            f.add(0, _pgm_row(j, c), float(d[c]))
    return f.merged()


# ---------------------------------------------------------------------------
# area functionals
# ---------------------------------------------------------------------------


def g_E_dsl(
    j: int,
    q: int,
    r: int,
    coeffs: AreaQuarticCoeffs,
    maps: LiftIndexMaps,
    block: str = "t",
) -> LinearFunctional:
    """Squared area of 2-simplex (j,q,r) as 1/4 (G1..G6) . (T entries).

    The depth quartic factors through the lifted products: with a1, b1, c1 the
    slots of d_j*d_q, d_q*d_r, d_j*d_r,

        T[a1,a1] = dj^2 dq^2, T[a1,c1] = dj^2 dq dr, T[c1,c1] = dj^2 dr^2,
        T[a1,b1] = dj dq^2 dr, T[b1,c1] = dj dq dr^2, T[b1,b1] = dq^2 dr^2.
    """
    try:
        a1 = maps.edge_slot[(j, q)]
        b1 = maps.edge_slot[(q, r)]
        c1 = maps.edge_slot[(j, r)]
    except KeyError as exc:
        raise ValueError(f"2-simplex ({j},{q},{r}) has no lift slot for edge {exc}") from exc
    f = LinearFunctional(block)
    f.add(a1, a1, 0.25 * float(coeffs.g1))
    f.add(a1, c1, 0.25 * float(coeffs.g2))
    f.add(c1, c1, 0.25 * float(coeffs.g3))
    f.add(a1, b1, 0.25 * float(coeffs.g4))
    f.add(b1, c1, 0.25 * float(coeffs.g5))
    f.add(b1, b1, 0.25 * float(coeffs.g6))
    return f.merged()


def _area_pp_terms(j: int, q: int, r: int) -> list[tuple[tuple[int, int, int], tuple[int, int, int], float]]:
    """Quartic terms of the squared area over theta monomials.

    The doubled area vector is n = Pq x Pr + Pj x Pq + Pr x Pj; each cross
    component is a signed sum of six theta monomials (cross-coordinate
    products of two different points).  Squaring and collecting unordered
    monomial pairs yields the 63-term table; keys are (point_a, point_b,
    theta_index) with point_a < point_b.
    """
    comps = [(1, 2), (2, 0), (0, 1)]  # (A x B)_c = A_c1 B_c2 - A_c2 B_c1
    edges = [(q, r), (j, q), (r, j)]
    pair_index = {p: i for i, p in enumerate(THETA_PAIRS)}

    def monomial(a: int, b: int, ca: int, cb: int) -> tuple[int, int, int]:
        # P_a[ca] * P_b[cb] keyed on the sorted point pair
        if a < b:
            return (a, b, pair_index[(ca, cb)])
        return (b, a, pair_index[(cb, ca)])

    acc: dict[tuple[tuple[int, int, int], tuple[int, int, int]], float] = {}
    for c1, c2 in comps:
        terms: list[tuple[tuple[int, int, int], float]] = []
        for a, b in edges:
            terms.append((monomial(a, b, c1, c2), 1.0))
            terms.append((monomial(a, b, c2, c1), -1.0))
        for s, (ms, vs) in enumerate(terms):
            for mt, vt in terms[s:]:
                key = (min(ms, mt), max(ms, mt))
                w = vs * vt if ms == mt else 2.0 * vs * vt
                acc[key] = acc.get(key, 0.0) + w
    return [(ka, kb, 0.25 * v) for (ka, kb), v in sorted(acc.items())]


def g_E_pp(
    j: int, q: int, r: int, maps: LiftIndexMaps, block: str = "u"
) -> LinearFunctional:
    """Squared area of 2-simplex (j,q,r) over theta-block entries of U."""
    f = LinearFunctional(block)
    for (pa, pb, ka), (pc, pd, kb), v in _area_pp_terms(j, q, r):
        try:
            ra = maps.theta_slot[(pa, pb)] + ka
            rb = maps.theta_slot[(pc, pd)] + kb
        except KeyError as exc:
            raise ValueError(f"2-simplex ({j},{q},{r}) has no theta block for edge {exc}") from exc
        f.add(ra, rb, v)
    out = f.merged()
    assert len(out.entries) == 63, f"area functional must have 63 terms, got {len(out.entries)}"
    return out


def g_E_pp_local(j: int, q: int, r: int, maps: LiftIndexMaps, block: str) -> LinearFunctional:
    """Same area functional in the local coordinates of one 18x18 triangle
    block whose rows follow ``maps.rho[(j,q,r)]``."""
    rho = maps.rho[(j, q, r)]
    local = {u_row: i for i, u_row in enumerate(rho)}
    f = LinearFunctional(block)
    for (pa, pb, ka), (pc, pd, kb), v in _area_pp_terms(j, q, r):
        ra = local[maps.theta_slot[(pa, pb)] + ka]
        rb = local[maps.theta_slot[(pc, pd)] + kb]
        f.add(ra, rb, v)
    out = f.merged()
    assert len(out.entries) == 63
    return out


# ---------------------------------------------------------------------------
# lift consistency (square-dominance) pairs
# ---------------------------------------------------------------------------


def consistency_constraints_T(
    graph: SimplicialGraph, maps: LiftIndexMaps
) -> list[tuple[tuple[int, int], int]]:
    """One pair per unique e3 edge: T[j,q]^2 <= T[s,s] where s is the slot of
    the product monomial d_j*d_q (tight exactly on rank-1 lifts)."""
    return [((j, q), maps.edge_slot[(j, q)]) for j, q in graph.unique_e3_edges()]


def consistency_constraints_U(
    graph: SimplicialGraph, maps: LiftIndexMaps
) -> list[tuple[tuple[int, int], int]]:
    """Six pairs per unique e3 edge: U[1+3j+ca, 1+3q+cb]^2 <= U[t,t] for the
    theta diagonal t carrying the same coordinate product."""
    pairs = []
    for j, q in graph.unique_e3_edges():
        base = maps.theta_slot[(j, q)]
        for k, (ca, cb) in enumerate(THETA_PAIRS):
            pairs.append(((1 + 3 * j + ca, 1 + 3 * q + cb), base + k))
    return pairs


# ---------------------------------------------------------------------------
# exact rank-1 lifts (oracles, initialization, extraction checks)
# ---------------------------------------------------------------------------


def lift_vector_T(depths: np.ndarray, maps: LiftIndexMaps) -> np.ndarray:
    """Monomial vector (d_1..d_m, d_j*d_q per slot); T = outer(E, E)."""
    depths = np.asarray(depths, dtype=float)
    E = np.zeros(maps.t_dim)
    E[: maps.m] = depths
    for (j, q), s in maps.edge_slot.items():
        E[s] = depths[j] * depths[q]
    return E


def lift_vector_U(points: np.ndarray, maps: LiftIndexMaps) -> np.ndarray:
    """Monomial vector (1, P_1..P_m, theta blocks); U = outer(Q, Q)."""
    points = np.asarray(points, dtype=float)
    Q = np.zeros(maps.u_dim)
    Q[0] = 1.0
    Q[1 : 1 + 3 * maps.m] = points.reshape(-1)
    for (j, q), base in maps.theta_slot.items():
        for k, (ca, cb) in enumerate(THETA_PAIRS):
            Q[base + k] = points[j, ca] * points[q, cb]
    return Q
