"""Reconstruction program assembly, solving, and point extraction.

Seven convex programs are supported, three parameterization/coupling
families over the same simplicial graph:

* ``SNR_DSL`` / ``QNR_DSL``: depth-times-sightline unknowns; one m x m depth
  Gram block per image, isometric couplings to the shared squared geodesics
  either strict (SNR) or as weighted l1 penalties (QNR).
* ``SNR_PP`` / ``QNR_PP``: free 3D points; one (3m+1) x (3m+1) augmented
  point Gram block per image with its corner pinned to 1, reprojection
  penalties tying points to sightlines, and a maximum-depth term pushing the
  scene away from the camera.
* ``HNR_DSL`` / ``HNR_PP``: the quasi-equiareal hybrids; blocks are enlarged
  with one lift coordinate per unique triangle edge (6 per edge for PP) so
  that squared triangle areas become linear, with square-dominance
  constraints tying lift diagonals to the base entries.
* ``HNR_PP_ACCEL``: the edge-based relaxation of ``HNR_PP``; the single
  large block is replaced by the (3m+1) point block plus one 18 x 18 PSD
  block per triangle, with shared-edge entries identified across triangles.

All images share the geodesic (and area) variables, so a reconstruction is
one conic program regardless of n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_LAMBDA_E, DEFAULT_LAMBDA_I, DEFAULT_TOL
from .conic import (
    ConicProgram,
    ConicSolution,
    add_abs_epigraph,
    add_inverse_epigraph,
    add_square_dominance,
    scalar_functional,
    solve,
)
from .geometry import ObservationSet, area_quartic_coeffs, area_sq, dist_sq
from .graph import THETA_PAIRS, LiftIndexMaps, SimplicialGraph, build_graph, build_lift_maps
from .lifting import (
    LinearFunctional,
    f_mdh_completion,
    f_mdh_pp,
    f_reproj,
    g_E_dsl,
    g_E_pp,
    g_E_pp_local,
    g_I_dsl,
    g_I_pp,
)

METHODS = ("SNR_DSL", "SNR_PP", "QNR_DSL", "QNR_PP", "HNR_DSL", "HNR_PP", "HNR_PP_ACCEL")
_DSL_METHODS = ("SNR_DSL", "QNR_DSL", "HNR_DSL")
_HNR_METHODS = ("HNR_DSL", "HNR_PP", "HNR_PP_ACCEL")
_STRICT_METHODS = ("SNR_DSL", "SNR_PP")


@dataclass
class ReconstructionConfig:
    """User-facing knobs for one reconstruction run."""

    method: str = "SNR_PP"
    lambda_I: float = DEFAULT_LAMBDA_I
    lambda_E: float = DEFAULT_LAMBDA_E
    knn: int = 4
    e3_mode: str | int = "all"
    completion: int = 0
    tol: float = DEFAULT_TOL.solver_tol
    max_iter: int = DEFAULT_TOL.solver_max_iter

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.lambda_I < 0 or self.lambda_E < 0:
            raise ValueError("weights must be nonnegative")
        if self.method not in _STRICT_METHODS and self.lambda_I <= 0:
            raise ValueError("lambda_I must be positive for l1 isometric couplings")
        if self.knn < 1:
            raise ValueError(f"knn must be at least 1, got {self.knn}")
        if self.completion < 0:
            raise ValueError(f"completion must be 0 (off) or positive, got {self.completion}")


@dataclass
class ProgramLayout:
    """Where everything lives inside a built program.

    Extraction only needs (method, graph); the remaining fields let the
    rank-one ground-truth lift reconstruct a full feasible assignment,
    including every auxiliary epigraph variable.
    """

    method: str
    n: int
    m: int
    graph: SimplicialGraph
    maps: LiftIndexMaps | None
    lambda_I: float
    lambda_E: float
    core_ids: list[str] = field(default_factory=list)
    tri_ids: list[list[str]] = field(default_factory=list)
    p2: int = 0
    p3: int = 0
    abs_terms: list[tuple[int, LinearFunctional, LinearFunctional, float, str]] = field(
        default_factory=list
    )
    inv_entries: list[tuple[str, str, int]] = field(default_factory=list)
    dom_entries: list[tuple[str, str, int, int]] = field(default_factory=list)
    pseudo_neighbors: dict[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    trace_terms: list[LinearFunctional] = field(default_factory=list)
    reproj_terms: list[LinearFunctional] = field(default_factory=list)
    mdh_terms: list[LinearFunctional] = field(default_factory=list)


@dataclass
class Reconstruction:
    """Extracted result: one point cloud per image plus the shared unknowns."""

    clouds: np.ndarray
    geodesics: dict[tuple[int, int], float]
    areas: dict[tuple[int, int, int], float]
    diagnostics: dict

    def validate(self) -> None:
        total = sum(self.geodesics.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"geodesics sum to {total}, expected 1 within 1e-6")
        low = min(self.geodesics.values())
        if self.areas:
            low = min(low, min(self.areas.values()))
        if low < -1e-8:
            raise ValueError(f"negative shared variable {low} below -1e-8")


# ---------------------------------------------------------------------------
# shared assembly pieces
# ---------------------------------------------------------------------------


def _geo_var(k: int, coeff: float = 1.0) -> LinearFunctional:
    return scalar_functional("free", k, coeff)


def _require_visible(obs: ObservationSet, method: str) -> None:
    if not obs.visibility.all():
        i, j = np.argwhere(~obs.visibility)[0]
        raise ValueError(
            f"{method} needs every point observed, but point {j} is invisible in "
            f"image {i}; use a PP method with completion for missing correspondences"
        )


def _pseudo_neighbor_set(obs: ObservationSet, i: int, j: int, s: int) -> tuple[int, ...]:
    """The s nearest reference-image neighbors of j that are visible in image i."""
    ref = obs.reference_points()
    candidates = np.flatnonzero(obs.visibility[i])
    candidates = candidates[candidates != j]
    if candidates.size == 0:
        raise ValueError(f"point {j} has no visible neighbors in image {i} to complete from")
    d2 = np.sum((ref[candidates] - ref[j]) ** 2, axis=1)
    order = np.lexsort((candidates, d2))
    return tuple(int(candidates[t]) for t in order[:s])


def _add_geodesic_vars(prog: ConicProgram, layout: ProgramLayout) -> None:
    layout.p2 = len(layout.graph.e2)
    layout.p3 = len(layout.graph.e3) if layout.method in _HNR_METHODS else 0
    prog.add_free(layout.p2 + layout.p3)
    prog.add_eq([_geo_var(k) for k in range(layout.p2)], 1.0, "scale")


def _couple(
    prog: ConicProgram,
    layout: ProgramLayout,
    f: LinearFunctional,
    var: int,
    weight: float | None,
    label: str,
    kind: str,
) -> None:
    """Tie a lifted functional to a shared variable: strictly, or by l1."""
    g = _geo_var(var)
    if weight is None:
        prog.add_eq([f, _geo_var(var, -1.0)], 0.0, label)
    else:
        u = add_abs_epigraph(prog, f, g, weight, label=label)
        layout.abs_terms.append((u, f, g, weight, kind))


def _trace(block: str, dim: int) -> LinearFunctional:
    return LinearFunctional(block, [(t, t, 1.0) for t in range(dim)])


def _dsl_program(
    obs: ObservationSet, graph: SimplicialGraph, method: str, lambda_I: float | None
) -> tuple[ConicProgram, ProgramLayout]:
    _require_visible(obs, method)
    graph.validate()
    n, m = obs.n, obs.m
    prog = ConicProgram()
    layout = ProgramLayout(method, n, m, graph, None, lambda_I or 0.0, 0.0)
    _add_geodesic_vars(prog, layout)
    for i in range(n):
        bid = f"gram:{i}"
        layout.core_ids.append(bid)
        prog.add_psd_block(bid, m)
        tr = _trace(bid, m)
        prog.add_objective(tr)
        layout.trace_terms.append(tr)
        for j in range(m):
            zid = add_inverse_epigraph(prog, (bid, j), 1.0, label=f"invd:{i}:{j}")
            layout.inv_entries.append((zid, bid, j))
        for k, (j, q) in enumerate(graph.e2):
            dot = float(obs.sightlines[i, j] @ obs.sightlines[i, q])
            f = g_I_dsl(j, q, dot, block=bid)
            _couple(prog, layout, f, k, lambda_I, f"iso:{i}:{j},{q}", "iso")
    return prog, layout


def _pp_objective_terms(
    prog: ConicProgram,
    layout: ProgramLayout,
    obs: ObservationSet,
    i: int,
    bid: str,
    completion: int,
) -> None:
    """Reprojection + maximum-depth terms for image i on the given block."""
    for j in range(layout.m):
        if obs.visibility[i, j]:
            fr = f_reproj(j, obs.sightlines[i, j], block=bid)
            prog.add_objective(fr)
            layout.reproj_terms.append(fr)
            fd = f_mdh_pp(j, obs.sightlines[i, j], block=bid).scaled(-1.0)
            prog.add_objective(fd)
            layout.mdh_terms.append(fd)
        else:
            if completion <= 0:
                raise ValueError(
                    f"point {j} is invisible in image {i} and completion is off; "
                    "configure pseudo-neighbor completion or use visible data"
                )
            pn = _pseudo_neighbor_set(obs, i, j, completion)
            layout.pseudo_neighbors[(i, j)] = pn
            fc = f_mdh_completion(j, pn, obs.sightlines[i], block=bid).scaled(-1.0)
            prog.add_objective(fc)
            layout.mdh_terms.append(fc)


def _pp_program(
    obs: ObservationSet,
    graph: SimplicialGraph,
    method: str,
    lambda_I: float | None,
    completion: int,
) -> tuple[ConicProgram, ProgramLayout]:
    graph.validate()
    n, m = obs.n, obs.m
    prog = ConicProgram()
    layout = ProgramLayout(method, n, m, graph, None, lambda_I or 0.0, 0.0)
    _add_geodesic_vars(prog, layout)
    dim = 3 * m + 1
    for i in range(n):
        bid = f"gram:{i}"
        layout.core_ids.append(bid)
        prog.add_psd_block(bid, dim)
        prog.fix_entry(bid, 0, 0, 1.0, f"corner:{i}")
        tr = _trace(bid, dim)
        prog.add_objective(tr)
        layout.trace_terms.append(tr)
        _pp_objective_terms(prog, layout, obs, i, bid, completion)
        for k, (j, q) in enumerate(graph.e2):
            f = g_I_pp(j, q, block=bid)
            _couple(prog, layout, f, k, lambda_I, f"iso:{i}:{j},{q}", "iso")
    return prog, layout


def _require_triangles(graph: SimplicialGraph, method: str) -> None:
    if not graph.e3:
        raise ValueError(
            f"{method} needs at least one triangle in the graph; "
            "increase knn or use a QNR method"
        )


def _hnr_weights(lambda_I: float, lambda_E: float) -> None:
    if lambda_I <= 0:
        raise ValueError("lambda_I must be positive for l1 isometric couplings")
    if lambda_E < 0:
        raise ValueError(f"lambda_E must be nonnegative, got {lambda_E}")


def _hnr_dsl_program(
    obs: ObservationSet,
    graph: SimplicialGraph,
    maps: LiftIndexMaps,
    lambda_I: float,
    lambda_E: float,
) -> tuple[ConicProgram, ProgramLayout]:
    _require_visible(obs, "HNR_DSL")
    _require_triangles(graph, "HNR_DSL")
    _hnr_weights(lambda_I, lambda_E)
    graph.validate()
    n, m = obs.n, obs.m
    prog = ConicProgram()
    layout = ProgramLayout("HNR_DSL", n, m, graph, maps, lambda_I, lambda_E)
    _add_geodesic_vars(prog, layout)
    for i in range(n):
        bid = f"lift:{i}"
        layout.core_ids.append(bid)
        prog.add_psd_block(bid, maps.t_dim)
        tr = _trace(bid, maps.t_dim)
        prog.add_objective(tr)
        layout.trace_terms.append(tr)
        for j in range(m):
            zid = add_inverse_epigraph(prog, (bid, j), 1.0, label=f"invd:{i}:{j}")
            layout.inv_entries.append((zid, bid, j))
        for k, (j, q) in enumerate(graph.e2):
            dot = float(obs.sightlines[i, j] @ obs.sightlines[i, q])
            _couple(
                prog, layout, g_I_dsl(j, q, dot, block=bid), k, lambda_I, f"iso:{i}:{j},{q}", "iso"
            )
        for t, (j, q, r) in enumerate(graph.e3):
            coeffs = area_quartic_coeffs(
                obs.sightlines[i, j], obs.sightlines[i, q], obs.sightlines[i, r]
            )
            f = g_E_dsl(j, q, r, coeffs, maps, block=bid)
            _couple(prog, layout, f, layout.p2 + t, lambda_E, f"area:{i}:{j},{q},{r}", "area")
        for j, q in graph.unique_e3_edges():
            slot = maps.edge_slot[(j, q)]
            zid = add_square_dominance(
                prog, (bid, j, q), (bid, slot), label=f"dom:{i}:{j},{q}"
            )
            layout.dom_entries.append((zid, bid, j, q))
    return prog, layout


def _hnr_pp_program(
    obs: ObservationSet,
    graph: SimplicialGraph,
    maps: LiftIndexMaps,
    lambda_I: float,
    lambda_E: float,
    completion: int,
) -> tuple[ConicProgram, ProgramLayout]:
    _require_triangles(graph, "HNR_PP")
    _hnr_weights(lambda_I, lambda_E)
    graph.validate()
    n, m = obs.n, obs.m
    prog = ConicProgram()
    layout = ProgramLayout("HNR_PP", n, m, graph, maps, lambda_I, lambda_E)
    _add_geodesic_vars(prog, layout)
    for i in range(n):
        bid = f"lift:{i}"
        layout.core_ids.append(bid)
        prog.add_psd_block(bid, maps.u_dim)
        prog.fix_entry(bid, 0, 0, 1.0, f"corner:{i}")
        tr = _trace(bid, maps.u_dim)
        prog.add_objective(tr)
        layout.trace_terms.append(tr)
        _pp_objective_terms(prog, layout, obs, i, bid, completion)
        for k, (j, q) in enumerate(graph.e2):
            _couple(prog, layout, g_I_pp(j, q, block=bid), k, lambda_I, f"iso:{i}:{j},{q}", "iso")
        for t, (j, q, r) in enumerate(graph.e3):
            f = g_E_pp(j, q, r, maps, block=bid)
            _couple(prog, layout, f, layout.p2 + t, lambda_E, f"area:{i}:{j},{q},{r}", "area")
        for j, q in graph.unique_e3_edges():
            theta = maps.theta_slot[(j, q)]
            for k, (ca, cb) in enumerate(THETA_PAIRS):
                r, c = 1 + 3 * j + ca, 1 + 3 * q + cb
                zid = add_square_dominance(
                    prog, (bid, r, c), (bid, theta + k), label=f"dom:{i}:{j},{q}:{k}"
                )
                layout.dom_entries.append((zid, bid, r, c))
    return prog, layout


def _tri_edge_offsets(tri: tuple[int, int, int]) -> dict[tuple[int, int], int]:
    """Local 18-dim layout of a triangle block: edge (j,q) at 0, (q,r) at 6,
    (j,r) at 12, matching the lift coordinate order."""
    j, q, r = tri
    return {(j, q): 0, (q, r): 6, (j, r): 12}


def _hnr_pp_accel_program(
    obs: ObservationSet,
    graph: SimplicialGraph,
    maps: LiftIndexMaps,
    lambda_I: float,
    lambda_E: float,
    completion: int,
) -> tuple[ConicProgram, ProgramLayout]:
    _require_triangles(graph, "HNR_PP_ACCEL")
    _hnr_weights(lambda_I, lambda_E)
    graph.validate()
    n, m = obs.n, obs.m
    prog = ConicProgram()
    layout = ProgramLayout("HNR_PP_ACCEL", n, m, graph, maps, lambda_I, lambda_E)
    _add_geodesic_vars(prog, layout)
    dim = 3 * m + 1
    # owner(e) = first triangle containing edge e; its block carries the
    # canonical copy of that edge's 6x6 product sub-block
    owner: dict[tuple[int, int], tuple[int, int]] = {}
    for t, tri in enumerate(graph.e3):
        for e, off in _tri_edge_offsets(tri).items():
            owner.setdefault(e, (t, off))
    for i in range(n):
        bid = f"gram:{i}"
        layout.core_ids.append(bid)
        prog.add_psd_block(bid, dim)
        prog.fix_entry(bid, 0, 0, 1.0, f"corner:{i}")
        tr = _trace(bid, dim)
        prog.add_objective(tr)
        layout.trace_terms.append(tr)
        _pp_objective_terms(prog, layout, obs, i, bid, completion)
        for k, (j, q) in enumerate(graph.e2):
            _couple(prog, layout, g_I_pp(j, q, block=bid), k, lambda_I, f"iso:{i}:{j},{q}", "iso")
        tri_ids = []
        for t, tri in enumerate(graph.e3):
            tid = f"tri:{i}:{t}"
            tri_ids.append(tid)
            prog.add_psd_block(tid, 18)
            f = g_E_pp_local(*tri, maps, block=tid)
            label = f"area:{i}:{tri[0]},{tri[1]},{tri[2]}"
            _couple(prog, layout, f, layout.p2 + t, lambda_E, label, "area")
            # identify entries shared with the owning triangle's block
            for e, off in _tri_edge_offsets(tri).items():
                ot, ooff = owner[e]
                if ot == t:
                    continue
                oid = f"tri:{i}:{ot}"
                for a in range(6):
                    for b in range(a, 6):
                        prog.add_eq(
                            [
                                LinearFunctional(tid, [(off + a, off + b, 1.0)]),
                                LinearFunctional(oid, [(ooff + a, ooff + b, -1.0)]),
                            ],
                            0.0,
                            f"share:{i}:{e[0]},{e[1]}:{t}:{a},{b}",
                        )
        layout.tri_ids.append(tri_ids)
        for j, q in graph.unique_e3_edges():
            ot, ooff = owner[(j, q)]
            oid = f"tri:{i}:{ot}"
            tr_v = LinearFunctional(oid, [(ooff + k, ooff + k, 1.0) for k in range(6)])
            prog.add_objective(tr_v)
            layout.trace_terms.append(tr_v)
            for k, (ca, cb) in enumerate(THETA_PAIRS):
                r, c = 1 + 3 * j + ca, 1 + 3 * q + cb
                zid = add_square_dominance(
                    prog, (bid, r, c), (oid, ooff + k), label=f"dom:{i}:{j},{q}:{k}"
                )
                layout.dom_entries.append((zid, bid, r, c))
    return prog, layout


# ---------------------------------------------------------------------------
# public builders
# ---------------------------------------------------------------------------


def build_snr_dsl(obs: ObservationSet, graph: SimplicialGraph) -> ConicProgram:
    """Strict-isometry program with depth-sightline unknowns."""
    return _dsl_program(obs, graph, "SNR_DSL", None)[0]


def build_qnr_dsl(obs: ObservationSet, graph: SimplicialGraph, lambda_I: float) -> ConicProgram:
    """Quasi-isometric program: l1 couplings weighted by lambda_I."""
    if lambda_I <= 0:
        raise ValueError("lambda_I must be positive for l1 isometric couplings")
    return _dsl_program(obs, graph, "QNR_DSL", lambda_I)[0]


def build_snr_pp(obs: ObservationSet, graph: SimplicialGraph, completion: int = 0) -> ConicProgram:
    """Strict-isometry program on free points with reprojection + MDH terms."""
    return _pp_program(obs, graph, "SNR_PP", None, completion)[0]


def build_qnr_pp(
    obs: ObservationSet, graph: SimplicialGraph, lambda_I: float, completion: int = 0
) -> ConicProgram:
    if lambda_I <= 0:
        raise ValueError("lambda_I must be positive for l1 isometric couplings")
    return _pp_program(obs, graph, "QNR_PP", lambda_I, completion)[0]


def build_hnr_dsl(
    obs: ObservationSet,
    graph: SimplicialGraph,
    maps: LiftIndexMaps,
    lambda_I: float,
    lambda_E: float,
) -> ConicProgram:
    """Quasi-equiareal hybrid on depth lifts."""
    return _hnr_dsl_program(obs, graph, maps, lambda_I, lambda_E)[0]


def build_hnr_pp(
    obs: ObservationSet,
    graph: SimplicialGraph,
    maps: LiftIndexMaps,
    lambda_I: float,
    lambda_E: float,
    completion: int = 0,
) -> ConicProgram:
    """Quasi-equiareal hybrid on augmented point lifts."""
    return _hnr_pp_program(obs, graph, maps, lambda_I, lambda_E, completion)[0]


def build_hnr_pp_accel(
    obs: ObservationSet,
    graph: SimplicialGraph,
    maps: LiftIndexMaps,
    lambda_I: float,
    lambda_E: float,
    completion: int = 0,
) -> ConicProgram:
    """Edge-based relaxation of the PP hybrid: per-triangle 18 x 18 blocks."""
    return _hnr_pp_accel_program(obs, graph, maps, lambda_I, lambda_E, completion)[0]


def build_program(
    obs: ObservationSet, graph: SimplicialGraph, config: ReconstructionConfig
) -> tuple[ConicProgram, ProgramLayout]:
    """Dispatch on config.method; returns the program plus its layout."""
    config.validate()
    method = config.method
    if method == "SNR_DSL":
        return _dsl_program(obs, graph, method, None)
    if method == "QNR_DSL":
        return _dsl_program(obs, graph, method, config.lambda_I)
    if method == "SNR_PP":
        return _pp_program(obs, graph, method, None, config.completion)
    if method == "QNR_PP":
        return _pp_program(obs, graph, method, config.lambda_I, config.completion)
    maps = build_lift_maps(graph)
    if method == "HNR_DSL":
        return _hnr_dsl_program(obs, graph, maps, config.lambda_I, config.lambda_E)
    if method == "HNR_PP":
        return _hnr_pp_program(obs, graph, maps, config.lambda_I, config.lambda_E, config.completion)
    return _hnr_pp_accel_program(
        obs, graph, maps, config.lambda_I, config.lambda_E, config.completion
    )


# ---------------------------------------------------------------------------
# extraction
# ---------------------------------------------------------------------------


def _leading_depths(block: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Depths from the leading eigenpair, sign-fixed to positive mean."""
    w, V = np.linalg.eigh(block)
    depths = np.sqrt(max(w[-1], 0.0)) * V[:, -1]
    if depths.mean() < 0:
        depths = -depths
    return depths, w[::-1]


def _rank_proxy(eigs: np.ndarray) -> float:
    top = np.abs(eigs[:5])
    total = float(top.sum())
    return float(top[0] / total) if total > 0 else 0.0


def extract_points(
    solution: ConicSolution,
    method: str,
    obs: ObservationSet,
    graph: SimplicialGraph,
    layout: ProgramLayout | None = None,
) -> Reconstruction:
    """Read point clouds and shared variables out of a solved program.

    The graph fixes the ordering of the shared geodesic/area variables; the
    optional layout enables the objective breakdown in the diagnostics.
    """
    if solution.status != "optimal":
        raise RuntimeError(
            f"cannot extract points from a solve with status {solution.status!r}"
        )
    n, m = obs.n, obs.m
    dsl = method in _DSL_METHODS
    core = "lift" if method in ("HNR_DSL", "HNR_PP") else "gram"
    clouds = np.zeros((n, m, 3))
    spectra = []
    negative = 0
    for i in range(n):
        block = solution.psd[f"{core}:{i}"]
        if dsl:
            depths, eigs = _leading_depths(block[:m, :m])
            negative += int(np.sum(depths < -1e-6))
            clouds[i] = depths[:, None] * obs.sightlines[i]
        else:
            corner = block[0, 0]
            col = block[0, 1 : 3 * m + 1] / corner
            clouds[i] = col.reshape(m, 3)
            eigs = np.linalg.eigvalsh(block)[::-1]
            negative += int(np.sum(clouds[i, :, 2] < -1e-6))
        spectra.append(eigs[:5])
    p2 = len(graph.e2)
    geodesics = {e: float(solution.free[k]) for k, e in enumerate(graph.e2)}
    areas = {}
    if method in _HNR_METHODS:
        areas = {tri: float(solution.free[p2 + t]) for t, tri in enumerate(graph.e3)}
    diagnostics = {
        "status": solution.status,
        "objective": solution.objective,
        "residuals": dict(solution.residuals),
        "iterations": len(solution.diagnostics.iterations),
        "spectra": spectra,
        "rank_proxy": [_rank_proxy(s) for s in spectra],
        "negative_depths": negative,
    }
    if layout is not None:
        diagnostics["objective_breakdown"] = _objective_breakdown(solution, layout)
    rec = Reconstruction(clouds, geodesics, areas, diagnostics)
    rec.validate()
    return rec


def _objective_breakdown(solution: ConicSolution, layout: ProgramLayout) -> dict[str, float]:
    parts = {
        "trace": sum(solution.value(f) for f in layout.trace_terms),
        "reprojection": sum(solution.value(f) for f in layout.reproj_terms),
        "mdh": sum(solution.value(f) for f in layout.mdh_terms),
        "inverse_depth": sum(
            solution.psd[zid][0, 0] for zid, _, _ in layout.inv_entries
        ),
        "iso_l1": sum(
            w * solution.nonneg[u] for u, _, _, w, kind in layout.abs_terms if kind == "iso"
        ),
        "area_l1": sum(
            w * solution.nonneg[u] for u, _, _, w, kind in layout.abs_terms if kind == "area"
        ),
    }
    return {k: float(v) for k, v in parts.items()}


def reconstruct(obs: ObservationSet, config: ReconstructionConfig) -> Reconstruction:
    """Build the graph and program for obs, solve, and extract."""
    config.validate()
    graph = build_graph(obs.reference_points(), config.knn, triangles=config.e3_mode)
    prog, layout = build_program(obs, graph, config)
    sol = solve(prog, tol=config.tol, max_iter=config.max_iter)
    return extract_points(sol, config.method, obs, graph, layout=layout)


# ---------------------------------------------------------------------------
# rank-one ground-truth lifts (feasibility harness)
# ---------------------------------------------------------------------------


def rank_one_lift(layout: ProgramLayout, obs: ObservationSet, points: np.ndarray) -> dict:
    """Assignment of every program variable from ground-truth points.

    Points are rescaled so the reference-image squared edge lengths sum to 1,
    then every Gram/lift block is the exact rank-one outer product, shared
    variables take the reference values, and all auxiliary epigraph variables
    are filled by construction.  For noiseless isometric input the result is
    feasible to numerical precision.
    """
    graph, maps, m = layout.graph, layout.maps, layout.m
    total = sum(dist_sq(points[0, j], points[0, q]) for j, q in graph.e2)
    P = points / np.sqrt(total)
    assign: dict = {}
    geo = [float(dist_sq(P[0, j], P[0, q])) for j, q in graph.e2]
    area = [float(area_sq(P[0, j], P[0, q], P[0, r])) for j, q, r in graph.e3]
    free = geo + (area if layout.p3 else [])
    assign["free"] = np.array(free)

    depths = np.einsum("imc,imc->im", P, obs.sightlines)
    for i in range(layout.n):
        bid = layout.core_ids[i]
        if layout.method in ("SNR_DSL", "QNR_DSL"):
            assign[bid] = np.outer(depths[i], depths[i])
        elif layout.method == "HNR_DSL":
            t = np.zeros(maps.t_dim)
            t[:m] = depths[i]
            for e, slot in maps.edge_slot.items():
                t[slot] = depths[i, e[0]] * depths[i, e[1]]
            assign[bid] = np.outer(t, t)
        else:
            base = np.concatenate([[1.0], P[i].ravel()])
            if layout.method == "HNR_PP":
                u = np.zeros(maps.u_dim)
                u[: 3 * m + 1] = base
                for e, theta in maps.theta_slot.items():
                    j, q = e
                    for k, (ca, cb) in enumerate(THETA_PAIRS):
                        u[theta + k] = P[i, j, ca] * P[i, q, cb]
                assign[bid] = np.outer(u, u)
            else:
                assign[bid] = np.outer(base, base)
        if layout.method == "HNR_PP_ACCEL":
            for t_idx, tri in enumerate(graph.e3):
                rho = np.zeros(18)
                for e, off in _tri_edge_offsets(tri).items():
                    j, q = e
                    for k, (ca, cb) in enumerate(THETA_PAIRS):
                        rho[off + k] = P[i, j, ca] * P[i, q, cb]
                assign[layout.tri_ids[i][t_idx]] = np.outer(rho, rho)

    for zid, bid, j in layout.inv_entries:
        x = assign[bid][j, j]
        assign[zid] = np.array([[1.0 / x, 1.0], [1.0, x]])
    for zid, bid, r, c in layout.dom_entries:
        y = assign[bid][r, c]
        assign[zid] = np.array([[y * y, y], [y, 1.0]])

    nonneg = np.zeros(_count_nonneg(layout))
    for u, f, g, _, _ in layout.abs_terms:
        d = _eval_functional(f, assign) - _eval_functional(g, assign)
        nonneg[u] = abs(d)
        nonneg[u + 1] = abs(d) - d
        nonneg[u + 2] = abs(d) + d
    assign["nonneg"] = nonneg
    return assign


def _count_nonneg(layout: ProgramLayout) -> int:
    return max((u + 3 for u, *_ in layout.abs_terms), default=0)


def _eval_functional(f: LinearFunctional, assign: dict) -> float:
    if f.block_id in ("free", "nonneg"):
        vec = assign.get(f.block_id, np.zeros(0))
        return f.constant + sum(v * vec[r] for r, _, v in f.entries)
    return f.evaluate(assign[f.block_id])


def assignment_report(prog: ConicProgram, assign: dict) -> dict[str, float]:
    """Feasibility numbers for an assignment: worst equality violation, the
    most negative PSD eigenvalue, the most negative scalar, and the
    objective value."""
    canon = prog.canonical()
    worst = 0.0
    for row in canon.eq_rows:
        val = sum(_eval_functional(f, assign) for f in row.terms)
        worst = max(worst, abs(val - row.rhs))
    min_eig = 0.0
    for bid, _ in canon.psd_blocks:
        min_eig = min(min_eig, float(np.linalg.eigvalsh(assign[bid])[0]))
    nn = assign.get("nonneg", np.zeros(0))
    min_scalar = float(nn.min()) if len(nn) else 0.0
    obj = canon.objective_constant() + sum(
        _eval_functional(f, assign) for f in canon.objective
    )
    return {
        "max_violation": worst,
        "min_eig": min_eig,
        "min_scalar": min_scalar,
        "objective": obj,
    }
