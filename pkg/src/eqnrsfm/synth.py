"""Synthetic scene generation.

Three generators drive the test harness and the CLI:

* :func:`generate_isometric` — a flat sparse grid bent by piecewise-planar
  folds about random rulings (an exact isometry of the sheet), then randomly
  roto-translated and perspectively projected.  Chord lengths across folds
  shrink slightly relative to the flat template; the scene records the worst
  relative edge deviation so tests can bound it.
* :func:`generate_equiareal` — perturbs the bent clouds pointwise along
  (1, 1, 1) and then projects them back onto the set of clouds whose triangle
  areas match the template, via damped least squares on the squared-area
  residuals.  The result preserves areas but not edge lengths.
* :func:`lemma1_sample` — samples random sightline/depth triangles and
  measures how often a depth displacement on one or two vertices can be
  compensated by the third vertex so that the squared area is preserved
  (positivity of the discriminant of a quadratic in the free depth).

All randomness flows through one ``numpy`` generator seeded from the config,
so identical configs produce bit-identical scenes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import (
    CameraIntrinsics,
    ObservationSet,
    area_quartic_coeffs,
    area_sq,
    dist_sq,
    normalize,
)
from .graph import SimplicialGraph

#: Default pinhole camera: a square 1000-pixel focal length with the
#: principal point at (500, 500).  Correspondence noise is specified in
#: pixels of this camera, so x_sigma = 1 means +-0.5 px per coordinate.
DEFAULT_CAMERA = CameraIntrinsics(fx=1000.0, fy=1000.0, cx=500.0, cy=500.0)

#: Post-projection RMS area residual (relative to the mean template area)
#: above which the equiareal generator reports failure.
_AREA_RESIDUAL_TOL = 1e-6


@dataclass(frozen=True)
class GeneratorConfig:
    """Parameters of one synthetic scene.

    The template is an ``m_a`` x ``m_b`` planar grid scaled to unit extent
    along its longer side and centered at the origin.  Each of the ``n``
    images gets its own random bending (``fold_count`` folds with angles in
    ``+-bend_range`` radians) and its own random pose: rotations drawn from
    ``+-tilt_range`` about the x/y axes and ``+-spin_range`` about z, and a
    translation of ``depth`` along z jittered by ``+-translate_range``.

    ``x_sigma`` scales the per-coordinate correspondence noise in pixels;
    ``chi_e`` scales the pointwise perturbation used by the equiareal
    generator.
    """

    m_a: int
    m_b: int
    n: int
    x_sigma: float = 0.0
    chi_e: float = 0.0
    seed: int = 0
    camera: CameraIntrinsics = DEFAULT_CAMERA
    depth: float = 1.9
    tilt_range: float = 0.2
    spin_range: float = 3.14
    translate_range: float = 0.1
    bend_range: float = 0.3
    fold_count: int = 3
    noise_model: str = "uniform"
    max_retries: int = 50

    def __post_init__(self) -> None:
        if self.m_a < 2 or self.m_b < 2:
            raise ValueError(f"grid must be at least 2x2, got {self.m_a}x{self.m_b}")
        if self.n < 1:
            raise ValueError(f"need at least one image, got n={self.n}")
        if self.x_sigma < 0:
            raise ValueError(f"x_sigma must be nonnegative, got {self.x_sigma}")
        if self.chi_e < 0:
            raise ValueError(f"chi_e must be nonnegative, got {self.chi_e}")
        if self.depth <= 0:
            raise ValueError(f"depth must be positive, got {self.depth}")
        for name in ("tilt_range", "spin_range", "translate_range", "bend_range"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.fold_count < 0:
            raise ValueError(f"fold_count must be nonnegative, got {self.fold_count}")
        if self.noise_model not in ("uniform", "gaussian"):
            raise ValueError(f"noise_model must be 'uniform' or 'gaussian', got {self.noise_model!r}")
        if self.max_retries < 1:
            raise ValueError(f"max_retries must be at least 1, got {self.max_retries}")

    @property
    def m(self) -> int:
        return self.m_a * self.m_b


def template_grid(config: GeneratorConfig) -> np.ndarray:
    """The flat (m, 2) template: a centered grid with unit longer side.

    Point index j = a * m_b + b maps to grid cell (a, b).  Graphs for
    generated scenes should be built on these coordinates.
    """
    h = 1.0 / (max(config.m_a, config.m_b) - 1)
    a = (np.arange(config.m_a) - (config.m_a - 1) / 2.0) * h
    b = (np.arange(config.m_b) - (config.m_b - 1) / 2.0) * h
    X, Y = np.meshgrid(a, b, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


@dataclass
class SyntheticScene:
    """One generated scene with its ground truth.

    ``gt_clouds`` holds the n per-image point clouds in camera coordinates;
    ``gt_geodesics`` / ``gt_areas`` are the template squared edge lengths and
    squared triangle areas in ``graph.e2`` / ``graph.e3`` order.
    ``edge_deviation`` is the worst relative deviation of a per-image chord
    length from its template length (the bending-discretization tolerance).
    ``area_residuals`` is (n, p2) with the signed post-projection squared-area
    residuals of the equiareal generator, or ``None`` for isometric scenes.
    """

    gt_clouds: np.ndarray  # (n, m, 3)
    observations: ObservationSet
    gt_geodesics: np.ndarray  # (p1,)
    gt_areas: np.ndarray  # (p2,)
    graph: SimplicialGraph
    config: GeneratorConfig
    edge_deviation: float
    area_residuals: np.ndarray | None = None

    def validate(self) -> None:
        n, m = self.config.n, self.config.m
        if self.gt_clouds.shape != (n, m, 3):
            raise ValueError(f"gt_clouds must be {(n, m, 3)}, got {self.gt_clouds.shape}")
        if np.min(self.gt_clouds[..., 2]) <= 0:
            raise ValueError("all ground-truth points must lie in front of the camera")
        if self.gt_geodesics.shape != (self.graph.p1,):
            raise ValueError("gt_geodesics must align with graph.e2")
        if self.gt_areas.shape != (self.graph.p2,):
            raise ValueError("gt_areas must align with graph.e3")
        self.observations.validate()


def _check_graph(graph: SimplicialGraph, m: int) -> None:
    graph.validate()
    indices = [j for e in graph.e2 for j in e] + [j for t in graph.e3 for j in t]
    if indices and max(indices) >= m:
        raise ValueError(f"graph references point {max(indices)} but the scene has only {m} points")


def _template_truth(
    template: np.ndarray, graph: SimplicialGraph
) -> tuple[np.ndarray, np.ndarray]:
    """Squared edge lengths and squared triangle areas of the flat template."""
    T3 = np.column_stack([template, np.zeros(len(template))])
    if graph.p1:
        e2 = np.asarray(graph.e2)
        geod = dist_sq(T3[e2[:, 0]], T3[e2[:, 1]])
    else:
        geod = np.zeros(0)
    if graph.p2:
        e3 = np.asarray(graph.e3)
        areas = area_sq(T3[e3[:, 0]], T3[e3[:, 1]], T3[e3[:, 2]])
    else:
        areas = np.zeros(0)
    return geod, areas


def _ruled_fold(
    template: np.ndarray, psi: float, fold_pos: np.ndarray, fold_ang: np.ndarray
) -> np.ndarray:
    """Bend the flat sheet about rulings parallel to (cos psi, sin psi).

    The sheet coordinate s across the rulings is mapped through a unit-speed
    planar polyline whose direction turns by ``fold_ang[k]`` at each fold
    position, which is an exact isometry of the sheet.  With no folds (or all
    angles zero) the template is embedded unchanged at z = 0.
    """
    if fold_pos.size == 0 or not np.any(fold_ang):
        return np.column_stack([template, np.zeros(len(template))])
    u = np.array([np.cos(psi), np.sin(psi)])
    u_perp = np.array([-np.sin(psi), np.cos(psi)])
    t = template @ u
    s = template @ u_perp

    order = np.argsort(fold_pos)
    fold_pos = fold_pos[order]
    fold_ang = fold_ang[order]
    theta = np.concatenate([[0.0], np.cumsum(fold_ang)])  # direction per segment
    nodes = np.concatenate([[s.min()], fold_pos])  # segment start coordinates
    starts = np.zeros((len(nodes), 2))
    for k in range(1, len(nodes)):
        step = nodes[k] - nodes[k - 1]
        starts[k] = starts[k - 1] + step * np.array(
            [np.cos(theta[k - 1]), np.sin(theta[k - 1])]
        )

    seg = np.searchsorted(fold_pos, s, side="right")
    direction = np.column_stack([np.cos(theta[seg]), np.sin(theta[seg])])
    gamma = starts[seg] + (s - nodes[seg])[:, None] * direction

    bent = (
        t[:, None] * np.append(u, 0.0)
        + gamma[:, 0, None] * np.append(u_perp, 0.0)
        + gamma[:, 1, None] * np.array([0.0, 0.0, 1.0])
    )
    return bent - bent.mean(axis=0)


def _rotation(tilt_x: float, tilt_y: float, spin: float) -> np.ndarray:
    cx, sx = np.cos(tilt_x), np.sin(tilt_x)
    cy, sy = np.cos(tilt_y), np.sin(tilt_y)
    cz, sz = np.cos(spin), np.sin(spin)
    Rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    Ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    Rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return Rz @ Rx @ Ry


def _bent_cloud_sequence(
    template: np.ndarray, config: GeneratorConfig, rng: np.random.Generator
) -> np.ndarray:
    """Per-image bent and posed clouds, resampling poses that reach behind
    the camera (depth below 10% of the nominal distance) up to the retry cap.
    """
    n, m = config.n, config.m
    clouds = np.empty((n, m, 3))
    z_min = 0.1 * config.depth
    for i in range(n):
        psi = rng.uniform(0.0, np.pi)
        s = template @ np.array([-np.sin(psi), np.cos(psi)])
        fold_pos = rng.uniform(s.min(), s.max(), config.fold_count)
        fold_ang = rng.uniform(-config.bend_range, config.bend_range, config.fold_count)
        bent = _ruled_fold(template, psi, fold_pos, fold_ang)
        for _ in range(config.max_retries):
            tilt_x, tilt_y = rng.uniform(-config.tilt_range, config.tilt_range, 2)
            spin = rng.uniform(-config.spin_range, config.spin_range)
            shift = rng.uniform(-config.translate_range, config.translate_range, 3)
            shift[2] += config.depth
            cloud = bent @ _rotation(tilt_x, tilt_y, spin).T + shift
            if cloud[:, 2].min() > z_min:
                clouds[i] = cloud
                break
        else:
            raise RuntimeError(
                f"could not pose image {i} in front of the camera after "
                f"{config.max_retries} attempts; reduce tilt_range or increase depth"
            )
    return clouds


def _project_with_noise(
    clouds: np.ndarray, config: GeneratorConfig, rng: np.random.Generator
) -> ObservationSet:
    """Pinhole-project the clouds and add per-coordinate pixel noise.

    Uniform noise is x_sigma * U(-0.5, 0.5) per pixel coordinate; the
    Gaussian option treats x_sigma as the standard deviation in pixels,
    x_sigma * N(0, 1).
    """
    K = config.camera
    xy = clouds[..., :2] / clouds[..., 2:3]
    pixels = np.empty_like(xy)
    pixels[..., 0] = K.fx * xy[..., 0] + K.cx
    pixels[..., 1] = K.fy * xy[..., 1] + K.cy
    if config.x_sigma > 0:
        if config.noise_model == "uniform":
            noise = rng.uniform(-0.5, 0.5, pixels.shape)
        else:
            noise = rng.normal(0.0, 1.0, pixels.shape)
        pixels = pixels + config.x_sigma * noise
    return normalize(pixels, K)


def _edge_deviation(
    clouds: np.ndarray, graph: SimplicialGraph, gt_geodesics: np.ndarray
) -> float:
    """Worst relative deviation of per-image chord lengths from the template."""
    if not graph.p1:
        return 0.0
    e2 = np.asarray(graph.e2)
    chord = np.sqrt(dist_sq(clouds[:, e2[:, 0]], clouds[:, e2[:, 1]]))
    ref = np.sqrt(gt_geodesics)
    return float(np.max(np.abs(chord - ref[None, :]) / ref[None, :]))


def generate_isometric(config: GeneratorConfig, graph: SimplicialGraph) -> SyntheticScene:
    """Generate a bent-sheet scene whose per-image clouds are isometric
    deformations of the flat template (up to chord shrinkage across folds).
    """
    _check_graph(graph, config.m)
    rng = np.random.default_rng(config.seed)
    template = template_grid(config)
    clouds = _bent_cloud_sequence(template, config, rng)
    observations = _project_with_noise(clouds, config, rng)
    gt_geodesics, gt_areas = _template_truth(template, graph)
    scene = SyntheticScene(
        gt_clouds=clouds,
        observations=observations,
        gt_geodesics=gt_geodesics,
        gt_areas=gt_areas,
        graph=graph,
        config=config,
        edge_deviation=_edge_deviation(clouds, graph, gt_geodesics),
    )
    scene.validate()
    return scene


def area_residual_system(
    template_areas: np.ndarray, triangles: Sequence[tuple[int, int, int]], m: int
) -> tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]:
    """Residuals and analytic Jacobian of the squared-area matching problem.

    The unknown is one cloud flattened to (3m,); residual t is
    ``template_areas[t] - area_sq`` of triangle t.  The Jacobian uses the
    cross-product gradient of the squared area: with u = Pq - Pj,
    v = Pr - Pj and normal w = u x v, d(area_sq)/dPq = (v x w) / 2,
    d(area_sq)/dPr = (w x u) / 2, and the Pj gradient is minus their sum
    (translation invariance).
    """
    idx = np.asarray(triangles, dtype=int).reshape(-1, 3)
    areas = np.asarray(template_areas, dtype=float)
    if len(idx) != len(areas):
        raise ValueError("one template area per triangle required")

    def residual(x: np.ndarray) -> np.ndarray:
        P = np.asarray(x, dtype=float).reshape(m, 3)
        return areas - area_sq(P[idx[:, 0]], P[idx[:, 1]], P[idx[:, 2]])

    def jacobian(x: np.ndarray) -> np.ndarray:
        P = np.asarray(x, dtype=float).reshape(m, 3)
        pj, pq, pr = P[idx[:, 0]], P[idx[:, 1]], P[idx[:, 2]]
        u = pq - pj
        v = pr - pj
        w = np.cross(u, v)
        grad_q = 0.5 * np.cross(v, w)
        grad_r = 0.5 * np.cross(w, u)
        grad_j = -(grad_q + grad_r)
        J = np.zeros((len(idx), 3 * m))
        rows = np.arange(len(idx))[:, None]
        coords = np.arange(3)[None, :]
        for col, grad in ((0, grad_j), (1, grad_q), (2, grad_r)):
            np.add.at(J, (rows, 3 * idx[:, col, None] + coords), -grad)
        return J

    return residual, jacobian


def generate_equiareal(config: GeneratorConfig, graph: SimplicialGraph) -> SyntheticScene:
    """Generate a scene that preserves template areas but not edge lengths.

    Each bent cloud is displaced pointwise by chi_e * sigma * (1, 1, 1) with
    sigma ~ U(-0.5, 0.5), then projected back onto the template-area manifold
    by damped least squares.  Raises if any image's post-projection RMS area
    residual exceeds 1e-6 of the mean template area.
    """
    if graph.p2 == 0:
        raise ValueError(
            "equiareal generation needs at least one triangle; "
            "rebuild the graph with triangles enabled"
        )
    _check_graph(graph, config.m)
    rng = np.random.default_rng(config.seed)
    template = template_grid(config)
    clouds = _bent_cloud_sequence(template, config, rng)
    gt_geodesics, gt_areas = _template_truth(template, graph)

    sigma = rng.uniform(-0.5, 0.5, (config.n, config.m))
    clouds = clouds + config.chi_e * sigma[..., None]

    residual_fn, jacobian_fn = area_residual_system(gt_areas, graph.e3, config.m)
    residuals = np.empty((config.n, graph.p2))
    tol = _AREA_RESIDUAL_TOL * float(np.mean(gt_areas))
    for i in range(config.n):
        result = lm_minimize(
            residual_fn,
            clouds[i].ravel(),
            jac=jacobian_fn,
            gtol=1e-13,
            ftol=1e-16,
            max_iter=300,
        )
        rms = float(np.sqrt(np.mean(result.residual**2)))
        if rms > tol:
            raise RuntimeError(
                f"equiareal projection failed on image {i}: RMS area residual "
                f"{rms:.3e} exceeds {tol:.3e} ({result.message})"
            )
        clouds[i] = result.x.reshape(config.m, 3)
        residuals[i] = result.residual

    observations = _project_with_noise(clouds, config, rng)
    scene = SyntheticScene(
        gt_clouds=clouds,
        observations=observations,
        gt_geodesics=gt_geodesics,
        gt_areas=gt_areas,
        graph=graph,
        config=config,
        edge_deviation=_edge_deviation(clouds, graph, gt_geodesics),
        area_residuals=residuals,
    )
    scene.validate()
    return scene


@dataclass
class LMResult:
    """Outcome of :func:`lm_minimize`."""

    x: np.ndarray
    residual: np.ndarray
    cost: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str


def lm_minimize(
    residual_fn: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
    *,
    gtol: float = 1e-10,
    ftol: float = 1e-12,
    max_iter: int = 100,
) -> LMResult:
    """Damped least squares (Levenberg-Marquardt) on 0.5 * ||r(x)||^2.

    ``jac`` returns the residual Jacobian; when omitted, forward differences
    are used.  The damping term lam * diag(J^T J) grows on rejected steps and
    shrinks on accepted ones, so rank-deficient (underdetermined) systems are
    handled without special casing.  Stops when the gradient infinity norm
    falls below ``gtol`` (converged), the relative cost decrease falls below
    ``ftol`` (stagnation, reported in ``message``), the iteration cap is hit,
    or damping overflows.  Non-finite residuals abort with the offending
    iteration in the exception message.
    """
    x = np.array(x0, dtype=float).ravel()

    def evaluate(xc: np.ndarray, iteration: int) -> np.ndarray:
        r = np.asarray(residual_fn(xc), dtype=float).ravel()
        if not np.all(np.isfinite(r)):
            bad = int(np.flatnonzero(~np.isfinite(r))[0])
            raise ValueError(
                f"non-finite residual (component {bad}) at iteration {iteration}"
            )
        return r

    def evaluate_jac(xc: np.ndarray, rc: np.ndarray) -> np.ndarray:
        if jac is not None:
            return np.asarray(jac(xc), dtype=float).reshape(rc.size, xc.size)
        J = np.empty((rc.size, xc.size))
        h = np.sqrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(xc))
        for k in range(xc.size):
            xp = xc.copy()
            xp[k] += h[k]
            J[:, k] = (evaluate(xp, -1) - rc) / h[k]
        return J

    r = evaluate(x, 0)
    cost = 0.5 * float(r @ r)
    J = evaluate_jac(x, r)
    g = J.T @ r
    grad_norm = float(np.max(np.abs(g))) if g.size else 0.0
    if grad_norm <= gtol:
        return LMResult(x, r, cost, grad_norm, 0, True, "gradient tolerance reached")

    A = J.T @ J
    lam = 1e-3 * max(float(np.max(np.diag(A))), 1e-12)
    message = "iteration cap reached"
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        accepted = False
        while lam <= 1e15:
            D = np.diag(A).copy()
            floor = max(float(np.max(D)), 1.0) * 1e-12
            M = A + lam * np.diag(np.maximum(D, floor))
            try:
                dx = np.linalg.solve(M, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            x_new = x + dx
            r_new = evaluate(x_new, iterations)
            cost_new = 0.5 * float(r_new @ r_new)
            if cost_new < cost:
                accepted = True
                break
            lam *= 5.0
        if not accepted:
            message = "damping overflow (no descent step found)"
            break

        decrease = cost - cost_new
        x, r, cost = x_new, r_new, cost_new
        lam = max(lam / 3.0, 1e-15)
        J = evaluate_jac(x, r)
        g = J.T @ r
        A = J.T @ J
        grad_norm = float(np.max(np.abs(g)))
        if grad_norm <= gtol:
            converged = True
            message = "gradient tolerance reached"
            break
        if decrease <= ftol * max(cost + decrease, np.finfo(float).tiny):
            message = f"relative cost decrease below ftol={ftol:g} (stagnation)"
            break

    return LMResult(x, r, cost, grad_norm, iterations, converged, message)


@dataclass(frozen=True)
class DiscriminantFractions:
    """Fractions of sampled triangles whose displaced-area quadratic has a
    real root, for the one-vertex and two-vertex displacement ansatz."""

    ansatz1: float
    ansatz2: float


def lemma1_sample(
    count: int,
    h1_max: float = 0.1,
    h2_max: float = 0.1,
    edge_scale: float = 0.6,
    seed: int = 0,
) -> DiscriminantFractions:
    """Sample discriminant positivity of the area-compensation quadratic.

    Random triangles are drawn as unit sightlines through image points in
    [-0.5, 0.5]^2 with depths in [0.5, 1.5], rescaled so each triangle's mean
    edge length equals ``edge_scale``.  Displacing the first depth by
    h1 ~ U(0, h1_max) (and, for the second ansatz, the second depth by
    h2 ~ U(0, h2_max)) turns "restore the squared area by moving the third
    depth" into a quadratic a*x^2 + b*x + c = 0 whose coefficients come from
    the six-term depth quartic; a real compensating depth exists iff the
    discriminant b^2 - 4ac is nonnegative.  At zero displacement the original
    third depth is a root, so the fraction is exactly 1.
    """
    if count < 1:
        raise ValueError(f"count must be positive, got {count}")
    for name, value in (("h1_max", h1_max), ("h2_max", h2_max)):
        if not 0.0 <= value <= 0.1:
            raise ValueError(f"{name} must lie in [0, 0.1], got {value}")
    if edge_scale <= 0:
        raise ValueError(f"edge_scale must be positive, got {edge_scale}")

    rng = np.random.default_rng(seed)
    uv = rng.uniform(-0.5, 0.5, (count, 3, 2))
    pts = np.concatenate([uv, np.ones((count, 3, 1))], axis=2)
    d = pts / np.linalg.norm(pts, axis=2, keepdims=True)
    depths = rng.uniform(0.5, 1.5, (count, 3))
    P = depths[..., None] * d
    mean_edge = (
        np.linalg.norm(P[:, 1] - P[:, 0], axis=1)
        + np.linalg.norm(P[:, 2] - P[:, 1], axis=1)
        + np.linalg.norm(P[:, 0] - P[:, 2], axis=1)
    ) / 3.0
    depths *= (edge_scale / mean_edge)[:, None]

    dj, dq, dr = d[:, 0], d[:, 1], d[:, 2]
    delta_j, delta_q, delta_r = depths[:, 0], depths[:, 1], depths[:, 2]
    G = area_quartic_coeffs(dj, dq, dr)
    h1 = rng.uniform(0.0, h1_max, count)
    h2 = rng.uniform(0.0, h2_max, count)

    def quad_coeffs(J: np.ndarray, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        a = G.g3 * J**2 + G.g5 * Q * J + G.g6 * Q**2
        b = G.g2 * Q * J**2 + G.g4 * Q**2 * J
        c = G.g1 * Q**2 * J**2
        return a, b, c

    # Four times the original squared area, grouped exactly like the
    # quadratic coefficients so the zero-displacement case cancels exactly.
    a0, b0, c0 = quad_coeffs(delta_j, delta_q)
    rhs = (a0 * delta_r + b0) * delta_r + c0

    def positive_fraction(J: np.ndarray, Q: np.ndarray) -> float:
        a, b, c_free = quad_coeffs(J, Q)
        c = c_free - rhs
        disc = b * b - 4.0 * a * c
        tol = 16.0 * np.finfo(float).eps * np.maximum(b * b, np.abs(4.0 * a * c))
        return float(np.mean(disc >= -tol))

    return DiscriminantFractions(
        ansatz1=positive_fraction(delta_j + h1, delta_q),
        ansatz2=positive_fraction(delta_j + h1, delta_q + h2),
    )
