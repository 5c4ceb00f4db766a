"""Camera normalization, sightlines, and closed-form geometric kernels.

Conventions used by the whole package:

* image points live in normalized homogeneous coordinates p = (u, v, 1);
* a sightline is the unit vector d = p / ||p||;
* distances and triangle areas are always carried **squared** so that every
  constraint stays polynomial — square roots only appear in reports.

For points written as depth times sightline, P = delta * d, the squared area
of a triangle is a quartic in the three depths,

    h(dj, dq, dr; delta) = 1/4 * ( (G1*dq^2 + G2*dr*dq + G3*dr^2) * dj^2
                                   + (G4*dr*dq^2 + G5*dr^2*dq) * dj
                                   + G6*dq^2*dr^2 ),

whose six data coefficients come from :func:`area_quartic_coeffs`.  The
free-point analogue is the 63-term quartic :func:`area_quartic_pp` in the nine
point coordinates.  Both must agree with the direct cross-product oracle
:func:`area_sq`; the test-suite sweeps this to 1e-10 relative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOL


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")

    def as_matrix(self) -> np.ndarray:
        return np.array(
            [[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )


@dataclass
class ObservationSet:
    """Normalized correspondences over n images and m points.

    ``points`` holds normalized homogeneous coordinates (third component 1),
    ``sightlines`` the unit vectors p/||p||, and ``visibility`` the boolean
    mask.  Invisible entries carry zeros in both arrays.  Image 0 must be
    fully visible: it anchors the graph construction.
    """

    points: np.ndarray      # (n, m, 3)
    sightlines: np.ndarray  # (n, m, 3)
    visibility: np.ndarray  # (n, m) bool

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def validate(self, tol: float = DEFAULT_TOL.unit_norm) -> None:
        if self.points.shape != (self.n, self.m, 3) or self.sightlines.shape != self.points.shape:
            raise ValueError("points/sightlines shape mismatch")
        if self.visibility.shape != (self.n, self.m):
            raise ValueError("visibility shape mismatch")
        if not np.all(self.visibility[0]):
            raise ValueError("every point of the first image must be visible")
        vis = self.visibility
        norms = np.linalg.norm(self.sightlines[vis], axis=-1)
        if norms.size and np.max(np.abs(norms - 1.0)) > tol:
            raise ValueError("visible sightlines must have unit norm")
        if not np.all(self.points[vis][:, 2] == 1.0):
            raise ValueError("normalized points must have third component 1")
        # d positively proportional to p
        cross = np.cross(self.points[vis], self.sightlines[vis])
        if cross.size and np.max(np.abs(cross)) > 1e-9:
            raise ValueError("sightlines must be parallel to their image points")

    def reference_points(self) -> np.ndarray:
        """2D normalized coordinates of the first image (graph anchor)."""
        return self.points[0, :, :2].copy()


def normalize(
    pixels: np.ndarray,
    K: CameraIntrinsics,
    visibility: np.ndarray | None = None,
) -> ObservationSet:
    """Back-project pixel correspondences to normalized points and sightlines.

    ``pixels`` is (n, m, 2).  Invisible entries are zeroed.  Non-finite input
    at a visible entry is rejected with its index.
    """
    pixels = np.asarray(pixels, dtype=float)
    if pixels.ndim != 3 or pixels.shape[2] != 2:
        raise ValueError(f"pixels must be (n, m, 2), got {pixels.shape}")
    n, m, _ = pixels.shape
    if visibility is None:
        visibility = np.ones((n, m), dtype=bool)
    visibility = np.asarray(visibility, dtype=bool)

    bad = ~np.isfinite(pixels).all(axis=2) & visibility
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValueError(f"non-finite pixel at image {i}, point {j}")

    points = np.zeros((n, m, 3))
    points[..., 0] = (pixels[..., 0] - K.cx) / K.fx
    points[..., 1] = (pixels[..., 1] - K.cy) / K.fy
    points[..., 2] = 1.0
    points[~visibility] = 0.0

    sight = np.zeros_like(points)
    norms = np.linalg.norm(points[visibility], axis=-1)
    sight[visibility] = points[visibility] / norms[:, None]

    obs = ObservationSet(points=points, sightlines=sight, visibility=visibility)
    obs.validate()
    return obs


def observations_from_normalized(
    normalized: np.ndarray, visibility: np.ndarray | None = None
) -> ObservationSet:
    """Build an :class:`ObservationSet` from already-normalized (u, v) pairs."""
    normalized = np.asarray(normalized, dtype=float)
    n, m = normalized.shape[:2]
    if visibility is None:
        visibility = np.ones((n, m), dtype=bool)
    visibility = np.asarray(visibility, dtype=bool)
    points = np.zeros((n, m, 3))
    points[..., :2] = normalized[..., :2]
    points[..., 2] = 1.0
    points[~visibility] = 0.0
    sight = np.zeros_like(points)
    norms = np.linalg.norm(points[visibility], axis=-1)
    sight[visibility] = points[visibility] / norms[:, None]
    obs = ObservationSet(points=points, sightlines=sight, visibility=visibility)
    obs.validate()
    return obs


def dist_sq(pa: np.ndarray, pb: np.ndarray) -> np.ndarray:
    """Squared Euclidean distance ||pa - pb||^2 (broadcasts over leading axes)."""
    d = np.asarray(pa, dtype=float) - np.asarray(pb, dtype=float)
    return np.einsum("...k,...k->...", d, d)


def area_sq(pa: np.ndarray, pb: np.ndarray, pc: np.ndarray) -> np.ndarray:
    """Squared triangle area via the cross product: (1/2 ||(pa-pb) x (pc-pb)||)^2.

    This is the brute-force oracle that every lifted area functional must
    reproduce.
    """
    u = np.asarray(pa, dtype=float) - np.asarray(pb, dtype=float)
    v = np.asarray(pc, dtype=float) - np.asarray(pb, dtype=float)
    n = np.cross(u, v)
    return 0.25 * np.einsum("...k,...k->...", n, n)


@dataclass(frozen=True)
class AreaQuarticCoeffs:
    """The six data coefficients of the depth quartic for one 2-simplex.

    Fields may be scalars or broadcast arrays (one coefficient set per batch
    element).
    """

    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    g4: np.ndarray
    g5: np.ndarray
    g6: np.ndarray

    def evaluate(self, dj: np.ndarray, dq: np.ndarray, dr: np.ndarray) -> np.ndarray:
        """Squared area at depths (dj, dq, dr)."""
        return 0.25 * (
            (self.g1 * dq**2 + self.g2 * dr * dq + self.g3 * dr**2) * dj**2
            + (self.g4 * dr * dq**2 + self.g5 * dr**2 * dq) * dj
            + self.g6 * dq**2 * dr**2
        )


def area_quartic_coeffs(dj: np.ndarray, dq: np.ndarray, dr: np.ndarray) -> AreaQuarticCoeffs:
    """Coefficients G1..G6 of the squared-area quartic in the depths.

    Inputs are unit sightlines (broadcastable, last axis 3).  The expanded
    polynomial forms below are equivalent to cross products of the sightlines
    (G1 = ||dj x dq||^2, G2 = -2<dj x dq, dj x dr>, ...); the tests verify the
    expansion against that identity and against the area oracle.
    """
    dj = np.asarray(dj, dtype=float)
    dq = np.asarray(dq, dtype=float)
    dr = np.asarray(dr, dtype=float)
    xj, yj, zj = dj[..., 0], dj[..., 1], dj[..., 2]
    xq, yq, zq = dq[..., 0], dq[..., 1], dq[..., 2]
    xr, yr, zr = dr[..., 0], dr[..., 1], dr[..., 2]

    g1 = (
        (yq**2 + zq**2) * xj**2
        - 2.0 * (yq * xq * yj + zq * xq * zj) * xj
        + (zq**2 + xq**2) * yj**2
        - 2.0 * zq * yq * zj * yj
        + (yq**2 + xq**2) * zj**2
    )
    g2 = (
        -2.0 * (yq * yr + zr * zq) * xj**2
        - 2.0 * ((-xr * yq - xq * yr) * yj + (-xr * zq - zr * xq) * zj) * xj
        - 2.0 * (zr * zq + xq * xr) * yj**2
        + 2.0 * (zr * yq + zq * yr) * zj * yj
        - 2.0 * (yq * yr + xq * xr) * zj**2
    )
    g3 = (
        (yr**2 + zr**2) * xj**2
        - 2.0 * (yr * xr * yj + zr * xr * zj) * xj
        + (xr**2 + zr**2) * yj**2
        - 2.0 * yj * zj * yr * zr
        + zj**2 * (xr**2 + yr**2)
    )
    g4 = (
        2.0 * ((yq * yr + zr * zq) * xq - xr * (yq**2 + zq**2)) * xj
        - 2.0 * (-zr * zq * yq - xr * yq * xq + zq**2 * yr + xq**2 * yr) * yj
        - 2.0 * (yq**2 * zr - zq * yr * yq - xr * zq * xq + xq**2 * zr) * zj
    )
    g5 = (
        2.0 * (-(yr**2 + zr**2) * xq - xr * (-yq * yr - zr * zq)) * xj
        - 2.0 * (-xr * yr * xq + (xr**2 + zr**2) * yq - zq * yr * zr) * yj
        - 2.0 * (-xr * zr * xq - yr * zr * yq + zq * (xr**2 + yr**2)) * zj
    )
    g6 = (
        (yr**2 + zr**2) * xq**2
        - 2.0 * xr * (yq * yr + zr * zq) * xq
        + (xr**2 + zr**2) * yq**2
        - 2.0 * zq * yr * zr * yq
        + zq**2 * (xr**2 + yr**2)
    )
    return AreaQuarticCoeffs(g1, g2, g3, g4, g5, g6)


def area_quartic_pp(pj: np.ndarray, pq: np.ndarray, pr: np.ndarray) -> np.ndarray:
    """Squared triangle area as the expanded 9-coordinate quartic (63 terms).

    Must equal :func:`area_sq` on the same arguments; kept in the fully
    expanded monomial form because the lifted area functional on the
    free-point Gram matrix mirrors these terms one-to-one.
    """
    pj = np.asarray(pj, dtype=float)
    pq = np.asarray(pq, dtype=float)
    pr = np.asarray(pr, dtype=float)
    Xj, Yj, Zj = pj[..., 0], pj[..., 1], pj[..., 2]
    Xq, Yq, Zq = pq[..., 0], pq[..., 1], pq[..., 2]
    Xr, Yr, Zr = pr[..., 0], pr[..., 1], pr[..., 2]

    t = (
        Xj**2 * Yq**2 - 2 * Xj**2 * Yq * Yr + Xj**2 * Yr**2
        + Xj**2 * Zq**2 - 2 * Xj**2 * Zq * Zr + Xj**2 * Zr**2
        - 2 * Xj * Xq * Yj * Yq + 2 * Xj * Xq * Yj * Yr
        + 2 * Xj * Xq * Yq * Yr - 2 * Xj * Xq * Yr**2
        - 2 * Xj * Xq * Zj * Zq + 2 * Xj * Xq * Zj * Zr
        + 2 * Xj * Xq * Zq * Zr - 2 * Xj * Xq * Zr**2
        + 2 * Xj * Xr * Yj * Yq - 2 * Xj * Xr * Yj * Yr
        - 2 * Xj * Xr * Yq**2 + 2 * Xj * Xr * Yq * Yr
        + 2 * Xj * Xr * Zj * Zq - 2 * Xj * Xr * Zj * Zr
        - 2 * Xj * Xr * Zq**2 + 2 * Xj * Xr * Zq * Zr
        + Xq**2 * Yj**2 - 2 * Xq**2 * Yj * Yr + Xq**2 * Yr**2
        + Xq**2 * Zj**2 - 2 * Xq**2 * Zj * Zr + Xq**2 * Zr**2
        - 2 * Xq * Xr * Yj**2 + 2 * Xq * Xr * Yj * Yq
        + 2 * Xq * Xr * Yj * Yr - 2 * Xq * Xr * Yq * Yr
        - 2 * Xq * Xr * Zj**2 + 2 * Xq * Xr * Zj * Zq
        + 2 * Xq * Xr * Zj * Zr - 2 * Xq * Xr * Zq * Zr
        + Xr**2 * Yj**2 - 2 * Xr**2 * Yj * Yq + Xr**2 * Yq**2
        + Xr**2 * Zj**2 - 2 * Xr**2 * Zj * Zq + Xr**2 * Zq**2
        + Yj**2 * Zq**2 - 2 * Yj**2 * Zq * Zr + Yj**2 * Zr**2
        - 2 * Yj * Yq * Zj * Zq + 2 * Yj * Yq * Zj * Zr
        + 2 * Yj * Yq * Zq * Zr - 2 * Yj * Yq * Zr**2
        + 2 * Yj * Yr * Zj * Zq - 2 * Yj * Yr * Zj * Zr
        - 2 * Yj * Yr * Zq**2 + 2 * Yj * Yr * Zq * Zr
        + Yq**2 * Zj**2 - 2 * Yq**2 * Zj * Zr + Yq**2 * Zr**2
        - 2 * Yq * Yr * Zj**2 + 2 * Yq * Yr * Zj * Zq
        + 2 * Yq * Yr * Zj * Zr - 2 * Yq * Yr * Zq * Zr
        + Yr**2 * Zj**2 - 2 * Yr**2 * Zj * Zq + Yr**2 * Zq**2
    )
    return 0.25 * t


def project(P: np.ndarray) -> np.ndarray:
    """Perspective projection P -> (X/Z, Y/Z, 1).

    Raises on points at or behind the camera plane (Z <= 0), reporting the
    first offending index.
    """
    P = np.asarray(P, dtype=float)
    Z = P[..., 2]
    if np.any(Z <= 0):
        idx = np.argwhere(Z <= 0)[0]
        raise ValueError(f"point behind camera at index {tuple(idx)} (Z={Z[tuple(idx)]:.6g})")
    out = np.empty_like(P)
    out[..., 0] = P[..., 0] / Z
    out[..., 1] = P[..., 1] / Z
    out[..., 2] = 1.0
    return out


def check_cloud(points: np.ndarray, m: int | None = None) -> np.ndarray:
    """Validate an (m, 3) point cloud: finite entries, right shape."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 3:
        raise ValueError(f"point cloud must be (m, 3), got {points.shape}")
    if m is not None and points.shape[0] != m:
        raise ValueError(f"expected {m} points, got {points.shape[0]}")
    if not np.isfinite(points).all():
        raise ValueError("point cloud contains non-finite entries")
    return points
