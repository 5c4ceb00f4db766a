"""Scale alignment and error metrics against ground truth.

Reconstructions are camera-frame direct, so the only gauge freedom left
against ground truth is one global scale (the scene anchor fixes Sum G2 = 1
in scene units, not in ground-truth units).  ``align_scale`` recovers that
scalar jointly over all frames; ``rms_med`` reports point errors after
alignment.  ``deviation_metrics`` measures how far a reconstruction drifts
from its own recovered isometry/equiareality targets, computed geometrically
from the unscaled extracted points.

Rotation/translation (Procrustes) alignment is deliberately not offered.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import area_sq, dist_sq
from .graph import SimplicialGraph
from .reconstruct import Reconstruction

__all__ = [
    "EvalReport",
    "align_scale",
    "per_frame_scales",
    "rms_med",
    "deviation_metrics",
    "scene_diameter",
    "evaluate",
    "format_metric",
]


@dataclass
class EvalReport:
    """Alignment scale, point errors, and deviation metrics for one run."""

    scale: float
    rms: float
    med: float
    per_frame: list[float] = field(default_factory=list)
    gE: float | None = None
    aE: float | None = None

    def validate(self) -> None:
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        for name in ("rms", "med"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


def _as_clouds(arr, name: str) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    if out.ndim != 3 or out.shape[2] != 3:
        raise ValueError(f"{name} must have shape (n, m, 3), got {out.shape}")
    return out


def _mask(est: np.ndarray, gt: np.ndarray, visibility) -> np.ndarray:
    if est.shape != gt.shape:
        raise ValueError(f"shape mismatch: est {est.shape} vs gt {gt.shape}")
    if visibility is None:
        return np.ones(est.shape[:2], dtype=bool)
    vis = np.asarray(visibility, dtype=bool)
    if vis.shape != est.shape[:2]:
        raise ValueError(f"visibility shape {vis.shape} != {est.shape[:2]}")
    return vis


def align_scale(est, gt, visibility=None) -> float:
    """Least-squares global scale: s = <vec(est), vec(gt)> / <vec(est), vec(est)>.

    One scalar for the whole sequence; per-frame scales are available
    separately as a diagnostic.  Only mutually visible points enter.
    """
    est, gt = _as_clouds(est, "est"), _as_clouds(gt, "gt")
    vis = _mask(est, gt, visibility)
    e, g = est[vis], gt[vis]
    denom = float(np.vdot(e, e))
    if denom <= 0:
        raise ValueError("estimate has zero norm; cannot recover scale")
    return float(np.vdot(e, g) / denom)


def per_frame_scales(est, gt, visibility=None) -> list[float]:
    """Per-image least-squares scales (diagnostic only; not used to align)."""
    est, gt = _as_clouds(est, "est"), _as_clouds(gt, "gt")
    vis = _mask(est, gt, visibility)
    out = []
    for i in range(est.shape[0]):
        e, g = est[i][vis[i]], gt[i][vis[i]]
        denom = float(np.vdot(e, e))
        out.append(float(np.vdot(e, g) / denom) if denom > 0 else float("nan"))
    return out


def rms_med(est_scaled, gt, visibility=None) -> tuple[float, float]:
    """RMS and median of per-point error norms over all visible points."""
    est, gt = _as_clouds(est_scaled, "est_scaled"), _as_clouds(gt, "gt")
    vis = _mask(est, gt, visibility)
    err = np.linalg.norm(est[vis] - gt[vis], axis=-1)
    if err.size == 0:
        raise ValueError("no mutually visible points")
    return float(np.sqrt(np.mean(err**2))), float(np.median(err))


def deviation_metrics(
    recon: Reconstruction, graph: SimplicialGraph
) -> tuple[float, float | None]:
    """Mean absolute deviation from the recovered isometry/equiareality targets.

    gE averages |G2(j,q) - ||P_j - P_q||^2| over all images and e2 edges;
    aE averages |G3(j,q,r) - Area^2(P_j,P_q,P_r)| over e3 triples (None when
    the graph carries no triangles).  Both use squared quantities, matching
    the coupling functionals, and are computed from the unscaled points.
    """
    clouds = np.stack([np.asarray(c, dtype=float) for c in recon.clouds])
    g_terms = [
        abs(recon.geodesics[(j, q)] - dist_sq(c[j], c[q]))
        for c in clouds
        for (j, q) in graph.e2
    ]
    gE = float(np.mean(g_terms))
    if not graph.e3 or not recon.areas:
        return gE, None
    a_terms = [
        abs(recon.areas[(j, q, r)] - area_sq(c[j], c[q], c[r]))
        for c in clouds
        for (j, q, r) in graph.e3
    ]
    return gE, float(np.mean(a_terms))


def scene_diameter(gt) -> float:
    """Largest intra-frame point-pair distance across the sequence."""
    gt = _as_clouds(gt, "gt")
    diam = 0.0
    for frame in gt:
        delta = frame[:, None, :] - frame[None, :, :]
        diam = max(diam, float(np.max(np.linalg.norm(delta, axis=-1))))
    return diam


def evaluate(
    est,
    gt,
    visibility=None,
    recon: Reconstruction | None = None,
    graph: SimplicialGraph | None = None,
) -> EvalReport:
    """Full report: align scale, point errors, and (optionally) gE/aE."""
    est, gt = _as_clouds(est, "est"), _as_clouds(gt, "gt")
    vis = _mask(est, gt, visibility)
    s = align_scale(est, gt, vis)
    scaled = s * est
    rms, med = rms_med(scaled, gt, vis)
    per_frame = [
        float(np.sqrt(np.mean(np.sum((scaled[i][vis[i]] - gt[i][vis[i]]) ** 2, axis=-1))))
        for i in range(est.shape[0])
    ]
    gE = aE = None
    if recon is not None and graph is not None:
        gE, aE = deviation_metrics(recon, graph)
    report = EvalReport(scale=s, rms=rms, med=med, per_frame=per_frame, gE=gE, aE=aE)
    report.validate()
    return report


def format_metric(value: float) -> str:
    """Two-decimal table formatting ("2.19" style)."""
    return f"{value:.2f}"
