"""Oracle tests for the geometric kernels.

The load-bearing checks are the two quartic/oracle sweeps: the expanded area
polynomials (both the depth form and the free-point form) must agree with the
direct cross-product area to 1e-10 relative over 10^4 random draws.  The
coefficient identities are verified independently via

    n = dq x dr * (dq*dr) + dj x dq * (dj*dq) - dj x dr * (dj*dr)   (scaled)

so that G1 = ||dj x dq||^2, G2 = -2<dj x dq, dj x dr>, G3 = ||dj x dr||^2,
G4 = +2<dj x dq, dq x dr>, G5 = -2<dq x dr, dj x dr>, G6 = ||dq x dr||^2.
"""

from __future__ import annotations

import numpy as np
import pytest

from eqnrsfm.geometry import (
    CameraIntrinsics,
    area_quartic_coeffs,
    area_quartic_pp,
    area_sq,
    dist_sq,
    normalize,
    project,
)

RNG = np.random.default_rng(20260814)


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def _random_sightlines(k: int) -> np.ndarray:
    """Random unit vectors in the forward hemisphere (z > 0.2)."""
    v = RNG.normal(size=(k, 3))
    v[:, 2] = np.abs(v[:, 2]) + 0.2
    return _unit(v)


def _random_rotation() -> np.ndarray:
    q, _ = np.linalg.qr(RNG.normal(size=(3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


# ---------------------------------------------------------------------------
# normalize
# ---------------------------------------------------------------------------


def test_normalize_principal_point_maps_to_optical_axis():
    K = CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=240.0)
    obs = normalize(np.array([[[320.0, 240.0]]]), K)
    np.testing.assert_allclose(obs.points[0, 0], [0.0, 0.0, 1.0])
    np.testing.assert_allclose(obs.sightlines[0, 0], [0.0, 0.0, 1.0])


def test_normalize_unit_tangent():
    K = CameraIntrinsics(fx=600.0, fy=500.0, cx=320.0, cy=240.0)
    obs = normalize(np.array([[[920.0, 240.0]]]), K)
    np.testing.assert_allclose(obs.points[0, 0], [1.0, 0.0, 1.0])
    np.testing.assert_allclose(obs.sightlines[0, 0], np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0))


def test_normalize_random_batch_unit_norms():
    K = CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=320.0)
    pixels = RNG.uniform(0.0, 640.0, size=(4, 50, 2))
    obs = normalize(pixels, K)
    norms = np.linalg.norm(obs.sightlines.reshape(-1, 3), axis=1)
    np.testing.assert_allclose(norms, 1.0, atol=1e-12)


def test_normalize_rejects_nonfinite_with_index():
    K = CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=320.0)
    pixels = RNG.uniform(0.0, 640.0, size=(2, 3, 2))
    pixels[1, 2, 0] = np.nan
    with pytest.raises(ValueError, match="image 1, point 2"):
        normalize(pixels, K)


def test_normalize_invisible_entries_are_zeroed():
    K = CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=320.0)
    pixels = RNG.uniform(100.0, 500.0, size=(2, 4, 2))
    vis = np.ones((2, 4), dtype=bool)
    vis[1, 3] = False
    obs = normalize(pixels, K, vis)
    assert np.all(obs.points[1, 3] == 0.0)
    assert np.all(obs.sightlines[1, 3] == 0.0)


def test_normalize_requires_first_image_fully_visible():
    K = CameraIntrinsics(fx=600.0, fy=600.0, cx=320.0, cy=320.0)
    pixels = RNG.uniform(100.0, 500.0, size=(2, 4, 2))
    vis = np.ones((2, 4), dtype=bool)
    vis[0, 1] = False
    with pytest.raises(ValueError, match="first image"):
        normalize(pixels, K, vis)


def test_intrinsics_reject_nonpositive_focal():
    with pytest.raises(ValueError):
        CameraIntrinsics(fx=-1.0, fy=600.0, cx=0.0, cy=0.0)


# ---------------------------------------------------------------------------
# dist_sq / area_sq
# ---------------------------------------------------------------------------


def test_dist_sq_frozen_examples():
    assert dist_sq(np.zeros(3), np.zeros(3)) == 0.0
    assert dist_sq(np.array([1.0, 0, 0]), np.array([0, 1.0, 0])) == 2.0


def test_dist_sq_matches_componentwise_and_symmetry():
    a = RNG.normal(size=(200, 3))
    b = RNG.normal(size=(200, 3))
    expected = np.sum((a - b) ** 2, axis=1)
    np.testing.assert_allclose(dist_sq(a, b), expected, rtol=1e-14)
    np.testing.assert_allclose(dist_sq(a, b), dist_sq(b, a), rtol=0)


def test_dist_sqrt_triangle_inequality():
    a, b, c = RNG.normal(size=(3, 500, 3))
    ab = np.sqrt(dist_sq(a, b))
    bc = np.sqrt(dist_sq(b, c))
    ac = np.sqrt(dist_sq(a, c))
    assert np.all(ac <= ab + bc + 1e-12)


def test_area_sq_frozen_examples():
    assert area_sq(np.zeros(3), np.array([1.0, 1, 1]), np.array([2.0, 2, 2])) == 0.0
    np.testing.assert_allclose(
        area_sq(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])), 0.75
    )
    np.testing.assert_allclose(
        area_sq(np.zeros(3), np.array([1.0, 0, 0]), np.array([0, 1.0, 0])), 0.25
    )


def test_area_sq_permutation_invariant():
    pts = RNG.normal(size=(300, 3, 3))
    base = area_sq(pts[:, 0], pts[:, 1], pts[:, 2])
    for perm in [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]:
        other = area_sq(pts[:, perm[0]], pts[:, perm[1]], pts[:, perm[2]])
        np.testing.assert_allclose(other, base, rtol=1e-10)


def test_area_sq_rigid_invariant():
    pts = RNG.normal(size=(300, 3, 3))
    base = area_sq(pts[:, 0], pts[:, 1], pts[:, 2])
    for _ in range(5):
        R = _random_rotation()
        t = RNG.normal(size=3)
        moved = pts @ R.T + t
        np.testing.assert_allclose(
            area_sq(moved[:, 0], moved[:, 1], moved[:, 2]), base, rtol=1e-9
        )


# ---------------------------------------------------------------------------
# depth quartic
# ---------------------------------------------------------------------------


def test_quartic_coeffs_match_cross_product_identities():
    """G1..G6 equal the Gram entries of the cross products of the sightlines."""
    dj = _random_sightlines(2000)
    dq = _random_sightlines(2000)
    dr = _random_sightlines(2000)
    c = area_quartic_coeffs(dj, dq, dr)
    jq = np.cross(dj, dq)
    jr = np.cross(dj, dr)
    qr = np.cross(dq, dr)
    dot = lambda a, b: np.einsum("ij,ij->i", a, b)  # noqa: E731
    np.testing.assert_allclose(c.g1, dot(jq, jq), rtol=0, atol=1e-12)
    np.testing.assert_allclose(c.g2, -2.0 * dot(jq, jr), rtol=0, atol=1e-12)
    np.testing.assert_allclose(c.g3, dot(jr, jr), rtol=0, atol=1e-12)
    np.testing.assert_allclose(c.g4, 2.0 * dot(jq, qr), rtol=0, atol=1e-12)
    np.testing.assert_allclose(c.g5, -2.0 * dot(qr, jr), rtol=0, atol=1e-12)
    np.testing.assert_allclose(c.g6, dot(qr, qr), rtol=0, atol=1e-12)


def test_quartic_coincident_sightlines_give_zero():
    d = _random_sightlines(50)
    c = area_quartic_coeffs(d, d, d)
    deltas = RNG.uniform(0.5, 3.0, size=(3, 50))
    np.testing.assert_allclose(c.evaluate(*deltas), 0.0, atol=1e-12)


def test_quartic_axis_example():
    c = area_quartic_coeffs(
        np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])
    )
    np.testing.assert_allclose(c.evaluate(1.0, 1.0, 1.0), 0.75)


def test_quartic_oracle_sweep_1e4():
    """10^4 random draws: quartic == area_sq(dj*dj_hat, ...) to 1e-10 relative."""
    N = 10_000
    dj = _random_sightlines(N)
    dq = _random_sightlines(N)
    dr = _random_sightlines(N)
    deltas = RNG.uniform(0.2, 5.0, size=(3, N))
    c = area_quartic_coeffs(dj, dq, dr)
    got = c.evaluate(*deltas)
    want = area_sq(deltas[0, :, None] * dj, deltas[1, :, None] * dq, deltas[2, :, None] * dr)
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-13)


def test_quartic_qr_swap_symmetry():
    """Swapping the q and r vertices leaves the evaluated squared area alone."""
    dj = _random_sightlines(500)
    dq = _random_sightlines(500)
    dr = _random_sightlines(500)
    deltas = RNG.uniform(0.2, 5.0, size=(3, 500))
    forward = area_quartic_coeffs(dj, dq, dr).evaluate(deltas[0], deltas[1], deltas[2])
    swapped = area_quartic_coeffs(dj, dr, dq).evaluate(deltas[0], deltas[2], deltas[1])
    np.testing.assert_allclose(swapped, forward, rtol=1e-10, atol=1e-13)
    # the coefficient permutation under the swap: g1<->g3, g4<->g5, g2/g6 fixed
    a = area_quartic_coeffs(dj, dq, dr)
    b = area_quartic_coeffs(dj, dr, dq)
    np.testing.assert_allclose(b.g1, a.g3, atol=1e-12)
    np.testing.assert_allclose(b.g3, a.g1, atol=1e-12)
    np.testing.assert_allclose(b.g4, a.g5, atol=1e-12)
    np.testing.assert_allclose(b.g5, a.g4, atol=1e-12)
    np.testing.assert_allclose(b.g2, a.g2, atol=1e-12)
    np.testing.assert_allclose(b.g6, a.g6, atol=1e-12)


# ---------------------------------------------------------------------------
# free-point quartic
# ---------------------------------------------------------------------------


def test_pp_quartic_collinear_is_zero():
    a = RNG.normal(size=(100, 3))
    d = RNG.normal(size=(100, 3))
    t = RNG.uniform(-2, 2, size=(100, 1))
    s = RNG.uniform(-2, 2, size=(100, 1))
    np.testing.assert_allclose(area_quartic_pp(a, a + t * d, a + s * d), 0.0, atol=1e-9)


def test_pp_quartic_axis_example():
    np.testing.assert_allclose(
        area_quartic_pp(np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])),
        0.75,
    )


def test_pp_quartic_oracle_sweep_1e4():
    N = 10_000
    pts = RNG.normal(size=(N, 3, 3)) * 2.0
    got = area_quartic_pp(pts[:, 0], pts[:, 1], pts[:, 2])
    want = area_sq(pts[:, 0], pts[:, 1], pts[:, 2])
    np.testing.assert_allclose(got, want, rtol=1e-10, atol=1e-13)


# ---------------------------------------------------------------------------
# project
# ---------------------------------------------------------------------------


def test_project_frozen_examples():
    np.testing.assert_allclose(project(np.array([0.0, 0, 5])), [0, 0, 1])
    np.testing.assert_allclose(project(np.array([2.0, 4, 2])), [1, 2, 1])


def test_project_scale_invariant_and_parallel():
    P = RNG.normal(size=(500, 3))
    P[:, 2] = np.abs(P[:, 2]) + 0.5
    s = RNG.uniform(0.1, 10.0, size=(500, 1))
    np.testing.assert_allclose(project(s * P), project(P), rtol=1e-12)
    cross = np.cross(project(P), P)
    np.testing.assert_allclose(cross / np.linalg.norm(P, axis=1, keepdims=True), 0.0, atol=1e-12)


def test_project_rejects_points_behind_camera():
    P = np.array([[1.0, 1.0, 2.0], [1.0, 1.0, -3.0]])
    with pytest.raises(ValueError, match="behind camera"):
        project(P)
