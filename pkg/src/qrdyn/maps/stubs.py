"""Synthetic maps used to exercise the pits-effect scanner.

The cluster stub has |f| <= 1 on three balls of radius ~0.009 * ring per
dyadic ring, with |f| growing like |x| e^{|x|} away from them; a wide shallow
skirt around each pit gives coarse samplers a gradient to descend.  The
sublevel set stays three-clustered under both the unit threshold and
polynomial thresholds R^alpha.  The power stub has |f| = |x|^2 and is flagged
polynomial-type.
"""

from __future__ import annotations

import numpy as np

from ..mapspec import Array, MapSpec

PIT_WIDTH = 0.01   # pit radius as a fraction of the ring radius
PIT_SKIRT = 8.0    # the modulus ramps back up over this multiple of the pit radius
_PIT_ANGLES = np.array([0.0, 2.0 * np.pi / 3.0, 4.0 * np.pi / 3.0])


def _pit_centers(ring_radius: Array) -> Array:
    """(..., 3, 2) pit centers on the circle of the given radius."""
    cx = np.cos(_PIT_ANGLES)
    cy = np.sin(_PIT_ANGLES)
    return np.stack(
        [ring_radius[..., None] * cx, ring_radius[..., None] * cy], axis=-1
    )


def three_pits_map(x) -> Array:
    """R^2 stub: zero wells on three balls per dyadic ring, explosive elsewhere."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.sqrt(np.sum(pts * pts, axis=1))
    safe_r = np.maximum(r, 1e-9)
    k = np.round(np.log2(safe_r))
    d = np.full(pts.shape[0], np.inf)
    ring = np.zeros(pts.shape[0])
    for dk in (-1.0, 0.0, 1.0):
        rad = 2.0 ** (k + dk)
        centers = _pit_centers(rad)  # (N, 3, 2)
        dist = np.min(np.linalg.norm(pts[:, None, :] - centers, axis=2), axis=1)
        closer = dist < d
        d = np.where(closer, dist, d)
        ring = np.where(closer, rad, ring)
    w = PIT_WIDTH * ring
    # flat-bottomed ramp: 0 inside 0.9w, rising to 1 across the skirt
    ramp = np.clip((d - 0.9 * w) / ((PIT_SKIRT - 0.9) * w), 0.0, 1.0)
    with np.errstate(over="ignore", under="ignore"):
        magnitude = safe_r * np.exp(np.minimum(safe_r, 600.0)) * ramp
    unit = pts / safe_r[:, None]
    out = unit * magnitude[:, None]
    out[r == 0.0] = 0.0
    return out


def power_map(x) -> Array:
    """R^2 stub with |f(x)| = |x|^2: polynomial type."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.sqrt(np.sum(pts * pts, axis=1))
    return pts * r[:, None]


def build_three_pits() -> MapSpec:
    return MapSpec(
        name="three-pits",
        dimension=2,
        eval=three_pits_map,
        params={},
        growth="transcendental",
    )


def build_power() -> MapSpec:
    return MapSpec(
        name="power2",
        dimension=2,
        eval=power_map,
        params={},
        growth="polynomial",
    )
