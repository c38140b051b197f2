"""Numeric differential quantities: Jacobians, dilatation, growth, Harnack ratio.

The dilatation estimators realise the distortion inequalities

    |Df(x)|^n <= K_O J_f(x)        and        J_f(x) <= K_I l(Df(x))^n

by sampling finite-difference derivative matrices over a region, excluding
points near declared seams (where the maps are only continuous) and points
whose Jacobian falls below a positivity tolerance (the branch set has measure
zero, so exclusion matches the almost-everywhere nature of the inequalities).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mapspec import Array, MapSpec, ParameterError, QrdynError, as_points

FD_STEP_BASE = 1e-5          # relative central-difference step
SEAM_MARGIN_STEPS = 10.0     # exclusion margin around seams, in units of the step
JACOBIAN_POSITIVITY_TOL = 1e-12


class EstimationError(QrdynError):
    """Raised when no sample survives the exclusion rules."""


@dataclass
class DilatationReport:
    """Sampled outer/inner distortion bounds over a region."""

    K_O_est: float
    K_I_est: float
    K_est: float
    sample_count: int
    excluded_count: int

    def to_dict(self) -> dict:
        return {
            "K_O_est": self.K_O_est,
            "K_I_est": self.K_I_est,
            "K_est": self.K_est,
            "sample_count": self.sample_count,
            "excluded_count": self.excluded_count,
        }


@dataclass
class HarnackReport:
    """Ratio sup log|f| / inf log|f| over a half-radius ball."""

    theta_est: float
    center: tuple
    radius: float
    valid: bool
    ill_conditioned: bool = False

    def to_dict(self) -> dict:
        return {
            "theta_est": self.theta_est,
            "center": list(self.center),
            "radius": self.radius,
            "valid": self.valid,
            "ill_conditioned": self.ill_conditioned,
        }


def fd_step(x: Array) -> Array:
    """Relative finite-difference step, per point."""
    r = np.sqrt(np.sum(np.atleast_2d(x) ** 2, axis=1))
    return FD_STEP_BASE * np.maximum(1.0, r)


def derivative_matrix(spec: MapSpec, x, step: float | None = None) -> Array:
    """Central finite-difference approximation of Df(x).

    Accepts a single point (returns (n, n)) or a batch (returns (N, n, n)).
    """
    pts = as_points(x, spec.dimension)
    single = np.asarray(x).ndim == 1
    n = spec.dimension
    h = np.full(pts.shape[0], step, dtype=float) if step is not None else fd_step(pts)
    if np.any(h <= 0):
        raise ParameterError("step must be positive")
    jac = np.empty((pts.shape[0], n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        plus = spec(pts + h[:, None] * e)
        minus = spec(pts - h[:, None] * e)
        jac[:, :, i] = (plus - minus) / (2.0 * h[:, None])
    return jac[0] if single else jac


def singular_values(m: Array) -> tuple:
    """(sigma_max, sigma_min, det) of a square matrix or batch of them."""
    a = np.asarray(m, dtype=float)
    single = a.ndim == 2
    batch = a[None] if single else a
    sv = np.linalg.svd(batch, compute_uv=False)
    det = np.linalg.det(batch)
    smax, smin = sv[:, 0], sv[:, -1]
    if single:
        return float(smax[0]), float(smin[0]), float(det[0])
    return smax, smin, det


def _sample_box(region, count: int, rng_seed: int) -> Array:
    """Deterministic quasi-random points in an axis-aligned box.

    region is (x0, x1, y0, y1[, z0, z1]).
    """
    region = np.asarray(region, dtype=float)
    n = region.size // 2
    lo, hi = region[0::2], region[1::2]
    rng = np.random.default_rng([rng_seed, 11])
    u = rng.random((count, n))
    return lo + u * (hi - lo)


def estimate_dilatation(
    spec: MapSpec,
    region,
    samples: int = 1000,
    rng_seed: int = 0,
    points: Array | None = None,
) -> DilatationReport:
    """Sampled outer and inner dilatation over an axis-aligned region.

    Points within the seam-exclusion margin or with Jacobian below the
    positivity tolerance are excluded and counted; their measure is zero for
    honest quasiregular maps, so this matches the a.e. quantifier.
    """
    if points is None:
        if samples < 100:
            raise ParameterError("need at least 100 samples")
        pts = _sample_box(region, samples, rng_seed)
    else:
        pts = as_points(points, spec.dimension)
    n = spec.dimension
    keep = np.ones(pts.shape[0], dtype=bool)
    if spec.seam_distance is not None:
        margin = SEAM_MARGIN_STEPS * fd_step(pts)
        keep &= spec.seam_distance(pts) > margin
    jac = derivative_matrix(spec, pts[keep])
    smax, smin, det = singular_values(jac)
    good = (det > JACOBIAN_POSITIVITY_TOL) & np.isfinite(smax) & np.isfinite(det)
    excluded = pts.shape[0] - int(np.count_nonzero(keep)) + int(np.count_nonzero(~good))
    if not np.any(good):
        raise EstimationError("all samples excluded; region may sit on the branch set")
    ko = np.max(smax[good] ** n / det[good])
    ki = np.max(det[good] / smin[good] ** n)
    return DilatationReport(
        K_O_est=float(ko),
        K_I_est=float(ki),
        K_est=float(max(ko, ki)),
        sample_count=int(np.count_nonzero(good)),
        excluded_count=excluded,
    )


def sphere_lattice(dimension: int, radius: float, samples: int, center=None) -> Array:
    """Deterministic quasi-uniform points on a sphere.

    Uniform angles on a circle; a Fibonacci lattice on the 2-sphere.
    """
    if dimension == 2:
        th = 2.0 * np.pi * np.arange(samples) / samples
        pts = radius * np.column_stack([np.cos(th), np.sin(th)])
    elif dimension == 3:
        i = np.arange(samples) + 0.5
        phi = np.arccos(1.0 - 2.0 * i / samples)
        golden = np.pi * (1.0 + np.sqrt(5.0))
        th = golden * i
        pts = radius * np.column_stack(
            [np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)]
        )
    else:
        raise ParameterError("sphere sampling implemented for n = 2, 3")
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)
    return pts


def ball_lattice(dimension: int, center, radius: float, samples: int) -> Array:
    """Deterministic quasi-uniform points in a ball (golden-angle layers)."""
    c = np.asarray(center, dtype=float)
    i = np.arange(samples) + 0.5
    if dimension == 2:
        r = radius * np.sqrt(i / samples)
        th = np.pi * (1.0 + np.sqrt(5.0)) * i
        return c + np.column_stack([r * np.cos(th), r * np.sin(th)])
    if dimension == 3:
        # golden-ratio stride decorrelates the radial index from the
        # pole-to-pole sweep of the Fibonacci directions
        u = (i * 0.6180339887498949) % 1.0
        r = radius * u ** (1.0 / 3.0)
        on_sphere = sphere_lattice(3, 1.0, samples)
        return c + r[:, None] * on_sphere
    raise ParameterError("ball sampling implemented for n = 2, 3")


def max_modulus(spec: MapSpec, r: float, samples: int = 512) -> float:
    """Sampled maximum of |f| on the sphere of radius r (a lower bound)."""
    if r <= 0:
        raise ParameterError("radius must be positive")
    pts = sphere_lattice(spec.dimension, r, samples)
    vals = np.linalg.norm(spec(pts), axis=1)
    vals = vals[np.isfinite(vals)]
    return float(np.max(vals))


def harnack_ratio(
    spec: MapSpec, center, r: float, samples: int = 512
) -> HarnackReport:
    """Probe the Harnack ratio of log|f| on B(center, r).

    Validity requires |f| > 1 on the sampled double ball B(center, 2r); when
    that holds the report carries sup log|f| / inf log|f| over B(center, r).
    """
    if r <= 0:
        raise ParameterError("radius must be positive")
    c = np.asarray(center, dtype=float)
    outer = ball_lattice(spec.dimension, c, 2.0 * r, samples)
    vals_outer = np.linalg.norm(spec(outer), axis=1)
    if not np.all(vals_outer > 1.0):
        return HarnackReport(theta_est=float("nan"), center=tuple(c), radius=r, valid=False)
    inner = ball_lattice(spec.dimension, c, r, samples)
    logs = np.log(np.linalg.norm(spec(inner), axis=1))
    lo = float(np.min(logs))
    if lo < 1e-12:
        return HarnackReport(
            theta_est=float("nan"), center=tuple(c), radius=r, valid=True, ill_conditioned=True
        )
    return HarnackReport(
        theta_est=float(np.max(logs) / lo), center=tuple(c), radius=r, valid=True
    )
