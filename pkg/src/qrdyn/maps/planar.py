"""Planar example maps: exponentials and two piecewise modifications.

All three are evaluated as maps of R^2 via complex arithmetic.  The
exponential family carries closed-form inverse branches (logarithm branches);
the piecewise maps expose a Newton-based local inversion for backward
iteration.
"""

from __future__ import annotations

import numpy as np

from ..mapspec import (
    Array,
    EscapeCertificate,
    MapSpec,
    ParameterError,
    as_complex,
    as_points,
    from_complex,
)

DEFAULT_LAMBDA = 0.2
DEFAULT_M = 50.0
DEFAULT_DELTA = 0.05


# -- exponential family -------------------------------------------------------

def exp_map(z, lam: float = DEFAULT_LAMBDA):
    """E_lambda(z) = lambda * e^z; omits 0."""
    if lam == 0:
        raise ParameterError("lambda must be nonzero")
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        return lam * np.exp(z)


def exp_real_fixed_points(lam: float) -> tuple[float, float]:
    """The two real fixed points (attracting, repelling) of lambda e^z, 0 < lambda < 1/e.

    Attracting root by fixed-point iteration, repelling by Newton; both are
    polished to machine residual.
    """
    if not 0 < lam < 1 / np.e:
        raise ParameterError("real fixed-point pair exists for 0 < lambda < 1/e")
    q = lam
    for _ in range(200):
        q = lam * np.exp(q)
    p = 2.5
    for _ in range(100):
        fp = lam * np.exp(p)
        p = p - (fp - p) / (fp - 1.0)
    return float(q), float(p)


class LogBranches:
    """Inverse branches of lambda e^z: one logarithm branch per integer k."""

    def __init__(self, lam: float):
        self.lam = lam

    def admissible(self, y: Array) -> Array:
        z = as_complex(as_points(y, 2))
        return np.abs(z) > 0.0

    def branch_ids(self, window: int) -> list[int]:
        return list(range(-window, window + 1))

    def apply(self, y: Array, branch) -> Array:
        pts = as_points(y, 2)
        z = as_complex(pts)
        k = np.asarray(branch, dtype=float)
        w = np.log(np.abs(z) / self.lam) + 1j * (np.angle(z) + 2.0 * np.pi * k)
        return from_complex(w)


def build_exp(lam: float = DEFAULT_LAMBDA) -> MapSpec:
    if lam == 0:
        raise ParameterError("lambda must be nonzero")

    def _eval(pts: Array) -> Array:
        return from_complex(exp_map(as_complex(pts), lam=lam))

    certificate = None
    seeds: tuple = ()
    if 0 < lam < 1 / np.e:
        q, p = exp_real_fixed_points(lam)
        floor = max(10.0, p + 1.0)

        def _contains(pts: Array) -> Array:
            # invariant escape region: the real ray right of the repelling point
            return (pts[:, 1] == 0.0) & (pts[:, 0] > floor)

        def _drift(pts: Array) -> Array:
            return pts[:, 0]

        certificate = EscapeCertificate(
            name=f"real ray Re z > {floor:g}, Im z = 0",
            contains=_contains,
            drift=_drift,
            margin=0.5,
        )
        seeds = ((q, 0.0),)

    return MapSpec(
        name="exp",
        dimension=2,
        eval=_eval,
        params={"lambda": lam},
        omitted_values=((0.0, 0.0),),
        escape_certificate=certificate,
        seam_distance=None,
        growth="transcendental",
        inverse=LogBranches(lam),
        attractor_seeds=seeds,
    )


# -- drift map with a sinusoidal middle band ----------------------------------

def fatou_base(z):
    """g(z) = z + 1 + e^{-z}, the classical right-half-plane drift map."""
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        return z + 1.0 + np.exp(-z)


def fatou_modified_map(z, M: float = DEFAULT_M):
    """g(z) plus a band perturbation (1 + e^{-z}) sin(pi Re z / M) for M < Re z < 2M.

    The sine vanishes at both seams, so the pieces agree there.  The vertical
    line Re z = 3M/2 is pointwise fixed.
    """
    if M <= 0:
        raise ParameterError("band width M must be positive")
    z = np.asarray(z, dtype=complex)
    x = z.real
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        base = fatou_base(z)
        band = (1.0 + np.exp(-z)) * np.sin(np.pi * x / M)
    return np.where((x > M) & (x < 2.0 * M), base + band, base)


class NewtonInverse:
    """Local inversion by damped Newton from the previous pullback.

    Branch variety comes from offsetting the Newton seed by multiples of the
    map's vertical quasi-period before solving; a failed solve prunes that
    branch for the step.
    """

    def __init__(self, spec_eval, shift: complex = 0.0, branch_period: complex = 2j * np.pi):
        self._eval = spec_eval
        self._shift = shift  # nudge applied to the seed, selects a branch loosely
        self.branch_period = branch_period

    def admissible(self, y: Array) -> Array:
        return np.ones(as_points(y, 2).shape[0], dtype=bool)

    def branch_ids(self, window: int) -> list[int]:
        return list(range(-window, window + 1))

    def apply_from(
        self, y: Array, x0: Array, branch: int = 0, tol: float = 1e-10, iters: int = 60
    ) -> Array | None:
        """Solve f(w) = y starting near x0 + branch * period; None when Newton stalls."""
        target = as_complex(as_points(y, 2))
        w = as_complex(as_points(x0, 2)) + self._shift + branch * self.branch_period
        h = 1e-7
        for _ in range(iters):
            fw = as_complex(self._eval(from_complex(w)))
            r = fw - target
            if np.all(np.abs(r) < tol):
                return from_complex(w)
            d = (as_complex(self._eval(from_complex(w + h))) - fw) / h
            d = np.where(np.abs(d) > 1e-14, d, 1e-14)
            step = r / d
            # damp oversized steps; the pieces are only locally smooth
            mag = np.abs(step)
            step = np.where(mag > 1.0, step / mag, step)
            w = w - step
        fw = as_complex(self._eval(from_complex(w)))
        if np.all(np.abs(fw - target) < 1e-6):
            return from_complex(w)
        return None


def build_fatou_modified(M: float = DEFAULT_M) -> MapSpec:
    if M <= 0:
        raise ParameterError("band width M must be positive")

    def _eval(pts: Array) -> Array:
        return from_complex(fatou_modified_map(as_complex(pts), M=M))

    def _contains(pts: Array) -> Array:
        return pts[:, 0] > 2.0 * M

    def _drift(pts: Array) -> Array:
        return pts[:, 0]

    def _seam(pts: Array) -> Array:
        x = pts[:, 0]
        return np.minimum(np.abs(x - M), np.abs(x - 2.0 * M))

    return MapSpec(
        name="fatou-mod",
        dimension=2,
        eval=_eval,
        params={"M": M},
        omitted_values=(),
        escape_certificate=EscapeCertificate(
            name=f"half-plane Re z > {2 * M:g}",
            contains=_contains,
            drift=_drift,
            margin=0.5,
        ),
        seam_distance=_seam,
        growth="transcendental",
        inverse=NewtonInverse(_eval, shift=-0.5),
        attractor_seeds=(),
    )


# -- radially pinned map with an invariant annulus -----------------------------

def annulus_radial_profile(r, delta: float = DEFAULT_DELTA):
    """Radial factor g(r) on [0, 3]: contraction, interpolation, identity."""
    r = np.asarray(r, dtype=float)
    return np.where(
        r <= 1.0,
        1.0 - delta,
        np.where(r <= 2.0, 1.0 + delta * (r - 2.0), 1.0),
    )


def annulus_fixed_map(z, delta: float = DEFAULT_DELTA):
    """z g(|z|) inside |z| <= 3, with an exponential perturbation switched on outside.

    Pieces: z g(|z|) for |z| <= 3; z + delta (|z| - 3) e^z for 3 < |z| <= 4;
    z + delta e^z beyond.  All seams agree exactly.
    """
    if delta <= 0:
        raise ParameterError("perturbation size delta must be positive")
    z = np.asarray(z, dtype=complex)
    r = np.abs(z)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        inner = z * annulus_radial_profile(r, delta)
        mid = z + delta * (r - 3.0) * np.exp(z)
        outer = z + delta * np.exp(z)
    return np.where(r <= 3.0, inner, np.where(r <= 4.0, mid, outer))


def build_annulus_fixed(delta: float = DEFAULT_DELTA) -> MapSpec:
    if delta <= 0:
        raise ParameterError("perturbation size delta must be positive")

    def _eval(pts: Array) -> Array:
        return from_complex(annulus_fixed_map(as_complex(pts), delta=delta))

    def _seam(pts: Array) -> Array:
        r = np.sqrt(pts[:, 0] ** 2 + pts[:, 1] ** 2)
        return np.min(np.abs(r[:, None] - np.array([1.0, 2.0, 3.0, 4.0])), axis=1)

    return MapSpec(
        name="annulus-fixed",
        dimension=2,
        eval=_eval,
        params={"delta": delta},
        omitted_values=(),
        escape_certificate=None,
        seam_distance=_seam,
        growth="transcendental",
        inverse=NewtonInverse(_eval),
        attractor_seeds=((0.0, 0.0),),
    )
