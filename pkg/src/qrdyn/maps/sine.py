"""Trigonometric-type expanding map of R^n (n = 2 or 3).

A concrete bi-Lipschitz map G sends the half-cube [-1,1]^{n-1} x [0,1] onto
the upper half-ball, taking the top face onto the hemisphere and fixing the
origin; above height 1 it continues as e^{x_n - 1} G(x', 1).  Hyperplane
reflections (tent folds of the first n-1 coordinates, a mirror fold of the
last) extend G to all of R^n, each odd fold flipping the sign of the image's
last coordinate.  The map of interest is f = lambda * G; for the default
lambda the sampled least singular value of Df exceeds 1.2 on a test lattice,
so f is expanding there.
"""

from __future__ import annotations

import numpy as np

from ..mapspec import Array, MapSpec, ParameterError, as_points
from .zorich import fold_tent, square_to_disk

# Pinned so that the sampled expansion factor min ell(Df) on the calibration
# lattice stays above 1.2 in both dimensions; see test_maps.py.
DEFAULT_LAMBDA = 6.0


def halfsquare_to_quarterdisk(rho: Array, t: Array) -> Array:
    """Map the parameter square {(rho, t) in [0,1]^2} onto the quarter disk.

    Fan construction from the apex (0, 1): the far boundary (bottom edge then
    right edge) flattens onto the horizontal axis, the top edge becomes the
    hypotenuse of the unit triangle, and an L1-radial rescale turns the
    triangle into the quarter disk.  Boundary behaviour: t = 1 maps to the
    unit arc, rho = 0 to the vertical segment, the bottom and right edges to
    the horizontal segment.
    """
    rho = np.asarray(rho, dtype=float)
    t = np.asarray(t, dtype=float)
    bottom = rho <= 1.0 - t
    w0 = np.where(bottom, 0.5 * rho, rho - 0.5 * (1.0 - t))
    w1 = np.where(bottom, t, 1.0 - rho)
    l1 = w0 + w1
    l2 = np.sqrt(w0 * w0 + w1 * w1)
    scale = np.where(l2 > 0.0, l1 / np.where(l2 > 0.0, l2, 1.0), 0.0)
    return np.stack([w0 * scale, w1 * scale], axis=-1)


def _half_beam(xprime: Array, t: Array) -> Array:
    """G on the folded half-beam: x' in [-1,1]^{n-1}, t >= 0."""
    k = xprime.shape[1]
    if k == 1:
        q = xprime  # 1D cross-section: sup and euclidean norms agree
    else:
        q = square_to_disk(xprime)
    rho = np.sqrt(np.sum(q * q, axis=1))
    qhat = np.where(rho[:, None] > 0.0, q / np.where(rho[:, None] > 0.0, rho[:, None], 1.0), 0.0)

    inside = t <= 1.0
    t_in = np.minimum(t, 1.0)
    st = halfsquare_to_quarterdisk(rho, t_in)
    sigma, tau = st[..., 0], st[..., 1]
    with np.errstate(over="ignore", under="ignore"):
        growth = np.where(inside, 1.0, np.exp(t - 1.0))
    out = np.empty((xprime.shape[0], k + 1))
    out[:, :k] = qhat * (sigma * growth)[:, None]
    out[:, k] = tau * growth
    return out


def qr_sine_map(x, lam: float = DEFAULT_LAMBDA) -> Array:
    """Evaluate the trigonometric-type map lambda * G on R^n, n in {2, 3}."""
    if lam <= 0:
        raise ParameterError("expansion factor lambda must be positive")
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    n = pts.shape[1]
    if n not in (2, 3):
        raise ParameterError("trigonometric-type map is defined for n = 2 or 3")

    folded = np.empty((pts.shape[0], n - 1))
    parity = np.zeros(pts.shape[0], dtype=np.int64)
    for i in range(n - 1):
        folded[:, i], p = fold_tent(pts[:, i])
        parity += p
    t = pts[:, n - 1]
    parity += (t < 0.0).astype(np.int64)
    t = np.abs(t)

    y = _half_beam(folded, t)
    y[:, n - 1] *= np.where(parity & 1, -1.0, 1.0)
    y *= lam
    return y[0] if single else y


def _seam_distance(x: Array) -> Array:
    """Distance to fold planes, the mirror plane, the cone seam and the shell t = 1."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    n = pts.shape[1]
    folded = np.empty((pts.shape[0], n - 1))
    for i in range(n - 1):
        folded[:, i], _ = fold_tent(pts[:, i])
    t = np.abs(pts[:, n - 1])
    ninf = np.max(np.abs(folded), axis=1)
    d = np.minimum(1.0 - ninf, np.abs(pts[:, n - 1]))
    d = np.minimum(d, np.abs(t - 1.0))
    d = np.minimum(d, np.abs(ninf + t - 1.0) / np.sqrt(2.0))  # fan corner path
    if n == 3:
        d = np.minimum(d, np.abs(np.abs(folded[:, 0]) - np.abs(folded[:, 1])) / np.sqrt(2.0))
    return d


def build_qr_sine(lam: float = DEFAULT_LAMBDA, n: int = 3) -> MapSpec:
    """MapSpec for the trigonometric-type analogue f = lambda * G."""
    if lam <= 0:
        raise ParameterError("expansion factor lambda must be positive")
    n = int(n)
    if n not in (2, 3):
        raise ParameterError("dimension n must be 2 or 3")

    def _eval(pts: Array) -> Array:
        return np.atleast_2d(qr_sine_map(pts, lam=lam))

    return MapSpec(
        name="qr-sine",
        dimension=n,
        eval=_eval,
        params={"lambda": lam, "n": float(n)},
        omitted_values=(),
        escape_certificate=None,  # modulus threshold only
        seam_distance=_seam_distance,
        growth="transcendental",
        attractor_seeds=(),
    )
