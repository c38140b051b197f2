"""Beam-periodic exponential-type map of R^3 and its inverse branches.

The central object is F(x1, x2, x3) = e^{x3} * h(x1, x2) on the square beam
Q x R, Q = [-1, 1]^2, where h is an explicit bi-Lipschitz bijection from Q
onto the closed upper unit hemisphere (square -> disk by a sup-norm radial
rescaling, then disk -> hemisphere by an equidistant polar lift).  F extends
to all of R^3 by tent-folding x1 and x2 with period 4; each odd fold flips
the sign of the image's third coordinate.  The shifted map

    f_a(x) = F(x) - (0, 0, a),   a > 0,

has, on every even-parity beam P(r) x R, an inverse branch from the upper
half-space {y3 >= M} into the tract T(r) = P(r) x (M, oo).  The measured
contraction ratio of those branches drives the expansion checks downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mapspec import (
    Array,
    DomainError,
    EscapeCertificate,
    MapSpec,
    ParameterError,
    as_points,
)

DEFAULT_A = 10.0
DEFAULT_M = 2.0


@dataclass
class ZorichParams:
    """Parameters of the shifted beam map f_a.

    alpha_measured is the sampled contraction ratio of the inverse branches;
    it is None until measure_contraction fills it and is flagged unreliable
    (alpha_ok False) when it comes out >= 1, which happens for small a.
    """

    a: float
    M: float
    alpha_measured: float | None = None

    @property
    def alpha_ok(self) -> bool:
        return self.alpha_measured is not None and self.alpha_measured < 1.0


@dataclass(frozen=True)
class BeamIndex:
    """Integer beam label r = (r1, r2); even parity beams map onto the upper half-space."""

    r1: int
    r2: int

    @property
    def parity(self) -> int:
        return (self.r1 + self.r2) % 2

    @property
    def is_even(self) -> bool:
        return self.parity == 0


# -- the square <-> hemisphere homeomorphism ---------------------------------

def square_to_disk(p: Array) -> Array:
    """Radial sup-norm rescaling [-1,1]^2 -> closed unit disk, identity at 0."""
    p = np.asarray(p, dtype=float)
    ninf = np.max(np.abs(p), axis=-1)
    n2 = np.sqrt(np.sum(p * p, axis=-1))
    scale = np.where(n2 > 0.0, ninf / np.where(n2 > 0.0, n2, 1.0), 0.0)
    return p * scale[..., None]


def disk_to_square(q: Array) -> Array:
    """Inverse of square_to_disk."""
    q = np.asarray(q, dtype=float)
    ninf = np.max(np.abs(q), axis=-1)
    n2 = np.sqrt(np.sum(q * q, axis=-1))
    scale = np.where(ninf > 0.0, n2 / np.where(ninf > 0.0, ninf, 1.0), 0.0)
    return q * scale[..., None]


def disk_to_hemisphere(q: Array) -> Array:
    """Polar-equidistant lift of the unit disk onto the upper hemisphere.

    q with |q| = rho maps to (sin(pi rho / 2) q/rho, cos(pi rho / 2)); the
    origin goes to the pole and the boundary circle to the equator.
    """
    q = np.asarray(q, dtype=float)
    rho = np.sqrt(np.sum(q * q, axis=-1))
    ang = 0.5 * np.pi * rho
    # sin(ang)/rho -> pi/2 as rho -> 0
    sinc = np.where(rho > 1e-300, np.sin(ang) / np.where(rho > 1e-300, rho, 1.0), 0.5 * np.pi)
    return np.concatenate([q * sinc[..., None], np.cos(ang)[..., None]], axis=-1)


def hemisphere_to_disk(u: Array) -> Array:
    """Inverse of disk_to_hemisphere for unit vectors with third coordinate >= 0."""
    u = np.asarray(u, dtype=float)
    rho = (2.0 / np.pi) * np.arccos(np.clip(u[..., 2], -1.0, 1.0))
    pn = np.sqrt(u[..., 0] ** 2 + u[..., 1] ** 2)
    scale = np.where(pn > 0.0, rho / np.where(pn > 0.0, pn, 1.0), 0.0)
    return u[..., :2] * scale[..., None]


def zorich_h(p) -> Array:
    """Map the square Q = [-1,1]^2 onto the closed upper unit hemisphere.

    Bijective, bi-Lipschitz, sends the boundary of Q onto the equator.
    """
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    pts = np.atleast_2d(p)
    if pts.shape[1] != 2:
        raise DomainError("zorich_h expects points of the square [-1,1]^2")
    if np.any(np.max(np.abs(pts), axis=1) > 1.0 + 1e-12):
        raise DomainError("point outside the square [-1,1]^2")
    out = disk_to_hemisphere(square_to_disk(pts))
    return out[0] if single else out


def zorich_h_inverse(u) -> Array:
    """Inverse of zorich_h on the closed upper hemisphere."""
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    pts = np.atleast_2d(u)
    return (disk_to_square(hemisphere_to_disk(pts))[0]
            if single else disk_to_square(hemisphere_to_disk(pts)))


# -- folding ------------------------------------------------------------------

def fold_tent(x: Array) -> tuple[Array, Array]:
    """Period-4 tent fold of a coordinate into [-1, 1] with its parity bit.

    Coordinates in beam r (the interval (2r-1, 2r+1)) fold to x - 2r when r
    is even and to -(x - 2r) when r is odd; the parity bit is r mod 2.
    """
    x = np.asarray(x, dtype=float)
    u = np.mod(x + 1.0, 4.0)
    folded = np.where(u < 2.0, u - 1.0, 3.0 - u)
    parity = np.floor((x + 1.0) / 2.0).astype(np.int64) & 1
    return folded, parity


def beam_index_of(x: Array) -> Array:
    """Per-coordinate beam integers r = round(x/2) for the first two coordinates."""
    return np.floor((np.asarray(x, dtype=float) + 1.0) / 2.0).astype(np.int64)


def zorich_F(x) -> Array:
    """Evaluate the beam-periodic exponential-type map on R^3.

    On the central beam F(x) = e^{x3} h(x1, x2); elsewhere the first two
    coordinates are tent-folded into the square and the image's third
    coordinate is negated when the total fold parity is odd.  F omits 0 and
    has period 4 in x1 and x2.
    """
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = as_points(x, 3)
    f1, p1 = fold_tent(pts[:, 0])
    f2, p2 = fold_tent(pts[:, 1])
    with np.errstate(over="ignore", under="ignore"):
        y = np.exp(pts[:, 2])[:, None] * disk_to_hemisphere(
            square_to_disk(np.column_stack([f1, f2]))
        )
    sign = np.where((p1 + p2) & 1, -1.0, 1.0)
    y[:, 2] *= sign
    return y[0] if single else y


def zorich_f_a(x, a: float = DEFAULT_A) -> Array:
    """Shifted beam map f_a(x) = F(x) - (0, 0, a); omits (0, 0, -a)."""
    if a <= 0:
        raise ParameterError("vertical shift a must be positive")
    y = zorich_F(x)
    y = np.atleast_2d(y) - np.array([0.0, 0.0, a])
    return y[0] if np.asarray(x).ndim == 1 else y


def zorich_inverse_branch(y, r, a: float = DEFAULT_A, M: float = DEFAULT_M) -> Array:
    """Inverse branch of f_a into the tract T(r) = P(r) x (M, oo).

    Only even-parity beams r carry a branch defined on {y3 >= M}.  The
    construction inverts the beam formula: z = y + (0,0,a), x3 = log|z|,
    (x1', x2') = h^{-1}(z/|z|), then places the point in beam r, mirroring
    the coordinates whose beam integer is odd (the tent fold reflects there).
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    pts = as_points(y, 3)
    if isinstance(r, BeamIndex):
        r_arr = np.array([[r.r1, r.r2]], dtype=np.int64)
    else:
        r_arr = np.atleast_2d(np.asarray(r, dtype=np.int64))
    if r_arr.shape[0] == 1 and pts.shape[0] > 1:
        r_arr = np.repeat(r_arr, pts.shape[0], axis=0)
    if np.any((r_arr.sum(axis=1)) % 2 != 0):
        raise ParameterError("inverse branches exist only for even-parity beams")
    if np.any(pts[:, 2] < M - 1e-12):
        raise DomainError(f"inverse branch requires third coordinate >= M = {M}")
    z = pts + np.array([0.0, 0.0, a])
    nz = np.sqrt(np.sum(z * z, axis=1))
    u = z / nz[:, None]
    p = disk_to_square(hemisphere_to_disk(u))
    sign = np.where(r_arr % 2 == 0, 1.0, -1.0)
    out = np.empty_like(pts)
    out[:, :2] = 2.0 * r_arr + sign * p
    out[:, 2] = np.log(nz)
    return out[0] if single else out


def even_beams(window: int) -> list[tuple[int, int]]:
    """Even-parity beam labels with |r1|, |r2| <= window, in row-major order."""
    return [
        (r1, r2)
        for r1 in range(-window, window + 1)
        for r2 in range(-window, window + 1)
        if (r1 + r2) % 2 == 0
    ]


def measure_contraction(
    a: float = DEFAULT_A,
    M: float = DEFAULT_M,
    sample_count: int = 10_000,
    rng_seed: int = 0,
) -> float:
    """Sampled Lipschitz ratio of the central inverse branch on {y3 >= M}.

    Returns the max over sampled pairs of |L(x) - L(y)| / |x - y| for the
    r = (0, 0) branch; a lower bound on the true constant.  The sample mixes
    random pairs with short-separation probes anchored on the plane y3 = M,
    where the ratio peaks.  Degenerate pairs (separation < 1e-12) are skipped.
    """
    if sample_count < 1000:
        raise ParameterError("sample_count must be at least 1000")
    if a <= 0:
        raise ParameterError("vertical shift a must be positive")
    rng = np.random.default_rng([rng_seed, 7])
    span = 2.0 * (abs(M) + a + 1.0)
    half = sample_count // 2

    lo = np.array([-span, -span, M])
    hi = np.array([span, span, M + span])
    xs = rng.uniform(lo, hi, size=(half, 3))
    ys = rng.uniform(lo, hi, size=(half, 3))

    # short probes near the domain floor, where |z| is smallest
    base = rng.uniform([-span, -span, M], [span, span, M + 0.5], size=(sample_count - half, 3))
    direc = rng.normal(size=(sample_count - half, 3))
    direc /= np.linalg.norm(direc, axis=1)[:, None]
    step = 10.0 ** rng.uniform(-4, -1, size=(sample_count - half, 1))
    other = base + step * direc
    other[:, 2] = np.maximum(other[:, 2], M)

    px = np.vstack([xs, base])
    py = np.vstack([ys, other])
    sep = np.linalg.norm(px - py, axis=1)
    keep = sep > 1e-12
    px, py, sep = px[keep], py[keep], sep[keep]
    lx = zorich_inverse_branch(px, (0, 0), a=a, M=M)
    ly = zorich_inverse_branch(py, (0, 0), a=a, M=M)
    ratios = np.linalg.norm(lx - ly, axis=1) / sep
    return float(np.max(ratios))


class ZorichBranches:
    """Inverse-branch provider for f_a: apply, admissibility, branch listing."""

    def __init__(self, a: float, M: float):
        self.params = ZorichParams(a=a, M=M)

    @property
    def a(self) -> float:
        return self.params.a

    @property
    def M(self) -> float:
        return self.params.M

    def alpha(self, sample_count: int = 10_000) -> float:
        """Measured contraction ratio, cached on first use."""
        if self.params.alpha_measured is None:
            self.params.alpha_measured = measure_contraction(
                self.a, self.M, sample_count=sample_count
            )
        return self.params.alpha_measured

    def admissible(self, y: Array) -> Array:
        pts = as_points(y, 3)
        return pts[:, 2] >= self.M

    def branch_ids(self, window: int) -> list[tuple[int, int]]:
        return even_beams(window)

    def apply(self, y: Array, branch) -> Array:
        return zorich_inverse_branch(y, branch, a=self.a, M=self.M)


def _seam_distance(x: Array) -> Array:
    """Distance to the fold planes and the sup-norm kink diagonals."""
    pts = as_points(x, 3)
    f1, _ = fold_tent(pts[:, 0])
    f2, _ = fold_tent(pts[:, 1])
    d_fold = np.minimum(1.0 - np.abs(f1), 1.0 - np.abs(f2))
    d_diag = np.abs(np.abs(f1) - np.abs(f2)) / np.sqrt(2.0)
    return np.minimum(d_fold, d_diag)


def build_zorich(a: float = DEFAULT_A, M: float = DEFAULT_M) -> MapSpec:
    """MapSpec for the shifted beam map f_a with inverse branches attached."""
    if a <= 0:
        raise ParameterError("vertical shift a must be positive")
    branches = ZorichBranches(a=a, M=M)

    def _eval(pts: Array) -> Array:
        return np.atleast_2d(zorich_f_a(pts, a=a))

    return MapSpec(
        name="zorich",
        dimension=3,
        eval=_eval,
        params={"a": a, "M": M},
        omitted_values=((0.0, 0.0, -a),),
        escape_certificate=None,  # modulus threshold only
        seam_distance=_seam_distance,
        growth="transcendental",
        inverse=branches,
        attractor_seeds=((0.0, 0.0, -a),),
        aux=branches.params,
    )
