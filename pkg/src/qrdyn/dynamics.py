"""Orbit engine: iteration, classification, fixed points, expansion checks.

Classification is finite-horizon and deliberately conservative: Escaping
requires the modulus threshold or a certified escape region, Basin requires
approach within tolerance of a registered attracting fixed point, Bounded
means the whole budgeted orbit stayed inside the bounding ball, and anything
else is Undecided.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grids import BASIN_BASE, BOUNDED, ESCAPING, UNDECIDED, Grid, label_name
from .mapspec import Array, DomainError, MapSpec, ParameterError, as_points

OVERFLOW_LIMIT = 1e300


@dataclass(frozen=True)
class ClassifyBudget:
    k_max: int = 500
    t_escape: float = 1e10
    t_bound: float = 1e4
    basin_tol: float = 1e-6


@dataclass
class OrbitClass:
    label: str                   # Escaping | Bounded | Basin(i) | Undecided
    iterations_used: int
    witness: float               # final modulus, or distance to the captured fixed point
    basin_id: int | None = None


@dataclass
class OrbitResult:
    points: Array
    truncated: bool


@dataclass
class FixedPointRecord:
    location: tuple
    period: int
    multiplier_estimate: float
    stability: str               # attracting | repelling | neutral-undetermined
    residual: float

    def to_dict(self) -> dict:
        return {
            "location": list(self.location),
            "period": self.period,
            "multiplier_estimate": self.multiplier_estimate,
            "stability": self.stability,
            "residual": self.residual,
        }


@dataclass
class FixedPointSearch:
    records: list[FixedPointRecord]
    continuum_of_fixed_points: bool = False


def iterate(spec: MapSpec, x, k: int) -> OrbitResult:
    """Forward orbit [x, f(x), ..., f^k(x)], truncated on overflow."""
    if k < 0:
        raise ParameterError("iteration count must be nonnegative")
    pt = np.asarray(x, dtype=float)
    orbit = [pt]
    truncated = False
    for _ in range(k):
        pt = spec(pt)
        if not np.all(np.isfinite(pt)) or np.linalg.norm(pt) > OVERFLOW_LIMIT:
            truncated = True
            orbit.append(pt)
            break
        orbit.append(pt)
    return OrbitResult(points=np.array(orbit), truncated=truncated)


def _attractor_array(attractors, dimension: int) -> Array:
    if not attractors:
        return np.empty((0, dimension))
    locs = []
    for a in attractors:
        locs.append(a.location if isinstance(a, FixedPointRecord) else a)
    return np.asarray(locs, dtype=float).reshape(-1, dimension)


def classify_batch(
    spec: MapSpec,
    points: Array,
    budget: ClassifyBudget = ClassifyBudget(),
    attractors=(),
) -> tuple[Array, Array, Array, Array]:
    """Vectorised classification of a batch of points.

    Returns (codes, basin ids, iterations used, witnesses); codes follow the
    grid label constants.  Per-point results are independent of batch
    composition, which is what makes grid runs reproducible under chunking.
    """
    pts = as_points(points, spec.dimension)
    n_pts = pts.shape[0]
    state = pts.copy()
    codes = np.full(n_pts, UNDECIDED, dtype=np.int64)
    basins = np.full(n_pts, -1, dtype=np.int64)
    iters = np.zeros(n_pts, dtype=np.int64)
    witness = np.zeros(n_pts)
    stayed_bounded = np.ones(n_pts, dtype=bool)
    active = np.ones(n_pts, dtype=bool)
    att = _attractor_array(attractors, spec.dimension)
    cert = spec.escape_certificate

    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for step in range(1, budget.k_max + 1):
            if not np.any(active):
                break
            idx = np.flatnonzero(active)
            cur = spec(state[idx])
            state[idx] = cur
            mod = np.linalg.norm(cur, axis=1)
            bad = ~np.isfinite(mod)
            mod = np.where(bad, np.inf, mod)

            esc = (mod > budget.t_escape) | bad
            if cert is not None:
                ok = ~bad
                if np.any(ok):
                    inside = np.zeros(len(idx), dtype=bool)
                    inside[ok] = cert.contains(cur[ok])
                    esc |= inside
            newly = idx[esc]
            codes[newly] = ESCAPING
            iters[newly] = step
            witness[newly] = mod[esc]
            active[newly] = False

            live = ~esc
            if att.shape[0] and np.any(live):
                sub = cur[live]
                d = np.linalg.norm(sub[:, None, :] - att[None, :, :], axis=2)
                hit = d.min(axis=1) < budget.basin_tol
                which = d.argmin(axis=1)
                tgt = idx[live][hit]
                codes[tgt] = BASIN_BASE + which[hit]
                basins[tgt] = which[hit]
                iters[tgt] = step
                witness[tgt] = d.min(axis=1)[hit]
                active[tgt] = False

            still = active[idx]
            stayed_bounded[idx[still]] &= mod[still] <= budget.t_bound

        rest = np.flatnonzero(active)
        final_mod = np.linalg.norm(state[rest], axis=1) if rest.size else np.empty(0)
        codes[rest] = np.where(stayed_bounded[rest], BOUNDED, UNDECIDED)
        iters[rest] = budget.k_max
        witness[rest] = final_mod
    return codes, basins, iters, witness


def classify_point(
    spec: MapSpec, x, budget: ClassifyBudget = ClassifyBudget(), attractors=()
) -> OrbitClass:
    """Classify a single point; Undecided is the safe default."""
    codes, basins, iters, wit = classify_batch(spec, np.atleast_2d(x), budget, attractors)
    code = int(codes[0])
    return OrbitClass(
        label=label_name(code),
        iterations_used=int(iters[0]),
        witness=float(wit[0]),
        basin_id=int(basins[0]) if code >= BASIN_BASE else None,
    )


def classify_grid(
    spec: MapSpec,
    grid: Grid,
    budget: ClassifyBudget = ClassifyBudget(),
    attractors=(),
    threads: int = 1,
) -> Grid:
    """Label every cell center of the grid; output independent of thread count."""
    if grid.n_cells() == 0:
        raise ParameterError("grid must be non-empty")
    centers = grid.centers()
    codes = np.empty(centers.shape[0], dtype=np.int64)

    att = list(attractors)
    chunks = max(1, int(threads))
    bounds = np.linspace(0, centers.shape[0], chunks + 1).astype(int)

    def work(lo: int, hi: int):
        c, _, _, _ = classify_batch(spec, centers[lo:hi], budget, att)
        codes[lo:hi] = c

    if chunks == 1:
        work(0, centers.shape[0])
    else:
        with ThreadPoolExecutor(max_workers=chunks) as pool:
            futures = [
                pool.submit(work, bounds[i], bounds[i + 1]) for i in range(chunks)
            ]
            for f in futures:
                f.result()

    legend = {
        UNDECIDED: label_name(UNDECIDED),
        ESCAPING: label_name(ESCAPING),
        BOUNDED: label_name(BOUNDED),
    }
    for i, a in enumerate(att):
        legend[BASIN_BASE + i] = label_name(BASIN_BASE + i)
    return Grid(window=grid.window, shape=grid.shape, labels=codes, legend=legend)


# -- fixed / periodic points ---------------------------------------------------

def _newton_polish(spec: MapSpec, seed: Array, period: int, iters: int = 80) -> Array | None:
    """Damped Newton on f^period - id from one seed; None when it stalls."""
    n = spec.dimension
    x = np.asarray(seed, dtype=float).copy()

    def residual(p: Array) -> Array:
        cur = p.copy()
        for _ in range(period):
            cur = spec(cur)
        return cur - p

    r = residual(x)
    if not np.all(np.isfinite(r)):
        return None
    for _ in range(iters):
        nr = np.linalg.norm(r)
        if nr < 1e-11:
            return x
        h = 1e-7 * max(1.0, np.linalg.norm(x))
        jac = np.empty((n, n))
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            jac[:, i] = (residual(x + e) - r) / h
        # least squares instead of solve: tolerates the rank-deficient Jacobians
        # that pointwise-fixed lines and neutral points produce
        step = np.linalg.lstsq(jac, r, rcond=None)[0]
        if not np.all(np.isfinite(step)):
            return None
        cap = max(1.0, np.linalg.norm(x))
        ns = np.linalg.norm(step)
        if ns > cap:
            step *= cap / ns
        t = 1.0
        for _ in range(25):
            cand = x - t * step
            rc = residual(cand)
            if np.all(np.isfinite(rc)) and np.linalg.norm(rc) < nr:
                x, r = cand, rc
                break
            t *= 0.5
        else:
            return x if nr < 1e-9 else None
    return x if np.linalg.norm(residual(x)) < 1e-9 else None


def find_fixed_points(
    spec: MapSpec,
    region,
    period: int = 1,
    seeds: int = 64,
    rng_seed: int = 0,
) -> FixedPointSearch:
    """Newton search for periodic points from a seed lattice over a box region.

    Records are deduplicated within 1e-6 and carry a residual and a numeric
    multiplier (spectral radius of D(f^period)).  When more than half of the
    converged seeds land on pairwise-distinct fixed points the search raises
    the continuum flag: the region is pointwise fixed at sampling resolution.
    """
    if period < 1:
        raise ParameterError("period must be at least 1")
    region = np.asarray(region, dtype=float)
    n = spec.dimension
    lo, hi = region[0::2], region[1::2]
    per_axis = max(2, int(round(seeds ** (1.0 / n))))
    axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    seed_pts = np.stack([m.ravel() for m in mesh], axis=1)
    for extra in spec.attractor_seeds:
        seed_pts = np.vstack([seed_pts, np.asarray(extra, dtype=float)[None, :]])

    found: list[Array] = []
    converged = 0
    for s in seed_pts:
        loc = _newton_polish(spec, s, period)
        if loc is None:
            continue
        converged += 1
        if not any(np.linalg.norm(loc - f) < 1e-6 for f in found):
            found.append(loc)

    records = []
    from .calculus import derivative_matrix  # local import avoids a cycle

    for loc in found:
        cur = loc.copy()
        jac = np.eye(n)
        for _ in range(period):
            jac = derivative_matrix(spec, cur) @ jac
            cur = spec(cur)
        residual = float(np.linalg.norm(cur - loc))
        mult = float(np.max(np.abs(np.linalg.eigvals(jac))))
        if mult < 1.0 - 1e-6:
            stability = "attracting"
        elif mult > 1.0 + 1e-6:
            stability = "repelling"
        else:
            stability = "neutral-undetermined"
        records.append(
            FixedPointRecord(
                location=tuple(float(v) for v in loc),
                period=period,
                multiplier_estimate=mult,
                stability=stability,
                residual=residual,
            )
        )
    continuum = converged > 0 and len(found) > 0.5 * converged and len(found) > 8
    return FixedPointSearch(records=records, continuum_of_fixed_points=continuum)


# -- uniform expansion check ----------------------------------------------------

@dataclass
class ExpansionCheck:
    passed: bool
    flagged: bool        # ball escaped the tract geometry at sample scale
    checked: int
    worst_margin: float  # min over samples of R - |preimage - x|


def check_expansion(
    spec: MapSpec,
    x,
    R: float,
    samples: int = 200,
    alpha: float | None = None,
) -> ExpansionCheck:
    """Verify the branch-expansion inclusion at one tract point.

    Samples the ball B(f(x), R/alpha) intersected with the half-space of the
    inverse-branch domain and checks every sample pulls back (via the branch
    of x's beam) inside B(x, R).  The measured contraction is inflated by 2%
    before use: the sampled ratio is a lower bound on the true constant, and
    the inclusion is stated for the true one.
    """
    from .calculus import ball_lattice  # local import avoids a cycle

    branches = spec.inverse
    if branches is None or not hasattr(branches, "M"):
        raise DomainError("expansion check needs a map with tract inverse branches")
    if R <= 0:
        raise ParameterError("radius R must be positive")
    pt = np.asarray(x, dtype=float)
    M = branches.M
    r1, r2 = int(np.round(pt[0] / 2.0)), int(np.round(pt[1] / 2.0))
    if (r1 + r2) % 2 != 0 or max(abs(pt[0] - 2 * r1), abs(pt[1] - 2 * r2)) >= 1.0:
        raise DomainError("x must lie in an even-parity tract")
    fx = spec(pt)
    if fx[2] < M or pt[2] <= M:
        raise DomainError("x must lie in the inverse-branch image (x3 > M, f(x)3 >= M)")

    a_used = (alpha if alpha is not None else branches.alpha()) * 1.02
    ball = ball_lattice(3, fx, R / a_used, samples)
    ball = ball[ball[:, 2] >= M]
    # the half-space cut truncated a nontrivial share of the target ball:
    # the hypothesis is leaving its comfort zone at this sample scale
    flagged = ball.shape[0] < 0.9 * samples
    if ball.shape[0] == 0:
        return ExpansionCheck(passed=False, flagged=True, checked=0, worst_margin=float("nan"))
    pre = branches.apply(ball, (r1, r2))
    dist = np.linalg.norm(pre - pt, axis=1)
    inside = (dist < R) & (pre[:, 2] >= M)
    margin = float(np.min(R - dist))
    return ExpansionCheck(
        passed=bool(np.all(inside)),
        flagged=flagged,
        checked=int(ball.shape[0]),
        worst_margin=margin,
    )
