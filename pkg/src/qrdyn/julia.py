"""Julia-set estimators: orbit spreading, classification boundary, backward orbits.

Three complementary estimators:

* ``julia_membership_spreading`` renders the defining property (forward
  images of every neighbourhood leave only a negligible complement) as a
  finite-resolution coverage test over a reference window.
* ``julia_boundary_estimate`` collects cells adjacent to both escaping and
  bounded/basin cells of a classified grid: a candidate superset at grid
  resolution (containment only, candidates need not all be Julia).
* ``backward_orbit_sample`` runs a chaos game over inverse branches.

``box_dimension`` fits the log occupancy slope of a point cloud as a
desk-scale dimension witness.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import ball_lattice
from .dynamics import OVERFLOW_LIMIT
from .grids import BASIN_BASE, BOUNDED, ESCAPING, Grid
from .mapspec import Array, DomainError, MapSpec, ParameterError, as_points

COVERAGE_THRESHOLD = 0.95
EXCEPTIONAL_CELLS = 8
DEFAULT_REF_EXTENT = 50.0
DEFAULT_REF_RESOLUTION_2D = 128
DEFAULT_REF_RESOLUTION_3D = 48
DEFAULT_DEPTH = 30
BALL_SAMPLES = 256
SUBSAMPLE_CAP = 48   # per-axis cap of the per-cell refinement lattice
BURN_IN = 50


@dataclass
class SpreadingVerdict:
    julia_positive: bool
    coverage_fraction: float
    missed_cells: int
    radius_used: float
    depth_used: int
    far_cell_hit: bool = False
    threshold: float = COVERAGE_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "julia_positive": self.julia_positive,
            "coverage_fraction": self.coverage_fraction,
            "missed_cells": self.missed_cells,
            "radius_used": self.radius_used,
            "depth_used": self.depth_used,
            "far_cell_hit": self.far_cell_hit,
            "threshold": self.threshold,
        }


@dataclass
class JuliaSample:
    points: Array
    method: str                  # boundary | backward | spreading
    map_id: str
    params: dict = field(default_factory=dict)
    window: tuple = ()
    warning: str | None = None


def default_window(dimension: int, extent: float = DEFAULT_REF_EXTENT) -> tuple:
    return tuple(v for _ in range(dimension) for v in (-extent, extent))


def _mark(grid: Grid, hit: Array, pts: Array) -> bool:
    """Mark the cells containing pts; returns True when any point left the window."""
    finite = np.all(np.isfinite(pts), axis=1) & (
        np.linalg.norm(pts, axis=1) < OVERFLOW_LIMIT
    )
    idx, inside = grid.cell_index(pts[finite])
    hit[idx[inside]] = True
    return bool(np.any(~inside) or np.any(~finite))


_GOLDEN = 0.6180339887498949


def _lattice(n: int, level: int, phase: float) -> Array:
    """Per-cell sampling offsets in units of the cell size, jittered by phase.

    The phase shifts the lattice deterministically from one iteration step to
    the next, so repeated visits to the same cell fill different image gaps.
    """
    ticks = ((np.arange(level) + 0.5 + phase) % level) / level - 0.5
    return np.stack(np.meshgrid(*([ticks] * n), indexing="ij"), axis=-1).reshape(-1, n)


def _spread_cells(grid: Grid, cells: Array, spec: MapSpec, hit: Array, phase: float):
    """One step of cell-set tracking: map the cells, mark, return the new cell set.

    Cells are sampled with a coarse corner lattice first; cells whose image
    diameter exceeds one cell get a subdivision lattice proportional to the
    measured stretch (capped), so strongly expanded cells still paint a dense
    image at window resolution.  Returns (new cells, any point left window).
    """
    n = grid.dimension
    h = np.asarray(grid.cell_sizes)
    centers = _cells_to_centers(grid, cells)
    base = (centers[:, None, :] + _lattice(n, 2, phase)[None, :, :] * h).reshape(-1, n)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        img = spec(base)
    far = _mark(grid, hit, img)
    idx_parts = [img]

    img_c = img.reshape(centers.shape[0], -1, n)
    finite = np.all(np.isfinite(img_c), axis=(1, 2))
    spread = np.zeros(centers.shape[0])
    if np.any(finite):
        spans = img_c[finite].max(axis=1) - img_c[finite].min(axis=1)
        spread[finite] = np.max(spans / h, axis=1)
    m = np.clip(np.ceil(spread).astype(np.int64), 1, SUBSAMPLE_CAP)

    for level in np.unique(m):
        if level <= 2:
            continue
        sel = centers[m == level]
        pts = (sel[:, None, :] + _lattice(n, int(level), phase)[None, :, :] * h).reshape(-1, n)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            sub = spec(pts)
        far |= _mark(grid, hit, sub)
        idx_parts.append(sub)

    allpts = np.vstack(idx_parts)
    good = np.all(np.isfinite(allpts), axis=1) & (
        np.linalg.norm(allpts, axis=1) < OVERFLOW_LIMIT
    )
    idx, inside = grid.cell_index(allpts[good])
    return np.unique(idx[inside]), far


def _cells_to_centers(grid: Grid, cells: Array) -> Array:
    idx = np.asarray(cells, dtype=np.int64)
    n = grid.dimension
    coords = np.empty((idx.shape[0], n))
    rem = idx.copy()
    for i in reversed(range(n)):
        k = rem % grid.shape[i]
        rem //= grid.shape[i]
        lo, hi = grid.window[2 * i], grid.window[2 * i + 1]
        h = (hi - lo) / grid.shape[i]
        coords[:, i] = lo + h * (k + 0.5)
    return coords


def julia_membership_spreading(
    spec: MapSpec,
    x,
    radius: float = 0.05,
    depth: int = DEFAULT_DEPTH,
    ref_window: tuple | None = None,
    ref_resolution: int | None = None,
) -> SpreadingVerdict:
    """Coverage proxy for Julia membership at a point.

    A deterministic sample of B(x, radius) is pushed forward; while the cloud
    stays below cell size it is tracked pointwise, after which the covered
    region is tracked as a cell set with stretch-adaptive resampling (the
    image of a neighbourhood, not of a thinning point sample).  The verdict
    is positive when the forward images hit at least 95% of the reference
    cells, after discounting cells containing declared omitted values and up
    to EXCEPTIONAL_CELLS stragglers.
    """
    if radius <= 0:
        raise ParameterError("radius must be positive")
    if depth < 1:
        raise ParameterError("depth must be at least 1")
    n = spec.dimension
    window = tuple(ref_window) if ref_window is not None else default_window(n)
    res = ref_resolution or (DEFAULT_REF_RESOLUTION_2D if n == 2 else DEFAULT_REF_RESOLUTION_3D)
    grid = Grid(window=window, shape=(res,) * n)
    cell = float(min(grid.cell_sizes))

    omitted = np.zeros(grid.n_cells(), dtype=bool)
    for v in spec.omitted_values:
        idx, inside = grid.cell_index(np.asarray(v, dtype=float)[None, :])
        omitted[idx[inside]] = True

    hit = np.zeros(grid.n_cells(), dtype=bool)
    far = False
    cloud = ball_lattice(n, np.asarray(x, dtype=float), radius, BALL_SAMPLES)
    cells: Array | None = None
    denom_goal = COVERAGE_THRESHOLD * np.count_nonzero(~omitted)
    stall = 0

    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        for step in range(depth):
            before = int(np.count_nonzero(hit))
            if cells is None:
                cloud = spec(cloud)
                good = np.all(np.isfinite(cloud), axis=1) & (
                    np.linalg.norm(cloud, axis=1) < OVERFLOW_LIMIT
                )
                far |= _mark(grid, hit, cloud)
                cloud = cloud[good]
                if cloud.size == 0:
                    break
                extent = cloud.max(axis=0) - cloud.min(axis=0)
                if np.max(extent) > 2.0 * cell:
                    idx, inside = grid.cell_index(cloud)
                    cells = np.unique(idx[inside])
            else:
                phase = (step * _GOLDEN) % 1.0
                cells, far_step = _spread_cells(grid, cells, spec, hit, phase)
                far |= far_step
                if cells.size == 0:
                    break
                if np.count_nonzero(hit & ~omitted) + EXCEPTIONAL_CELLS >= denom_goal:
                    break
                # stationary covered set: further steps revisit the same cells
                stall = stall + 1 if np.count_nonzero(hit) == before else 0
                if stall >= 3:
                    break

    denom = int(np.count_nonzero(~omitted))
    covered = int(np.count_nonzero(hit & ~omitted))
    coverage = covered / denom if denom else 0.0
    missed = denom - covered
    positive = covered + EXCEPTIONAL_CELLS >= COVERAGE_THRESHOLD * denom
    return SpreadingVerdict(
        julia_positive=bool(positive),
        coverage_fraction=float(coverage),
        missed_cells=int(missed),
        radius_used=float(radius),
        depth_used=int(depth),
        far_cell_hit=far,
    )


def julia_boundary_estimate(spec: MapSpec, grid: Grid) -> JuliaSample:
    """Candidate cells adjacent to both an escaping and a bounded/basin cell."""
    if grid.labels is None:
        raise DomainError("grid must be classified first")
    lab = grid.labels_nd()
    esc = lab == ESCAPING
    bnd = (lab == BOUNDED) | (lab >= BASIN_BASE)

    def dilate(mask: Array) -> Array:
        out = mask.copy()
        for axis in range(mask.ndim):
            for shift in (1, -1):
                out |= np.roll(mask, shift, axis=axis) & _roll_valid(mask.shape, axis, shift)
        return out

    candidates = dilate(esc) & dilate(bnd)
    idx = np.flatnonzero(candidates.ravel())
    pts = _cells_to_centers(grid, idx)
    return JuliaSample(
        points=pts,
        method="boundary",
        map_id=spec.name,
        params={"shape": list(grid.shape)},
        window=grid.window,
    )


def _roll_valid(shape: tuple, axis: int, shift: int) -> Array:
    """Mask that cancels wrap-around entries introduced by np.roll."""
    valid = np.ones(shape, dtype=bool)
    sl = [slice(None)] * len(shape)
    sl[axis] = slice(0, 1) if shift == 1 else slice(-1, None)
    valid[tuple(sl)] = False
    return valid


def backward_orbit_sample(
    spec: MapSpec,
    seed,
    steps: int = 10_000,
    branch_window: int = 2,
    rng_seed: int = 0,
    burn_in: int = BURN_IN,
    chains: int = 4,
) -> JuliaSample:
    """Chaos game over inverse branches, recording points after a burn-in.

    Maps with closed-form branch families (tract branches, logarithm
    branches) run several independent chains whose pullbacks are verified by
    the forward round trip.  Maps with only Newton-based local inversion run
    a single chain and may return a partial sample with a warning when the
    inversion exits its domain.
    """
    branches = spec.inverse
    if branches is None:
        raise DomainError(f"map {spec.name} exposes no inverse branches")
    seed_pt = np.asarray(seed, dtype=float)
    for v in spec.omitted_values:
        if np.linalg.norm(seed_pt - np.asarray(v)) < 1e-9:
            raise DomainError("seed must avoid declared omitted values")

    if hasattr(branches, "apply_from"):
        return _backward_newton(
            spec, branches, seed_pt, steps, branch_window, rng_seed, burn_in
        )

    ids = branches.branch_ids(branch_window)
    per_chain = (steps + chains - 1) // chains
    recorded = []
    warning = None
    residual_tol = 1e-9
    for chain in range(chains):
        rng = np.random.default_rng([rng_seed, chain, 101])
        cur = seed_pt.copy()
        kept = 0
        for k in range(per_chain + burn_in):
            if not branches.admissible(cur[None, :])[0]:
                warning = "chain exited the inverse-branch domain; partial sample"
                break
            pick = ids[rng.integers(len(ids))]
            nxt = branches.apply(cur[None, :], pick)[0]
            back = spec(nxt)
            rel = np.linalg.norm(back - cur) / max(1.0, np.linalg.norm(cur))
            if rel > residual_tol:
                warning = "round-trip residual exceeded tolerance; branch pruned"
                break
            cur = nxt
            if k >= burn_in:
                recorded.append(cur.copy())
                kept += 1
                if kept >= per_chain:
                    break
    pts = np.array(recorded) if recorded else np.empty((0, spec.dimension))
    window = _bounding_window(pts) if pts.size else ()
    return JuliaSample(
        points=pts,
        method="backward",
        map_id=spec.name,
        params={
            "seed": list(map(float, seed_pt)),
            "steps": steps,
            "branch_window": branch_window,
            "rng_seed": rng_seed,
            "burn_in": burn_in,
            "chains": chains,
        },
        window=window,
        warning=warning,
    )


def _backward_newton(spec, branches, seed_pt, steps, branch_window, rng_seed, burn_in):
    rng = np.random.default_rng([rng_seed, 101])
    ids = branches.branch_ids(branch_window)
    recorded = []
    warning = None
    cur = seed_pt.copy()
    prev = seed_pt.copy()
    for k in range(steps + burn_in):
        pre = branches.apply_from(cur[None, :], prev[None, :], branch=ids[rng.integers(len(ids))])
        if pre is None:
            # prune this branch for the step; retry on the principal branch
            pre = branches.apply_from(cur[None, :], prev[None, :], branch=0)
            if pre is None:
                warning = "local inversion failed; partial sample"
                break
        prev = cur
        cur = pre[0]
        if k >= burn_in:
            recorded.append(cur.copy())
    pts = np.array(recorded) if recorded else np.empty((0, spec.dimension))
    return JuliaSample(
        points=pts,
        method="backward",
        map_id=spec.name,
        params={"seed": list(map(float, seed_pt)), "steps": steps, "rng_seed": rng_seed},
        window=_bounding_window(pts) if pts.size else (),
        warning=warning,
    )


def _bounding_window(pts: Array) -> tuple:
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    pad = 0.05 * np.maximum(hi - lo, 1e-6)
    out = []
    for i in range(pts.shape[1]):
        out.extend([float(lo[i] - pad[i]), float(hi[i] + pad[i])])
    return tuple(out)


def box_dimension(points, window=None, scales=None) -> tuple[float, dict]:
    """Box-counting dimension of a point cloud.

    Least-squares slope of log(occupied boxes) against log(1/size).  Returns
    the estimate and diagnostics including the fit quality; fits with
    r^2 < 0.9 are flagged, not rejected.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[0] < 1000:
        raise ParameterError("need at least 1000 points for a dimension estimate")
    if window is None:
        window = _bounding_window(pts)
    window = np.asarray(window, dtype=float)
    lo = window[0::2]
    span = float(np.max(window[1::2] - window[0::2]))
    if scales is None:
        scales = [span / 2 ** k for k in range(3, 8)]
    scales = sorted(float(s) for s in scales)
    if len(scales) < 4:
        raise ParameterError("need at least 4 scales")
    if scales[-1] / scales[0] < 4.0:
        raise ParameterError("scales must span at least two octaves")

    counts = []
    for s in scales:
        keys = np.floor((pts - lo) / s).astype(np.int64)
        counts.append(len(np.unique(keys, axis=0)))
    logs = np.log(1.0 / np.asarray(scales))
    logn = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(logs, logn, 1)
    fit = slope * logs + intercept
    ss_res = float(np.sum((logn - fit) ** 2))
    ss_tot = float(np.sum((logn - logn.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(slope), {
        "scales": list(scales),
        "counts": [int(c) for c in counts],
        "r_squared": r2,
        "degenerate_fit": r2 < 0.9,
    }
