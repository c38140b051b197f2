"""Pits-effect detection: annulus sublevel sampling, ball covers, verdicts.

A map has the pits effect when, for some fixed N, the low-modulus set
{R <= |x| <= cR, |f(x)| <= 1} of every sufficiently large annulus fits into N
balls of radius eps*R.  The scan renders the quantifiers at sample scale: the
sublevel set is sampled (with local refinement around modulus minima so thin
pits are found at all), covered greedily, and judged against N across a list
of radii.  Verdicts rest on two-sided bounds: the greedy count upper-bounds
the optimal cover at twice the ball radius, while the greedy centers form a
separated witness set lower-bounding the optimal cover at the ball radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mapspec import Array, MapSpec, ParameterError, QrdynError

DENSITY_CAP = 10_000_000
REFINE_ROUNDS = 5
REFINE_GRID = 9          # per-axis local refinement lattice
REFINE_HARD_CAP = 1536   # refinement starts per annulus, pathological ceiling
REFINE_BINS_2D = 32      # per-axis spatial bins nominating one candidate each
REFINE_BINS_3D = 12
REFINE_GLOBAL = 256      # globally smallest moduli added to the bin nominees
REFINE_SKIP_HITS = 2048  # coarse hits beyond which refinement adds nothing
REFINE_SEPARATION_CAP = np.pi  # candidate dedup radius never exceeds this


class PitsScanError(QrdynError):
    pass


@dataclass
class PitsReport:
    verdict: str                       # has_pits | no_pits | inconclusive
    N_used: int
    c: float
    eps: float
    radii_tested: list
    cover_counts: dict                 # R -> {"upper": int, "witness": int, "points": int}
    threshold_rule: str
    R0: float
    witness_points: Array | None = None
    witness_radius: float | None = None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "N_used": self.N_used,
            "c": self.c,
            "eps": self.eps,
            "radii_tested": list(map(float, self.radii_tested)),
            "cover_counts": {
                str(k): dict(v) for k, v in self.cover_counts.items()
            },
            "threshold_rule": self.threshold_rule,
            "R0": self.R0,
            "witness_count": (
                0 if self.witness_points is None else int(self.witness_points.shape[0])
            ),
            "witness_radius": self.witness_radius,
        }


def _annulus_lattice(dimension: int, R: float, c: float, count: int) -> Array:
    """Deterministic quasi-uniform points in the annulus R <= |x| <= cR."""
    i = np.arange(count) + 0.5
    if dimension == 2:
        # equal-area radial spacing, golden-angle sweep
        r = np.sqrt(R * R + (c * c - 1.0) * R * R * i / count)
        th = np.pi * (1.0 + np.sqrt(5.0)) * i
        return np.column_stack([r * np.cos(th), r * np.sin(th)])
    if dimension == 3:
        from .calculus import sphere_lattice

        shells = max(8, int(round(count ** (1.0 / 3.0))))
        per_shell = max(count // shells, 1)
        rs = (R ** 3 + (c ** 3 - 1.0) * R ** 3 * (np.arange(shells) + 0.5) / shells) ** (1 / 3)
        return np.vstack([sphere_lattice(3, r, per_shell) for r in rs])
    raise ParameterError("annulus sampling implemented for n = 2, 3")


def sublevel_sample(
    spec: MapSpec,
    R: float,
    c: float = 2.0,
    threshold: float = 1.0,
    density: int | None = None,
) -> Array:
    """Points of the annulus {R <= |x| <= cR} where |f| <= threshold.

    A quasi-uniform pass is followed by deterministic local refinement around
    the smallest sampled moduli: sublevel components can be far thinner than
    the lattice spacing, and the refinement walks down to them.  Every
    returned point genuinely satisfies |f| <= threshold; an empty set is a
    valid result.
    """
    if R <= 0 or c <= 1:
        raise ParameterError("need R > 0 and c > 1")
    n = spec.dimension
    if density is None:
        density = min(DENSITY_CAP, int((8.0 / 0.05) ** n))
    density = min(int(density), DENSITY_CAP)
    if density < 1024:
        raise ParameterError("sampling density too small to be meaningful")

    pts = _annulus_lattice(n, R, c, density)
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        mod = np.linalg.norm(spec(pts), axis=1)
    mod = np.where(np.isfinite(mod), mod, np.inf)
    coarse = pts[mod <= threshold]
    if coarse.shape[0] >= REFINE_SKIP_HITS:
        # fat sublevel set: the lattice resolves it already
        return np.unique(np.round(coarse, 12), axis=0)
    found = [coarse]

    spacing = R * np.sqrt(2.0 * np.pi * (c * c - 1.0) / density) if n == 2 else R * 0.05
    centers = _refine_candidates(pts, mod, R, c, spacing, n)
    # round-one box wide enough to reach a pit sitting between two candidates
    box = 2.0 * max(spacing, REFINE_SEPARATION_CAP)
    ticks = np.linspace(-0.5, 0.5, REFINE_GRID)
    lattice = np.stack(np.meshgrid(*([ticks] * n), indexing="ij"), axis=-1).reshape(-1, n)
    for center in centers:
        cur, width = np.asarray(center, dtype=float), box
        for _ in range(REFINE_ROUNDS):
            local = cur + lattice * width
            with np.errstate(over="ignore", invalid="ignore", under="ignore"):
                lm = np.linalg.norm(spec(local), axis=1)
            lm = np.where(np.isfinite(lm), lm, np.inf)
            hit = local[lm <= threshold]
            rr = np.linalg.norm(hit, axis=1) if hit.size else np.empty(0)
            if hit.size:
                found.append(hit[(rr >= R) & (rr <= c * R)])
            cur = local[np.argmin(lm)]
            width /= REFINE_GRID - 1.0
    out = np.vstack([f for f in found if f.size] or [np.empty((0, n))])
    if out.shape[0]:
        out = np.unique(np.round(out, 12), axis=0)
    return out


def _refine_candidates(pts, mod, R, c, spacing, n) -> Array:
    """Refinement seeds: per-bin modulus argmins plus the global smallest.

    The spatial binning guarantees candidates across the whole annulus even
    when a broad shallow modulus basin would otherwise dominate the ranking;
    the global list catches deep isolated wells below bin resolution.
    Candidates closer than the separation cap to an accepted one are dropped.
    """
    order = np.argsort(mod, kind="stable")
    sep2 = min(4.0 * spacing, REFINE_SEPARATION_CAP) ** 2

    bins = REFINE_BINS_2D if n == 2 else REFINE_BINS_3D
    span = 2.0 * c * R
    key = np.clip(((pts + c * R) / span * bins).astype(np.int64), 0, bins - 1)
    flat = key @ (bins ** np.arange(n))
    _, first = np.unique(flat[order], return_index=True)
    bin_mins = order[np.sort(first)]
    pool = np.concatenate([bin_mins, order[:REFINE_GLOBAL]])
    pool = pool[np.isfinite(mod[pool])]
    pool = pool[np.argsort(mod[pool], kind="stable")]

    accepted = np.empty((0, n))
    for k in pool:
        if accepted.shape[0] >= REFINE_HARD_CAP:
            break
        p = pts[k]
        if accepted.size and np.min(np.sum((accepted - p) ** 2, axis=1)) <= sep2:
            continue
        accepted = np.vstack([accepted, p[None, :]])
    return accepted


def greedy_cover_count(points: Array, radius: float) -> int:
    """Greedy ball cover: count of center-on-point picks at reach 2*radius.

    Points are scanned in lexicographic order; each pick covers everything
    within 2*radius.  The count upper-bounds the optimal cover by balls of
    radius 2*radius, and the picked centers are pairwise more than 2*radius
    apart, so the same count lower-bounds the optimal cover by balls of
    radius ``radius``.  Deterministic given the input set.
    """
    if radius <= 0:
        raise ParameterError("radius must be positive")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        return 0
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    return len(_greedy_centers(pts, radius))


def _greedy_centers(pts_sorted: Array, radius: float) -> list[int]:
    uncovered = np.ones(pts_sorted.shape[0], dtype=bool)
    centers = []
    while np.any(uncovered):
        i = int(np.argmax(uncovered))
        centers.append(i)
        d = np.linalg.norm(pts_sorted[uncovered] - pts_sorted[i], axis=1)
        idx = np.flatnonzero(uncovered)
        uncovered[idx[d <= 2.0 * radius]] = False
    return centers


def separated_witness(points: Array, radius: float) -> Array:
    """Maximal subset with pairwise separation > 2*radius (greedy centers)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        return pts
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    return pts[_greedy_centers(pts, radius)]


def _threshold_for(rule, R: float) -> float:
    if rule is None or rule == "unit":
        return 1.0
    if isinstance(rule, tuple) and rule[0] == "power":
        return float(R ** rule[1])
    raise ParameterError(f"unknown threshold rule {rule!r}")


def _rule_name(rule) -> str:
    if rule is None or rule == "unit":
        return "constant 1"
    return f"R^{rule[1]:g}"


def pits_scan(
    spec: MapSpec,
    N: int = 10,
    c: float = 2.0,
    eps: float = 0.05,
    R_list=(10.0, 20.0, 40.0, 80.0),
    threshold_rule="unit",
    density: int | None = None,
) -> PitsReport:
    """Scan the annuli R in R_list for the pits effect at budget N.

    has_pits requires the cover upper bound to stay <= N at every tested R
    beyond the smallest (the finite stand-in for "for all R > R0"); no_pits
    requires a separated witness set larger than N at half or more of the
    tested radii including the largest.  Anything else is inconclusive.
    The two evidence rules use opposite sides of the greedy bracket, so they
    cannot both fire.
    """
    if spec.growth == "polynomial":
        raise PitsScanError("pits effect is defined for transcendental-type maps only")
    radii = sorted(float(r) for r in R_list)
    if len(radii) < 4 or radii[-1] / radii[0] < 4.0:
        raise ParameterError("R_list needs >= 4 entries spanning >= 2 octaves")

    counts: dict = {}
    witness_pts = None
    witness_rad = None
    for R in radii:
        sub = sublevel_sample(spec, R, c, _threshold_for(threshold_rule, R), density)
        upper = greedy_cover_count(sub, eps * R / 2.0)
        wit = separated_witness(sub, eps * R)
        counts[R] = {"upper": upper, "witness": len(wit), "points": int(sub.shape[0])}
        if R == radii[-1]:
            witness_pts = wit
            witness_rad = eps * R

    has_evidence = all(counts[R]["upper"] <= N for R in radii[1:])
    big = [R for R in radii if counts[R]["witness"] > N]
    no_evidence = len(big) * 2 >= len(radii) and radii[-1] in big

    if has_evidence and not no_evidence:
        verdict = "has_pits"
    elif no_evidence:
        verdict = "no_pits"
    else:
        verdict = "inconclusive"
    return PitsReport(
        verdict=verdict,
        N_used=N,
        c=c,
        eps=eps,
        radii_tested=radii,
        cover_counts=counts,
        threshold_rule=_rule_name(threshold_rule),
        R0=radii[1],
        witness_points=witness_pts if verdict == "no_pits" else None,
        witness_radius=witness_rad if verdict == "no_pits" else None,
    )


def threshold_robustness(
    spec: MapSpec,
    alpha: float = 1.5,
    N: int = 10,
    c: float = 2.0,
    eps: float = 0.05,
    R_list=(10.0, 20.0, 40.0, 80.0),
    density: int | None = None,
) -> dict:
    """Compare the unit-threshold scan against the R^alpha-threshold scan.

    Returns {"agrees": bool | None, ...}; None means one scan was
    inconclusive, which is reported rather than treated as disagreement.
    """
    if alpha <= 1:
        raise ParameterError("alpha must exceed 1")
    base = pits_scan(spec, N, c, eps, R_list, "unit", density)
    power = pits_scan(spec, N, c, eps, R_list, ("power", alpha), density)
    if "inconclusive" in (base.verdict, power.verdict):
        agrees = None
    else:
        agrees = base.verdict == power.verdict
    return {
        "agrees": agrees,
        "alpha": alpha,
        "unit_verdict": base.verdict,
        "power_verdict": power.verdict,
    }
