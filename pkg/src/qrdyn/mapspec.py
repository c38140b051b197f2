"""Evaluatable self-maps of R^n with the metadata the estimators need.

A ``MapSpec`` wraps a vectorised evaluation rule ``(N, n) -> (N, n)`` together
with the bookkeeping used downstream: declared omitted values, an optional
escape certificate (a forward-invariant region with a certified drift), an
optional distance-to-seam function used to keep finite differences away from
non-smooth loci, and an optional inverse-branch provider for backward
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

Array = np.ndarray


class QrdynError(Exception):
    """Base class for numeric/domain failures surfaced to the CLI."""


class DomainError(QrdynError):
    """Input outside an operation's declared domain."""


class ParameterError(QrdynError):
    """Parameter outside its admissible range."""


def as_points(x, dimension: int) -> Array:
    """Coerce a point or batch of points to a float (N, dimension) array."""
    a = np.asarray(x, dtype=float)
    if a.ndim == 1:
        if a.shape[0] != dimension:
            raise DomainError(f"expected a point in R^{dimension}, got shape {a.shape}")
        return a[None, :]
    if a.ndim != 2 or a.shape[1] != dimension:
        raise DomainError(f"expected (N, {dimension}) points, got shape {a.shape}")
    return a


def as_complex(x: Array) -> Array:
    """(N, 2) real points -> (N,) complex."""
    return x[:, 0] + 1j * x[:, 1]


def from_complex(z: Array) -> Array:
    """(N,) complex -> (N, 2) real points."""
    return np.column_stack([z.real, z.imag])


@dataclass(frozen=True)
class EscapeCertificate:
    """Forward-invariant region carrying a certified escape drift.

    ``contains`` maps (N, n) points to a boolean mask.  ``drift`` evaluates
    the certified quantity q(x); soundness means q(f(x)) >= q(x) + margin and
    f(x) stays in the region whenever x is in it.  Classification may label a
    point Escaping as soon as its orbit enters the region.
    """

    name: str
    contains: Callable[[Array], Array]
    drift: Callable[[Array], Array]
    margin: float


@dataclass
class MapSpec:
    """A named entire map of R^n with parameters and evaluation rule."""

    name: str
    dimension: int
    eval: Callable[[Array], Array]
    params: dict[str, float] = field(default_factory=dict)
    omitted_values: tuple = ()
    escape_certificate: EscapeCertificate | None = None
    seam_distance: Callable[[Array], Array] | None = None
    growth: str = "transcendental"  # or "polynomial"
    inverse: Any = None
    attractor_seeds: tuple = ()
    aux: Any = None

    def __call__(self, x):
        """Evaluate on a single point (n,) or a batch (N, n); shape-preserving."""
        a = np.asarray(x, dtype=float)
        single = a.ndim == 1
        pts = as_points(a, self.dimension)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            out = self.eval(pts)
        return out[0] if single else out

    def describe(self) -> dict:
        return {
            "name": self.name,
            "dimension": self.dimension,
            "params": dict(self.params),
            "omitted_values": [list(map(float, v)) for v in self.omitted_values],
            "growth": self.growth,
            "has_inverse_branches": self.inverse is not None,
            "has_escape_certificate": self.escape_certificate is not None,
        }
