"""Axis-aligned sampling lattices in R^2 and R^3 with per-cell labels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mapspec import Array, ParameterError

# label codes stored in Grid.labels; basin ids are appended after BASIN_BASE
UNDECIDED = 0
ESCAPING = 1
BOUNDED = 2
BASIN_BASE = 3


def label_name(code: int) -> str:
    if code == UNDECIDED:
        return "Undecided"
    if code == ESCAPING:
        return "Escaping"
    if code == BOUNDED:
        return "Bounded"
    return f"Basin({code - BASIN_BASE})"


@dataclass
class Grid:
    """Cell-centered lattice over an axis-aligned window.

    window is (x0, x1, y0, y1[, z0, z1]); shape gives cells per axis.  Labels,
    when present, hold one integer code per cell in ij indexing (axis 0 is x).
    """

    window: tuple
    shape: tuple
    labels: Array | None = None
    legend: dict = field(default_factory=dict)

    def __post_init__(self):
        self.window = tuple(float(v) for v in self.window)
        self.shape = tuple(int(s) for s in self.shape)
        if len(self.window) != 2 * len(self.shape):
            raise ParameterError("window and shape dimensionality mismatch")
        if any(s < 1 for s in self.shape):
            raise ParameterError("grid must be non-empty")

    @property
    def dimension(self) -> int:
        return len(self.shape)

    @property
    def cell_sizes(self) -> tuple:
        w = self.window
        return tuple((w[2 * i + 1] - w[2 * i]) / self.shape[i] for i in range(self.dimension))

    def axis_centers(self, i: int) -> Array:
        lo, hi = self.window[2 * i], self.window[2 * i + 1]
        h = (hi - lo) / self.shape[i]
        return lo + h * (np.arange(self.shape[i]) + 0.5)

    def centers(self) -> Array:
        """All cell centers as an (N, n) array, x fastest-varying last axis order."""
        axes = [self.axis_centers(i) for i in range(self.dimension)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_index(self, pts: Array) -> tuple[Array, Array]:
        """Map points to flat cell indices; second return marks in-window points."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        idx = np.zeros(pts.shape[0], dtype=np.int64)
        inside = np.ones(pts.shape[0], dtype=bool)
        stride = 1
        for i in reversed(range(self.dimension)):
            lo, hi = self.window[2 * i], self.window[2 * i + 1]
            h = (hi - lo) / self.shape[i]
            k = np.floor((pts[:, i] - lo) / h).astype(np.int64)
            inside &= (k >= 0) & (k < self.shape[i]) & np.isfinite(pts[:, i])
            idx += np.clip(k, 0, self.shape[i] - 1) * stride
            stride *= self.shape[i]
        return idx, inside

    def n_cells(self) -> int:
        return int(np.prod(self.shape))

    def labels_nd(self) -> Array:
        if self.labels is None:
            raise ParameterError("grid has no labels yet")
        return self.labels.reshape(self.shape)
