"""File emitters and run manifests: PGM grids, CSV point clouds, JSON reports.

Formats are chosen to be diffable and bit-exact: binary P5 PGM for label and
scalar grids (3D grids as one PGM per z slice plus a geometry sidecar), CSV
with a header row for point clouds, JSON for everything else.  Every run
writes a manifest listing its outputs with content hashes; re-running with
identical inputs must reproduce the hashes.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .grids import Grid
from .mapspec import Array, ParameterError


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_pgm(values: Array, path: Path) -> None:
    """Binary P5 image from a uint8 2D array (first axis = x, second = y)."""
    img = np.asarray(values)
    if img.ndim != 2:
        raise ParameterError("PGM wants a 2D array")
    img = img.astype(np.uint8)
    # PGM rows run top to bottom; flip y so the window's y axis points up
    rows = img.T[::-1, :]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{rows.shape[1]} {rows.shape[0]}\n255\n".encode())
        fh.write(rows.tobytes())


def read_pgm(path: Path) -> Array:
    with open(path, "rb") as fh:
        data = fh.read()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ParameterError("not a binary PGM file")
    w, h = map(int, parts[1].split())
    raw = np.frombuffer(parts[3], dtype=np.uint8, count=w * h).reshape(h, w)
    return raw[::-1, :].T


def grid_to_gray(grid: Grid) -> tuple[Array, dict]:
    """Map label codes to spread-out gray levels; returns (codes image, legend)."""
    if grid.labels is None:
        raise ParameterError("grid has no labels")
    codes = sorted(set(int(v) for v in np.unique(grid.labels)) | set(grid.legend))
    levels = {c: int(round(255 * i / max(len(codes) - 1, 1))) for i, c in enumerate(codes)}
    lut = np.zeros(max(codes) + 1, dtype=np.uint8)
    for c, g in levels.items():
        lut[c] = g
    img = lut[grid.labels_nd()]
    legend = {
        str(levels[c]): grid.legend.get(c, f"label {c}") for c in codes
    }
    return img, legend


def write_grid_artifacts(grid: Grid, out_dir: Path, stem: str) -> list[Path]:
    """PGM (per z slice in 3D) plus a JSON sidecar with geometry and legend."""
    out: list[Path] = []
    img, legend = grid_to_gray(grid)
    if grid.dimension == 2:
        p = out_dir / f"{stem}.pgm"
        write_pgm(img, p)
        out.append(p)
    else:
        for k in range(grid.shape[2]):
            p = out_dir / f"{stem}_z{k:03d}.pgm"
            write_pgm(img[:, :, k], p)
            out.append(p)
    sidecar = {
        "window": list(grid.window),
        "shape": list(grid.shape),
        "legend": legend,
        "slices": len(out) if grid.dimension == 3 else None,
    }
    p = out_dir / f"{stem}_legend.json"
    write_json(sidecar, p)
    out.append(p)
    return out


def write_csv_points(points: Array, path: Path) -> None:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    header = ",".join(["x", "y", "z"][: pts.shape[1]])
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in pts:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_csv_points(path: Path) -> Array:
    with open(path) as fh:
        header = fh.readline()
        if not header.strip():
            raise ParameterError("empty CSV")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return np.array([[float(v) for v in r] for r in rows])


def write_json(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RunManifest:
    """Reproducibility record for one CLI run."""

    command: str
    map_name: str | None
    params: dict
    knobs: dict
    seed: int
    grid_geometry: dict | None
    tool_version: str = __version__
    rng_scheme: str = "numpy default_rng seeded with [seed, stream] counters"
    wall_clock_s: float = 0.0
    outputs: list = field(default_factory=list)

    def add_outputs(self, paths) -> None:
        for p in paths:
            p = Path(p)
            self.outputs.append(
                {"name": p.name, "sha256": sha256_file(p), "bytes": p.stat().st_size}
            )

    def save(self, out_dir: Path, stem: str = "manifest") -> Path:
        path = Path(out_dir) / f"{stem}.json"
        payload = {
            "command": self.command,
            "map": self.map_name,
            "params": self.params,
            "knobs": self.knobs,
            "seed": self.seed,
            "grid_geometry": self.grid_geometry,
            "tool_version": self.tool_version,
            "rng_scheme": self.rng_scheme,
            "wall_clock_s": round(self.wall_clock_s, 3),
            "outputs": self.outputs,
        }
        write_json(payload, path)
        return path


class Stopwatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
