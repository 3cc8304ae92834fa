"""Regular distance grids: mesh sampling, noise, union, and file I/O.

Grid values are stored flat in x-fastest order (index i + nx*(j + ny*k)) with
one uniform spacing for all axes.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numba import njit, prange

from .errors import FormatError, GridMismatch
from .geometry import AabbTree
from .meshio import load_obj, triangulate_faces

GRID_MAGIC = "spudd-grid 1"
DEFAULT_PADDING = 0.1


@dataclass
class GroundTruthMesh:
    """Triangle mesh used as a sampling source and metric reference."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)

    @classmethod
    def from_obj(cls, path) -> "GroundTruthMesh":
        verts, faces = load_obj(path)
        return cls(verts, triangulate_faces(faces))

    @cached_property
    def tree(self) -> AabbTree:
        return AabbTree.from_triangles(self.vertices, self.faces)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def bbox_diagonal(self) -> float:
        lo, hi = self.bounds
        return float(np.linalg.norm(hi - lo))


def _check_layout(origin, spacing, dims, values):
    dims = np.asarray(dims, dtype=np.int64)
    if dims.shape != (3,) or np.any(dims < 2):
        raise ValueError("grid dims must be three integers >= 2")
    if not spacing > 0.0:
        raise ValueError("grid spacing must be positive")
    if values.shape != (int(dims[0]) * int(dims[1]) * int(dims[2]),):
        raise ValueError("value count does not match dims")
    return dims


class _GridLayout:
    """Shared node-layout helpers for the grid dataclasses."""

    def node_index(self, i, j, k):
        nx, ny = int(self.dims[0]), int(self.dims[1])
        return i + nx * (j + ny * k)

    def node_positions(self) -> np.ndarray:
        nx, ny, nz = (int(d) for d in self.dims)
        k, j, i = np.meshgrid(np.arange(nz), np.arange(ny), np.arange(nx),
                              indexing="ij")
        idx = np.stack([i, j, k], axis=-1).reshape(-1, 3)
        return self.origin + idx * self.spacing

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.origin.copy(), self.origin + (self.dims - 1) * self.spacing

    @property
    def bbox_diagonal(self) -> float:
        lo, hi = self.bounds
        return float(np.linalg.norm(hi - lo))


@dataclass
class UdfGrid(_GridLayout):
    """Unsigned distance samples at the nodes of a regular grid."""

    origin: np.ndarray
    spacing: float
    dims: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.origin = np.ascontiguousarray(self.origin, dtype=np.float64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.spacing = float(self.spacing)
        self.dims = _check_layout(self.origin, self.spacing, self.dims, self.values)
        if np.any(self.values < 0.0):
            raise ValueError("unsigned distance values must be non-negative")


@dataclass
class SdfGrid(_GridLayout):
    """Signed distance samples (negative inside); a testing scaffold."""

    origin: np.ndarray
    spacing: float
    dims: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.origin = np.ascontiguousarray(self.origin, dtype=np.float64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.spacing = float(self.spacing)
        self.dims = _check_layout(self.origin, self.spacing, self.dims, self.values)

    def to_udf(self) -> UdfGrid:
        return UdfGrid(self.origin, self.spacing, self.dims.copy(),
                       np.abs(self.values))

    @property
    def signs(self) -> np.ndarray:
        return np.where(self.values < 0.0, -1, 1).astype(np.int8)


def derive_layout(lo, hi, resolution: int, padding: float):
    """Uniform-spacing layout covering the padded bounds.

    `resolution` is the node count along the longest padded axis; the other
    axes get however many nodes are needed to cover their extent, re-centered.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    diag = float(np.linalg.norm(hi - lo))
    if diag == 0.0:
        raise ValueError("mesh bounding box is a single point")
    pad = padding * diag
    lo2 = lo - pad
    hi2 = hi + pad
    ext = hi2 - lo2
    h = float(ext.max()) / (resolution - 1)
    dims = np.maximum(np.ceil(ext / h - 1e-9).astype(np.int64) + 1, 2)
    size = (dims - 1) * h
    origin = 0.5 * (lo2 + hi2) - 0.5 * size
    return origin, h, dims


def sample_udf(mesh: GroundTruthMesh, resolution: int,
               padding: float = DEFAULT_PADDING) -> UdfGrid:
    """Exact minimum distance from each grid node to the mesh."""
    lo, hi = mesh.bounds
    origin, h, dims = derive_layout(lo, hi, resolution, padding)
    return sample_udf_at(mesh, origin, h, dims)


def sample_udf_at(mesh: GroundTruthMesh, origin, spacing: float, dims) -> UdfGrid:
    """Exact UDF of the mesh on an explicitly given grid layout."""
    grid = UdfGrid(origin, spacing, dims,
                   np.zeros(int(np.prod(np.asarray(dims)))))
    _, dists, _ = mesh.tree.closest_points(grid.node_positions())
    return UdfGrid(grid.origin, grid.spacing, grid.dims, dists)


@njit(cache=True, parallel=True)
def _winding_numbers(tris, pts, out):
    n = pts.shape[0]
    for i in prange(n):
        qx, qy, qz = pts[i, 0], pts[i, 1], pts[i, 2]
        total = 0.0
        for t in range(tris.shape[0]):
            ax, ay, az = tris[t, 0] - qx, tris[t, 1] - qy, tris[t, 2] - qz
            bx, by, bz = tris[t, 3] - qx, tris[t, 4] - qy, tris[t, 5] - qz
            cx, cy, cz = tris[t, 6] - qx, tris[t, 7] - qy, tris[t, 8] - qz
            la = np.sqrt(ax * ax + ay * ay + az * az)
            lb = np.sqrt(bx * bx + by * by + bz * bz)
            lc = np.sqrt(cx * cx + cy * cy + cz * cz)
            det = (ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx)
                   + az * (bx * cy - by * cx))
            denom = (la * lb * lc + (ax * bx + ay * by + az * bz) * lc
                     + (bx * cx + by * cy + bz * cz) * la
                     + (cx * ax + cy * ay + cz * az) * lb)
            total += 2.0 * np.arctan2(det, denom)
        out[i] = total / (4.0 * np.pi)


def winding_numbers(mesh: GroundTruthMesh, points: np.ndarray) -> np.ndarray:
    """Generalized winding number of the mesh at each query point."""
    tris = mesh.vertices[mesh.faces].reshape(-1, 9)
    pts = np.ascontiguousarray(points, dtype=np.float64)
    out = np.empty(pts.shape[0])
    _winding_numbers(np.ascontiguousarray(tris), pts, out)
    return out


def sample_sdf(mesh: GroundTruthMesh, resolution: int,
               padding: float = DEFAULT_PADDING) -> SdfGrid:
    """Signed distance grid; the sign comes from a winding-number inside test.

    Inside is winding number >= 0.5. For non-watertight input the sign is
    unreliable and no error is raised; |sdf| still equals the UDF exactly.
    """
    udf = sample_udf(mesh, resolution, padding)
    w = winding_numbers(mesh, udf.node_positions())
    signs = np.where(w >= 0.5, -1.0, 1.0)
    return SdfGrid(udf.origin, udf.spacing, udf.dims.copy(), signs * udf.values)


def add_noise(grid: UdfGrid, sigma: float, seed: int) -> UdfGrid:
    """Gaussian perturbation of scale sigma * spacing, clamped to stay >= 0."""
    rng = np.random.default_rng(seed)
    noisy = grid.values + rng.normal(0.0, sigma * grid.spacing,
                                     size=grid.values.shape)
    return UdfGrid(grid.origin.copy(), grid.spacing, grid.dims.copy(),
                   np.maximum(noisy, 0.0))


def grid_union(a: UdfGrid, b: UdfGrid) -> UdfGrid:
    """Pointwise minimum of two grids over the same layout."""
    if (not np.array_equal(a.dims, b.dims)
            or not np.array_equal(a.origin, b.origin)
            or a.spacing != b.spacing):
        raise GridMismatch("grids differ in dims, origin, or spacing")
    return UdfGrid(a.origin.copy(), a.spacing, a.dims.copy(),
                   np.minimum(a.values, b.values))


def save_grid(grid: UdfGrid, path, mode: str = "binary") -> None:
    """Write a grid file; %.17g ascii keeps round-trips bit-exact."""
    if mode not in ("ascii", "binary"):
        raise ValueError("mode must be 'ascii' or 'binary'")
    d = grid.dims
    o = grid.origin
    header = (f"{GRID_MAGIC}\n"
              f"dims {int(d[0])} {int(d[1])} {int(d[2])}\n"
              f"origin {o[0]:.17g} {o[1]:.17g} {o[2]:.17g}\n"
              f"spacing {grid.spacing:.17g}\n"
              f"data {mode}\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if mode == "binary":
            fh.write(grid.values.astype("<f8").tobytes())
        else:
            fh.write("".join(f"{v:.17g}\n" for v in grid.values).encode("ascii"))


def _read_header_line(data: bytes, pos: int, name: str):
    end = data.find(b"\n", pos)
    if end < 0:
        raise FormatError(f"unterminated {name} line", pos)
    try:
        text = data[pos:end].decode("ascii")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{name} line is not ascii", pos) from exc
    return text, end + 1


def load_grid(path) -> UdfGrid:
    """Read a grid file written by save_grid; bit-exact for both data modes."""
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0
    line, pos = _read_header_line(data, pos, "magic")
    if line != GRID_MAGIC:
        raise FormatError(f"bad magic line {line!r}", 0)

    dims_off = pos
    line, pos = _read_header_line(data, pos, "dims")
    parts = line.split()
    if len(parts) != 4 or parts[0] != "dims":
        raise FormatError("malformed dims line", dims_off)
    try:
        dims = np.array([int(p) for p in parts[1:]], dtype=np.int64)
    except ValueError as exc:
        raise FormatError("malformed dims line", dims_off) from exc
    if np.any(dims < 2):
        raise FormatError("dims must all be >= 2", dims_off)

    origin_off = pos
    line, pos = _read_header_line(data, pos, "origin")
    parts = line.split()
    if len(parts) != 4 or parts[0] != "origin":
        raise FormatError("malformed origin line", origin_off)
    try:
        origin = np.array([float(p) for p in parts[1:]])
    except ValueError as exc:
        raise FormatError("malformed origin line", origin_off) from exc

    spacing_off = pos
    line, pos = _read_header_line(data, pos, "spacing")
    parts = line.split()
    if len(parts) != 2 or parts[0] != "spacing":
        raise FormatError("malformed spacing line", spacing_off)
    try:
        spacing = float(parts[1])
    except ValueError as exc:
        raise FormatError("malformed spacing line", spacing_off) from exc
    if not spacing > 0.0 or not np.isfinite(spacing):
        raise FormatError("spacing must be positive and finite", spacing_off)

    mode_off = pos
    line, pos = _read_header_line(data, pos, "data")
    if line == "data ascii":
        mode = "ascii"
    elif line == "data binary":
        mode = "binary"
    else:
        raise FormatError("data line must be 'data ascii' or 'data binary'", mode_off)

    n = int(dims[0]) * int(dims[1]) * int(dims[2])
    if mode == "binary":
        payload = data[pos:]
        if len(payload) < 8 * n:
            raise FormatError(
                f"binary payload too short: expected {8 * n} bytes",
                pos + len(payload))
        if len(payload) > 8 * n:
            raise FormatError("trailing bytes after binary payload", pos + 8 * n)
        values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        bad = ~np.isfinite(values) | (values < 0.0)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise FormatError("value must be finite and non-negative", pos + 8 * k)
    else:
        values = np.empty(n)
        count = 0
        for m in re.finditer(rb"\S+", data[pos:]):
            if count >= n:
                raise FormatError("trailing values after ascii payload",
                                  pos + m.start())
            try:
                v = float(m.group())
            except ValueError as exc:
                raise FormatError("bad ascii value", pos + m.start()) from exc
            if not np.isfinite(v) or v < 0.0:
                raise FormatError("value must be finite and non-negative",
                                  pos + m.start())
            values[count] = v
            count += 1
        if count < n:
            raise FormatError(f"ascii payload has {count} of {n} values",
                              len(data))
    return UdfGrid(origin, spacing, dims, values)
