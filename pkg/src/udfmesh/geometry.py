"""Primitive distance queries and a static AABB tree over triangle/polygon soups.

Points and vectors are float64 numpy arrays of shape (3,). Primitives are
treated as immutable once a tree is built over them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .errors import EmptyInput

_LEAF_MAX = 8


@njit(cache=True, inline="always")
def _dot(ax, ay, az, bx, by, bz):
    return ax * bx + ay * by + az * bz


@njit(cache=True)
def _closest_on_segment(px, py, pz, ax, ay, az, bx, by, bz):
    dx, dy, dz = bx - ax, by - ay, bz - az
    dd = dx * dx + dy * dy + dz * dz
    if dd <= 0.0:
        return ax, ay, az
    t = ((px - ax) * dx + (py - ay) * dy + (pz - az) * dz) / dd
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    return ax + t * dx, ay + t * dy, az + t * dz


@njit(cache=True)
def _closest_on_triangle(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz):
    # Ericson-style Voronoi-region walk with a segment fallback for slivers.
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    nx = aby * acz - abz * acy
    ny = abz * acx - abx * acz
    nz = abx * acy - aby * acx
    n2 = nx * nx + ny * ny + nz * nz
    e2 = max(abx * abx + aby * aby + abz * abz,
             acx * acx + acy * acy + acz * acz)
    if n2 <= 1e-24 * e2 * e2:
        # Degenerate: nearest point over the three edges.
        qx, qy, qz = _closest_on_segment(px, py, pz, ax, ay, az, bx, by, bz)
        best = (px - qx) ** 2 + (py - qy) ** 2 + (pz - qz) ** 2
        rx, ry, rz = _closest_on_segment(px, py, pz, bx, by, bz, cx, cy, cz)
        d = (px - rx) ** 2 + (py - ry) ** 2 + (pz - rz) ** 2
        if d < best:
            best, qx, qy, qz = d, rx, ry, rz
        rx, ry, rz = _closest_on_segment(px, py, pz, cx, cy, cz, ax, ay, az)
        d = (px - rx) ** 2 + (py - ry) ** 2 + (pz - rz) ** 2
        if d < best:
            qx, qy, qz = rx, ry, rz
        return qx, qy, qz

    apx, apy, apz = px - ax, py - ay, pz - az
    d1 = _dot(abx, aby, abz, apx, apy, apz)
    d2 = _dot(acx, acy, acz, apx, apy, apz)
    if d1 <= 0.0 and d2 <= 0.0:
        return ax, ay, az
    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = _dot(abx, aby, abz, bpx, bpy, bpz)
    d4 = _dot(acx, acy, acz, bpx, bpy, bpz)
    if d3 >= 0.0 and d4 <= d3:
        return bx, by, bz
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        t = d1 / (d1 - d3)
        return ax + t * abx, ay + t * aby, az + t * abz
    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = _dot(abx, aby, abz, cpx, cpy, cpz)
    d6 = _dot(acx, acy, acz, cpx, cpy, cpz)
    if d6 >= 0.0 and d5 <= d6:
        return cx, cy, cz
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        t = d2 / (d2 - d6)
        return ax + t * acx, ay + t * acy, az + t * acz
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return bx + t * (cx - bx), by + t * (cy - by), bz + t * (cz - bz)
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return ax + abx * v + acx * w, ay + aby * v + acy * w, az + abz * v + acz * w


@njit(cache=True)
def _ring_orientation(ring, nx, ny, nz):
    # Sign of the ring's area vector against the supplied normal.
    sx = 0.0
    sy = 0.0
    sz = 0.0
    r = ring.shape[0]
    for k in range(r):
        a = ring[k]
        b = ring[(k + 1) % r]
        sx += a[1] * b[2] - a[2] * b[1]
        sy += a[2] * b[0] - a[0] * b[2]
        sz += a[0] * b[1] - a[1] * b[0]
    return 1.0 if sx * nx + sy * ny + sz * nz >= 0.0 else -1.0


@njit(cache=True)
def _point_in_ring(x, y, z, ring, nx, ny, nz, orient, eps):
    r = ring.shape[0]
    for k in range(r):
        a = ring[k]
        b = ring[(k + 1) % r]
        ex, ey, ez = b[0] - a[0], b[1] - a[1], b[2] - a[2]
        wx, wy, wz = x - a[0], y - a[1], z - a[2]
        cxx = ey * wz - ez * wy
        cyy = ez * wx - ex * wz
        czz = ex * wy - ey * wx
        side = orient * (cxx * nx + cyy * ny + czz * nz)
        elen = np.sqrt(ex * ex + ey * ey + ez * ez)
        if side < -eps * elen:
            return False
    return True


@njit(cache=True)
def _segment_ring_hit(s0, s1, ring, nx, ny, nz, off, eps):
    # Canonical endpoint order makes the answer exactly swap-symmetric.
    swap = False
    if s1[0] < s0[0]:
        swap = True
    elif s1[0] == s0[0]:
        if s1[1] < s0[1]:
            swap = True
        elif s1[1] == s0[1] and s1[2] < s0[2]:
            swap = True
    if swap:
        s0, s1 = s1, s0
    e0 = s0[0] * nx + s0[1] * ny + s0[2] * nz - off
    e1 = s1[0] * nx + s1[1] * ny + s1[2] * nz - off
    orient = _ring_orientation(ring, nx, ny, nz)
    if abs(e0) <= eps and abs(e1) <= eps:
        # Coplanar segment: clip its parameter interval by the ring edges.
        t_lo = 0.0
        t_hi = 1.0
        r = ring.shape[0]
        for k in range(r):
            a = ring[k]
            b = ring[(k + 1) % r]
            ex, ey, ez = b[0] - a[0], b[1] - a[1], b[2] - a[2]
            # Inward edge normal within the plane.
            mx = orient * (ny * ez - nz * ey)
            my = orient * (nz * ex - nx * ez)
            mz = orient * (nx * ey - ny * ex)
            mlen = np.sqrt(mx * mx + my * my + mz * mz)
            slack = -eps * mlen
            f0 = mx * (s0[0] - a[0]) + my * (s0[1] - a[1]) + mz * (s0[2] - a[2])
            f1 = mx * (s1[0] - a[0]) + my * (s1[1] - a[1]) + mz * (s1[2] - a[2])
            if f0 < slack and f1 < slack:
                return False
            if f0 < slack:
                t_lo = max(t_lo, (slack - f0) / (f1 - f0))
            elif f1 < slack:
                t_hi = min(t_hi, (slack - f0) / (f1 - f0))
        return t_lo <= t_hi
    if abs(e0) <= eps:
        if _point_in_ring(s0[0], s0[1], s0[2], ring, nx, ny, nz, orient, eps):
            return True
    if abs(e1) <= eps:
        if _point_in_ring(s1[0], s1[1], s1[2], ring, nx, ny, nz, orient, eps):
            return True
    if e0 * e1 < 0.0:
        t = e0 / (e0 - e1)
        x = s0[0] + t * (s1[0] - s0[0])
        y = s0[1] + t * (s1[1] - s0[1])
        z = s0[2] + t * (s1[2] - s0[2])
        return _point_in_ring(x, y, z, ring, nx, ny, nz, orient, eps)
    return False


@njit(cache=True)
def _build_tree(tri_lo, tri_hi, cent, leaf_max):
    n = tri_lo.shape[0]
    cap = 2 * n + 2
    node_lo = np.empty((cap, 3), dtype=np.float64)
    node_hi = np.empty((cap, 3), dtype=np.float64)
    node_left = np.full(cap, -1, dtype=np.int64)
    node_right = np.full(cap, -1, dtype=np.int64)
    node_start = np.zeros(cap, dtype=np.int64)
    node_end = np.zeros(cap, dtype=np.int64)
    perm = np.arange(n)
    stack = np.empty((cap, 3), dtype=np.int64)
    sp = 0
    stack[sp, 0] = 0
    stack[sp, 1] = 0
    stack[sp, 2] = n
    sp += 1
    n_nodes = 1
    while sp > 0:
        sp -= 1
        ni = stack[sp, 0]
        s = stack[sp, 1]
        e = stack[sp, 2]
        for a in range(3):
            lo = np.inf
            hi = -np.inf
            for t in range(s, e):
                idx = perm[t]
                if tri_lo[idx, a] < lo:
                    lo = tri_lo[idx, a]
                if tri_hi[idx, a] > hi:
                    hi = tri_hi[idx, a]
            node_lo[ni, a] = lo
            node_hi[ni, a] = hi
        count = e - s
        axis = 0
        extent = -1.0
        for a in range(3):
            clo = np.inf
            chi = -np.inf
            for t in range(s, e):
                c = cent[perm[t], a]
                if c < clo:
                    clo = c
                if c > chi:
                    chi = c
            if chi - clo > extent:
                extent = chi - clo
                axis = a
        if count <= leaf_max or extent <= 0.0:
            node_start[ni] = s
            node_end[ni] = e
            continue
        keys = np.empty(count, dtype=np.float64)
        for t in range(count):
            keys[t] = cent[perm[s + t], axis]
        order = np.argsort(keys)
        scratch = np.empty(count, dtype=np.int64)
        for t in range(count):
            scratch[t] = perm[s + order[t]]
        for t in range(count):
            perm[s + t] = scratch[t]
        mid = s + count // 2
        left = n_nodes
        right = n_nodes + 1
        n_nodes += 2
        node_left[ni] = left
        node_right[ni] = right
        stack[sp, 0] = left
        stack[sp, 1] = s
        stack[sp, 2] = mid
        sp += 1
        stack[sp, 0] = right
        stack[sp, 1] = mid
        stack[sp, 2] = e
        sp += 1
    return (node_lo[:n_nodes], node_hi[:n_nodes], node_left[:n_nodes],
            node_right[:n_nodes], node_start[:n_nodes], node_end[:n_nodes], perm)


@njit(cache=True, inline="always")
def _box_d2(lo, hi, px, py, pz):
    d2 = 0.0
    for a in range(3):
        p = px if a == 0 else (py if a == 1 else pz)
        if p < lo[a]:
            d2 += (lo[a] - p) ** 2
        elif p > hi[a]:
            d2 += (p - hi[a]) ** 2
    return d2

@njit(cache=True)
def _tree_closest(node_lo, node_hi, node_left, node_right, node_start, node_end,
                  tris, tri_prim, px, py, pz):
    best_d2 = np.inf
    best_prim = np.int64(2**62)
    bx = by = bz = 0.0
    stack = np.empty(128, dtype=np.int64)
    dstack = np.empty(128, dtype=np.float64)
    sp = 0
    stack[sp] = 0
    dstack[sp] = _box_d2(node_lo[0], node_hi[0], px, py, pz)
    sp += 1
    while sp > 0:
        sp -= 1
        ni = stack[sp]
        if dstack[sp] > best_d2:
            continue
        left = node_left[ni]
        if left < 0:
            for t in range(node_start[ni], node_end[ni]):
                qx, qy, qz = _closest_on_triangle(
                    px, py, pz,
                    tris[t, 0], tris[t, 1], tris[t, 2],
                    tris[t, 3], tris[t, 4], tris[t, 5],
                    tris[t, 6], tris[t, 7], tris[t, 8])
                d2 = (px - qx) ** 2 + (py - qy) ** 2 + (pz - qz) ** 2
                prim = tri_prim[t]
                if d2 < best_d2 or (d2 == best_d2 and prim < best_prim):
                    best_d2 = d2
                    best_prim = prim
                    bx, by, bz = qx, qy, qz
            continue
        right = node_right[ni]
        dl = _box_d2(node_lo[left], node_hi[left], px, py, pz)
        dr = _box_d2(node_lo[right], node_hi[right], px, py, pz)
        # Push the farther child first so the nearer one is popped first.
        if dl <= dr:
            if dr <= best_d2:
                stack[sp] = right
                dstack[sp] = dr
                sp += 1
            if dl <= best_d2:
                stack[sp] = left
                dstack[sp] = dl
                sp += 1
        else:
            if dl <= best_d2:
                stack[sp] = left
                dstack[sp] = dl
                sp += 1
            if dr <= best_d2:
                stack[sp] = right
                dstack[sp] = dr
                sp += 1
    return best_d2, bx, by, bz, best_prim


@njit(cache=True, parallel=True)
def _tree_closest_batch(node_lo, node_hi, node_left, node_right, node_start,
                        node_end, tris, tri_prim, pts, out_d, out_c, out_p):
    for i in prange(pts.shape[0]):
        d2, bx, by, bz, prim = _tree_closest(
            node_lo, node_hi, node_left, node_right, node_start, node_end,
            tris, tri_prim, pts[i, 0], pts[i, 1], pts[i, 2])
        out_d[i] = np.sqrt(d2)
        out_c[i, 0] = bx
        out_c[i, 1] = by
        out_c[i, 2] = bz
        out_p[i] = prim


@njit(cache=True, inline="always")
def _seg_box_overlap(lo, hi, p0x, p0y, p0z, dx, dy, dz, pad):
    tmin = 0.0
    tmax = 1.0
    for a in range(3):
        p = p0x if a == 0 else (p0y if a == 1 else p0z)
        d = dx if a == 0 else (dy if a == 1 else dz)
        if abs(d) < 1e-300:
            if p < lo[a] - pad or p > hi[a] + pad:
                return False
        else:
            t1 = (lo[a] - pad - p) / d
            t2 = (hi[a] + pad - p) / d
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
            if tmin > tmax:
                return False
    return True


@njit(cache=True)
def _tree_segment_tris(node_lo, node_hi, node_left, node_right, node_start,
                       node_end, p0, p1, pad, out):
    # Collect triangle slots whose node path overlaps the segment; returns count.
    dx, dy, dz = p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]
    stack = np.empty(128, dtype=np.int64)
    sp = 0
    stack[sp] = 0
    sp += 1
    cnt = 0
    while sp > 0:
        sp -= 1
        ni = stack[sp]
        if not _seg_box_overlap(node_lo[ni], node_hi[ni],
                                p0[0], p0[1], p0[2], dx, dy, dz, pad):
            continue
        left = node_left[ni]
        if left < 0:
            for t in range(node_start[ni], node_end[ni]):
                if cnt < out.shape[0]:
                    out[cnt] = t
                cnt += 1
            continue
        stack[sp] = node_right[ni]
        sp += 1
        stack[sp] = left
        sp += 1
    return cnt


@dataclass(frozen=True)
class Triangle:
    """Triangle with vertices a, b, c; degenerate (zero-area) triangles allowed."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            v.flags.writeable = False
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class ConvexPolygon3:
    """Planar convex polygon: an ordered vertex ring plus its supporting plane."""

    ring: np.ndarray
    normal: np.ndarray = field(default=None)
    offset: float = field(default=None)

    def __post_init__(self):
        ring = np.ascontiguousarray(self.ring, dtype=np.float64)
        ring.flags.writeable = False
        object.__setattr__(self, "ring", ring)
        if self.normal is None:
            n = newell_normal(ring)
            object.__setattr__(self, "normal", n)
            object.__setattr__(self, "offset", float(n @ ring[0]))
        else:
            n = np.ascontiguousarray(self.normal, dtype=np.float64)
            n.flags.writeable = False
            object.__setattr__(self, "normal", n)
            object.__setattr__(self, "offset", float(self.offset))


def newell_normal(ring: np.ndarray) -> np.ndarray:
    """Unit area-vector direction of a vertex ring (Newell's formula)."""
    a = ring
    b = np.roll(ring, -1, axis=0)
    n = np.cross(a, b).sum(axis=0)
    norm = np.linalg.norm(n)
    if norm == 0.0:
        return np.array([0.0, 0.0, 1.0])
    return n / norm


def point_triangle_distance(p: np.ndarray, tri) -> tuple[float, np.ndarray]:
    """Distance from p to a triangle and the closest point attaining it."""
    if isinstance(tri, Triangle):
        a, b, c = tri.a, tri.b, tri.c
    else:
        a, b, c = np.asarray(tri, dtype=np.float64)
    qx, qy, qz = _closest_on_triangle(
        float(p[0]), float(p[1]), float(p[2]),
        a[0], a[1], a[2], b[0], b[1], b[2], c[0], c[1], c[2])
    q = np.array([qx, qy, qz])
    return float(np.linalg.norm(np.asarray(p, dtype=np.float64) - q)), q


def segment_intersects_polygon(seg, poly: ConvexPolygon3, eps: float) -> bool:
    """True iff the segment crosses or touches the polygon.

    A plane evaluation with absolute value <= eps counts as touching; touching
    within the ring counts as intersecting. Symmetric under endpoint swap.
    """
    s0 = np.ascontiguousarray(seg[0], dtype=np.float64)
    s1 = np.ascontiguousarray(seg[1], dtype=np.float64)
    n = poly.normal
    return bool(_segment_ring_hit(s0, s1, poly.ring, n[0], n[1], n[2],
                                  poly.offset, float(eps)))


class AabbTree:
    """Static median-split AABB tree over a primitive soup.

    Polygon primitives are fanned into triangles internally; queries report the
    owning primitive id. Construction is deterministic for a given input order.
    """

    def __init__(self, tris: np.ndarray, tri_prim: np.ndarray, n_prims: int):
        if tris.shape[0] == 0:
            raise EmptyInput("cannot build an AABB tree over zero primitives")
        tris = np.ascontiguousarray(tris, dtype=np.float64)
        pts = tris.reshape(-1, 3, 3)
        tri_lo = pts.min(axis=1)
        tri_hi = pts.max(axis=1)
        cent = pts.mean(axis=1)
        (self.node_lo, self.node_hi, self.node_left, self.node_right,
         self.node_start, self.node_end, perm) = _build_tree(
            tri_lo, tri_hi, cent, _LEAF_MAX)
        self.tris = np.ascontiguousarray(tris[perm])
        self.tri_prim = np.ascontiguousarray(
            np.asarray(tri_prim, dtype=np.int64)[perm])
        self.n_prims = int(n_prims)

    @classmethod
    def from_triangles(cls, vertices: np.ndarray, faces: np.ndarray) -> "AabbTree":
        vertices = np.asarray(vertices, dtype=np.float64)
        faces = np.asarray(faces, dtype=np.int64)
        if faces.shape[0] == 0:
            raise EmptyInput("cannot build an AABB tree over zero primitives")
        tris = vertices[faces].reshape(-1, 9)
        return cls(tris, np.arange(faces.shape[0]), faces.shape[0])

    @classmethod
    def from_triangle_list(cls, triangles) -> "AabbTree":
        if len(triangles) == 0:
            raise EmptyInput("cannot build an AABB tree over zero primitives")
        tris = np.array([np.concatenate([t.a, t.b, t.c]) for t in triangles])
        return cls(tris, np.arange(len(triangles)), len(triangles))

    @classmethod
    def from_polygons(cls, ring_points: np.ndarray, ring_offsets: np.ndarray) -> "AabbTree":
        """Build from a polygon soup given as concatenated rings + offsets."""
        ring_points = np.asarray(ring_points, dtype=np.float64)
        ring_offsets = np.asarray(ring_offsets, dtype=np.int64)
        n_polys = len(ring_offsets) - 1
        if n_polys <= 0:
            raise EmptyInput("cannot build an AABB tree over zero primitives")
        tris = []
        prim = []
        for f in range(n_polys):
            s, e = ring_offsets[f], ring_offsets[f + 1]
            ring = ring_points[s:e]
            for k in range(1, len(ring) - 1):
                tris.append(np.concatenate([ring[0], ring[k], ring[k + 1]]))
                prim.append(f)
        return cls(np.array(tris), np.array(prim, dtype=np.int64), n_polys)

    def closest_point(self, p: np.ndarray) -> tuple[np.ndarray, float, int]:
        d2, bx, by, bz, prim = _tree_closest(
            self.node_lo, self.node_hi, self.node_left, self.node_right,
            self.node_start, self.node_end, self.tris, self.tri_prim,
            float(p[0]), float(p[1]), float(p[2]))
        return np.array([bx, by, bz]), float(np.sqrt(d2)), int(prim)

    def closest_points(self, pts: np.ndarray):
        """Batch closest-point query: returns (closest (N,3), dist (N,), prim (N,))."""
        pts = np.ascontiguousarray(pts, dtype=np.float64)
        out_d = np.empty(pts.shape[0])
        out_c = np.empty((pts.shape[0], 3))
        out_p = np.empty(pts.shape[0], dtype=np.int64)
        _tree_closest_batch(self.node_lo, self.node_hi, self.node_left,
                            self.node_right, self.node_start, self.node_end,
                            self.tris, self.tri_prim, pts, out_d, out_c, out_p)
        return out_c, out_d, out_p

    def segment_candidates(self, p0: np.ndarray, p1: np.ndarray, pad: float = 0.0) -> np.ndarray:
        """Primitive ids whose triangles' boxes a segment overlaps (conservative)."""
        p0 = np.ascontiguousarray(p0, dtype=np.float64)
        p1 = np.ascontiguousarray(p1, dtype=np.float64)
        out = np.empty(self.tris.shape[0], dtype=np.int64)
        cnt = _tree_segment_tris(self.node_lo, self.node_hi, self.node_left,
                                 self.node_right, self.node_start, self.node_end,
                                 p0, p1, float(pad), out)
        return np.unique(self.tri_prim[out[:cnt]])


def build_aabb_tree(prims) -> AabbTree:
    """Build an AABB tree from a list of Triangle or ConvexPolygon3 primitives."""
    if len(prims) == 0:
        raise EmptyInput("cannot build an AABB tree over zero primitives")
    if isinstance(prims[0], Triangle):
        return AabbTree.from_triangle_list(prims)
    ring_points = np.concatenate([p.ring for p in prims])
    ring_offsets = np.zeros(len(prims) + 1, dtype=np.int64)
    np.cumsum([len(p.ring) for p in prims], out=ring_offsets[1:])
    return AabbTree.from_polygons(ring_points, ring_offsets)


def closest_point_on_soup(tree: AabbTree, p: np.ndarray) -> tuple[np.ndarray, float, int]:
    """Closest point on the soup, its distance, and the primitive id.

    Exact ties are broken toward the lowest primitive id.
    """
    return tree.closest_point(p)
