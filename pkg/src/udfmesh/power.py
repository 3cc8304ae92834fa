"""Power diagrams of weighted seeds, built by per-seed half-space clipping.

Each cell starts as the bounding box and is clipped against the radical planes
of nearby rivals, visited in increasing Euclidean distance. A lifted-space
nearest-neighbor sweep then proves every cell vertex power-optimal, re-clipping
with any missed rival, so the result matches the brute-force diagram without a
global termination radius.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange
from scipy.spatial import cKDTree

from .errors import DuplicateSeed, EmptyInput
from .geometry import ConvexPolygon3

POWER_EPS_FACTOR = 1e-7   # x bbox diagonal squared
WELD_FACTOR = 1e-12       # x bbox diagonal
BOUNDARY_FACTOR = 1e-9    # x bbox diagonal
REPAIR_EPS_FACTOR = 1e-9  # x bbox diagonal squared

_INITIAL_KNN = 32
_MAX_REPAIR_ROUNDS = 6


@dataclass(frozen=True)
class Seed:
    """Weighted site: position p and sphere radius d >= 0."""

    id: int
    position: np.ndarray
    weight: float


@dataclass(frozen=True)
class PowerFace:
    """Planar diagram face tagged with its seed pair (i, j), i < j."""

    seeds: tuple[int, int]
    polygon: ConvexPolygon3
    on_boundary: bool


def power_distance(x, position, weight) -> float:
    """Squared Euclidean distance to the seed minus its squared weight."""
    x = np.asarray(x, dtype=np.float64)
    d = x - np.asarray(position, dtype=np.float64)
    return float(d @ d) - float(weight) ** 2


def classify_point(positions, weights, x) -> int:
    """Brute-force argmin of the power distance; exact ties -> lowest index."""
    x = np.asarray(x, dtype=np.float64)
    pw = ((x - positions) ** 2).sum(axis=1) - np.asarray(weights) ** 2
    return int(np.argmin(pw))


@njit(cache=True)
def _box_cell(lo, hi, fpl, fcut, rpts, rlen):
    # Six wall faces; wall cutter codes are -1..-6.
    corners = np.empty((8, 3))
    for s in range(8):
        corners[s, 0] = lo[0] if (s & 1) == 0 else hi[0]
        corners[s, 1] = lo[1] if (s & 2) == 0 else hi[1]
        corners[s, 2] = lo[2] if (s & 4) == 0 else hi[2]
    # rings as corner indices (orientation irrelevant downstream)
    rings = np.array([[0, 2, 6, 4],   # x lo
                      [1, 5, 7, 3],   # x hi
                      [0, 4, 5, 1],   # y lo
                      [2, 3, 7, 6],   # y hi
                      [0, 1, 3, 2],   # z lo
                      [4, 6, 7, 5]])  # z hi
    for f in range(6):
        axis = f // 2
        high = f % 2
        for a in range(3):
            fpl[f, a] = 0.0
        if high == 0:
            fpl[f, axis] = -1.0
            fpl[f, 3] = -lo[axis]
        else:
            fpl[f, axis] = 1.0
            fpl[f, 3] = hi[axis]
        fcut[f] = -(f + 1)
        rlen[f] = 4
        for k in range(4):
            c = rings[f, k]
            rpts[f, k, 0] = corners[c, 0]
            rpts[f, k, 1] = corners[c, 1]
            rpts[f, k, 2] = corners[c, 2]
    return 6


@njit(cache=True)
def _cell_sphere(nf, rpts, rlen):
    cx = cy = cz = 0.0
    cnt = 0
    for f in range(nf):
        for k in range(rlen[f]):
            cx += rpts[f, k, 0]
            cy += rpts[f, k, 1]
            cz += rpts[f, k, 2]
            cnt += 1
    if cnt == 0:
        return 0.0, 0.0, 0.0, 0.0
    cx /= cnt
    cy /= cnt
    cz /= cnt
    r2 = 0.0
    for f in range(nf):
        for k in range(rlen[f]):
            dx = rpts[f, k, 0] - cx
            dy = rpts[f, k, 1] - cy
            dz = rpts[f, k, 2] - cz
            d2 = dx * dx + dy * dy + dz * dz
            if d2 > r2:
                r2 = d2
    return cx, cy, cz, np.sqrt(r2)


@njit(cache=True)
def _clip_cell(i, positions, weights, cands, ncand, lo, hi, epsw,
               fpl, fcut, rpts, rlen, gpl, gcut, gpts, glen, chords):
    """Clip seed i's cell against its candidate rivals.

    Returns (nfaces, hidden, overflow); face data is left in the f-buffers.
    """
    maxf = fpl.shape[0]
    maxr = rpts.shape[1]
    nf = _box_cell(lo, hi, fpl, fcut, rpts, rlen)
    cx, cy, cz, rad = _cell_sphere(nf, rpts, rlen)
    px, py, pz = positions[i, 0], positions[i, 1], positions[i, 2]
    wi = weights[i]
    for t in range(ncand):
        c = cands[t]
        if c == i:
            continue
        ux = positions[c, 0] - px
        uy = positions[c, 1] - py
        uz = positions[c, 2] - pz
        L = np.sqrt(ux * ux + uy * uy + uz * uz)
        if L <= 0.0:
            continue
        ax = ux / L
        ay = uy / L
        az = uz / L
        mx = px + 0.5 * ux
        my = py + 0.5 * uy
        mz = pz + 0.5 * uz
        shift = (wi * wi - weights[c] * weights[c]) / (2.0 * L)
        b = ax * mx + ay * my + az * mz + shift
        # Quick reject: the plane misses the cell's circumscribed sphere.
        if ax * cx + ay * cy + az * cz + rad <= b + epsw:
            continue
        dmax = -np.inf
        dmin = np.inf
        for f in range(nf):
            for k in range(rlen[f]):
                d = (ax * rpts[f, k, 0] + ay * rpts[f, k, 1]
                     + az * rpts[f, k, 2] - b)
                if d > dmax:
                    dmax = d
                if d < dmin:
                    dmin = d
        if dmax <= epsw:
            continue
        if dmin >= -epsw:
            return 0, True, False
        # Sutherland-Hodgman clip of every face ring against n.x <= b.
        ng = 0
        nch = 0
        for f in range(nf):
            m = rlen[f]
            cnt = 0
            for k in range(m):
                x0 = rpts[f, k, 0]
                y0 = rpts[f, k, 1]
                z0 = rpts[f, k, 2]
                k1 = (k + 1) % m
                x1 = rpts[f, k1, 0]
                y1 = rpts[f, k1, 1]
                z1 = rpts[f, k1, 2]
                d0 = ax * x0 + ay * y0 + az * z0 - b
                d1 = ax * x1 + ay * y1 + az * z1 - b
                if d0 <= epsw:
                    if cnt >= maxr:
                        return 0, False, True
                    gpts[ng, cnt, 0] = x0
                    gpts[ng, cnt, 1] = y0
                    gpts[ng, cnt, 2] = z0
                    cnt += 1
                    if d0 >= -epsw and nch < chords.shape[0]:
                        chords[nch, 0] = x0
                        chords[nch, 1] = y0
                        chords[nch, 2] = z0
                        nch += 1
                if (d0 > epsw and d1 < -epsw) or (d0 < -epsw and d1 > epsw):
                    s = d0 / (d0 - d1)
                    xx = x0 + s * (x1 - x0)
                    yy = y0 + s * (y1 - y0)
                    zz = z0 + s * (z1 - z0)
                    if cnt >= maxr:
                        return 0, False, True
                    gpts[ng, cnt, 0] = xx
                    gpts[ng, cnt, 1] = yy
                    gpts[ng, cnt, 2] = zz
                    cnt += 1
                    if nch < chords.shape[0]:
                        chords[nch, 0] = xx
                        chords[nch, 1] = yy
                        chords[nch, 2] = zz
                        nch += 1
            if cnt >= 3:
                if ng >= maxf:
                    return 0, False, True
                glen[ng] = cnt
                for a in range(4):
                    gpl[ng, a] = fpl[f, a]
                gcut[ng] = fcut[f]
                ng += 1
        if nch > chords.shape[0]:
            return 0, False, True
        # Weld chord points and build the new cap face.
        nu = 0
        for k in range(nch):
            dup = False
            for q in range(nu):
                dx = chords[k, 0] - chords[q, 0]
                dy = chords[k, 1] - chords[q, 1]
                dz = chords[k, 2] - chords[q, 2]
                if dx * dx + dy * dy + dz * dz <= epsw * epsw * 4.0:
                    dup = True
                    break
            if dup:
                continue
            chords[nu, 0] = chords[k, 0]
            chords[nu, 1] = chords[k, 1]
            chords[nu, 2] = chords[k, 2]
            nu += 1
        if nu >= 3:
            if ng >= maxf or nu > maxr:
                return 0, False, True
            # in-plane basis for the angular sort
            if abs(ax) <= abs(ay) and abs(ax) <= abs(az):
                e1x, e1y, e1z = 0.0, -az, ay
            elif abs(ay) <= abs(az):
                e1x, e1y, e1z = az, 0.0, -ax
            else:
                e1x, e1y, e1z = -ay, ax, 0.0
            el = np.sqrt(e1x * e1x + e1y * e1y + e1z * e1z)
            e1x /= el
            e1y /= el
            e1z /= el
            e2x = ay * e1z - az * e1y
            e2y = az * e1x - ax * e1z
            e2z = ax * e1y - ay * e1x
            ccx = ccy = ccz = 0.0
            for k in range(nu):
                ccx += chords[k, 0]
                ccy += chords[k, 1]
                ccz += chords[k, 2]
            ccx /= nu
            ccy /= nu
            ccz /= nu
            angles = np.empty(nu)
            for k in range(nu):
                wx = chords[k, 0] - ccx
                wy = chords[k, 1] - ccy
                wz = chords[k, 2] - ccz
                angles[k] = np.arctan2(
                    wx * e2x + wy * e2y + wz * e2z,
                    wx * e1x + wy * e1y + wz * e1z)
            order = np.argsort(angles)
            glen[ng] = nu
            gpl[ng, 0] = ax
            gpl[ng, 1] = ay
            gpl[ng, 2] = az
            gpl[ng, 3] = b
            gcut[ng] = c
            for k in range(nu):
                o = order[k]
                gpts[ng, k, 0] = chords[o, 0]
                gpts[ng, k, 1] = chords[o, 1]
                gpts[ng, k, 2] = chords[o, 2]
            ng += 1
        if ng < 4:
            return 0, True, False
        # swap g -> f
        nf = ng
        for f in range(nf):
            rlen[f] = glen[f]
            fcut[f] = gcut[f]
            for a in range(4):
                fpl[f, a] = gpl[f, a]
            for k in range(glen[f]):
                for a in range(3):
                    rpts[f, k, a] = gpts[f, k, a]
        cx, cy, cz, rad = _cell_sphere(nf, rpts, rlen)
    return nf, False, False


@njit(cache=True, parallel=True)
def _cells_pass(positions, weights, cand_flat, cand_off, lo, hi, epsw,
                maxf, maxr, count_only,
                face_off, pt_off,
                out_nface, out_npts, out_hidden, out_overflow,
                out_owner, out_cutter, out_plane, out_rlen, out_rpts,
                out_centroid):
    n = positions.shape[0]
    for i in prange(n):
        fpl = np.empty((maxf, 4))
        fcut = np.empty(maxf, dtype=np.int64)
        rpts = np.empty((maxf, maxr, 3))
        rlen = np.zeros(maxf, dtype=np.int64)
        gpl = np.empty((maxf, 4))
        gcut = np.empty(maxf, dtype=np.int64)
        gpts = np.empty((maxf, maxr, 3))
        glen = np.zeros(maxf, dtype=np.int64)
        chords = np.empty((2 * maxr, 3))
        nc = cand_off[i + 1] - cand_off[i]
        nf, hidden, overflow = _clip_cell(
            i, positions, weights, cand_flat[cand_off[i]:cand_off[i + 1]],
            nc, lo, hi, epsw, fpl, fcut, rpts, rlen, gpl, gcut, gpts, glen,
            chords)
        out_hidden[i] = hidden
        out_overflow[i] = overflow
        if hidden or overflow:
            out_nface[i] = 0
            out_npts[i] = 0
            continue
        out_nface[i] = nf
        tot = 0
        for f in range(nf):
            tot += rlen[f]
        out_npts[i] = tot
        if count_only:
            continue
        fo = face_off[i]
        po = pt_off[i]
        ccx = ccy = ccz = 0.0
        cnt = 0
        for f in range(nf):
            out_owner[fo] = i
            out_cutter[fo] = fcut[f]
            for a in range(4):
                out_plane[fo, a] = fpl[f, a]
            out_rlen[fo] = rlen[f]
            for k in range(rlen[f]):
                for a in range(3):
                    out_rpts[po, a] = rpts[f, k, a]
                ccx += rpts[f, k, 0]
                ccy += rpts[f, k, 1]
                ccz += rpts[f, k, 2]
                cnt += 1
                po += 1
            fo += 1
        out_centroid[i, 0] = ccx / cnt
        out_centroid[i, 1] = ccy / cnt
        out_centroid[i, 2] = ccz / cnt


class PowerDiagram:
    """Convex cell complex of the power distance over a bounding box.

    Faces are stored flat: concatenated vertex rings plus per-face seed pair,
    supporting plane, and boundary flag, sorted by seed pair. `cell_faces[i]`
    lists the face indices incident to seed i; hidden seeds have none.
    """

    def __init__(self, positions, weights, bbox_lo, bbox_hi,
                 face_pairs, face_planes, face_boundary,
                 ring_points, ring_offsets,
                 cell_faces, centroids, hidden,
                 cell_planes, cell_plane_offsets):
        self.positions = positions
        self.weights = weights
        self.bbox_lo = bbox_lo
        self.bbox_hi = bbox_hi
        self.face_pairs = face_pairs
        self.face_planes = face_planes
        self.face_boundary = face_boundary
        self.ring_points = ring_points
        self.ring_offsets = ring_offsets
        self.cell_faces = cell_faces
        self.centroids = centroids
        self.hidden = hidden
        self.cell_planes = cell_planes
        self.cell_plane_offsets = cell_plane_offsets

    @property
    def n_seeds(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.face_pairs)

    @property
    def diagonal(self) -> float:
        return float(np.linalg.norm(self.bbox_hi - self.bbox_lo))

    @property
    def eps_pow(self) -> float:
        return POWER_EPS_FACTOR * self.diagonal ** 2

    def face_ring(self, f: int) -> np.ndarray:
        s, e = self.ring_offsets[f], self.ring_offsets[f + 1]
        return self.ring_points[s:e]

    def face(self, f: int) -> PowerFace:
        plane = self.face_planes[f]
        poly = ConvexPolygon3(self.face_ring(f).copy(), plane[:3].copy(),
                              float(plane[3]))
        return PowerFace((int(self.face_pairs[f, 0]), int(self.face_pairs[f, 1])),
                         poly, bool(self.face_boundary[f]))

    @property
    def faces(self):
        return [self.face(f) for f in range(self.n_faces)]

    def seed(self, i: int) -> Seed:
        return Seed(i, self.positions[i].copy(), float(self.weights[i]))


def _as_arrays(seeds):
    if isinstance(seeds, tuple):
        positions, weights = seeds
    else:
        positions = np.array([s.position for s in seeds], dtype=np.float64)
        weights = np.array([s.weight for s in seeds], dtype=np.float64)
    positions = np.ascontiguousarray(positions, dtype=np.float64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    return positions, weights


def lifted_tree(positions, weights) -> tuple[cKDTree, float]:
    """KD-tree in the 4D lift where power distance is Euclidean.

    With w = sqrt(D^2 - d^2) for the global max weight D, the squared 4D
    distance from (x, 0) to (p, w) equals pi(x) + D^2.
    """
    D2 = float(np.max(weights) ** 2)
    w = np.sqrt(np.maximum(D2 - weights ** 2, 0.0))
    pts = np.column_stack([positions, w])
    return cKDTree(pts), D2


def min_power(tree_D2, points) -> np.ndarray:
    """Minimum power distance over all seeds at each query point."""
    tree, D2 = tree_D2
    q = np.column_stack([points, np.zeros(len(points))])
    d, _ = tree.query(q, k=1)
    return d ** 2 - D2


def compute_power_diagram(seeds, bbox) -> PowerDiagram:
    """Build the power diagram of the seeds clipped to the bounding box."""
    positions, weights = _as_arrays(seeds)
    n = len(positions)
    if n < 2:
        raise EmptyInput("need at least two seeds")
    lo = np.ascontiguousarray(np.asarray(bbox[0], dtype=np.float64))
    hi = np.ascontiguousarray(np.asarray(bbox[1], dtype=np.float64))
    if np.any(positions < lo) or np.any(positions > hi):
        raise ValueError("all seed positions must lie inside the bbox")
    order = np.lexsort(positions.T)
    same = np.all(np.diff(positions[order], axis=0) == 0.0, axis=1)
    if np.any(same):
        k = int(np.argmax(same))
        raise DuplicateSeed(
            f"seeds {order[k]} and {order[k + 1]} share a position")

    diag = float(np.linalg.norm(hi - lo))
    epsw = WELD_FACTOR * diag
    eps_rep = REPAIR_EPS_FACTOR * diag ** 2

    # Initial candidates: nearest neighbors in increasing (distance, id) order.
    knn_tree = cKDTree(positions)
    k0 = min(n, _INITIAL_KNN + 1)
    dist, idx = knn_tree.query(positions, k=k0)
    cand_lists = []
    for i in range(n):
        di, ii = dist[i], idx[i]
        keep = ii != i
        di, ii = di[keep], ii[keep]
        ord_i = np.lexsort((ii, di))
        cand_lists.append(ii[ord_i].astype(np.int64))

    lift = lifted_tree(positions, weights)

    maxf = _INITIAL_KNN + 8
    result = None
    for round_no in range(_MAX_REPAIR_ROUNDS):
        cand_off = np.zeros(n + 1, dtype=np.int64)
        np.cumsum([len(c) for c in cand_lists], out=cand_off[1:])
        cand_flat = (np.concatenate(cand_lists) if cand_off[-1] > 0
                     else np.zeros(0, dtype=np.int64))
        maxf = max(maxf, max(len(c) for c in cand_lists) + 8)
        maxr = maxf
        while True:
            counts = _run_passes(positions, weights, cand_flat, cand_off,
                                 lo, hi, epsw, maxf, maxr)
            if counts is None:
                maxf *= 2
                maxr = maxf
                continue
            break
        (owner, cutter, plane, rlen, rpts_flat, face_off, pt_off,
         centroids, hidden) = counts

        # Lifted verification: every emitted vertex must be power-optimal
        # for its owner, otherwise a rival was missed and we re-clip with it.
        if len(rpts_flat) > 0:
            face_of_pt = np.repeat(np.arange(len(owner)), rlen)
            owner_of_pt = owner[face_of_pt]
            pi_own = (((rpts_flat - positions[owner_of_pt]) ** 2).sum(axis=1)
                      - weights[owner_of_pt] ** 2)
            pmin = min_power(lift, rpts_flat)
            viol = pmin < pi_own - eps_rep
        else:
            viol = np.zeros(0, dtype=bool)
        if not np.any(viol):
            result = (owner, cutter, plane, rlen, rpts_flat, face_off, pt_off,
                      centroids, hidden)
            break
        bad_pts = rpts_flat[viol]
        q = np.column_stack([bad_pts, np.zeros(len(bad_pts))])
        _, winners = lift[0].query(q, k=1)
        dirty = False
        for cell, win in zip(owner_of_pt[viol], winners):
            if win != cell and win not in cand_lists[cell]:
                merged = np.append(cand_lists[cell], win)
                d = np.linalg.norm(positions[merged] - positions[cell], axis=1)
                cand_lists[cell] = merged[np.lexsort((merged, d))]
                dirty = True
        if not dirty:
            result = (owner, cutter, plane, rlen, rpts_flat, face_off, pt_off,
                      centroids, hidden)
            break
    if result is None:
        raise RuntimeError("power diagram verification did not converge")
    return _assemble(positions, weights, lo, hi, diag, lift, *result)


def _run_passes(positions, weights, cand_flat, cand_off, lo, hi, epsw,
                maxf, maxr):
    n = len(positions)
    nface = np.zeros(n, dtype=np.int64)
    npts = np.zeros(n, dtype=np.int64)
    hidden = np.zeros(n, dtype=np.bool_)
    overflow = np.zeros(n, dtype=np.bool_)
    empty_i = np.zeros(0, dtype=np.int64)
    empty_f = np.zeros(0)
    empty_f2 = np.zeros((0, 4))
    empty_p = np.zeros((0, 3))
    _cells_pass(positions, weights, cand_flat, cand_off, lo, hi, epsw,
                maxf, maxr, True,
                np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
                nface, npts, hidden, overflow,
                empty_i, empty_i, empty_f2, empty_i, empty_p,
                np.zeros((n, 3)))
    if np.any(overflow):
        return None
    face_off = np.zeros(n, dtype=np.int64)
    pt_off = np.zeros(n, dtype=np.int64)
    np.cumsum(nface[:-1], out=face_off[1:])
    np.cumsum(npts[:-1], out=pt_off[1:])
    total_f = int(nface.sum())
    total_p = int(npts.sum())
    owner = np.zeros(total_f, dtype=np.int64)
    cutter = np.zeros(total_f, dtype=np.int64)
    plane = np.zeros((total_f, 4))
    rlen = np.zeros(total_f, dtype=np.int64)
    rpts_flat = np.zeros((total_p, 3))
    centroids = np.full((n, 3), np.nan)
    _cells_pass(positions, weights, cand_flat, cand_off, lo, hi, epsw,
                maxf, maxr, False,
                face_off, pt_off,
                nface, npts, hidden, overflow,
                owner, cutter, plane, rlen, rpts_flat, centroids)
    return (owner, cutter, plane, rlen, rpts_flat, face_off, pt_off,
            centroids, hidden)


def _assemble(positions, weights, lo, hi, diag, lift,
              owner, cutter, plane, rlen, rpts_flat, face_off, pt_off,
              centroids, hidden):
    n = len(positions)
    pt_start = np.zeros(len(owner) + 1, dtype=np.int64)
    np.cumsum(rlen, out=pt_start[1:])

    # Per-cell half-space lists (walls included) for point-location checks.
    cell_planes = plane.copy()
    cell_plane_offsets = np.zeros(n + 1, dtype=np.int64)
    counts = np.bincount(owner, minlength=n) if len(owner) else np.zeros(n, int)
    np.cumsum(counts, out=cell_plane_offsets[1:])

    radical = np.flatnonzero(cutter >= 0)
    r_owner = owner[radical]
    r_cutter = cutter[radical]

    # Faces whose recorded rival turned out hidden borrow the rival of the
    # cell actually on the other side (degenerate tie configurations).
    needs = np.flatnonzero(hidden[r_cutter])
    if len(needs) > 0:
        r_cutter = r_cutter.copy()
        delta0 = 1e-7 * diag
        for k in needs:
            f = radical[k]
            ring = rpts_flat[pt_start[f]:pt_start[f + 1]]
            cen = ring.mean(axis=0)
            nrm = plane[f, :3]
            target = -1
            delta = delta0
            for _ in range(3):
                probe = cen + delta * nrm
                cand = lift[0].query(np.append(probe, 0.0), k=min(8, n))[1]
                cand = np.atleast_1d(cand)
                pw = (((probe - positions[cand]) ** 2).sum(axis=1)
                      - weights[cand] ** 2)
                best = cand[pw <= pw.min() + 1e-12 * diag ** 2]
                best = best[~hidden[best]]
                best = best[best != r_owner[k]]
                if len(best) > 0:
                    target = int(best.min())
                    break
                delta *= 100.0
            if target >= 0:
                r_cutter[k] = target

    drop = r_cutter == r_owner
    if np.any(drop):
        keep = ~drop
        radical, r_owner, r_cutter = radical[keep], r_owner[keep], r_cutter[keep]

    pair_a = np.minimum(r_owner, r_cutter)
    pair_b = np.maximum(r_owner, r_cutter)

    # Deduplicate the two per-cell copies of each interior face: keep the copy
    # owned by the lower seed id; order faces by seed pair.
    sort_key = np.lexsort((r_owner, pair_b, pair_a))
    radical = radical[sort_key]
    r_owner = r_owner[sort_key]
    pair_a = pair_a[sort_key]
    pair_b = pair_b[sort_key]
    if len(radical) > 0:
        first = np.ones(len(radical), dtype=bool)
        same = (pair_a[1:] == pair_a[:-1]) & (pair_b[1:] == pair_b[:-1])
        first[1:] = ~same
    else:
        first = np.zeros(0, dtype=bool)
    fsel = radical[first]
    fa = pair_a[first]
    fb = pair_b[first]

    # Canonical plane orientation: normal points from seed a toward seed b.
    face_planes = plane[fsel].copy()
    flip = owner[fsel] != fa
    face_planes[flip] *= -1.0

    nf = len(fsel)
    ring_offsets = np.zeros(nf + 1, dtype=np.int64)
    np.cumsum(rlen[fsel], out=ring_offsets[1:])
    ring_points = np.empty((int(ring_offsets[-1]), 3))
    for k, f in enumerate(fsel):
        ring_points[ring_offsets[k]:ring_offsets[k + 1]] = \
            rpts_flat[pt_start[f]:pt_start[f + 1]]

    eps_b = BOUNDARY_FACTOR * diag
    on_boundary = np.zeros(nf, dtype=np.bool_)
    for k in range(nf):
        ring = ring_points[ring_offsets[k]:ring_offsets[k + 1]]
        near_lo = np.any(np.abs(ring - lo) <= eps_b)
        near_hi = np.any(np.abs(ring - hi) <= eps_b)
        on_boundary[k] = near_lo or near_hi

    face_pairs = np.column_stack([fa, fb]).astype(np.int64)
    cell_faces = [[] for _ in range(n)]
    for k in range(nf):
        cell_faces[fa[k]].append(k)
        cell_faces[fb[k]].append(k)
    cell_faces = [np.array(c, dtype=np.int64) for c in cell_faces]

    return PowerDiagram(positions, weights, lo, hi,
                        face_pairs, face_planes, on_boundary,
                        ring_points, ring_offsets,
                        cell_faces, centroids, hidden,
                        cell_planes, cell_plane_offsets)


@njit(cache=True)
def _locate_brute(cell_planes, cell_off, lo, hi, x, eps):
    # All cells whose half-space list contains x (walls included).
    n = cell_off.shape[0] - 1
    hits = np.empty(n, dtype=np.int64)
    cnt = 0
    for i in range(n):
        s, e = cell_off[i], cell_off[i + 1]
        if s == e:
            continue
        ok = True
        for f in range(s, e):
            d = (cell_planes[f, 0] * x[0] + cell_planes[f, 1] * x[1]
                 + cell_planes[f, 2] * x[2] - cell_planes[f, 3])
            if d > eps:
                ok = False
                break
        if ok:
            hits[cnt] = i
            cnt += 1
    return hits[:cnt]


def locate_cells(pd: PowerDiagram, x, eps: float | None = None) -> np.ndarray:
    """Ids of constructed cells containing x (one, away from boundaries)."""
    if eps is None:
        eps = WELD_FACTOR * pd.diagonal
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _locate_brute(pd.cell_planes, pd.cell_plane_offsets,
                         pd.bbox_lo, pd.bbox_hi, x, eps)


def validate_diagram(pd: PowerDiagram, n_probes: int = 1000,
                     seed: int = 0) -> dict:
    """Probe and face-invariant checks; returns a report of worst violations."""
    rng = np.random.default_rng(seed)
    pos, w = pd.positions, pd.weights
    eps_pow = pd.eps_pow

    probe_mismatch = 0
    probe_multi = 0
    tested = 0
    span = pd.bbox_hi - pd.bbox_lo
    guard = 1e-6 * pd.diagonal
    while tested < n_probes:
        x = pd.bbox_lo + rng.uniform(0, 1, 3) * span
        pw = ((x - pos) ** 2).sum(axis=1) - w ** 2
        best = np.argmin(pw)
        gap = np.partition(pw, 1)[1] - pw[best]
        if gap < guard * pd.diagonal:  # boundary-eps exclusion
            continue
        tested += 1
        hits = locate_cells(pd, x)
        if len(hits) != 1:
            probe_multi += 1
        if len(hits) == 0 or hits[0] != best:
            probe_mismatch += 1

    max_pair_gap = 0.0
    max_min_violation = 0.0
    if pd.n_faces > 0:
        lift = lifted_tree(pos, w)
        pts = pd.ring_points
        fa = np.repeat(pd.face_pairs[:, 0], np.diff(pd.ring_offsets))
        fb = np.repeat(pd.face_pairs[:, 1], np.diff(pd.ring_offsets))
        pia = ((pts - pos[fa]) ** 2).sum(axis=1) - w[fa] ** 2
        pib = ((pts - pos[fb]) ** 2).sum(axis=1) - w[fb] ** 2
        max_pair_gap = float(np.max(np.abs(pia - pib)))
        pmin = min_power(lift, pts)
        max_min_violation = float(np.max(pia - pmin))

    pairs, counts = np.unique(pd.face_pairs, axis=0, return_counts=True)
    convex_bad = 0
    for f in range(pd.n_faces):
        a, b = pd.face_pairs[f]
        pl = pd.face_planes[f]
        if not pd.hidden[a] and np.isfinite(pd.centroids[a, 0]):
            if pl[:3] @ pd.centroids[a] - pl[3] > eps_pow:
                convex_bad += 1
        if not pd.hidden[b] and np.isfinite(pd.centroids[b, 0]):
            if pl[:3] @ pd.centroids[b] - pl[3] < -eps_pow:
                convex_bad += 1

    return {
        "probes": tested,
        "probe_mismatches": probe_mismatch,
        "probe_multiple_cells": probe_multi,
        "max_face_pair_gap": max_pair_gap,
        "max_face_min_violation": max_min_violation,
        "eps_pow": eps_pow,
        "duplicate_pairs": int(np.sum(counts > 1)),
        "convexity_violations": convex_bad,
        "hidden_seeds": int(np.sum(pd.hidden)),
        "ok": (probe_mismatch == 0 and probe_multi == 0
               and max_pair_gap <= eps_pow
               and max_min_violation <= eps_pow
               and convex_bad == 0
               and not np.any(counts > 1)),
    }


def export_diagram_obj(pd: PowerDiagram, path) -> None:
    """Debug dump of all diagram faces as an OBJ polygon soup."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        base = 1
        for f in range(pd.n_faces):
            ring = pd.face_ring(f)
            for v in ring:
                fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
            fh.write("f " + " ".join(str(base + k) for k in range(len(ring)))
                     + "\n")
            base += len(ring)
