"""Deterministic generator meshes used by experiments and tests."""

from __future__ import annotations

import numpy as np


def icosphere(subdivisions: int = 4, radius: float = 0.5,
              center=(0.0, 0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Subdivided icosahedron projected to a sphere."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    for _ in range(subdivisions):
        edge_mid = {}
        new_faces = []
        vlist = list(verts)

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in edge_mid:
                m = vlist[i] + vlist[j]
                m /= np.linalg.norm(m)
                edge_mid[key] = len(vlist)
                vlist.append(m)
            return edge_mid[key]

        for a, b, c in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts = np.array(vlist)
        faces = np.array(new_faces, dtype=np.int64)
    return verts * radius + np.asarray(center, dtype=np.float64), faces


def torus(major: float = 0.35, minor: float = 0.15, n_major: int = 64,
          n_minor: int = 32, center=(0.0, 0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Triangulated torus around the z axis."""
    u = 2.0 * np.pi * np.arange(n_major) / n_major
    v = 2.0 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    x = (major + minor * np.cos(vv)) * np.cos(uu)
    y = (major + minor * np.cos(vv)) * np.sin(uu)
    z = minor * np.sin(vv)
    verts = np.stack([x, y, z], axis=-1).reshape(-1, 3) + np.asarray(center)
    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            a = i * n_minor + j
            b = ((i + 1) % n_major) * n_minor + j
            c = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor
            d = i * n_minor + (j + 1) % n_minor
            faces += [[a, b, c], [a, c, d]]
    return verts, np.array(faces, dtype=np.int64)


def disk(radius: float = 0.8, n: int = 96, z: float = 0.0,
         center=(0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Open planar disk: a triangle fan in the z = const plane."""
    ang = 2.0 * np.pi * np.arange(n) / n
    rim = np.stack([center[0] + radius * np.cos(ang),
                    center[1] + radius * np.sin(ang),
                    np.full(n, z)], axis=-1)
    verts = np.vstack([[center[0], center[1], z], rim])
    faces = np.array([[0, 1 + i, 1 + (i + 1) % n] for i in range(n)],
                     dtype=np.int64)
    return verts, faces


def plane_patch(half: float = 1.0, z: float = 0.0, n: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Square patch of the plane z = const, subdivided n x n."""
    g = np.linspace(-half, half, n + 1)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    verts = np.stack([xx, yy, np.full_like(xx, z)], axis=-1).reshape(-1, 3)
    faces = []
    for i in range(n):
        for j in range(n):
            a = i * (n + 1) + j
            b = (i + 1) * (n + 1) + j
            faces += [[a, b, b + 1], [a, b + 1, a + 1]]
    return verts, np.array(faces, dtype=np.int64)


def two_sheets(half: float = 0.6, n: int = 6) -> tuple[np.ndarray, np.ndarray]:
    """Two orthogonal square sheets crossing along the y axis."""
    vz, fz = plane_patch(half, 0.0, n)
    vx = vz[:, [2, 1, 0]].copy()  # x = 0 sheet
    verts = np.vstack([vz, vx])
    faces = np.vstack([fz, fz + len(vz)])
    return verts, faces


def box(half=(0.5, 0.5, 0.5), center=(0.0, 0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box as twelve triangles."""
    hx, hy, hz = half
    cx, cy, cz = center
    corners = np.array([[sx, sy, sz] for sx in (-hx, hx)
                        for sy in (-hy, hy) for sz in (-hz, hz)])
    verts = corners + np.array([cx, cy, cz])
    quads = [
        [0, 1, 3, 2], [4, 6, 7, 5],  # x- x+
        [0, 4, 5, 1], [2, 3, 7, 6],  # y- y+
        [0, 2, 6, 4], [1, 5, 7, 3],  # z- z+
    ]
    faces = []
    for q in quads:
        faces += [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
    return verts, np.array(faces, dtype=np.int64)


def beveled_box(half: float = 0.5, bevel: float = 0.06) -> tuple[np.ndarray, np.ndarray]:
    """Box with its twelve edges chamfered by cutting corner octants."""
    h = half
    b = bevel
    verts = []
    index = {}

    def vid(p):
        key = tuple(np.round(p, 12))
        if key not in index:
            index[key] = len(verts)
            verts.append(p)
        return index[key]

    faces = []
    # Six inset square faces.
    for axis in range(3):
        for s in (-1.0, 1.0):
            ring = []
            for sa, sb in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
                p = np.zeros(3)
                p[axis] = s * h
                p[(axis + 1) % 3] = sa * (h - b)
                p[(axis + 2) % 3] = sb * (h - b)
                ring.append(vid(p))
            faces += [[ring[0], ring[1], ring[2]], [ring[0], ring[2], ring[3]]]
    # Twelve bevel strips along the edges.
    for axis in range(3):
        a1 = (axis + 1) % 3
        a2 = (axis + 2) % 3
        for s1 in (-1.0, 1.0):
            for s2 in (-1.0, 1.0):
                def strip_point(send, on_a1):
                    p = np.zeros(3)
                    p[axis] = send * (h - b)
                    p[a1] = s1 * (h if on_a1 else h - b)
                    p[a2] = s2 * (h - b if on_a1 else h)
                    return vid(p)

                q0 = strip_point(-1.0, True)
                q1 = strip_point(-1.0, False)
                q2 = strip_point(1.0, False)
                q3 = strip_point(1.0, True)
                faces += [[q0, q1, q2], [q0, q2, q3]]
    # Eight corner triangles.
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                px = np.array([sx * (h - b), sy * h, sz * h])
                py = np.array([sx * h, sy * (h - b), sz * h])
                pz = np.array([sx * h, sy * h, sz * (h - b)])
                faces.append([vid(px), vid(py), vid(pz)])
    return np.array(verts), np.array(faces, dtype=np.int64)
