"""OBJ mesh reading and writing.

Only v/f records are interpreted; everything else is skipped. Faces may be
triangles or quads and the connectivity may be non-manifold. Output formatting
is fixed so identical meshes serialize to identical bytes.
"""

from __future__ import annotations

import numpy as np

from .errors import FormatError


def load_obj(path) -> tuple[np.ndarray, list[np.ndarray]]:
    """Read an OBJ file into (vertices (V,3), faces as index arrays, 0-based)."""
    verts = []
    faces = []
    offset = 0
    with open(path, "rb") as fh:
        for raw in fh:
            line_off = offset
            offset += len(raw)
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FormatError("OBJ line is not valid UTF-8", line_off) from exc
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise FormatError("v record needs 3 coordinates", line_off)
                try:
                    verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
                except ValueError as exc:
                    raise FormatError("bad vertex coordinate", line_off) from exc
            elif parts[0] == "f":
                if len(parts) < 4:
                    raise FormatError("f record needs at least 3 indices", line_off)
                idx = []
                for tok in parts[1:]:
                    head = tok.split("/")[0]
                    try:
                        k = int(head)
                    except ValueError as exc:
                        raise FormatError("bad face index", line_off) from exc
                    if k < 0:
                        k = len(verts) + 1 + k
                    if k < 1:
                        raise FormatError("face index out of range", line_off)
                    idx.append(k - 1)
                faces.append(np.array(idx, dtype=np.int64))
    V = np.array(verts, dtype=np.float64) if verts else np.zeros((0, 3))
    for f in faces:
        if np.any(f >= len(V)):
            raise FormatError("face references a missing vertex")
    return V, faces


def save_obj(path, vertices: np.ndarray, faces) -> None:
    """Write vertices and tri/quad faces; byte-stable for identical input."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in np.asarray(vertices, dtype=np.float64):
            fh.write(f"v {v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")
        for f in faces:
            fh.write("f " + " ".join(str(int(i) + 1) for i in f) + "\n")


def triangulate_faces(faces) -> np.ndarray:
    """Fan-split ragged tri/quad faces into an (F,3) triangle array."""
    tris = []
    for f in faces:
        for k in range(1, len(f) - 1):
            tris.append((f[0], f[k], f[k + 1]))
    if not tris:
        return np.zeros((0, 3), dtype=np.int64)
    return np.array(tris, dtype=np.int64)
