import numpy as np
import pytest

from udfmesh.errors import FormatError
from udfmesh.grid import GroundTruthMesh, sample_udf
from udfmesh.meshio import load_obj, save_obj, triangulate_faces
from udfmesh.shapes import beveled_box, box, disk, icosphere, torus, two_sheets


class TestObjIo:
    def test_roundtrip_tris_and_quads(self, tmp_path):
        verts = np.array([[0.0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                          [0.5, 0.5, 1]])
        faces = [np.array([0, 1, 2, 3]), np.array([0, 1, 4])]
        path = tmp_path / "m.obj"
        save_obj(path, verts, faces)
        v2, f2 = load_obj(path)
        assert np.array_equal(v2, verts)
        assert len(f2) == 2
        assert np.array_equal(f2[0], faces[0])
        assert np.array_equal(f2[1], faces[1])

    def test_ignores_other_records(self, tmp_path):
        path = tmp_path / "m.obj"
        path.write_text("# comment\nvn 0 0 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\n"
                        "vt 0 0\nf 1/1/1 2/2/1 3/3/1\ns off\n")
        v, f = load_obj(path)
        assert v.shape == (3, 3)
        assert np.array_equal(f[0], [0, 1, 2])

    def test_negative_indices(self, tmp_path):
        path = tmp_path / "m.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n")
        _, f = load_obj(path)
        assert np.array_equal(f[0], [0, 1, 2])

    def test_bad_vertex_raises_with_offset(self, tmp_path):
        path = tmp_path / "m.obj"
        path.write_bytes(b"v 0 0 0\nv 1 zzz 0\n")
        with pytest.raises(FormatError) as exc:
            load_obj(path)
        assert exc.value.offset == len(b"v 0 0 0\n")

    def test_missing_vertex_reference(self, tmp_path):
        path = tmp_path / "m.obj"
        path.write_text("v 0 0 0\nf 1 2 3\n")
        with pytest.raises(FormatError):
            load_obj(path)

    def test_byte_stable_output(self, tmp_path):
        verts, faces = icosphere(2)
        p1 = tmp_path / "a.obj"
        p2 = tmp_path / "b.obj"
        save_obj(p1, verts, faces)
        save_obj(p2, verts, faces)
        assert p1.read_bytes() == p2.read_bytes()

    def test_triangulate_quads(self):
        tris = triangulate_faces([np.array([0, 1, 2, 3])])
        assert np.array_equal(tris, [[0, 1, 2], [0, 2, 3]])


class TestShapes:
    def test_icosphere_on_sphere(self):
        verts, faces = icosphere(3, radius=0.5)
        assert np.allclose(np.linalg.norm(verts, axis=1), 0.5)
        # Closed surface: Euler characteristic 2, every edge shared twice.
        assert len(verts) - self.edge_count(faces) + len(faces) == 2

    def test_torus_euler_characteristic(self):
        verts, faces = torus()
        assert len(verts) - self.edge_count(faces) + len(faces) == 0

    def test_disk_open(self):
        verts, faces = disk(radius=0.8, n=16)
        edges = {}
        for f in faces:
            for k in range(3):
                e = tuple(sorted((f[k], f[(k + 1) % 3])))
                edges[e] = edges.get(e, 0) + 1
        boundary = [e for e, c in edges.items() if c == 1]
        assert len(boundary) == 16

    def test_two_sheets_cross(self):
        mesh = GroundTruthMesh(*two_sheets())
        grid = sample_udf(mesh, 8)
        # Points on the intersection line (the y axis) have distance zero.
        tree = mesh.tree
        for y in np.linspace(-0.5, 0.5, 5):
            _, d, _ = tree.closest_point(np.array([0.0, y, 0.0]))
            assert d < 1e-12

    def test_box_closed(self):
        verts, faces = box()
        assert len(verts) - self.edge_count(faces) + len(faces) == 2

    def test_beveled_box_closed(self):
        verts, faces = beveled_box()
        assert len(verts) - self.edge_count(faces) + len(faces) == 2

    @staticmethod
    def edge_count(faces):
        edges = set()
        for f in faces:
            m = len(f)
            for k in range(m):
                edges.add(tuple(sorted((int(f[k]), int(f[(k + 1) % m])))))
        return len(edges)
