import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udfmesh.errors import FormatError, GridMismatch
from udfmesh.grid import (GroundTruthMesh, UdfGrid, add_noise, derive_layout,
                          grid_union, load_grid, sample_sdf, sample_udf,
                          sample_udf_at, save_grid, winding_numbers)
from udfmesh.shapes import icosphere, plane_patch, two_sheets


@pytest.fixture(scope="module")
def sphere_mesh():
    return GroundTruthMesh(*icosphere(4, radius=0.5))


class TestSampling:
    def test_sphere_matches_analytic(self, sphere_mesh):
        grid = sample_udf(sphere_mesh, 24)
        analytic = np.abs(np.linalg.norm(grid.node_positions(), axis=1) - 0.5)
        # The icosphere deviates from the analytic sphere by its face sagitta:
        # r*(1 - cos(theta_e/sqrt(3))) with edge angle theta_e for 4 subdivisions.
        theta_e = 2.0 * np.pi / (5.0 * 2 ** 4)
        sagitta = 0.5 * (1.0 - np.cos(theta_e / np.sqrt(3.0)))
        assert np.max(np.abs(grid.values - analytic)) < 1.5 * sagitta

    def test_one_lipschitz_between_neighbors(self, sphere_mesh):
        grid = sample_udf(sphere_mesh, 16)
        nx, ny, nz = grid.dims
        vol = grid.values.reshape(nz, ny, nx)
        for axis in (0, 1, 2):
            step = np.abs(np.diff(vol, axis=axis))
            assert step.max() <= grid.spacing * (1.0 + 1e-12)

    def test_layout_covers_padded_bounds(self, sphere_mesh):
        lo, hi = sphere_mesh.bounds
        origin, h, dims = derive_layout(lo, hi, 32, 0.1)
        pad = 0.1 * np.linalg.norm(hi - lo)
        assert np.all(origin <= lo - pad + 1e-12)
        assert np.all(origin + (dims - 1) * h >= hi + pad - 1e-12)
        # A cubical mesh bbox yields a cubical grid at the requested resolution.
        assert np.all(dims == 32)

    def test_plane_interior_column_values(self):
        z0 = 0.0131
        mesh = GroundTruthMesh(*plane_patch(half=2.0, z=z0, n=4))
        origin = np.array([-0.45, -0.45, z0 - 0.41])
        h = 0.1
        dims = np.array([10, 10, 9])
        grid = sample_udf_at(mesh, origin, h, dims)
        expect = np.abs(grid.node_positions()[:, 2] - z0)
        assert np.allclose(grid.values, expect, atol=1e-14)

    def test_anisotropic_dims_cover_flat_mesh(self):
        mesh = GroundTruthMesh(*plane_patch(half=1.0, z=0.0, n=2))
        grid = sample_udf(mesh, 32)
        assert grid.dims[0] == 32 and grid.dims[1] == 32
        assert 2 <= grid.dims[2] < 32


class TestSdf:
    def test_abs_equals_udf_exactly(self, sphere_mesh):
        sdf = sample_sdf(sphere_mesh, 12)
        udf = sample_udf(sphere_mesh, 12)
        assert np.array_equal(np.abs(sdf.values), udf.values)

    def test_signs_match_analytic_sphere(self, sphere_mesh):
        sdf = sample_sdf(sphere_mesh, 16)
        r = np.linalg.norm(sdf.node_positions(), axis=1)
        clear = np.abs(r - 0.5) > 1e-3  # skip the mesh-approximation band
        inside = sdf.values < 0
        assert np.array_equal(inside[clear], (r < 0.5)[clear])

    def test_winding_number_values(self, sphere_mesh):
        pts = np.array([[0.0, 0.0, 0.0], [0.3, 0.0, 0.0], [1.0, 1.0, 1.0]])
        w = winding_numbers(sphere_mesh, pts)
        assert w[0] == pytest.approx(1.0, abs=1e-6)
        assert w[1] == pytest.approx(1.0, abs=1e-6)
        assert w[2] == pytest.approx(0.0, abs=1e-6)

    def test_open_surface_documented_behavior(self):
        # Non-watertight input: no error, unsigned part still exact.
        mesh = GroundTruthMesh(*two_sheets())
        sdf = sample_sdf(mesh, 8)
        udf = sample_udf(mesh, 8)
        assert np.array_equal(np.abs(sdf.values), udf.values)


class TestNoise:
    def test_deterministic_for_seed(self, sphere_mesh):
        grid = sample_udf(sphere_mesh, 12)
        a = add_noise(grid, 0.3, seed=42)
        b = add_noise(grid, 0.3, seed=42)
        c = add_noise(grid, 0.3, seed=43)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_clamped_nonnegative(self, sphere_mesh):
        grid = sample_udf(sphere_mesh, 12)
        noisy = add_noise(grid, 5.0, seed=0)
        assert noisy.values.min() >= 0.0

    def test_noise_scale(self, sphere_mesh):
        grid = sample_udf(sphere_mesh, 16)
        sigma = 0.25
        noisy = add_noise(grid, sigma, seed=7)
        delta = noisy.values - grid.values
        # Clamping only acts near zero; look at nodes safely away from it.
        free = grid.values > 5 * sigma * grid.spacing
        sd = delta[free].std()
        assert 0.9 * sigma * grid.spacing < sd < 1.1 * sigma * grid.spacing


class TestUnion:
    def test_elementwise_min(self):
        g1 = UdfGrid(np.zeros(3), 1.0, (2, 2, 2), np.arange(8.0))
        g2 = UdfGrid(np.zeros(3), 1.0, (2, 2, 2), np.arange(8.0)[::-1].copy())
        u = grid_union(g1, g2)
        assert np.array_equal(u.values, np.minimum(g1.values, g2.values))

    def test_mismatch_raises(self):
        g1 = UdfGrid(np.zeros(3), 1.0, (2, 2, 2), np.zeros(8))
        g2 = UdfGrid(np.zeros(3), 0.5, (2, 2, 2), np.zeros(8))
        with pytest.raises(GridMismatch):
            grid_union(g1, g2)
        g3 = UdfGrid(np.ones(3), 1.0, (2, 2, 2), np.zeros(8))
        with pytest.raises(GridMismatch):
            grid_union(g1, g3)

    def test_two_sphere_union_equals_direct_sampling(self):
        a = GroundTruthMesh(*icosphere(3, 0.3, center=(-0.5, 0.0, 0.0)))
        b = GroundTruthMesh(*icosphere(3, 0.3, center=(0.5, 0.0, 0.0)))
        scene = GroundTruthMesh(
            np.vstack([a.vertices, b.vertices]),
            np.vstack([a.faces, b.faces + len(a.vertices)]))
        origin, h, dims = derive_layout(*scene.bounds, 20, 0.1)
        ga = sample_udf_at(a, origin, h, dims)
        gb = sample_udf_at(b, origin, h, dims)
        direct = sample_udf_at(scene, origin, h, dims)
        u = grid_union(ga, gb)
        assert np.max(np.abs(u.values - direct.values)) <= 1e-12


class TestGridFile:
    def roundtrip(self, tmp_path, grid, mode):
        path = tmp_path / f"g_{mode}.grid"
        save_grid(grid, path, mode)
        back = load_grid(path)
        assert np.array_equal(back.dims, grid.dims)
        assert np.array_equal(back.origin, grid.origin)
        assert back.spacing == grid.spacing
        assert np.array_equal(back.values, grid.values)
        return path

    def test_roundtrip_binary_bit_exact(self, tmp_path, sphere_mesh):
        grid = sample_udf(sphere_mesh, 8)
        self.roundtrip(tmp_path, grid, "binary")

    def test_roundtrip_ascii_bit_exact(self, tmp_path, sphere_mesh):
        grid = sample_udf(sphere_mesh, 8)
        self.roundtrip(tmp_path, grid, "ascii")

    @given(values=st.lists(
        st.floats(min_value=0.0, max_value=1e18, allow_nan=False),
        min_size=8, max_size=8))
    @settings(max_examples=40)
    def test_roundtrip_property(self, values, tmp_path_factory):
        grid = UdfGrid(np.array([0.1, -0.2, 0.3]), 0.7, (2, 2, 2),
                       np.array(values))
        base = tmp_path_factory.mktemp("grids")
        for mode in ("ascii", "binary"):
            path = base / f"p_{mode}.grid"
            save_grid(grid, path, mode)
            assert np.array_equal(load_grid(path).values, grid.values)

    def test_header_layout(self, tmp_path):
        grid = UdfGrid(np.zeros(3), 0.5, (2, 2, 2), np.linspace(0, 1, 8))
        path = tmp_path / "h.grid"
        save_grid(grid, path, "ascii")
        lines = path.read_bytes().split(b"\n")
        assert lines[0] == b"spudd-grid 1"
        assert lines[1] == b"dims 2 2 2"
        assert lines[2].startswith(b"origin ")
        assert lines[3] == b"spacing 0.5"
        assert lines[4] == b"data ascii"

    def test_x_fastest_order(self, tmp_path):
        vals = np.arange(8.0)
        grid = UdfGrid(np.zeros(3), 1.0, (2, 2, 2), vals)
        path = tmp_path / "o.grid"
        save_grid(grid, path, "ascii")
        body = path.read_bytes().split(b"data ascii\n", 1)[1].split()
        assert [float(b) for b in body] == list(vals)
        # index (i,j,k) = i + nx*(j + ny*k)
        assert grid.node_index(1, 0, 0) == 1
        assert grid.node_index(0, 1, 0) == 2
        assert grid.node_index(0, 0, 1) == 4

    def test_bad_magic_offset(self, tmp_path):
        path = tmp_path / "bad.grid"
        path.write_bytes(b"spudd-grid 2\ndims 2 2 2\n")
        with pytest.raises(FormatError) as exc:
            load_grid(path)
        assert exc.value.offset == 0

    def test_bad_dims_offset(self, tmp_path):
        prefix = b"spudd-grid 1\n"
        path = tmp_path / "bad.grid"
        path.write_bytes(prefix + b"dims 2 x 2\norigin 0 0 0\n")
        with pytest.raises(FormatError) as exc:
            load_grid(path)
        assert exc.value.offset == len(prefix)

    def test_short_binary_payload(self, tmp_path):
        grid = UdfGrid(np.zeros(3), 1.0, (2, 2, 2), np.zeros(8))
        path = tmp_path / "short.grid"
        save_grid(grid, path, "binary")
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(FormatError) as exc:
            load_grid(path)
        assert exc.value.offset == len(data) - 8

    def test_trailing_binary_bytes(self, tmp_path):
        grid = UdfGrid(np.zeros(3), 1.0, (2, 2, 2), np.zeros(8))
        path = tmp_path / "long.grid"
        save_grid(grid, path, "binary")
        data = path.read_bytes()
        path.write_bytes(data + b"xx")
        with pytest.raises(FormatError) as exc:
            load_grid(path)
        assert exc.value.offset == len(data)

    def test_negative_ascii_value_offset(self, tmp_path):
        header = (b"spudd-grid 1\ndims 2 2 2\norigin 0 0 0\n"
                  b"spacing 1\ndata ascii\n")
        body = b"0\n1\n2\n-3\n4\n5\n6\n7\n"
        path = tmp_path / "neg.grid"
        path.write_bytes(header + body)
        with pytest.raises(FormatError) as exc:
            load_grid(path)
        assert exc.value.offset == len(header) + body.index(b"-3")

    def test_missing_ascii_values(self, tmp_path):
        header = (b"spudd-grid 1\ndims 2 2 2\norigin 0 0 0\n"
                  b"spacing 1\ndata ascii\n")
        path = tmp_path / "few.grid"
        path.write_bytes(header + b"0 1 2 3\n")
        with pytest.raises(FormatError):
            load_grid(path)

    def test_dims_too_small(self, tmp_path):
        path = tmp_path / "d1.grid"
        path.write_bytes(b"spudd-grid 1\ndims 1 2 2\norigin 0 0 0\n"
                         b"spacing 1\ndata ascii\n0 0 0 0\n")
        with pytest.raises(FormatError):
            load_grid(path)
