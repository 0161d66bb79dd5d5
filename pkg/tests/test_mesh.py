import numpy as np
import pytest

from alesolve.errors import ConfigurationError, GeometryError, UsageError
from alesolve.mesh import (
    FaceCurve2D,
    MeshMotion,
    build_box_mesh,
    element_geometry,
    face_geometry,
    metric_identity_residual,
    transfinite_map_2d,
    watertightness_residual,
)
from alesolve.operators import build_lgl

TWO_PI = 2.0 * np.pi


def sinusoidal_mesh(k, degree, length=TWO_PI, amplitude=0.05):
    ops = build_lgl(degree)
    motion = MeshMotion(0.0, length, amplitude, "sinusoidal")
    return build_box_mesh(k, k, k, (0.0, length), motion, ops)


class TestMeshMotion:
    def test_identity_at_t0(self):
        motion = MeshMotion(0.0, TWO_PI, 0.05, "sinusoidal")
        x0 = np.random.default_rng(0).uniform(0, TWO_PI, (10, 3))
        np.testing.assert_allclose(motion.positions(x0, 0.0), x0, atol=1e-15)

    def test_time_periodic(self):
        motion = MeshMotion(0.0, TWO_PI, 0.05, "sinusoidal")
        x0 = np.random.default_rng(1).uniform(0, TWO_PI, (10, 3))
        np.testing.assert_allclose(
            motion.positions(x0, 0.37), motion.positions(x0, 1.37), atol=1e-13
        )

    def test_degenerate_bounds_rejected(self):
        with pytest.raises(ConfigurationError):
            MeshMotion(1.0, 1.0)
        with pytest.raises(ConfigurationError):
            MeshMotion(0.0, 1.0, kind="wavy")

    def test_velocity_matches_finite_difference(self):
        motion = MeshMotion(0.0, TWO_PI, 0.05, "sinusoidal")
        x0 = np.random.default_rng(2).uniform(0, TWO_PI, (20, 3))
        eps = 1e-6
        for t in (0.1, 0.25, 0.8):
            fd = (motion.positions(x0, t + eps) - motion.positions(x0, t - eps)) / (
                2 * eps
            )
            np.testing.assert_allclose(motion.velocities(x0, t), fd, atol=1e-8)

    def test_velocity_zero_at_quarter_period(self):
        # cos(2 pi 0.25) = 0 up to rounding of pi/2
        motion = MeshMotion(0.0, TWO_PI, 0.05, "sinusoidal")
        x0 = np.random.default_rng(3).uniform(0, TWO_PI, (20, 3))
        assert np.max(np.abs(motion.velocities(x0, 0.25))) <= 1e-14


class TestBuildBoxMesh:
    def test_single_static_unit_cube(self):
        ops = build_lgl(3)
        motion = MeshMotion(0.0, 1.0, kind="static")
        mesh = build_box_mesh(1, 1, 1, (0.0, 1.0), motion, ops)
        geom = element_geometry(mesh, 0, 0.0)
        np.testing.assert_allclose(geom.jacobian, 0.125, rtol=1e-13)
        assert mesh.num_elements == 1

    def test_two_cubed_static(self):
        ops = build_lgl(2)
        motion = MeshMotion(0.0, 2.0, kind="static")
        mesh = build_box_mesh(2, 2, 2, (0.0, 2.0), motion, ops)
        assert mesh.num_elements == 8
        for eid in range(8):
            geom = element_geometry(mesh, eid, 0.0)
            np.testing.assert_allclose(geom.jacobian, 0.125, rtol=1e-13)

    def test_affine_metric_terms(self):
        ops = build_lgl(3)
        motion = MeshMotion(0.0, 2.0, kind="static")
        mesh = build_box_mesh(2, 2, 2, (0.0, 2.0), motion, ops)
        geom = element_geometry(mesh, 3, 0.0)
        # h = 1 cube: J a^i = (h^2/4) e_i
        for a in range(3):
            for c in range(3):
                expect = 0.25 if a == c else 0.0
                np.testing.assert_allclose(
                    geom.contravariant[a, c], expect, atol=1e-14
                )

    def test_distorted_positive_jacobian(self):
        mesh = sinusoidal_mesh(16, 2)
        _, _, _, _, jac = mesh.geometry_all(0.25)  # maximal distortion
        assert np.min(jac) > 0.0

    def test_degenerate_bounds(self):
        ops = build_lgl(2)
        with pytest.raises(ConfigurationError):
            build_box_mesh(2, 2, 2, (1.0, 1.0), MeshMotion(0.0, 1.0), ops)
        with pytest.raises(ConfigurationError):
            build_box_mesh(0, 2, 2, (0.0, 1.0), MeshMotion(0.0, 1.0), ops)

    def test_element_indexing_roundtrip(self):
        mesh = sinusoidal_mesh(3, 1)
        for eid in range(mesh.num_elements):
            assert mesh.element_id(*mesh.element_index(eid)) == eid

    def test_invalid_element_or_time(self):
        mesh = sinusoidal_mesh(2, 2)
        with pytest.raises(UsageError):
            element_geometry(mesh, 99, 0.0)
        with pytest.raises(UsageError):
            element_geometry(mesh, 0, -0.5)

    def test_summary_fields(self):
        mesh = sinusoidal_mesh(2, 3)
        summary = mesh.summary()
        assert summary["num_elements"] == 8
        assert summary["degree"] == 3
        assert summary["motion_kind"] == "sinusoidal"
        assert summary["amplitude"] == 0.05


class TestMetricIdentitiesAndWatertightness:
    @pytest.mark.parametrize("degree", [3, 4])
    @pytest.mark.parametrize("k", [2, 4])
    def test_metric_identities(self, degree, k):
        mesh = sinusoidal_mesh(k, degree)
        for t in (0.0, 0.13, 0.25, 0.4):
            assert metric_identity_residual(mesh, t) <= 1e-11

    @pytest.mark.parametrize("degree", [3, 4])
    def test_watertightness(self, degree):
        mesh = sinusoidal_mesh(2, degree)
        for t in (0.0, 0.13, 0.25, 0.4):
            assert watertightness_residual(mesh, t) <= 1e-12

    def test_static_mesh_time_constant(self):
        ops = build_lgl(3)
        motion = MeshMotion(0.0, TWO_PI, kind="static")
        mesh = build_box_mesh(2, 2, 2, (0.0, TWO_PI), motion, ops)
        _, v0, _, ja0, _ = mesh.geometry_all(0.0)
        _, v1, _, ja1, _ = mesh.geometry_all(0.7)
        assert np.all(v0 == 0.0) and np.all(v1 == 0.0)
        assert np.all(ja0 == ja1)

    def test_grid_velocity_continuous_across_faces(self):
        mesh = sinusoidal_mesh(3, 3)
        _, v, _, _, _ = mesh.geometry_all(0.4)
        for e in range(mesh.num_elements):
            ex, _, _ = mesh.element_index(e)
            nbr = mesh.neighbor(e, 0)
            if ex < 2:
                # interior faces share node trajectories bitwise
                np.testing.assert_array_equal(v[e, :, -1, :, :], v[nbr, :, 0, :, :])
            else:
                # the periodic seam evaluates sin at x and x + L
                np.testing.assert_allclose(
                    v[e, :, -1, :, :], v[nbr, :, 0, :, :], atol=1e-13
                )


class TestFaceGeometry:
    def test_affine_plus_x_face(self):
        ops = build_lgl(3)
        motion = MeshMotion(0.0, 1.0, kind="static")
        mesh = build_box_mesh(1, 1, 1, (0.0, 1.0), motion, ops)
        geom = element_geometry(mesh, 0, 0.0)
        s_hat, normal = face_geometry(geom, 2)
        np.testing.assert_allclose(s_hat, 0.25, rtol=1e-13)
        np.testing.assert_allclose(normal[0], 1.0, atol=1e-13)
        np.testing.assert_allclose(normal[1:], 0.0, atol=1e-13)

    def test_normals_unit_length(self):
        mesh = sinusoidal_mesh(2, 4)
        geom = element_geometry(mesh, 3, 0.25)
        for face in range(1, 7):
            _, normal = face_geometry(geom, face)
            np.testing.assert_allclose(
                np.sum(normal**2, axis=0), 1.0, atol=1e-13
            )

    def test_shared_face_values_agree(self):
        mesh = sinusoidal_mesh(2, 3)
        t = 0.4
        for e in range(mesh.num_elements):
            nbr = mesh.neighbor(e, 1)
            ge = element_geometry(mesh, e, t)
            gn = element_geometry(mesh, nbr, t)
            s_e, n_e = face_geometry(ge, 4)  # +x2 of owner
            s_n, n_n = face_geometry(gn, 3)  # -x2 of neighbor
            np.testing.assert_allclose(s_e, s_n, rtol=1e-12)
            np.testing.assert_allclose(n_e, -n_n, atol=1e-12)

    def test_bad_face_index(self):
        mesh = sinusoidal_mesh(1, 2)
        geom = element_geometry(mesh, 0, 0.0)
        with pytest.raises(UsageError):
            face_geometry(geom, 7)


class TestTransfiniteMap2D:
    @staticmethod
    def unit_square_faces():
        bottom = FaceCurve2D(lambda s, t: ((s + 1) / 2, 0.0))
        right = FaceCurve2D(lambda s, t: (1.0, (s + 1) / 2))
        top = FaceCurve2D(lambda s, t: ((s + 1) / 2, 1.0))
        left = FaceCurve2D(lambda s, t: (0.0, (s + 1) / 2))
        return (bottom, right, top, left)

    def test_unit_square_center(self):
        ops = build_lgl(4)
        pos, vel = transfinite_map_2d(self.unit_square_faces(), 0.0, 0.0, 0.0, ops)
        np.testing.assert_allclose(pos, [0.5, 0.5], atol=1e-14)
        np.testing.assert_allclose(vel, [0.0, 0.0], atol=1e-15)

    def test_corners_interpolated(self):
        ops = build_lgl(3)
        faces = self.unit_square_faces()
        for (xi1, xi2), corner in (
            ((-1, -1), (0, 0)),
            ((1, -1), (1, 0)),
            ((1, 1), (1, 1)),
            ((-1, 1), (0, 1)),
        ):
            pos, _ = transfinite_map_2d(faces, xi1, xi2, 0.0, ops)
            np.testing.assert_allclose(pos, corner, atol=1e-14)

    def test_corner_mismatch_rejected(self):
        ops = build_lgl(2)
        bottom, right, top, left = self.unit_square_faces()
        bad_left = FaceCurve2D(lambda s, t: (1e-6, (s + 1) / 2))
        with pytest.raises(ConfigurationError):
            transfinite_map_2d((bottom, right, top, bad_left), 0.0, 0.0, 0.0, ops)

    def test_shared_interface_velocity_continuous(self):
        # two elements sharing the moving curve y = 1 + a sin(pi x) sin(t);
        # velocities from both maps must agree at the shared LGL points
        ops = build_lgl(5)
        amp = 0.1

        def mid(s, t):
            x = (s + 1) / 2
            return (x, 1.0 + amp * np.sin(np.pi * x) * np.sin(t))

        def mid_vel(s, t):
            x = (s + 1) / 2
            return (0.0, amp * np.sin(np.pi * x) * np.cos(t))

        lower = (
            FaceCurve2D(lambda s, t: ((s + 1) / 2, 0.0)),
            FaceCurve2D(lambda s, t: (1.0, (s + 1) / 2)),
            FaceCurve2D(mid, mid_vel),
            FaceCurve2D(lambda s, t: (0.0, (s + 1) / 2)),
        )
        upper = (
            FaceCurve2D(mid, mid_vel),
            FaceCurve2D(lambda s, t: (1.0, 1.0 + (s + 1) / 2), None),
            FaceCurve2D(lambda s, t: ((s + 1) / 2, 2.0), None),
            FaceCurve2D(lambda s, t: (0.0, 1.0 + (s + 1) / 2), None),
        )
        t = 0.35
        for s in ops.nodes:
            _, v_low = transfinite_map_2d(lower, s, 1.0, t, ops)
            _, v_up = transfinite_map_2d(upper, s, -1.0, t, ops)
            np.testing.assert_allclose(v_low, v_up, atol=1e-12)
            np.testing.assert_allclose(v_low, mid_vel(s, t), atol=1e-12)
