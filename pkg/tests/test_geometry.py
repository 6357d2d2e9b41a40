import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foldylax import geometry
from foldylax.geometry import (
    BodyShape,
    Cluster,
    EmptyCluster,
    MeshError,
    OverlappingBodies,
    compute_epsilon_delta,
    icosphere,
    load_off,
    save_off,
    shell_count,
    validate_regime,
)


def spheres(*specs):
    return [BodyShape.sphere(r, c) for r, c in specs]


class TestEpsilonDelta:
    def test_two_spheres(self):
        eps, delta = compute_epsilon_delta(spheres((0.1, (0, 0, 0)), (0.1, (1, 0, 0))))
        assert eps == pytest.approx(0.2, abs=0)
        assert delta == pytest.approx(0.8)

    def test_single_sphere(self):
        eps, delta = compute_epsilon_delta(spheres((0.05, (0, 0, 0))))
        assert eps == pytest.approx(0.1)
        assert delta == math.inf

    def test_closest_pair_dominates(self):
        bodies = spheres((0.1, (0, 0, 0)), (0.1, (0.5, 0, 0)), (0.1, (2, 0, 0)))
        _, delta = compute_epsilon_delta(bodies)
        assert delta == pytest.approx(0.3)

    def test_overlap_raises(self):
        with pytest.raises(OverlappingBodies):
            compute_epsilon_delta(spheres((0.3, (0, 0, 0)), (0.3, (0.5, 0, 0))))

    def test_empty_raises(self):
        with pytest.raises(EmptyCluster):
            compute_epsilon_delta([])

    @settings(max_examples=20, deadline=None)
    @given(st.permutations(list(range(4))))
    def test_permutation_invariant(self, order):
        bodies = spheres(
            (0.1, (0, 0, 0)), (0.07, (1, 0, 0)), (0.2, (0, 2, 0)), (0.05, (1, 1, 1))
        )
        base = compute_epsilon_delta(bodies)
        permuted = compute_epsilon_delta([bodies[i] for i in order])
        assert permuted == base

    def test_mesh_delta_converges_to_analytic(self):
        analytic = spheres((0.1, (0, 0, 0)), (0.1, (1, 0, 0)))
        _, exact = compute_epsilon_delta(analytic)
        previous_gap = None
        for level in (1, 2, 3):
            meshes = [
                BodyShape.from_mesh(icosphere(level, radius=0.1, center=c))
                for c in ((0, 0, 0), (1, 0, 0))
            ]
            eps, delta = compute_epsilon_delta(meshes)
            panel = icosphere(level, radius=0.1).max_panel_diameter()
            assert abs(delta - exact) <= panel
            if previous_gap is not None:
                assert abs(delta - exact) <= previous_gap + 1e-15
            previous_gap = abs(delta - exact)


class TestShellCount:
    @pytest.mark.parametrize("m,n", [(100, 1), (1000, 3), (1, 1)])
    def test_examples(self, m, n):
        assert shell_count(m) == n

    def test_examples_brute_force(self):
        def brute(m):
            n = 1
            while sum(16 * (3 * l * l + 3 * l + 1) for l in range(1, n + 1)) < m:
                n += 1
            return n

        for m in (1, 7, 100, 112, 113, 1000, 1008, 1009, 54321):
            assert shell_count(m) == brute(m)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=1, max_value=10**7))
    def test_nondecreasing(self, m):
        assert shell_count(m) <= shell_count(m + 1)

    @pytest.mark.parametrize("n", range(1, 12))
    def test_boundary_exact(self, n):
        boundary = 16 * n * (n * n + 3 * n + 3)
        assert shell_count(boundary) == n
        assert shell_count(boundary + 1) == n + 1


class TestRegime:
    def test_single_body_zero_frequency(self):
        cluster = Cluster.from_bodies(spheres((0.05, (0, 0, 0))))
        report = validate_regime(cluster, 0.0, mu_plus=4 * math.pi)
        assert report.value == 0.0
        assert report.within_threshold

    def test_term_by_term(self):
        # independent re-implementation of the condition's left-hand side
        eps, delta, m, k, mu = 0.01, 0.5, 8, 1.0, 4 * math.pi
        cluster = Cluster.from_bodies(
            spheres(*((eps / 2, (x, y, z)) for x in (0, 0.51) for y in (0, 0.51) for z in (0, 0.51)))
        )
        assert cluster.delta == pytest.approx(0.5, rel=1e-12)
        expected = (
            k**2 * eps
            + (1 + k**2) * mu * eps**3 / delta**3
            + (math.log(m ** (1 / 3)) / delta**3 + 2 * k * m ** (1 / 3) / delta**2
               + m ** (2 / 3) * k**2 / (2 * delta)) * eps**3
        )
        report = validate_regime(cluster, k, mu_plus=mu)
        assert report.value == pytest.approx(expected, rel=1e-12)

    def test_mesoscale_finite(self):
        # bodies as large as their gaps: value is finite, flag follows threshold
        step = 0.2
        centers = [(x * step, y * step, z * step) for x in range(3) for y in range(3) for z in range(3)]
        cluster = Cluster.from_bodies(spheres(*((0.05, c) for c in centers)))
        assert cluster.epsilon == pytest.approx(cluster.delta, rel=1e-9)
        report = validate_regime(cluster, 0.5, mu_plus=math.pi / 2)
        assert math.isfinite(report.value) and report.value > 0
        assert report.within_threshold == (report.value < 1.0)
        loose = validate_regime(cluster, 0.5, mu_plus=math.pi / 2, threshold=10 * report.value)
        assert loose.within_threshold


class TestMesh:
    def test_icosphere_counts(self):
        for level, panels in ((0, 20), (2, 320), (3, 1280)):
            mesh = icosphere(level)
            assert mesh.n_panels == panels

    def test_sphere_area_and_volume_converge(self):
        mesh = icosphere(3)
        assert mesh.areas.sum() == pytest.approx(4 * math.pi, rel=5e-3)
        assert mesh.signed_volume() == pytest.approx(4 * math.pi / 3, rel=1e-2)

    def test_closed_surface_identity(self):
        mesh = icosphere(2, radius=0.3, center=(1, 2, 3))
        vec_area = (mesh.normals * mesh.areas[:, None]).sum(axis=0)
        assert np.linalg.norm(vec_area) <= 1e-10 * mesh.areas.sum()

    def test_inconsistent_winding_rejected(self):
        mesh = icosphere(1)
        tris = mesh.triangles.copy()
        tris[0] = tris[0][::-1]
        with pytest.raises(MeshError):
            geometry.SurfaceMesh(mesh.vertices, tris)

    def test_open_surface_rejected(self):
        mesh = icosphere(1)
        with pytest.raises(MeshError):
            geometry.SurfaceMesh(mesh.vertices, mesh.triangles[:-1])

    def test_inward_orientation_rejected(self):
        mesh = icosphere(1)
        with pytest.raises(MeshError):
            geometry.SurfaceMesh(mesh.vertices, mesh.triangles[:, ::-1])

    def test_off_round_trip(self, tmp_path):
        mesh = icosphere(1, radius=0.25, center=(0.1, -0.2, 0.3))
        path = tmp_path / "ball.off"
        save_off(mesh, path)
        loaded = load_off(path)
        assert np.allclose(loaded.vertices, mesh.vertices, atol=1e-15)
        assert np.array_equal(loaded.triangles, mesh.triangles)

    def test_off_rejects_garbage(self, tmp_path):
        path = tmp_path / "bad.off"
        path.write_text("NOFF\n1 1 0\n")
        with pytest.raises(MeshError):
            load_off(path)

    def test_containment(self):
        mesh = icosphere(1, radius=0.5, center=(1, 0, 0))
        assert mesh.contains((1, 0, 0))
        assert not mesh.contains((2, 0, 0))

    def test_mesh_body_center_must_be_inside(self):
        mesh = icosphere(1, radius=0.5)
        with pytest.raises(MeshError):
            BodyShape(center=(3.0, 0.0, 0.0), mesh=mesh)


class TestCluster:
    def test_domain_diameter_default_contains(self):
        cluster = Cluster.from_bodies(spheres((0.1, (0, 0, 0)), (0.1, (1, 0, 0))))
        assert cluster.domain_diameter >= 1.2 - 1e-12

    def test_domain_diameter_too_small(self):
        with pytest.raises(ValueError):
            Cluster.from_bodies(spheres((0.1, (0, 0, 0)), (0.1, (1, 0, 0))), domain_diameter=0.5)

    def test_scenario_ingestion(self, tmp_path):
        mesh = icosphere(1, radius=0.1)
        save_off(mesh, tmp_path / "b.off")
        doc = {
            "bodies": [
                {"kind": "sphere", "center": [0, 0, 0], "radius": 0.1},
                {"kind": "mesh", "center": [1, 0, 0], "mesh_path": "b.off"},
            ],
        }
        cluster = geometry.cluster_from_dict(doc, base_dir=tmp_path)
        assert cluster.m == 2
        assert cluster.bodies[1].kind == "mesh"

    def test_scenario_errors_name_field(self):
        with pytest.raises(ValueError, match=r"bodies\[0\]\.radius"):
            geometry.cluster_from_dict(
                {"bodies": [{"kind": "sphere", "center": [0, 0, 0], "radius": -1}]}
            )
        with pytest.raises(ValueError, match=r"bodies\[0\]\.kind"):
            geometry.cluster_from_dict({"bodies": [{"kind": "cube", "center": [0, 0, 0]}]})
