import math

import numpy as np
import pytest

from conftest import solved_sphere_system, sphere_cluster, sphere_tensors
from foldylax import fields, foldy, oracles
from foldylax.foldy import PlaneWave
from foldylax.oracles import (
    SizeParameterTooLarge,
    brute_force_small_system,
    c_ls_reference,
    mie_pec_dipole,
    np_sphere_spectrum_check,
    unit_sphere_single_layer_norm,
)

class TestMieDipole:
    def test_forward_back_ratio_tends_to_three(self):
        ratios = []
        for ka in (0.2, 0.1, 0.05):
            ref = mie_pec_dipole(radius=0.1, k=ka / 0.1)
            ratios.append(np.linalg.norm(ref.forward_amp) / np.linalg.norm(ref.back_amp))
        assert ratios[0] < ratios[1] < ratios[2] < 3.0
        assert ratios[2] == pytest.approx(3.0, rel=0.01)

    def test_backscatter_magnitude(self, default_wave):
        # radius 0.1, k = 1: |back| -> eps^3 k^2 / 2 = 5e-4 within O((ka)^2)
        ref = mie_pec_dipole(0.1, 1.0, default_wave)
        assert np.linalg.norm(ref.back_amp) == pytest.approx(5e-4, rel=0.015)
        cluster, _, _, _, sol = solved_sphere_system([(0, 0, 0)], 0.1, default_wave)
        model = fields.far_field(sol, cluster, default_wave, [(0, 0, -1)])[0].e_inf
        assert np.linalg.norm(model - ref.back_amp) <= 0.015 * np.linalg.norm(ref.back_amp)

    def test_rayleigh_vanishing(self):
        # amplitudes vanish like (ka)^2 * a as ka -> 0 at fixed radius
        radius = 0.1
        amps = []
        for k in (0.4, 0.2, 0.1):
            ref = mie_pec_dipole(radius, k)
            amps.append(np.linalg.norm(ref.back_amp))
        assert amps[1] / amps[0] == pytest.approx(0.25, rel=0.01)
        assert amps[2] / amps[1] == pytest.approx(0.25, rel=0.01)

    def test_size_parameter_guard(self):
        with pytest.raises(SizeParameterTooLarge):
            mie_pec_dipole(0.3, 1.0)

    def test_series_matches_exact_mode(self):
        # the truncated expansion misses the radiative O((ka)^3) imaginary
        # correction to the coefficients; agreement tightens at that rate
        for k in (0.5, 1.0, 2.0):
            series = mie_pec_dipole(0.1, k, mode="series")
            exact = mie_pec_dipole(0.1, k, mode="exact")
            tol = 2.0 * (0.1 * k) ** 3 + 1e-6
            for a, b in ((series.forward_amp, exact.forward_amp),
                         (series.back_amp, exact.back_amp)):
                assert np.linalg.norm(a - b) <= tol * np.linalg.norm(b)

    def test_source_independence(self):
        # the oracle's kernel and elimination code paths must not call into
        # the solver modules they validate
        import inspect

        for fn in (oracles._ref_phi, oracles._ref_grad_phi, oracles._ref_dipole_kernel,
                   oracles._gauss_solve):
            fn_src = inspect.getsource(fn)
            assert "greens" not in fn_src and "foldy." not in fn_src
        bf_src = inspect.getsource(oracles.brute_force_small_system)
        assert "solve_direct" not in bf_src and "linalg.solve" not in bf_src
        assert "coupling_kernels" not in bf_src and "dyadic_pi" not in bf_src


class TestBruteForce:
    def test_single_body_closed_form(self, default_wave):
        cluster = sphere_cluster([(0, 0, 0)], 0.1)
        tensors = sphere_tensors(1, 0.1)
        ref = brute_force_small_system(cluster, tensors, default_wave)
        assert np.allclose(ref.a_coeffs[0], 4e-3 * math.pi * 1j * np.array([0, 1, 0]), rtol=1e-13)
        assert np.allclose(ref.b_coeffs[0], -2e-3 * math.pi * np.array([1, 0, 0]), rtol=1e-13)

    @pytest.mark.parametrize("m", [2, 3])
    def test_matches_direct_solver(self, m, rng):
        wave = PlaneWave(k=0.8, theta=(0, 0, 1), p=(1, 0, 0))
        for _ in range(5):
            centers = rng.uniform(0, 2, size=(m, 3))
            while True:
                gaps = [np.linalg.norm(a - b) for i, a in enumerate(centers) for b in centers[i + 1:]]
                if min(gaps) > 0.4:
                    break
                centers = rng.uniform(0, 2, size=(m, 3))
            cluster, tensors, _, _, direct = solved_sphere_system(centers, 0.05, wave)
            ref = brute_force_small_system(cluster, tensors, wave)
            num = np.linalg.norm(direct.a_coeffs - ref.a_coeffs) + np.linalg.norm(
                direct.b_coeffs - ref.b_coeffs
            )
            den = np.linalg.norm(ref.a_coeffs) + np.linalg.norm(ref.b_coeffs)
            assert num / den <= 1e-10

    def test_collinear_mirror_symmetry(self):
        centers = [(0, 0, -0.7), (0, 0, 0), (0, 0, 0.7)]
        cluster = sphere_cluster(centers, 0.06)
        tensors = sphere_tensors(3, 0.06)
        wave_fwd = PlaneWave(k=1.1, theta=(0, 0, 1), p=(1, 0, 0))
        wave_rev = PlaneWave(k=1.1, theta=(0, 0, -1), p=(1, 0, 0))
        ref = brute_force_small_system(cluster, tensors, wave_fwd)
        _, _, _, _, direct = solved_sphere_system(centers, 0.06, wave_fwd)
        assert np.allclose(ref.a_coeffs, direct.a_coeffs, rtol=1e-10, atol=1e-18)
        # swapping the outer bodies and reflecting across the midplane maps
        # the solution onto the reversed-incidence solution
        rev = brute_force_small_system(cluster, tensors, wave_rev)
        s = np.diag([1.0, 1.0, -1.0])
        swap = [2, 1, 0]
        scale = np.abs(ref.b_coeffs).max()
        assert np.allclose(rev.b_coeffs, ref.b_coeffs[swap] @ s.T, rtol=1e-10, atol=1e-13 * scale)
        assert np.allclose(rev.a_coeffs, -ref.a_coeffs[swap] @ s.T, rtol=1e-10, atol=1e-13 * scale)

    def test_m_cap(self, default_wave):
        cluster = sphere_cluster([(0, 0, 0), (1, 0, 0), (2, 0, 0), (3, 0, 0)], 0.1)
        with pytest.raises(ValueError):
            brute_force_small_system(cluster, sphere_tensors(4, 0.1), default_wave)


class TestSpectrumCheck:
    def test_eigenvalues_on_standard_mesh(self, sphere_mesh_1280, kstar_1280):
        report = np_sphere_spectrum_check(sphere_mesh_1280, kstar_1280)
        assert report.degree1_error <= 0.03
        assert report.degree2_error <= 0.06

    def test_refinement_reduces_errors(self, sphere_mesh_320, sphere_mesh_1280,
                                       kstar_320, kstar_1280):
        coarse = np_sphere_spectrum_check(sphere_mesh_320, kstar_320)
        fine = np_sphere_spectrum_check(sphere_mesh_1280, kstar_1280)
        assert fine.degree1_error < coarse.degree1_error
        assert fine.degree2_error < coarse.degree2_error

    def test_constant_function_identity(self, sphere_mesh_320, kstar_320):
        report = np_sphere_spectrum_check(sphere_mesh_320, kstar_320)
        assert report.constant_row_value == pytest.approx(0.5, abs=1e-13)
        assert report.constant_row_deviation <= 1e-12


class TestDerivedConstants:
    def test_single_layer_norm_is_one(self):
        assert unit_sphere_single_layer_norm() == 1.0
        # sup over degrees: n = 0 dominates every later degree
        vals = [math.sqrt(1 + n * (n + 1)) / (2 * n + 1) for n in range(50)]
        assert vals[0] == 1.0 and max(vals[1:]) < 1.0

    def test_c_ls_cross_implementation(self):
        from foldylax.layerops import ClusterSpectra

        spectra = ClusterSpectra(mu_plus=1.0, mu_minus=1.0, scale=1.0)
        for k in (0.0, 0.5, 2.0):
            for d in (0.5, 1.0, 3.0):
                cluster = sphere_cluster([(0, 0, 0)], 0.1, domain_diameter=d)
                got = foldy.invertibility_constants(cluster, spectra, k).c_ls
                assert got == pytest.approx(c_ls_reference(k, d), rel=1e-12)

    def test_c_ls_at_zero(self):
        assert c_ls_reference(0.0, 1.0) == pytest.approx(152.0 / math.pi, rel=1e-14)


def test_validation_report_passes():
    report = oracles.validation_report(seed=0)
    assert report["passed"]
    names = {c["name"] for c in report["checks"]}
    assert {"single_body_closed_form", "brute_force_cross_check",
            "np_spectrum_degree1", "c_ls_arithmetic"} <= names
