import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foldylax.greens import (
    CoincidentPoints,
    check_wavenumber,
    coupling_kernels,
    dyadic_pi,
    grad_phi,
    phi,
)

# frozen 40-digit evaluations of exp(ik r)/(4 pi r)
PHI_K1_R2 = complex(-0.016557956522133179172, 0.03617979505501205838)
INV_4PI = 0.079577471545947667884


def fd_gradient(k, x, y, h):
    out = np.zeros(3, dtype=complex)
    for c in range(3):
        e = np.zeros(3)
        e[c] = h
        out[c] = (phi(k, x + e, y) - phi(k, x - e, y)) / (2 * h)
    return out


def fd_hessian(k, x, y, h):
    out = np.zeros((3, 3), dtype=complex)
    for a in range(3):
        for b in range(3):
            ea = np.zeros(3)
            eb = np.zeros(3)
            ea[a] = h
            eb[b] = h
            out[a, b] = (
                phi(k, x + ea + eb, y)
                - phi(k, x + ea - eb, y)
                - phi(k, x - ea + eb, y)
                + phi(k, x - ea - eb, y)
            ) / (4 * h * h)
    return out


class TestPhi:
    def test_static_unit_separation(self):
        assert phi(0.0, (1, 0, 0), (0, 0, 0)) == pytest.approx(INV_4PI, rel=1e-15)

    def test_full_period_phase(self):
        val = phi(2 * math.pi, (1, 0, 0), (0, 0, 0))
        assert val == pytest.approx(INV_4PI, rel=1e-13)

    def test_high_precision_value(self):
        val = complex(phi(1.0, (2, 0, 0), (0, 0, 0)))
        assert val == pytest.approx(PHI_K1_R2, rel=1e-15)

    def test_coincident_raises(self):
        with pytest.raises(CoincidentPoints):
            phi(1.0, (0, 0, 0), (0, 0, 0))
        with pytest.raises(CoincidentPoints):
            phi(1.0, (1e-15, 0, 0), (0, 0, 0))

    def test_configurable_floor(self):
        assert np.isfinite(phi(1.0, (1e-15, 0, 0), (0, 0, 0), floor=1e-16))

    def test_wavenumber_validation(self):
        with pytest.raises(ValueError):
            check_wavenumber(1.0 - 0.5j)

    def test_attenuated_magnitude_decays(self):
        k = 0.7 + 1.3j
        radii = (1 / abs(k)) * 2.0 ** np.arange(0, 8)
        mags = [abs(phi(k, (r, 0, 0), (0, 0, 0))) for r in radii]
        assert all(a > b for a, b in zip(mags, mags[1:]))


class TestGradPhi:
    def test_coulomb_gradient(self):
        g = grad_phi(0.0, (1, 0, 0), (0, 0, 0))
        assert np.allclose(g, [-INV_4PI, 0, 0], rtol=1e-14, atol=1e-18)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=2**32 - 1))
    def test_antisymmetry(self, seed):
        rng = np.random.default_rng(seed)
        x, y = rng.uniform(-2, 2, size=(2, 3))
        if np.linalg.norm(x - y) < 1e-3:
            return
        k = complex(rng.uniform(0, 3), rng.uniform(0, 1))
        assert np.allclose(grad_phi(k, x, y), -grad_phi(k, y, x), rtol=1e-13, atol=1e-16)

    def test_finite_difference_match(self):
        x, y = np.array([0.0, 0.0, 2.0]), np.zeros(3)
        g = grad_phi(1.0, x, y)
        fd = fd_gradient(1.0, x, y, 1e-6 * 2.0)
        assert np.linalg.norm(g - fd) / np.linalg.norm(g) <= 1e-6


class TestDyadic:
    def test_static_axis_value(self):
        pi0 = dyadic_pi(0.0, (1, 0, 0), (0, 0, 0))
        expected = INV_4PI * np.diag([2.0, -1.0, -1.0])
        assert np.allclose(pi0, expected, rtol=1e-13)
        fd = fd_hessian(0.0, np.array([1.0, 0, 0]), np.zeros(3), 1e-4)
        assert np.linalg.norm(pi0 - fd) / np.linalg.norm(pi0) <= 1e-6

    def test_static_trace_free(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            x, y = rng.uniform(-1, 1, size=(2, 3))
            if np.linalg.norm(x - y) < 0.1:
                continue
            assert abs(np.trace(dyadic_pi(0.0, x, y))) <= 1e-13 / np.linalg.norm(x - y) ** 3

    def test_argument_symmetry(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            x, y = rng.uniform(-1, 1, size=(2, 3))
            if np.linalg.norm(x - y) < 0.1:
                continue
            k = complex(rng.uniform(0, 2), rng.uniform(0, 1))
            assert np.allclose(dyadic_pi(k, x, y), dyadic_pi(k, y, x), rtol=1e-13)

    def test_matrix_symmetry_every_call(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            x, y = rng.uniform(-1, 1, size=(2, 3))
            if np.linalg.norm(x - y) < 0.1:
                continue
            val = dyadic_pi(rng.uniform(0, 2), x, y)
            assert np.linalg.norm(val - val.T) <= 1e-13 * np.linalg.norm(val)

    def test_against_finite_differences_random(self, rng):
        # 100 random pairs; FD Hessian step h = 1e-4 |x - y|
        count = 0
        while count < 100:
            x, y = rng.uniform(-2, 2, size=(2, 3))
            r = np.linalg.norm(x - y)
            if r < 0.2:
                continue
            k = rng.uniform(0, 2.0)
            direct = dyadic_pi(k, x, y)
            approx = k * k * complex(phi(k, x, y)) * np.eye(3) + fd_hessian(k, x, y, 1e-4 * r)
            assert np.linalg.norm(direct - approx) / np.linalg.norm(direct) <= 1e-5
            count += 1


class TestCouplingKernels:
    def test_matches_pointwise_functions(self, rng):
        x = rng.uniform(-1, 1, size=(4, 3))
        y = rng.uniform(2, 3, size=(5, 3))
        disp = x[:, None, :] - y[None, :, :]
        grad, pi = coupling_kernels(0.9, disp)
        for i in range(4):
            for j in range(5):
                assert np.allclose(grad[i, j], grad_phi(0.9, x[i], y[j]), rtol=1e-14)
                assert np.allclose(pi[i, j], dyadic_pi(0.9, x[i], y[j]), rtol=1e-14)

    def test_self_mask_zeroes_diagonal(self):
        z = np.array([[0.0, 0, 0], [1.0, 0, 0], [0, 1.0, 0]])
        disp = z[:, None, :] - z[None, :, :]
        mask = np.eye(3, dtype=bool)
        grad, pi = coupling_kernels(1.0, disp, self_mask=mask)
        assert np.all(grad[mask] == 0)
        assert np.all(pi[np.eye(3, dtype=bool)] == 0)
        with pytest.raises(CoincidentPoints):
            coupling_kernels(1.0, disp)
