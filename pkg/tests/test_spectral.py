import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from besovns.spectral import (LERAY, Field, Grid, apply_multiplier, curl, derivative, divergence,
                              fft_workers, fractional_laplacian, gradient, heat_semigroup,
                              hermitian_defect, laplacian, leray_project, make_grid, multiply,
                              nonlinear_term, oseen_kernel, outer, pad_coeffs, riesz_potential,
                              sup_norm)
from besovns.ns_solver import InitialData, make_initial_data

from conftest import random_field


def periodic_heat_kernel_1d(x, t, L, images=6):
    """Periodised Gaussian ``sum_m (4 pi t)^{-1/2} exp(-(x + m L)^2 / 4t)``."""
    m = np.arange(-images, images + 1)
    return np.sum(np.exp(-(x[:, None] + m[None, :] * L) ** 2 / (4 * t)), axis=1) / math.sqrt(4 * math.pi * t)


class TestGrid:
    @pytest.mark.parametrize("n", [8, 24, 0, -16])
    def test_rejects_bad_sizes(self, n):
        with pytest.raises(ValueError):
            Grid(n)

    @pytest.mark.parametrize("kw", [{"box_length": 0.0}, {"box_length": math.inf}, {"dealias_fraction": 0.0},
                                    {"dealias_fraction": 1.5}])
    def test_rejects_bad_geometry(self, kw):
        with pytest.raises(ValueError):
            Grid(16, **kw)

    def test_cube_mask_excludes_nyquist(self):
        g = make_grid(32)
        assert g.max_retained_index == 10
        ix, _, iz = g.index_axes
        assert not g.mask[ix == -16].any()
        assert not g.mask[..., iz == 16].any()
        full = Grid(16, dealias_fraction=1.0)
        assert full.max_retained_index == 7

    def test_cutoff_and_corner(self):
        g = make_grid(32)
        assert g.k_cutoff == pytest.approx(32 / 3)
        assert g.max_retained_kmag == pytest.approx(10 * math.sqrt(3))

    def test_box_scaling(self):
        g = make_grid(16, box_length=math.pi)
        assert g.k0 == pytest.approx(2.0)
        assert g.wavevector[0][1, 0, 0] == pytest.approx(2.0)

    def test_spectral_arrays_are_frozen(self, grid16):
        with pytest.raises(ValueError):
            grid16.k2[0, 0, 0] = 1.0

    def test_fft_workers_honours_cap(self, monkeypatch):
        monkeypatch.setenv("NSCB_THREADS", "1")
        assert fft_workers() == 1
        monkeypatch.setenv("NSCB_THREADS", "junk")
        assert fft_workers() >= 1


class TestField:
    def test_band_limited_round_trip(self, grid16):
        x = grid16.coordinates()
        vals = np.stack([np.sin(2 * x[0]) * np.cos(x[2]), np.cos(3 * x[1]), np.sin(x[0] + x[1])])
        f = Field.from_physical(grid16, vals)
        np.testing.assert_allclose(f.physical(), vals, atol=1e-13)

    def test_out_of_band_modes_removed(self, grid16):
        x = grid16.coordinates()
        f = Field.from_physical(grid16, np.sin(7 * x[0]))
        assert f.l2_norm() < 1e-12

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_parseval_matches_quadrature(self, seed):
        g = make_grid(16)
        f = random_field(g, seed)
        quad_norm = math.sqrt(np.sum(f.physical() ** 2) * g.cell_volume)
        assert f.l2_norm() == pytest.approx(quad_norm, rel=1e-12)

    def test_real_fields_are_hermitian(self, grid16):
        assert hermitian_defect(random_field(grid16, 3)) < 1e-14

    def test_arithmetic(self, grid16):
        f, g = random_field(grid16, 1), random_field(grid16, 2)
        np.testing.assert_allclose((f + g - g).coeffs, f.coeffs, atol=1e-12)
        np.testing.assert_allclose((2 * f / 2).coeffs, f.coeffs)
        np.testing.assert_allclose((-f).coeffs, -f.coeffs)
        with pytest.raises(ValueError):
            f + random_field(make_grid(32), 0)

    def test_component_count_validated(self, grid16):
        with pytest.raises(ValueError):
            Field(grid16, np.zeros((2,) + grid16.spectral_shape))

    def test_padding_interpolates(self, grid16):
        f = random_field(grid16, 4)
        fine = f.padded_physical(2)
        np.testing.assert_allclose(fine[:, ::2, ::2, ::2], f.physical(), atol=1e-12)
        assert pad_coeffs(f.coeffs, 16, 1) is f.coeffs

    def test_sup_norm_bounds_collocation_max(self, grid16):
        f = random_field(grid16, 5)
        assert sup_norm(f) >= np.sqrt(np.sum(f.physical() ** 2, axis=0)).max() - 1e-12


class TestMultipliers:
    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_leray_properties(self, seed):
        g = make_grid(16)
        f = random_field(g, seed)
        pf = leray_project(f)
        assert divergence(pf).l2_norm() <= 1e-13 * g.k_cutoff * f.l2_norm()
        np.testing.assert_allclose(leray_project(pf).coeffs, pf.coeffs, atol=1e-12 * np.abs(f.coeffs).max())
        assert pf.l2_norm() <= f.l2_norm() * (1 + 1e-14)

    def test_leray_multiplier_matches_projection(self, grid16):
        f = random_field(grid16, 8)
        np.testing.assert_allclose(apply_multiplier(f, LERAY).coeffs, leray_project(f).coeffs, atol=1e-10)

    def test_leray_removes_gradients(self, grid16):
        phi = random_field(grid16, 9, components=1)
        assert leray_project(gradient(phi)).l2_norm() < 1e-12 * gradient(phi).l2_norm()

    def test_heat_matches_periodised_gaussian(self, grid16):
        g = grid16
        t = 0.3
        f = random_field(g, 11, components=1)
        x = np.arange(g.n) * g.dx
        K = periodic_heat_kernel_1d((x[:, None] - x[None, :]).ravel(), t, g.box_length).reshape(g.n, g.n) * g.dx
        u = f.physical()[0]
        u = np.einsum("ai,ijk->ajk", K, u)
        u = np.einsum("bj,ajk->abk", K, u)
        u = np.einsum("ck,abk->abc", K, u)
        np.testing.assert_allclose(heat_semigroup(f, t).physical()[0], u, atol=1e-10 * np.abs(u).max())

    def test_heat_rejects_negative_time(self, grid16):
        with pytest.raises(ValueError):
            heat_semigroup(random_field(grid16, 0), -1.0)

    @pytest.mark.parametrize("sigma", [0.25, 0.75, 1.5])
    def test_riesz_matches_subordination(self, grid16, sigma):
        g = grid16
        f = random_field(g, 12, components=1)
        got = riesz_potential(f, sigma).coeffs[0]
        k2 = g.k2
        values = np.unique(np.round(k2[g.mask & (k2 > 0)], 9))
        # |k|^{-sigma} = Gamma(sigma/2)^{-1} int_0^inf t^{sigma/2 - 1} exp(-t |k|^2) dt
        table = {v: quad(lambda t, v=v: t ** (sigma / 2 - 1) * math.exp(-t * v), 0, np.inf)[0] / gamma(sigma / 2)
                 for v in values}
        sym = np.zeros_like(k2)
        sel = g.mask & (k2 > 0)
        sym[sel] = [table[v] for v in np.round(k2[sel], 9)]
        want = f.coeffs[0] * sym
        np.testing.assert_allclose(got, want, atol=1e-8 * np.abs(want).max())

    def test_riesz_composes_and_inverts(self, grid16):
        f = random_field(grid16, 13, components=1)
        c = np.array(f.coeffs)
        c[:, 0, 0, 0] = 0
        f = Field(grid16, c)
        back = fractional_laplacian(riesz_potential(f, 1.2), 1.2)
        np.testing.assert_allclose(back.coeffs, f.coeffs, atol=1e-12 * np.abs(c).max())
        with pytest.raises(ValueError):
            riesz_potential(f, 3.0)


class TestDerivatives:
    def test_analytic_derivatives(self, grid16):
        x = grid16.coordinates()
        f = Field.from_physical(grid16, np.sin(2 * x[0]) * np.cos(x[1]))
        np.testing.assert_allclose(derivative(f, "x").physical()[0], 2 * np.cos(2 * x[0]) * np.cos(x[1]), atol=1e-12)
        np.testing.assert_allclose(derivative(f, 1).physical()[0], -np.sin(2 * x[0]) * np.sin(x[1]), atol=1e-12)
        np.testing.assert_allclose(laplacian(f).physical()[0], -5 * f.physical()[0], atol=1e-12)

    def test_vector_identities(self, grid16):
        u = random_field(grid16, 14)
        phi = random_field(grid16, 15, components=1)
        assert divergence(curl(u)).l2_norm() < 1e-11
        assert curl(gradient(phi)).l2_norm() < 1e-11
        assert gradient(u).components == 9
        assert divergence(gradient(u)).l2_norm() == pytest.approx(laplacian(u).l2_norm(), rel=1e-12)

    def test_unknown_operator(self, grid16):
        with pytest.raises(ValueError):
            derivative(random_field(grid16, 0), "rot")


class TestProducts:
    def test_multiply_and_outer(self, grid16):
        x = grid16.coordinates()
        a = Field.from_physical(grid16, np.sin(x[0]))
        b = Field.from_physical(grid16, np.cos(x[0]))
        np.testing.assert_allclose(multiply(a, b).physical()[0], 0.5 * np.sin(2 * x[0]), atol=1e-12)
        u = random_field(grid16, 16)
        assert outer(u, u).components == 9

    def test_taylor_green_nonlinearity_is_a_gradient(self, grid16):
        u = make_initial_data(InitialData("taylor_green"), grid16)
        assert nonlinear_term(u).l2_norm() < 1e-12

    def test_nonlinear_term_is_solenoidal(self, grid16):
        u = random_field(grid16, 17, solenoidal=True)
        n = nonlinear_term(u)
        assert divergence(n).l2_norm() < 1e-12 * grid16.k_cutoff * n.l2_norm()


class TestOseen:
    def test_kernel_shape_and_oddness(self):
        g = Grid(16, dealias_fraction=1.0)
        K = oseen_kernel(g, 0.05)
        assert K.shape == (3, 3, 3, 16, 16, 16)
        # the kernel of a first-order operator is odd about the origin
        idx = (-np.arange(16)) % 16
        np.testing.assert_allclose(K[..., idx, :, :][..., idx, :][..., idx], -K, atol=1e-10 * np.abs(K).max())

    def test_kernel_needs_positive_time(self):
        with pytest.raises(ValueError):
            oseen_kernel(Grid(16), 0.0)
