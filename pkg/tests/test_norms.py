import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma

from besovns.norms import (BesovParams, NormReport, besov_norm, block_norms, critical_besov_norm,
                           evaluate_at_points, heat_flow_besov_ratio, heat_times, heat_trajectory,
                           interpolation_check, interpolation_exponents, kato_norm, lp_norm,
                           lq_aggregate, magnitude_potential, potential_norm, ray_functional,
                           ray_profiles, sphere_directions, weighted_log_functional)
from besovns.ns_solver import InitialData, make_initial_data
from besovns.spectral import Field, make_grid

from conftest import random_field


def sin_lp_norm(p, L=2 * math.pi):
    """``||sin x||_{L^p}`` on the 3-torus ``[0, L)^3`` with ``L = 2 pi``."""
    one_d = 2 * math.sqrt(math.pi) * gamma((p + 1) / 2) / gamma(p / 2 + 1)
    return (L ** 2 * one_d) ** (1 / p)


class TestLebesgue:
    @pytest.mark.parametrize("p", [2.0, 4.0, 6.0, 8.0])
    def test_sine_closed_form(self, grid16, p):
        # even p keeps |sin|^p a trigonometric polynomial, so grid quadrature is exact
        x = grid16.coordinates()
        f = Field.from_physical(grid16, np.sin(x[0]))
        assert lp_norm(f, p) == pytest.approx(sin_lp_norm(p), rel=1e-12)

    def test_sup_and_bad_index(self, grid16):
        x = grid16.coordinates()
        f = Field.from_physical(grid16, 3 * np.cos(x[1]))
        assert lp_norm(f, math.inf) == pytest.approx(3.0)
        with pytest.raises(ValueError):
            lp_norm(f, 0.5)

    def test_lq_aggregate(self):
        assert lq_aggregate([3.0, 4.0], 2) == pytest.approx(5.0)
        assert lq_aggregate([3.0, 4.0], math.inf) == 4.0
        assert lq_aggregate([], 2) == 0.0


class TestBesov:
    def test_critical_index(self):
        bp = BesovParams.critical(4.0)
        assert bp.s == pytest.approx(-0.25) and bp.q == math.inf
        with pytest.raises(ValueError):
            BesovParams(0.0, 0.5)

    def test_single_block_field(self, grid32, part32):
        j = 1
        f = part32.block(random_field(grid32, 1), j)
        bp = BesovParams(0.5, 2.0, 2.0)
        bn = block_norms(f, 2.0, part32)
        want = lq_aggregate([2.0 ** (l * 0.5) * v for l, v in bn.items()], 2.0)
        assert besov_norm(f, bp, part32) == pytest.approx(want)
        # neighbours only see the profile overlap
        assert all(v < 1e-12 for l, v in bn.items() if abs(l - j) > 1)

    def test_homogeneity(self, grid32, part32):
        f = random_field(grid32, 2)
        assert critical_besov_norm(3 * f, 4.0, part32) == pytest.approx(3 * critical_besov_norm(f, 4.0, part32))

    def test_q_ordering(self, grid32, part32):
        f = random_field(grid32, 3)
        vals = [besov_norm(f, BesovParams(-0.25, 4.0, q), part32) for q in (1.0, 2.0, math.inf)]
        assert vals[0] >= vals[1] >= vals[2]


class TestReports:
    def test_validation(self):
        with pytest.raises(ValueError):
            NormReport([0.0], [-1.0], "x")
        with pytest.raises(ValueError):
            NormReport([0.0], [math.nan], "x")
        with pytest.raises(ValueError):
            NormReport([0.0, 1.0], [1.0], "x")
        assert NormReport([], [], "x").sup == 0.0

    def test_kato_of_heat_flow_is_finite(self, grid16):
        f = random_field(grid16, 4, solenoidal=True)
        tr = heat_trajectory(f, heat_times(grid16))
        assert 0 < kato_norm(tr, -0.25, 4.0) < math.inf
        assert 0 < kato_norm(tr, -0.25, 4.0, 2.0) < math.inf

    def test_kato_sup_closed_form(self, grid16):
        x = grid16.coordinates()
        f = Field.from_physical(grid16, np.sin(x[0]))
        times = np.geomspace(1e-3, 10, 200)
        tr = heat_trajectory(f, times)
        # t^{1/8} e^{-t} ||sin||_4 peaks at t = 1/8
        want = (1 / 8) ** (1 / 8) * math.exp(-1 / 8) * sin_lp_norm(4)
        assert kato_norm(tr, -0.25, 4.0) == pytest.approx(want, rel=1e-3)

    def test_heat_times_span(self, grid32):
        t = heat_times(grid32)
        assert t[0] == pytest.approx((2 / 32) ** 2) and t[-1] == pytest.approx(10.0)
        assert np.all(np.diff(np.log(t)) > 0)

    def test_heat_ratio_requires_negative_s(self, grid16):
        f = random_field(grid16, 5)
        with pytest.raises(ValueError):
            heat_flow_besov_ratio(f, BesovParams(0.5, 4.0))
        kv, bv, r = heat_flow_besov_ratio(f, BesovParams.critical(4.0))
        assert r == pytest.approx(kv / bv)


class TestFunctionals:
    def test_a_zero_matches_lp(self, grid16):
        f = random_field(grid16, 6, solenoidal=True)
        want = lp_norm(magnitude_potential(f, 4.0), 4.0) ** 4
        assert weighted_log_functional(f, 4.0, 0.0) == pytest.approx(want, rel=1e-12)
        assert potential_norm(f, 4.0) == pytest.approx(want ** 0.25, rel=1e-12)

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_weighted_log_decreasing_in_a(self, seed):
        f = random_field(make_grid(16), seed, solenoidal=True) * 5.0
        vals = [weighted_log_functional(f, 4.0, a) for a in np.linspace(0, 1, 6)]
        assert np.all(np.diff(vals) <= 0)

    def test_parameter_checks(self, grid16):
        f = random_field(grid16, 7)
        with pytest.raises(ValueError):
            weighted_log_functional(f, 4.0, 1.5)
        with pytest.raises(ValueError):
            potential_norm(f, 3.0)

    def test_point_evaluation_matches_grid(self, grid16):
        f = random_field(grid16, 8)
        pts = grid16.coordinates().reshape(3, -1).T[::37]
        vals = evaluate_at_points(f, pts)
        np.testing.assert_allclose(vals, f.physical().reshape(3, -1)[:, ::37], atol=1e-12)

    def test_directions(self):
        for n in (6, 13, 26, 40):
            d = sphere_directions(n)
            assert d.shape == (n, 3)
            np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
            assert np.linalg.matrix_rank(d) == 3
        d = sphere_directions(40)
        dist = np.linalg.norm(d[:, None] - d[None], axis=2) + 10 * np.eye(40)
        assert dist.min() > 0.3
        with pytest.raises(ValueError):
            sphere_directions(4)

    def test_ray_profile_against_dense_quadrature(self, grid16):
        # u = e_y cos(x): along e_x from c the magnitude is |cos(c_x + lam)|
        p = 4.0
        f = make_initial_data(InitialData("single_mode"), grid16)
        L, m = grid16.box_length, 96
        c = np.array([0.7, 1.1, 2.3])
        got = ray_profiles(f, p, np.array([[1.0, 0.0, 0.0]]), samples=m, center=c)[0]
        lam = (np.arange(m) - m // 2) * (L / m)
        h = np.abs(np.cos(c[0] + lam))
        kap = 2 * np.pi * np.fft.fftfreq(m, L / m)
        F = np.exp(-1j * np.outer(kap, lam))  # dense DFT
        sym = np.where(kap != 0, np.abs(np.where(kap != 0, kap, 1.0)) ** (-(1 - 1 / p)), 0.0)
        g = np.real(np.conj(F).T @ (sym * (F @ h))) / m
        want = np.sum(np.abs(g) ** p) * (L / m)
        assert got == pytest.approx(want, rel=1e-10)

    def test_ray_functional_is_max_over_directions(self, grid16):
        f = random_field(grid16, 9, solenoidal=True)
        val = ray_functional(f, 4.0, 6, samples=32)
        assert val == pytest.approx(ray_profiles(f, 4.0, sphere_directions(6), samples=32).max())


class TestInterpolation:
    @given(st.floats(3.01, 20.0), st.floats(2.01, 3.0))
    def test_exponents_sum_to_one(self, p, r):
        a = interpolation_exponents(p, r)
        assert sum(a) == pytest.approx(1.0, abs=1e-12)
        assert all(x >= 0 for x in a)

    def test_rejects_inadmissible(self):
        with pytest.raises(ValueError):
            interpolation_exponents(2.5, 3.0)
        with pytest.raises(ValueError):
            interpolation_exponents(4.0, 2.0)

    def test_check_fields(self, grid16, part16):
        w = random_field(grid16, 10, solenoidal=True)
        chk = interpolation_check(w, 4.0, 3.0, part16)
        rhs = math.prod(f ** e for f, e in zip(chk.factors, chk.exponents))
        assert chk.constant == pytest.approx(chk.lhs / rhs)
        assert chk.constant > 0
