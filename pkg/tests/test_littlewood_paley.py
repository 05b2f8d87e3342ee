import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besovns.littlewood_paley import (bony_decompose, build_partition, dyadic_block, partial_sum,
                                      phi_profile, psi_profile, smooth_step)
from besovns.spectral import Field, make_grid, multiply

from conftest import random_field


class TestProfiles:
    @given(st.floats(-2, 3))
    def test_smooth_step_range_and_symmetry(self, t):
        s = float(smooth_step(t))
        assert 0.0 <= s <= 1.0
        assert s + float(smooth_step(1 - t)) == pytest.approx(1.0, abs=1e-15)

    def test_smooth_step_monotone(self):
        t = np.linspace(-0.5, 1.5, 2001)
        assert np.all(np.diff(smooth_step(t)) >= 0)

    def test_psi_plateaus(self):
        assert np.all(psi_profile(np.linspace(0, 1, 50)) == 1.0)
        assert np.all(psi_profile(np.linspace(4 / 3, 10, 50)) == 0.0)

    def test_phi_support(self):
        r = np.linspace(0, 6, 6001)
        ph = phi_profile(r)
        assert np.all(ph[(r <= 1) | (r >= 8 / 3)] == 0)
        assert np.all(ph >= 0)

    @given(st.floats(0.01, 1e4))
    def test_telescoping_sum(self, r):
        js = np.arange(-12, 20)
        assert float(np.sum(phi_profile(r * 2.0 ** (-js)))) == pytest.approx(1.0, abs=1e-12)


class TestPartition:
    def test_index_range_at_32(self, part32):
        assert part32.resolvable_js() == [0, 1, 2]
        assert part32.j_min < 0 < part32.j_max

    def test_lumped_symbols_sum_to_one(self, grid32, part32):
        total = sum(part32.symbol(j) for j in part32.js)
        band = grid32.mask & (grid32.k2 > 0)
        np.testing.assert_allclose(total[band], 1.0, atol=1e-14)

    def test_blocks_reconstruct_zero_mean_field(self, grid32, part32):
        f = random_field(grid32, 1)
        c = np.array(f.coeffs)
        c[:, 0, 0, 0] = 0
        f = Field(grid32, c)
        total = sum(part32.blocks(f).values(), Field.zeros(grid32))
        np.testing.assert_allclose(total.coeffs, f.coeffs, atol=1e-10)

    def test_quasi_orthogonality(self, grid32, part32):
        f = random_field(grid32, 2)
        for j in part32.js:
            for k in part32.js:
                if abs(j - k) > 1:
                    assert part32.block(part32.block(f, k), j).l2_norm() <= 1e-12 * f.l2_norm()

    def test_partial_sum_plus_tail(self, grid32, part32):
        f = random_field(grid32, 3)
        j = 1
        tail = sum((part32.block(f, l) for l in part32.js if l >= j), Field.zeros(grid32))
        np.testing.assert_allclose((partial_sum(f, j, part32) + tail).coeffs,
                                   (f - Field(grid32, f.coeffs * (grid32.k2 == 0))).coeffs, atol=1e-10)
        with pytest.raises(ValueError):
            part32.partial_sum(f, part32.j_max + 2)

    def test_block_out_of_range(self, grid32, part32):
        with pytest.raises(ValueError):
            dyadic_block(random_field(grid32, 0), part32.j_max + 1, part32)

    def test_block_support_inside_annulus(self, grid32, part32):
        for j in part32.resolvable_js():
            k = grid32.kmag[part32.block_support(j)]
            assert k.min() > 2.0 ** j and k.max() < (8 / 3) * 2.0 ** j

    def test_tilde_block_reproduces_block(self, grid32, part32):
        f = random_field(grid32, 4)
        j = 1
        again = part32.tilde_block(part32.block(f, j), j)
        np.testing.assert_allclose(again.coeffs, part32.block(f, j).coeffs, atol=1e-10)

    def test_small_grid_has_enough_scales(self):
        part = build_partition(make_grid(16))
        assert len(part.js) >= 3


class TestBony:
    @settings(max_examples=5, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_pieces_sum_to_product(self, seed):
        g = make_grid(16)
        part = build_partition(g)
        f = random_field(g, seed, components=1)
        h = random_field(g, seed + 1, components=1)
        c = [np.array(x.coeffs) for x in (f, h)]
        for a in c:
            a[:, 0, 0, 0] = 0
        f, h = Field(g, c[0]), Field(g, c[1])
        t1, t2, r = bony_decompose(f, h, part)
        prod = multiply(f, h)
        np.testing.assert_allclose((t1 + t2 + r).coeffs, prod.coeffs, atol=1e-9 * np.abs(prod.coeffs).max())

    def test_paraproduct_of_low_and_high(self, grid32, part32):
        low = part32.block(random_field(grid32, 5, components=1), part32.j_min)
        high = part32.block(random_field(grid32, 6, components=1), part32.j_max - 1)
        t_lh, _, r = bony_decompose(low, high, part32)
        assert r.l2_norm() < 1e-12 * t_lh.l2_norm()
