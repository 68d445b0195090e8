import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aggdiff.grids import (
    Density2D,
    RadialDensity,
    moments,
    potential,
    quantize_levels,
    radial_potential,
    rasterize_radial,
    reconstruct,
)
from aggdiff.kernels import log2d, newtonian_potential_2d


def grid_disk(n=256, extent=8.0, radius=1.0, value=1.0):
    dx = extent / n
    x0 = -extent / 2.0
    xs = x0 + (np.arange(n) + 0.5) * dx
    X, Y = np.meshgrid(xs, xs)
    return Density2D(dx, (x0, x0), np.where(X * X + Y * Y < radius**2, value, 0.0))


class TestMoments:
    def test_single_cell_bump(self):
        vals = np.zeros((8, 8))
        vals[2, 5] = 1.0
        rho = Density2D(0.5, (-2.0, -2.0), vals)
        ms = moments(rho)
        assert ms.mass == pytest.approx(0.25)
        assert ms.center == (pytest.approx(0.75), pytest.approx(-0.75))
        r2 = 0.75**2 + 0.75**2
        assert ms.m2 == pytest.approx(0.25 * (r2 + 0.5**2 / 6.0))

    def test_uniform_disk_grid(self):
        ms = moments(grid_disk())
        assert ms.mass == pytest.approx(math.pi, rel=1e-2)
        assert ms.m2 == pytest.approx(math.pi / 2.0, rel=1e-2)

    def test_translation_moves_center_only(self):
        rho = grid_disk(n=128)
        shifted = Density2D(rho.dx, (rho.origin[0] + 0.5, rho.origin[1] - 0.25), rho.values)
        a, b = moments(rho), moments(shifted)
        assert b.mass == pytest.approx(a.mass)
        assert b.center[0] - a.center[0] == pytest.approx(0.5)
        assert b.center[1] - a.center[1] == pytest.approx(-0.25)
        # central second moment unchanged
        ca = a.m2 - a.mass * (a.center[0] ** 2 + a.center[1] ** 2)
        cb = b.m2 - b.mass * (b.center[0] ** 2 + b.center[1] ** 2)
        assert cb == pytest.approx(ca, rel=1e-12)

    def test_radial_exact_disk(self):
        n = 1000
        vals = np.where((np.arange(n) + 0.5) * (2.0 / n) < 1.0, 1.0, 0.0)
        rho = RadialDensity(2.0 / n, vals)
        ms = moments(rho)
        assert ms.mass == pytest.approx(math.pi, rel=1e-14)
        assert ms.m2 == pytest.approx(math.pi / 2.0, rel=1e-14)

    def test_additive_under_disjoint_superposition(self):
        a = np.zeros((32, 32))
        b = np.zeros((32, 32))
        a[4:8, 4:8] = 1.0
        b[20:28, 10:14] = 2.0
        rho_a = Density2D(0.25, (-4.0, -4.0), a)
        rho_b = Density2D(0.25, (-4.0, -4.0), b)
        rho_ab = Density2D(0.25, (-4.0, -4.0), a + b)
        for field_name in ("mass", "m2", "log_moment"):
            va = getattr(moments(rho_a), field_name)
            vb = getattr(moments(rho_b), field_name)
            vab = getattr(moments(rho_ab), field_name)
            assert vab == pytest.approx(va + vb, rel=1e-12)


class TestPotential:
    def test_disk_center_value(self):
        # psi_N(0) = 1/4 for the unit disk with N = -(1/2pi) log|x|
        psi = radial_potential(
            RadialDensity(1.0 / 1000, np.ones(1000)), newtonian_potential_2d(), at=np.array([1e-9])
        )
        assert psi[0] == pytest.approx(0.25, abs=1e-6)

    def test_disk_exterior_mean_value(self):
        psi = radial_potential(
            RadialDensity(1.0 / 1000, np.ones(1000)), newtonian_potential_2d(), at=np.array([2.0])
        )
        assert psi[0] == pytest.approx(-math.log(2.0) / 2.0, rel=1e-12)

    def test_zero_density(self):
        rho = Density2D(0.1, (-0.8, -0.8), np.zeros((16, 16)))
        assert np.all(potential(rho, log2d()) == 0.0)

    def test_dimension_mismatch(self):
        rho = RadialDensity(0.01, np.ones(10), dimension=3)
        with pytest.raises(ValueError, match="dimension"):
            radial_potential(rho, log2d())

    def test_fft_matches_brute_force(self):
        rng = np.random.default_rng(1)
        f = Density2D(0.1, (-0.4, -0.4), rng.random((8, 8)))
        k = log2d()
        psi = potential(f, k)
        xs, ys = f.x, f.y
        brute = np.zeros_like(psi)
        for j in range(8):
            for i in range(8):
                R = np.hypot(xs[None, :] - xs[i], ys[:, None] - ys[j])
                W = np.empty_like(R)
                nz = R > 0
                W[nz] = k.omega(R[nz])
                W[~nz] = k.cell_average(f.dx)
                brute[j, i] = np.sum(W * f.values) * f.cell
        assert np.allclose(psi, brute, rtol=1e-12, atol=1e-14)

    def test_interaction_symmetry(self):
        rng = np.random.default_rng(2)
        f = Density2D(0.1, (-0.8, -0.8), rng.random((16, 16)))
        g = Density2D(0.1, (-0.8, -0.8), rng.random((16, 16)))
        k = log2d()
        s1 = float((f.values * potential(g, k)).sum())
        s2 = float((g.values * potential(f, k)).sum())
        assert s1 == pytest.approx(s2, rel=1e-10)

    def test_grid_vs_radial_consistency(self):
        prof = RadialDensity(0.02, np.exp(-(((np.arange(150) + 0.5) * 0.02) ** 2)))
        rho2d = rasterize_radial(prof, nx=256, dx=8.0 / 256)
        psi2d = potential(rho2d, log2d())
        center = psi2d[128, 128]
        psi_rad = radial_potential(prof, log2d(), at=np.array([rho2d.dx / 2 * math.sqrt(2)]))
        assert center == pytest.approx(psi_rad[0], abs=3e-4)


class TestQuantize:
    def test_single_cell_bump_two_levels(self):
        vals = np.zeros((1, 5))
        vals[0, 2] = 1.0
        rho = Density2D(1.0, (0.0, 0.0), vals)
        q = quantize_levels(rho, 2)
        assert q.levels == pytest.approx([0.25, 0.75])
        assert len(q.rows[0]) == 2
        for _, iset in q.rows[0]:
            assert iset.lefts == [2.0] and iset.rights == [3.0]

    def test_monotone_row_nested_slabs(self):
        vals = np.array([[3.0, 2.0, 1.0]])
        rho = Density2D(1.0, (0.0, 0.0), vals)
        q = quantize_levels(rho, 6)
        prev = None
        for _, iset in q.rows[0]:
            if prev is not None:
                assert iset.lefts[0] >= prev.lefts[0] - 1e-15
                assert iset.rights[0] <= prev.rights[0] + 1e-15
            prev = iset

    def test_level_count_validation(self):
        rho = Density2D(1.0, (0.0, 0.0), np.ones((2, 2)))
        with pytest.raises(ValueError):
            quantize_levels(rho, 0)

    @given(st.integers(min_value=1, max_value=64), st.integers(min_value=0, max_value=10**9))
    @settings(max_examples=40, deadline=None)
    def test_roundtrip_pointwise_bound(self, levels, seed):
        rng = np.random.default_rng(seed)
        rho = Density2D(0.5, (-4.0, -2.0), rng.random((8, 16)))
        q = quantize_levels(rho, levels)
        rec = reconstruct(q)
        assert np.abs(rec.values - rho.values).max() <= rho.values.max() / levels + 1e-12

    def test_reconstruct_mass_equals_slab_measures(self):
        rng = np.random.default_rng(7)
        rho = Density2D(0.5, (-4.0, -2.0), rng.random((8, 16)))
        q = quantize_levels(rho, 32)
        rec = reconstruct(q)
        slab_mass = sum(
            q.delta_h * iset.measure() * rho.dx for row in q.rows for _, iset in row
        )
        assert rec.mass() == pytest.approx(slab_mass, abs=1e-10)

    def test_direction_y_matches_transpose(self):
        rng = np.random.default_rng(9)
        rho = Density2D(0.5, (-2.0, -2.0), rng.random((8, 8)))
        qx = quantize_levels(rho, 16, direction="x")
        qy = quantize_levels(rho, 16, direction="y")
        rx = reconstruct(qx)
        ry = reconstruct(qy)
        rho_t = Density2D(0.5, (-2.0, -2.0), rho.values.T.copy())
        rx_t = reconstruct(quantize_levels(rho_t, 16, direction="x"))
        assert np.allclose(ry.values, rx_t.values.T)
        assert rx.values.shape == ry.values.shape
