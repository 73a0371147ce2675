"""Spectral-core contracts: transforms, derivatives, projection, quadrature."""

import numpy as np
import pytest

from glnematic.spectral import (
    TORUS_AREA,
    Field,
    dealias,
    divergence,
    forward_transform,
    gradient,
    integrate,
    inverse_transform,
    laplacian,
    leray_project,
    make_grid,
    perp_gradient,
)

from conftest import band_limited_field


class TestGrid:
    def test_mode_set_n8(self):
        g = make_grid(8)
        assert sorted(g.modes.tolist()) == list(range(-3, 5))

    def test_dealias_mask_n8(self):
        g = make_grid(8)
        # true exactly for max(|k1|, |k2|) <= 2 since floor(8/3) = 2
        for i, a in enumerate(g.modes):
            for j, b in enumerate(g.modes):
                assert g.dealias_mask[i, j] == (max(abs(a), abs(b)) <= 2)

    @pytest.mark.parametrize("bad", [7, 9, 15])
    def test_odd_n_rejected(self, bad):
        with pytest.raises(ValueError):
            make_grid(bad)

    @pytest.mark.parametrize("bad", [2, 4, 6])
    def test_small_n_rejected(self, bad):
        with pytest.raises(ValueError):
            make_grid(bad)

    def test_spacing(self):
        g = make_grid(16)
        assert g.h == pytest.approx(2 * np.pi / 16, rel=0, abs=0)


class TestTransforms:
    def test_constant_field(self):
        g = make_grid(8)
        f = Field.from_physical(g, np.ones((8, 8)))
        fh = f.spectral
        assert fh[0, 0, 0] == pytest.approx(1.0)
        off = np.abs(fh).sum() - abs(fh[0, 0, 0])
        assert off <= 1e-14

    def test_cosine_coefficients(self):
        g = make_grid(8)
        f = Field.from_physical(g, np.cos(g.x1) * np.ones((1, 8)))
        fh = f.spectral[:, :, 0]
        assert fh[1, 0] == pytest.approx(0.5, abs=1e-14)
        assert fh[-1, 0] == pytest.approx(0.5, abs=1e-14)

    @pytest.mark.parametrize("n", [8, 16, 32, 64])
    def test_roundtrip(self, n):
        rng = np.random.default_rng(n)
        arr = rng.standard_normal((n, n, 3))
        f = Field.from_physical(make_grid(n), arr)
        back = inverse_transform(forward_transform(f))
        assert np.max(np.abs(back.physical - arr)) <= 1e-12

    @pytest.mark.parametrize("n", [8, 16, 32, 64])
    def test_parseval(self, n):
        rng = np.random.default_rng(10 + n)
        arr = rng.standard_normal((n, n, 2))
        f = Field.from_physical(make_grid(n), arr)
        lhs = TORUS_AREA * np.sum(np.abs(f.spectral) ** 2)
        rhs = f.grid.h**2 * np.sum(arr**2)
        assert abs(lhs - rhs) <= 1e-12 * rhs

    def test_conjugate_symmetry(self):
        n = 16
        f = band_limited_field(n, 1, 5, seed=1)
        fh = f.spectral[:, :, 0]
        for a in range(-7, 8):
            for b in range(-7, 8):
                assert fh[-a % n, -b % n] == pytest.approx(np.conj(fh[a % n, b % n]), abs=1e-13)

    def test_valid_repr_tracking(self):
        g = make_grid(8)
        f = Field.from_physical(g, np.ones((8, 8)))
        assert f.valid_repr == "physical"
        _ = f.spectral
        assert f.valid_repr == "both"


class TestDerivatives:
    def test_gradient_of_sine(self, grid16):
        f = Field.from_physical(grid16, np.sin(grid16.x1) * np.ones((1, 16)))
        grad = gradient(f).physical
        assert np.max(np.abs(grad[:, :, 0] - np.cos(grid16.x1))) <= 1e-13
        assert np.max(np.abs(grad[:, :, 1])) <= 1e-13

    def test_laplacian_of_cosine(self, grid16):
        f = Field.from_physical(grid16, np.cos(grid16.x2) * np.ones((16, 1)))
        lap = laplacian(f).physical
        assert np.max(np.abs(lap[:, :, 0] + np.cos(grid16.x2))) <= 1e-13

    def test_perp_gradient_divergence_free(self, grid32):
        f = band_limited_field(32, 1, 9, seed=2)
        u = perp_gradient(f)
        div = divergence(u).spectral
        assert np.max(np.abs(div)) <= 1e-12

    def test_gradient_requires_scalar(self, grid16):
        f = Field.from_physical(grid16, np.zeros((16, 16, 2)))
        with pytest.raises(ValueError):
            gradient(f)


class TestLerayProjection:
    def test_solenoidal_fixed_point(self, grid32):
        u = perp_gradient(band_limited_field(32, 1, 8, seed=3))
        pu = leray_project(u)
        assert np.max(np.abs(pu.spectral - u.spectral)) <= 1e-13

    def test_pure_gradient_killed(self, grid32):
        u = gradient(band_limited_field(32, 1, 8, seed=4))
        pu = leray_project(u)
        assert np.max(np.abs(pu.spectral)) <= 1e-13

    def test_divergence_and_idempotence(self, grid32):
        rng = np.random.default_rng(5)
        u = Field.from_physical(grid32, rng.standard_normal((32, 32, 2)))
        pu = leray_project(u)
        assert np.max(np.abs(divergence(pu).spectral)) <= 1e-12
        ppu = leray_project(pu)
        assert np.max(np.abs(ppu.spectral - pu.spectral)) <= 1e-13

    def test_self_adjoint(self, grid32):
        rng = np.random.default_rng(6)
        u = Field.from_physical(grid32, rng.standard_normal((32, 32, 2)))
        w = Field.from_physical(grid32, rng.standard_normal((32, 32, 2)))
        h2 = grid32.h**2
        lhs = h2 * np.sum(leray_project(u).physical * w.physical)
        rhs = h2 * np.sum(u.physical * leray_project(w).physical)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_zero_mode_untouched(self, grid16):
        arr = np.zeros((16, 16, 2))
        arr[:, :, 0] = 2.5
        pu = leray_project(Field.from_physical(grid16, arr))
        assert pu.spectral[0, 0, 0] == pytest.approx(2.5)


class TestDealias:
    def test_low_mode_kept(self):
        n = 16
        g = make_grid(n)
        coeffs = np.zeros((n, n, 1), dtype=complex)
        coeffs[1, 0, 0] = 1.0
        f = dealias(Field.from_spectral(g, coeffs))
        assert f.spectral[1, 0, 0] == 1.0

    def test_nyquist_mode_zeroed(self):
        n = 16
        g = make_grid(n)
        coeffs = np.zeros((n, n, 1), dtype=complex)
        coeffs[n // 2, 3, 0] = 1.0
        f = dealias(Field.from_spectral(g, coeffs))
        assert np.all(f.spectral == 0)

    def test_idempotent(self, grid16):
        rng = np.random.default_rng(7)
        f = Field.from_physical(grid16, rng.standard_normal((16, 16)))
        once = dealias(f).spectral
        twice = dealias(dealias(f)).spectral
        assert np.array_equal(once, twice)


class TestIntegrate:
    def test_constant(self, grid16):
        f = Field.from_physical(grid16, np.ones((16, 16)))
        assert integrate(f) == pytest.approx(4 * np.pi**2, rel=1e-14)

    def test_mean_zero_mode(self, grid16):
        f = Field.from_physical(grid16, np.cos(grid16.x1) * np.ones((1, 16)))
        assert abs(integrate(f)) <= 1e-13

    def test_sine_squared(self, grid16):
        f = Field.from_physical(grid16, np.sin(grid16.x1) ** 2 * np.ones((1, 16)))
        assert integrate(f) == pytest.approx(2 * np.pi**2, rel=1e-14)
