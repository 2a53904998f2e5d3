import math

import numpy as np
import pytest

from latdisp.lattice import (
    ComplexField,
    LatticeError,
    LatticeGrid,
    SpectrumField,
    apply_multiplier,
    continuum_abs2,
    dft,
    discrete_laplacian,
    gns_ratio,
    gns_theta,
    idft,
    lp_norm,
    sobolev_norm,
    symbol_sigma,
)
from oracles import direct_dft


def random_field(grid, seed=0):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape)
    return ComplexField(grid, vals)


def plane_wave(grid, k):
    x = grid.site_coordinates()
    xi = 2 * np.pi * np.array(k) / grid.L
    return ComplexField(
        grid, np.multiply.outer(np.exp(1j * xi[0] * x), np.exp(1j * xi[1] * x))
    )


class TestGrid:
    def test_period(self):
        g = LatticeGrid(2, 16, 0.25)
        assert g.L == 4.0
        assert g.shape == (16, 16)

    @pytest.mark.parametrize("M", [3, 6, 0, 12])
    def test_rejects_bad_M(self, M):
        with pytest.raises(LatticeError):
            LatticeGrid(2, M, 1.0)

    def test_rejects_bad_h(self):
        with pytest.raises(LatticeError):
            LatticeGrid(2, 8, 0.0)

    def test_frequencies_inside_cell(self):
        g = LatticeGrid(2, 8, 0.5)
        xi = g.frequencies()
        assert xi.min() == -np.pi / g.h
        assert xi.max() < np.pi / g.h


class TestFieldValidation:
    def test_rejects_nan(self):
        g = LatticeGrid(2, 4, 1.0)
        vals = np.zeros(g.shape, dtype=complex)
        vals[1, 1] = np.nan
        with pytest.raises(LatticeError):
            ComplexField(g, vals)

    def test_rejects_shape_mismatch(self):
        g = LatticeGrid(2, 4, 1.0)
        with pytest.raises(LatticeError):
            ComplexField(g, np.zeros((4, 8)))


class TestTransforms:
    def test_spike_dft_all_ones(self):
        g = LatticeGrid(2, 8, 1.0)
        vals = np.zeros(g.shape)
        vals[0, 0] = 1.0
        F = dft(ComplexField(g, vals))
        assert np.allclose(F.coefficients, 1.0, atol=1e-13)

    def test_constant_dft(self):
        g = LatticeGrid(2, 8, 0.5)
        F = dft(ComplexField(g, np.ones(g.shape)))
        center = np.zeros(g.shape)
        center[4, 4] = g.L**2
        assert np.allclose(F.coefficients, center, atol=1e-11)

    def test_matches_direct_double_sum(self):
        g = LatticeGrid(2, 8, 0.5)
        f = random_field(g)
        F = dft(f)
        ref = direct_dft(f.values, g.h)
        assert np.max(np.abs(F.coefficients - ref)) < 1e-11

    def test_round_trip(self):
        g = LatticeGrid(2, 32, 0.25)
        f = random_field(g, 3)
        back = idft(dft(f))
        assert np.max(np.abs(back.values - f.values)) < 1e-12 * np.max(np.abs(f.values))

    def test_zero_spectrum(self):
        g = LatticeGrid(2, 8, 1.0)
        f = idft(SpectrumField(g, np.zeros(g.shape)))
        assert np.all(f.values == 0)

    @pytest.mark.parametrize("M", [8, 64])
    def test_plancherel(self, M):
        g = LatticeGrid(2, M, 0.5)
        f = random_field(g, M)
        l2sq = lp_norm(f, 2) ** 2
        freq = np.sum(np.abs(dft(f).coefficients) ** 2) / g.L**2
        assert abs(l2sq - freq) <= 1e-12 * l2sq


class TestSymbols:
    def test_sigma_corner(self):
        g = LatticeGrid(2, 8, 1.0)
        sig = symbol_sigma(g)
        # index 0 on the symmetric range is k = -M/2, i.e. h*xi = (-pi, -pi)
        assert sig[0, 0] == pytest.approx(8.0, abs=1e-13)

    def test_sigma_zero_mode(self):
        g = LatticeGrid(2, 8, 1.0)
        assert symbol_sigma(g)[4, 4] == 0.0

    def test_sigma_half_mesh(self):
        g = LatticeGrid(2, 8, 0.5)
        sig = symbol_sigma(g)
        # h*xi = (pi, 0) sits at k = (-M/2, 0): (4/h^2) sin^2(pi/2) = 16
        # but the example asks h=1/2, xi=(pi, 0): h*xi = (pi/2, 0), sin^2(pi/4) = 1/2
        k = g.freq_indices()
        idx = np.where(np.isclose(g.frequencies(), np.pi))[0][0]
        mid = np.where(k == 0)[0][0]
        assert sig[idx, mid] == pytest.approx(16.0 * 0.5, abs=1e-12)

    def test_sigma_nonnegative(self):
        g = LatticeGrid(2, 16, 0.3)
        assert np.all(symbol_sigma(g) >= 0)


class TestLaplacian:
    def test_constant(self):
        g = LatticeGrid(2, 8, 0.5)
        out = discrete_laplacian(ComplexField(g, np.ones(g.shape)))
        assert np.max(np.abs(out.values)) < 1e-13

    def test_spike_stencil(self):
        g = LatticeGrid(2, 8, 1.0)
        vals = np.zeros(g.shape)
        vals[0, 0] = 1.0
        out = discrete_laplacian(ComplexField(g, vals)).values.real
        assert out[0, 0] == -4.0
        for idx in [(1, 0), (7, 0), (0, 1), (0, 7)]:
            assert out[idx] == 1.0
        assert np.sum(np.abs(out)) == 8.0

    def test_plane_wave_eigenvalue(self):
        g = LatticeGrid(2, 16, 0.5)
        f = plane_wave(g, (3, -5))
        sig = symbol_sigma(g)
        k = g.freq_indices()
        val = sig[np.where(k == 3)[0][0], np.where(k == -5)[0][0]]
        out = discrete_laplacian(f)
        assert np.max(np.abs(out.values + val * f.values)) < 1e-12 * val

    @pytest.mark.parametrize("M", [8, 64])
    def test_matches_multiplier(self, M):
        g = LatticeGrid(2, M, 0.5)
        f = random_field(g, M + 1)
        a = discrete_laplacian(f).values
        b = apply_multiplier(f, -symbol_sigma(g)).values
        assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(a))


class TestMultiplier:
    def test_identity(self):
        g = LatticeGrid(2, 16, 1.0)
        f = random_field(g, 5)
        out = apply_multiplier(f, np.ones(g.shape))
        assert np.max(np.abs(out.values - f.values)) < 1e-12

    def test_composition(self):
        g = LatticeGrid(2, 16, 0.5)
        f = random_field(g, 6)
        sig2 = symbol_sigma(g) ** 2
        twice = apply_multiplier(apply_multiplier(f, sig2), sig2)
        once = apply_multiplier(f, sig2**2)
        scale = np.max(np.abs(once.values))
        assert np.max(np.abs(twice.values - once.values)) < 1e-11 * scale

    def test_shape_mismatch(self):
        g = LatticeGrid(2, 8, 1.0)
        with pytest.raises(LatticeError):
            apply_multiplier(random_field(g), np.ones((4, 4)))


class TestNorms:
    def test_spike_l2(self):
        g = LatticeGrid(2, 8, 0.5)
        vals = np.zeros(g.shape)
        vals[2, 3] = 3.0
        f = ComplexField(g, vals)
        assert lp_norm(f, 2) == pytest.approx(1.5)
        assert lp_norm(f, math.inf) == 3.0

    def test_constant_lp(self):
        g = LatticeGrid(2, 16, 0.25)
        f = ComplexField(g, np.ones(g.shape))
        for p in (1.0, 2.0, 4.0):
            assert lp_norm(f, p) == pytest.approx(g.L ** (2.0 / p))

    def test_rejects_small_p(self):
        g = LatticeGrid(2, 8, 1.0)
        with pytest.raises(LatticeError):
            lp_norm(random_field(g), 0.5)

    def test_homogeneity(self):
        g = LatticeGrid(2, 16, 0.5)
        f = random_field(g, 9)
        cf = ComplexField(g, (2.0 - 1.0j) * f.values)
        c = abs(2.0 - 1.0j)
        for p in (1.0, 2.0, 3.0, math.inf):
            assert lp_norm(cf, p) == pytest.approx(c * lp_norm(f, p), rel=1e-12)
        assert sobolev_norm(cf, 1.5) == pytest.approx(c * sobolev_norm(f, 1.5), rel=1e-12)


class TestSobolev:
    def test_plane_wave_homogeneous(self):
        g = LatticeGrid(2, 16, 0.5)
        f = plane_wave(g, (2, 1))
        xi = 2 * np.pi * np.array([2, 1]) / g.L
        for s in (0.5, 1.0, 2.0):
            expected = np.linalg.norm(xi) ** s * g.L
            assert sobolev_norm(f, s, homogeneous=True) == pytest.approx(expected, rel=1e-11)

    def test_zero_field(self):
        g = LatticeGrid(2, 8, 1.0)
        assert sobolev_norm(ComplexField(g, np.zeros(g.shape)), 2.0) == 0.0

    def test_discrete_op_matches_laplacian(self):
        g = LatticeGrid(2, 32, 0.5)
        f = random_field(g, 11)
        a = sobolev_norm(f, 2.0, homogeneous=True, discrete_op=True)
        b = lp_norm(discrete_laplacian(f), 2)
        assert a == pytest.approx(b, rel=1e-12)

    def test_monotone_in_order(self):
        g = LatticeGrid(2, 16, 0.5)
        f = random_field(g, 12)
        norms = [sobolev_norm(f, s) for s in (-1.0, 0.0, 1.0, 2.0)]
        assert all(a <= b * (1 + 1e-12) for a, b in zip(norms, norms[1:]))

    def test_homogeneous_negative_needs_mean_zero(self):
        g = LatticeGrid(2, 8, 1.0)
        f = ComplexField(g, np.ones(g.shape))
        with pytest.raises(LatticeError):
            sobolev_norm(f, -1.0, homogeneous=True)
        vals = random_field(g, 13).values
        vals -= vals.mean()
        assert sobolev_norm(ComplexField(g, vals), -1.0, homogeneous=True) > 0


class TestGNS:
    def test_theta_solves_relation(self):
        assert gns_theta(4.0, 1.0) == pytest.approx(0.5)

    def test_incompatible(self):
        with pytest.raises(LatticeError):
            gns_theta(2.0, 1.0)  # theta = 0

    def test_plane_wave_ratio_finite(self):
        g = LatticeGrid(2, 16, 0.5)
        f = plane_wave(g, (3, 2))
        r = gns_ratio(f, 4.0, 1.0)
        assert 0 < r < math.inf

    def test_zero_field_rejected(self):
        g = LatticeGrid(2, 8, 1.0)
        with pytest.raises(LatticeError):
            gns_ratio(ComplexField(g, np.zeros(g.shape)), 4.0, 1.0)

    def test_scaling_invariance(self):
        g = LatticeGrid(2, 16, 0.5)
        vals = random_field(g, 17).values
        vals -= vals.mean()
        f = ComplexField(g, vals)
        cf = ComplexField(g, 5.5j * vals)
        assert gns_ratio(f, 4.0, 1.0) == pytest.approx(gns_ratio(cf, 4.0, 1.0), rel=1e-12)
