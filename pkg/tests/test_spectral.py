"""Spectral density, kernels, self-energies and bath discretization."""

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import sici

from qbm import (BranchCut, DivergentKernel, InvalidGrid, ModeList, PoleOnAxis,
                 SpectralConfig, discretize, eval_spectral_density, kernel_g,
                 kernel_g_prime, self_energy, thermal_self_energy)
from qbm.spectral import bose_occupation

CFG = SpectralConfig(gamma=0.5, cutoff=20.0)


def trapezoid_oracle(f, lo, hi, panels=10**6):
    x = np.linspace(lo, hi, panels + 1)
    return np.trapezoid(f(x), x)


class TestSpectralDensity:
    def test_zero_coupling(self):
        assert eval_spectral_density(SpectralConfig(0.0, 20.0), 3.7) == 0.0

    def test_vanishes_at_origin(self):
        assert eval_spectral_density(CFG, 0.0) == 0.0

    def test_hand_value(self):
        # 0.5 * 400 / 401 at omega = 1
        assert eval_spectral_density(CFG, 1.0) == pytest.approx(0.5 * 400 / 401,
                                                                rel=1e-12)

    def test_single_interior_maximum_at_cutoff(self):
        w = np.linspace(0.01, 200.0, 20000)
        j = eval_spectral_density(CFG, w)
        assert np.all(j >= 0)
        assert abs(w[np.argmax(j)] - CFG.cutoff) < 0.02

    def test_negative_frequency_rejected(self):
        with pytest.raises(InvalidGrid):
            eval_spectral_density(CFG, -1.0)


class TestKernelG:
    def test_zero_coupling(self):
        assert kernel_g(SpectralConfig(0.0, 20.0), 0.7) == 0.0

    def test_against_trapezoid_oracle(self):
        def integrand(w):
            return eval_spectral_density(CFG, w) * np.exp(-w) / (2 * np.pi)

        oracle = trapezoid_oracle(integrand, 0.0, 300.0)
        assert kernel_g(CFG, 1.0) == pytest.approx(oracle, rel=1e-8)

    def test_closed_form_cross_check(self):
        # int_0^inf w wc^2 e^(-w tau) / (w^2 + wc^2) dw via sine/cosine integrals
        tau, wc = 0.35, CFG.cutoff
        si, ci = sici(wc * tau)
        closed = CFG.gamma * wc**2 / (2 * np.pi) * (
            -np.cos(wc * tau) * ci + np.sin(wc * tau) * (np.pi / 2 - si))
        assert kernel_g(CFG, tau) == pytest.approx(closed, rel=1e-9)

    def test_monotone_decreasing(self):
        assert kernel_g(CFG, 2.0) < kernel_g(CFG, 1.0)

    @pytest.mark.parametrize("tau", [0.0, -1.0])
    def test_divergent_domain(self, tau):
        with pytest.raises(DivergentKernel):
            kernel_g(CFG, tau)


class TestKernelGPrime:
    def test_zero_coupling(self):
        assert kernel_g_prime(SpectralConfig(0.0, 20.0), 1.0, 0.3) == 0.0

    def test_against_dense_grid_oracle(self):
        beta = 0.1

        def integrand(w):
            out = np.where(
                w == 0.0, CFG.gamma / (2 * np.pi * beta),
                eval_spectral_density(CFG, w) * bose_occupation(beta, w)
                / (2 * np.pi))
            return out

        oracle = trapezoid_oracle(integrand, 0.0, 2000.0, panels=4 * 10**6)
        assert kernel_g_prime(CFG, beta, 0.0) == pytest.approx(oracle, rel=1e-8)

    def test_positive_on_domain(self):
        beta = 1.0
        for tau in (-0.9, -0.3, 0.0, 0.4, 0.9):
            assert kernel_g_prime(CFG, beta, tau) > 0

    def test_divergent_below_minus_beta(self):
        with pytest.raises(DivergentKernel):
            kernel_g_prime(CFG, 1.0, -1.0)


class TestSelfEnergy:
    def test_zero_coupling(self):
        assert self_energy(SpectralConfig(0.0, 20.0), 2 + 3j) == 0

    def test_real_positive_against_quadrature(self):
        val = self_energy(CFG, 5.0)
        ref = self_energy(CFG, 5.0, method="quad")
        assert val.imag == pytest.approx(0.0, abs=1e-13)
        assert val.real > 0
        assert val == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize("s", [2 + 3j, 0.3 - 1j, 40 + 0.5j, 0.05 + 0.02j])
    def test_closed_form_matches_quadrature(self, s):
        assert self_energy(CFG, s) == pytest.approx(
            self_energy(CFG, s, method="quad"), rel=1e-9)

    def test_schwarz_reflection(self):
        a = self_energy(CFG, 1 + 2j)
        b = self_energy(CFG, 1 - 2j)
        assert a == pytest.approx(np.conj(b), rel=1e-14)

    def test_decreasing_on_positive_axis(self):
        vals = [self_energy(CFG, s).real for s in (0.5, 1.0, 2.0, 5.0, 20.0)]
        assert np.all(np.diff(vals) < 0)

    def test_branch_cut_raises(self):
        with pytest.raises(BranchCut):
            self_energy(CFG, -1.0)

    def test_prescriptions_bracket_principal_value(self):
        up = self_energy(CFG, -2.0, pv="upper")
        lo = self_energy(CFG, -2.0, pv="lower")
        avg = self_energy(CFG, -2.0, pv="avg")
        assert avg == pytest.approx((up + lo) / 2, rel=1e-14)
        # one-sided limits match evaluations just off the axis
        assert up == pytest.approx(self_energy(CFG, -2.0 + 1e-9j), rel=1e-6)
        assert lo == pytest.approx(self_energy(CFG, -2.0 - 1e-9j), rel=1e-6)


class TestThermalSelfEnergy:
    def test_zero_coupling(self):
        assert thermal_self_energy(SpectralConfig(0.0, 20.0), 1.0, 3 + 1j) == 0

    @pytest.mark.parametrize("s", [3 + 1j, 0.2 + 0.5j, -2 + 2j, 6 - 4j])
    def test_matches_quadrature(self, s):
        a = thermal_self_energy(CFG, 0.1, s)
        b = thermal_self_energy(CFG, 0.1, s, method="quad")
        assert a == pytest.approx(b, rel=1e-8)

    @pytest.mark.parametrize("s", [-2 + 0.05j, -1.5 + 0.001j])
    def test_near_axis_pole_subtraction(self, s):
        a = thermal_self_energy(CFG, 0.5, s)
        b = thermal_self_energy(CFG, 0.5, s, method="quad")
        assert a == pytest.approx(b, rel=1e-8)

    def test_tiny_offset_approaches_one_sided_limit(self):
        # adaptive quadrature cannot resolve a pole 1e-6 off the contour;
        # compare against the boundary value instead
        a = thermal_self_energy(CFG, 0.5, -0.9 + 1e-6j)
        b = thermal_self_energy(CFG, 0.5, -0.9, pv="upper")
        assert a == pytest.approx(b, rel=1e-5)

    def test_bose_factor_kills_high_beta(self):
        # low-temperature falloff is zeta(2) gamma / (4 pi beta^2 s) to leading
        # order, so the value at beta = 1e4 sits near 6.5e-10, not below 1e-12
        val = abs(thermal_self_energy(CFG, 1e4, 2.0))
        assert val < 1e-9
        ratio = val / abs(thermal_self_energy(CFG, 1e5, 2.0))
        assert ratio == pytest.approx(100.0, rel=1e-3)

    def test_pole_on_axis_raises_without_prescription(self):
        with pytest.raises(PoleOnAxis):
            thermal_self_energy(CFG, 1.0, -1.0)

    def test_prescriptions_match_one_sided_limits(self):
        beta = 0.5
        up = thermal_self_energy(CFG, beta, -2.0, pv="upper")
        lo = thermal_self_energy(CFG, beta, -2.0, pv="lower")
        avg = thermal_self_energy(CFG, beta, -2.0, pv="avg")
        assert avg == pytest.approx((up + lo) / 2, rel=1e-12)
        assert up == pytest.approx(
            thermal_self_energy(CFG, beta, -2.0 + 1e-9j), rel=1e-6)
        assert lo == pytest.approx(
            thermal_self_energy(CFG, beta, -2.0 - 1e-9j), rel=1e-6)


class TestDiscretize:
    def test_zero_coupling_modes(self):
        modes = discretize(SpectralConfig(0.0, 20.0), 50, 200.0)
        assert np.all(modes.couplings == 0)

    def test_coupling_sum_matches_quadrature(self):
        modes = discretize(CFG, 200, 200.0)
        target = quad(lambda w: eval_spectral_density(CFG, w) / (2 * np.pi),
                      0, 200.0, limit=400, points=[CFG.cutoff])[0]
        assert np.sum(modes.couplings**2) == pytest.approx(target, rel=1e-6)

    def test_doubling_reduces_error(self):
        # weighted sum against the window-truncated quadrature target
        target = quad(lambda w: eval_spectral_density(CFG, w)
                      / (2 * np.pi * (1 + w)), 0, 200.0, limit=400,
                      points=[CFG.cutoff])[0]

        def err(k_c):
            modes = discretize(CFG, k_c, 200.0)
            val = np.sum(modes.couplings**2 / (1 + modes.frequencies))
            return abs(val - target)

        e1, e2 = err(60), err(120)
        assert e2 < 0.5 * e1

    def test_couplings_negative_by_convention(self):
        modes = discretize(CFG, 10, 200.0)
        assert np.all(modes.couplings < 0)

    def test_invalid_grid(self):
        with pytest.raises(InvalidGrid):
            discretize(CFG, 0, 200.0)
        with pytest.raises(InvalidGrid):
            discretize(CFG, 10, -1.0)

    def test_mode_list_invariants(self):
        with pytest.raises(InvalidGrid):
            ModeList(frequencies=np.array([2.0, 1.0]),
                     couplings=np.array([0.1, 0.1]))
        with pytest.raises(InvalidGrid):
            ModeList(frequencies=np.array([1.0]), couplings=np.array([0.1, 0.2]))
