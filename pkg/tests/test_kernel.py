"""Tests for the kernel module: closed form, quadrature, pieces, envelopes."""

import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import gammaln

from brlab.bessel import AccuracyWarning
from brlab.decomposition import DyadicPiece, make_bump
from brlab.kernel import (
    EnvelopeReport,
    KernelPoint,
    dilation_check,
    envelope_csv,
    envelope_fit,
    kernel_closed_form,
    kernel_decay_fit,
    kernel_quadrature,
    kernel_radial,
    kernel_table_csv,
    kj_kernel,
)

BUMP = make_bump()


def origin_value(alpha, n):
    """Integral of (1 - |z|^2)_+^alpha over R^{2n}: pi^n Gamma(a+1)/Gamma(a+n+1)."""
    return math.pi**n * math.exp(gammaln(alpha + 1.0) - gammaln(alpha + n + 1.0))


def brute_force_1d(x1, x2, alpha, nodes=1201):
    """Midpoint Riemann sum of the defining integral over the unit disk, n=1."""
    edges = np.linspace(-1.0, 1.0, nodes + 1)
    mid = (edges[:-1] + edges[1:]) / 2.0
    h = edges[1] - edges[0]
    xi, eta = np.meshgrid(mid, mid, indexing="ij")
    u = 1.0 - xi**2 - eta**2
    weight = np.where(u > 0, np.abs(u) ** alpha, 0.0)
    phase = np.cos(2.0 * math.pi * (x1 * xi + x2 * eta))
    return float(np.sum(weight * phase) * h * h)


class TestKernelPoint:
    def test_norms_and_rho(self):
        pt = KernelPoint((3.0, 0.0), (0.0, 4.0))
        assert pt.norm1 == 3.0
        assert pt.norm2 == 4.0
        assert pt.rho == 5.0

    def test_scalar_components_promote(self):
        pt = KernelPoint(1.5, -2.0)
        assert pt.x1 == (1.5,)
        assert pt.rho == pytest.approx(2.5)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            KernelPoint((1.0, 2.0), (3.0,))

    def test_scaled(self):
        pt = KernelPoint((1.0,), (2.0,)).scaled(3.0)
        assert pt.x1 == (3.0,) and pt.x2 == (6.0,)


class TestClosedForm:
    def test_origin_matches_volume_integral(self):
        for n in (1, 2, 3):
            for alpha in (1.0, 2.0, 5.0):
                assert_allclose(
                    kernel_radial(0.0, alpha, n), origin_value(alpha, n), rtol=1e-12
                )

    def test_origin_n1_alpha1_is_half_pi(self):
        assert_allclose(kernel_radial(0.0, 1.0, 1), math.pi / 2.0, rtol=1e-14)

    def test_series_bessel_branch_continuity(self):
        # values straddling the internal series cutoff must agree smoothly
        rhos = np.array([9.99e-4, 1.001e-3])
        vals = kernel_radial(rhos, 2.0, 2)
        assert abs(vals[1] - vals[0]) < 1e-8 * abs(vals[0])

    def test_matches_brute_force_integral(self):
        for x1, x2 in [(0.5, 0.0), (0.7, 1.1)]:
            pt = KernelPoint(x1, x2)
            expected = brute_force_1d(x1, x2, 2.0)
            assert_allclose(kernel_closed_form(pt, 2.0, 1), expected, rtol=0, atol=2e-6)

    def test_vectorized_matches_scalar(self):
        rhos = np.linspace(0.0, 4.0, 17)
        vals = kernel_radial(rhos, 1.5, 2)
        singles = [kernel_radial(float(r), 1.5, 2) for r in rhos]
        assert_allclose(vals, singles, rtol=1e-15)

    def test_higher_alpha_decays_faster(self):
        # more smoothing flattens the tail: at rho = 5 the alpha = 8 kernel
        # is orders of magnitude below the alpha = 1 kernel
        lo = abs(kernel_radial(5.0, 8.0, 1))
        hi = abs(kernel_radial(5.0, 1.0, 1))
        assert lo < 1e-3 * hi

    def test_dilation_rule_in_radius_argument(self):
        rho = 1.3
        assert_allclose(
            kernel_radial(rho, 2.0, 1, radius=3.0),
            3.0**2 * kernel_radial(3.0 * rho, 2.0, 1),
            rtol=1e-13,
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            kernel_radial(1.0, -0.5, 1)
        with pytest.raises(ValueError):
            kernel_radial(1.0, 1.0, 0)
        with pytest.raises(ValueError):
            kernel_radial(1.0, 1.0, 1, radius=0.0)
        with pytest.raises(ValueError):
            kernel_closed_form(KernelPoint((1.0, 0.0), (0.0, 1.0)), 1.0, 1)


class TestQuadrature:
    @pytest.mark.parametrize("n", [1, 2])
    @pytest.mark.parametrize("alpha", [1.0, 2.0, 5.0])
    def test_cross_validates_closed_form(self, n, alpha):
        rhos = np.linspace(0.1, 10.0, 20)
        scale = max(abs(kernel_radial(r, alpha, n)) for r in rhos)
        for rho in rhos:
            pt = KernelPoint((rho,) + (0.0,) * (n - 1), (0.0,) * n)
            got = kernel_quadrature(pt, alpha, n)
            want = kernel_radial(float(rho), alpha, n)
            assert abs(got - want) <= 1e-6 * scale

    def test_depends_only_on_combined_radius(self):
        # same rho split three ways across the two slots
        rho = 1.7
        values = []
        for a in (0.0, 0.9, rho):
            b = math.sqrt(rho**2 - a**2)
            values.append(kernel_quadrature(KernelPoint(a, b), 2.0, 1))
        assert_allclose(values[1:], values[0], rtol=1e-10)

    def test_argument_swap_symmetry(self):
        v1 = kernel_quadrature(KernelPoint(0.4, 1.2), 1.5, 1)
        v2 = kernel_quadrature(KernelPoint(1.2, 0.4), 1.5, 1)
        assert_allclose(v1, v2, rtol=1e-12)

    def test_oscillation_budget_warns(self):
        with pytest.warns(AccuracyWarning):
            kernel_quadrature(KernelPoint(60.0, 0.0), 1.0, 1)

    def test_node_cap_warns(self):
        with pytest.warns(AccuracyWarning):
            kernel_quadrature(KernelPoint(40.0, 0.0), 1.0, 1, radius=30.0)

    def test_explicit_nodes_accepted(self):
        pt = KernelPoint(0.5, 0.5)
        coarse = kernel_quadrature(pt, 2.0, 1, nodes=96)
        fine = kernel_quadrature(pt, 2.0, 1, nodes=256)
        assert_allclose(coarse, fine, rtol=1e-10)

    def test_validation(self):
        pt = KernelPoint(0.5, 0.5)
        with pytest.raises(ValueError):
            kernel_quadrature(pt, -1.0, 1)
        with pytest.raises(ValueError):
            kernel_quadrature(pt, 1.0, 2)
        with pytest.raises(ValueError):
            kernel_quadrature(pt, 1.0, 1, radius=-2.0)


class TestDilation:
    @pytest.mark.parametrize("R", [0.5, 2.0, 4.0])
    def test_residual_small(self, R):
        pt = KernelPoint(0.8, 0.5)
        assert dilation_check(pt, 2.0, 1, R) < 1e-6

    def test_trivial_dilation_matches_to_roundoff(self):
        # R = 1 compares the two evaluation routes directly; they are
        # independent algorithms, so agreement is to quadrature accuracy,
        # not bitwise
        assert dilation_check(KernelPoint(0.8, 0.5), 2.0, 1, 1.0) < 1e-10

    def test_rejects_nonpositive_R(self):
        with pytest.raises(ValueError):
            dilation_check(KernelPoint(0.5, 0.5), 1.0, 1, 0.0)


class TestKjKernel:
    def test_piece_sum_telescopes_to_closed_form(self):
        alpha = 2.0
        for rho in (0.4, 1.0):
            pt = KernelPoint(rho, 0.0)
            total = sum(
                kj_kernel(pt, DyadicPiece(j, alpha), 1, BUMP) for j in range(13)
            )
            want = kernel_closed_form(pt, alpha, 1)
            assert abs(total - want) < 1e-4 * max(abs(want), 1e-3)

    def test_deep_slice_is_negligible(self):
        # at level 30 the profile u^alpha is ~2^{-60} on the support annulus
        value = kj_kernel(KernelPoint(1.0, 0.0), DyadicPiece(30, 2.0), 1, BUMP)
        assert abs(value) < 1e-12

    def test_argument_swap_symmetry(self):
        piece = DyadicPiece(2, 2.0)
        v1 = kj_kernel(KernelPoint(0.3, 1.1), piece, 1, BUMP)
        v2 = kj_kernel(KernelPoint(1.1, 0.3), piece, 1, BUMP)
        assert_allclose(v1, v2, rtol=1e-10)

    def test_oscillation_budget_warns(self):
        with pytest.warns(AccuracyWarning):
            kj_kernel(KernelPoint(60.0, 0.0), DyadicPiece(1, 1.0), 1, BUMP)

    def test_dimension_validation(self):
        with pytest.raises(ValueError):
            kj_kernel(KernelPoint((1.0, 0.0), (0.0, 0.0)), DyadicPiece(0, 1.0), 1, BUMP)


def sample_points():
    radii = [0.0, 0.7, 2.1, 3.5]
    return [KernelPoint(a, b) for a in radii for b in radii]


class TestEnvelope:
    def test_constants_flat_across_levels(self):
        pieces = [DyadicPiece(j, 2.0) for j in range(7)]
        for M in (2.0, 3.0):
            report = envelope_fit(pieces, 1, M, sample_points(), BUMP)
            assert isinstance(report, EnvelopeReport)
            assert not report.flagged
            assert report.slope <= 0.1
            assert all(c > 0 for c in report.constants)

    def test_origin_constant_independent_of_M(self):
        # at the origin the spatial factors are 1, so the fitted constant
        # must not move when M changes
        pieces = [DyadicPiece(j, 2.0) for j in range(4)]
        origin = [KernelPoint(0.0, 0.0)]
        c2 = envelope_fit(pieces, 1, 2.0, origin, BUMP).constants
        c4 = envelope_fit(pieces, 1, 4.0, origin, BUMP).constants
        assert_allclose(c2, c4, rtol=1e-14)

    def test_single_piece_accepted(self):
        report = envelope_fit(DyadicPiece(1, 2.0), 1, 2.0, sample_points(), BUMP)
        assert report.levels == (1,)
        assert report.slope == 0.0

    def test_validation(self):
        pieces = [DyadicPiece(0, 1.0), DyadicPiece(1, 2.0)]
        with pytest.raises(ValueError):
            envelope_fit(pieces, 1, 2.0, sample_points(), BUMP)
        with pytest.raises(ValueError):
            envelope_fit(DyadicPiece(0, 1.0), 1, 0.0, sample_points(), BUMP)

    def test_csv_export(self, tmp_path):
        report = envelope_fit(
            [DyadicPiece(j, 2.0) for j in range(3)], 1, 2.0, sample_points(), BUMP
        )
        path = tmp_path / "envelope.csv"
        envelope_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "j,constant"
        assert len(lines) == 4
        assert float(lines[1].split(",")[1]) == report.constants[0]


class TestDecayFit:
    @pytest.mark.parametrize("n,alpha", [(1, 1.0), (1, 2.0), (2, 2.0)])
    def test_exponent_matches_oscillatory_rate(self, n, alpha):
        fit = kernel_decay_fit(alpha, n)
        assert abs(fit.decay_exponent - (n + alpha + 0.5)) < 0.1

    def test_peaks_are_decreasing(self):
        fit = kernel_decay_fit(2.0, 1)
        peaks = np.asarray(fit.peak_values)
        assert np.all(np.diff(peaks) < 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            kernel_decay_fit(1.0, 1, rho_lo=5.0, rho_hi=2.0)

    def test_kernel_table_csv(self, tmp_path):
        path = tmp_path / "kernel.csv"
        rhos = [0.0, 0.5, 1.0]
        kernel_table_csv(path, 2.0, 1, rhos)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "rho,value"
        assert len(lines) == 4
        assert float(lines[1].split(",")[1]) == kernel_radial(0.0, 2.0, 1)
