"""Tests for norm estimation: witness search, decay fits, scaling experiments."""

import json
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from brlab.decomposition import DyadicPiece, make_bump, t_j_apply
from brlab.grid import ExponentPair, Grid, lp_norm, make_test_field
from brlab.norms import (
    DecayFit,
    NormEstimate,
    corollary_experiment,
    decay_csv,
    decay_fit,
    estimate_bilinear_norm,
    estimate_json,
    lemma1_scaling_experiment,
    recompute_ratio,
    scaling_csv,
    witness_catalog,
)
from brlab.operators import MultiplierSpec, br_apply_radial

BUMP = make_bump()
GRID = Grid(1, 256, 8.0)


def product_op(f, g):
    return f.with_values(f.values * g.values)


def zero_op(f, g):
    return f.with_values(np.zeros(f.grid.shape))


def tj_family(alpha):
    def family(j):
        def op(f, g, _j=j):
            return t_j_apply(f, g, DyadicPiece(_j, alpha), BUMP)

        return op

    return family


class TestWitnessCatalog:
    def test_finite_catalog_contents(self):
        items = witness_catalog(GRID, False, seed=0)
        ids = [item_id for item_id, _ in items]
        assert len(ids) == len(set(ids))
        assert len(items) >= 12
        assert any(item_id.startswith("gaussian") for item_id in ids)
        assert any(item_id.startswith("ball") for item_id in ids)
        assert any(item_id.startswith("band") for item_id in ids)
        assert any(item_id.startswith("packet") for item_id in ids)
        assert any("modulated" in item_id for item_id in ids)
        for _, f in items:
            assert lp_norm(f, 2) > 0

    def test_infinite_catalog_is_unimodular(self):
        for item_id, f in witness_catalog(GRID, True, seed=0):
            mags = np.abs(f.values)
            assert_allclose(mags, 1.0, atol=1e-12), item_id

    def test_deterministic(self):
        a = witness_catalog(GRID, False, seed=3)
        b = witness_catalog(GRID, False, seed=3)
        for (_, fa), (_, fb) in zip(a, b):
            assert np.array_equal(fa.values, fb.values)

    def test_modulation_radius_moves_annuli(self):
        wide = dict(witness_catalog(GRID, False, seed=0, modulation_radius=8.0))
        assert any("7.2" in item_id for item_id in wide)


class TestEstimateBilinearNorm:
    def test_zero_operator(self):
        est = estimate_bilinear_norm(zero_op, ExponentPair(2, 2), GRID, 2, seed=1)
        assert est.value == 0.0

    def test_pointwise_product_reaches_cauchy_schwarz(self):
        # |f g|_1 <= |f|_2 |g|_2 with equality at matched moduli, so the
        # best witness ratio sits at 1
        est = estimate_bilinear_norm(product_op, ExponentPair(2, 2), GRID, 2, seed=1)
        f = make_test_field("gaussian", {"width": 1.0}, GRID)
        matched = lp_norm(product_op(f, f), 1) / lp_norm(f, 2) ** 2
        assert est.value >= matched * (1.0 - 1e-6)
        assert est.value == pytest.approx(1.0, abs=1e-9)

    def test_monotone_in_trials(self):
        lo = estimate_bilinear_norm(product_op, ExponentPair(2, 2), GRID, 2, seed=4)
        hi = estimate_bilinear_norm(product_op, ExponentPair(2, 2), GRID, 6, seed=4)
        assert hi.value >= lo.value

    def test_reproducible_and_recomputable(self):
        a = estimate_bilinear_norm(product_op, ExponentPair(1, 2), GRID, 3, seed=7)
        b = estimate_bilinear_norm(product_op, ExponentPair(1, 2), GRID, 3, seed=7)
        assert a.value == b.value
        assert np.array_equal(a.witness_f.values, b.witness_f.values)
        assert abs(recompute_ratio(product_op, a) - a.value) < 1e-12

    def test_exponent_tuple_accepted(self):
        est = estimate_bilinear_norm(product_op, ("1", "inf"), GRID, 1, seed=0)
        assert est.exponents.inv2 == 0
        assert est.value > 0

    def test_rejects_zero_trials(self):
        with pytest.raises(ValueError):
            estimate_bilinear_norm(product_op, ExponentPair(2, 2), GRID, 0, seed=0)


class TestDecayFit:
    def test_piece_norm_decay_is_positive(self):
        grid = Grid(1, 256, 32.0)
        fit = decay_fit(tj_family(2.0), ExponentPair(1, 1), grid, range(9), 2, seed=3)
        assert isinstance(fit, DecayFit)
        assert not fit.degenerate
        assert fit.epsilon > 0.3
        assert fit.epsilon == -fit.slope

    def test_more_smoothing_does_not_slow_decay(self):
        grid = Grid(1, 256, 32.0)
        fit2 = decay_fit(tj_family(2.0), ExponentPair(1, 1), grid, range(7), 1, seed=3)
        fit3 = decay_fit(tj_family(3.0), ExponentPair(1, 1), grid, range(7), 1, seed=3)
        assert fit3.epsilon >= fit2.epsilon - 0.1

    def test_zero_family_degenerate(self):
        fit = decay_fit(
            lambda j: zero_op, ExponentPair(1, 1), GRID, range(4), 1, seed=0
        )
        assert fit.degenerate
        assert fit.epsilon == 0.0
        assert all(v == 0.0 for v in fit.norms)

    def test_needs_four_levels(self):
        with pytest.raises(ValueError):
            decay_fit(tj_family(2.0), ExponentPair(1, 1), GRID, range(3), 1, seed=0)

    def test_csv_export(self, tmp_path):
        fit = decay_fit(
            lambda j: product_op, ExponentPair(2, 2), GRID, range(4), 1, seed=0
        )
        path = tmp_path / "decay.csv"
        decay_csv(fit, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "j,estimate,witness_f,witness_g"
        assert len(lines) == 5
        assert float(lines[1].split(",")[1]) == fit.norms[0]


class TestLemma1Scaling:
    @pytest.mark.parametrize(
        "p,tol", [("1", 0.15), ("4/3", 0.15), ("2", 0.1)]
    )
    def test_fitted_exponent_matches_prediction(self, p, tol):
        report = lemma1_scaling_experiment(p, 8.0, [0.5, 1.0, 2.0, 4.0], GRID, seed=5)
        assert abs(report.fitted_exponent - report.target_exponent) < tol

    def test_estimates_grow_with_width_at_p_one(self):
        report = lemma1_scaling_experiment(1, 8.0, [0.5, 1.0, 2.0, 4.0], GRID, seed=5)
        assert all(a < b for a, b in zip(report.estimates, report.estimates[1:]))

    def test_single_width_skips_fit(self):
        report = lemma1_scaling_experiment(1, 8.0, [1.0], GRID, seed=5)
        assert report.fitted_exponent is None
        assert len(report.estimates) == 1

    def test_validation(self):
        with pytest.raises(ValueError):
            lemma1_scaling_experiment(3, 8.0, [1.0], GRID, seed=0)
        with pytest.raises(ValueError):
            lemma1_scaling_experiment(1, 100.0, [1.0], GRID, seed=0)
        with pytest.raises(ValueError):
            lemma1_scaling_experiment(1, 8.0, [], GRID, seed=0)
        with pytest.raises(ValueError):
            lemma1_scaling_experiment(1, 8.0, [9.0], GRID, seed=0)

    def test_csv_export(self, tmp_path):
        report = lemma1_scaling_experiment(1, 8.0, [1.0, 2.0], GRID, seed=5)
        path = tmp_path / "scaling.csv"
        scaling_csv(report, path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "w,estimate,witness"
        assert len(lines) == 3


class TestCorollary:
    def test_stable_under_grid_refinement(self):
        coarse = corollary_experiment(1.5, Grid(1, 128, 16.0), 3, seed=9)
        fine = corollary_experiment(1.5, Grid(1, 256, 16.0), 3, seed=9)
        assert coarse.value > 0 and fine.value > 0
        assert abs(fine.value - coarse.value) <= 0.2 * coarse.value

    def test_monotone_nonincreasing_in_alpha_at_fixed_witnesses(self):
        est = corollary_experiment(1.5, Grid(1, 128, 16.0), 3, seed=9)
        higher = recompute_ratio(
            lambda f, g: br_apply_radial(f, g, MultiplierSpec(2.5)), est
        )
        assert higher <= est.value + 1e-12

    def test_infinite_side_witness_is_unimodular(self):
        est = corollary_experiment(1.5, Grid(1, 128, 16.0), 2, seed=9)
        assert_allclose(np.abs(est.witness_g.values), 1.0, atol=1e-12)

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            corollary_experiment(0.0, GRID, 1, seed=0)

    def test_json_export(self, tmp_path):
        est = corollary_experiment(1.5, Grid(1, 128, 16.0), 1, seed=2)
        path = tmp_path / "estimate.json"
        estimate_json(est, path)
        body = json.loads(path.read_text())
        assert body["value"] == est.value
        assert (tmp_path / body["witness_f"]).exists()
        assert (tmp_path / body["witness_g"]).exists()
        assert body["grid"] == {"n": 1, "N": 128, "L": 16.0}
