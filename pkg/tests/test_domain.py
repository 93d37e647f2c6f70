import logging

import pytest

from tfrcast import (
    CorrelationParams,
    CovariateStore,
    DataValidationError,
    PairCovariates,
    Phase,
    PopulationWeights,
    PosteriorDraws,
    TFRPanel,
    TransitionParams,
    ConstantSigma,
    PiecewiseSigma,
    validate_panel,
)
from tfrcast.domain import pair_key


def make_panel(values, phases, stride=5):
    return TFRPanel(values, phases, stride=stride)


class TestValidatePanel:
    def test_well_formed_panel_has_no_diagnostics(self):
        values = {("AAA", 2000): 3.0, ("AAA", 2005): 2.8, ("BBB", 2000): 5.0, ("BBB", 2005): 4.5}
        phases = {k: Phase.TRANSITION for k in values}
        assert validate_panel(make_panel(values, phases)) == []

    def test_negative_tfr_is_flagged(self):
        values = {("AAA", 2000): -1.0, ("AAA", 2005): 2.8}
        phases = {k: Phase.TRANSITION for k in values}
        diags = validate_panel(make_panel(values, phases))
        assert [d.rule for d in diags] == ["tfr_positive"]
        assert diags[0].country == "AAA" and diags[0].period == 2000

    def test_non_finite_tfr_is_flagged(self):
        values = {("AAA", 2000): float("nan"), ("AAA", 2005): 2.8}
        phases = {k: Phase.TRANSITION for k in values}
        assert [d.rule for d in validate_panel(make_panel(values, phases))] == ["tfr_finite"]

    def test_phase_reversal_is_flagged(self):
        values = {("AAA", 2000): 2.0, ("AAA", 2005): 2.1}
        phases = {("AAA", 2000): Phase.POST_TRANSITION, ("AAA", 2005): Phase.TRANSITION}
        diags = validate_panel(make_panel(values, phases))
        assert [d.rule for d in diags] == ["phase_order"]

    def test_forward_phase_progression_is_fine(self):
        values = {("AAA", 2000): 3.0, ("AAA", 2005): 2.2, ("AAA", 2010): 2.0}
        phases = {
            ("AAA", 2000): Phase.TRANSITION,
            ("AAA", 2005): Phase.TRANSITION,
            ("AAA", 2010): Phase.POST_TRANSITION,
        }
        assert validate_panel(make_panel(values, phases)) == []

    def test_misaligned_and_gapped_periods_are_flagged(self):
        values = {("AAA", 2000): 3.0, ("AAA", 2003): 2.9}
        phases = {k: Phase.TRANSITION for k in values}
        rules = {d.rule for d in validate_panel(make_panel(values, phases))}
        assert "period_alignment" in rules
        assert "panel_period_gap" in rules

    def test_missing_phase_and_missing_value_are_flagged(self):
        values = {("AAA", 2000): 3.0, ("AAA", 2005): 2.9}
        phases = {("AAA", 2000): Phase.TRANSITION, ("BBB", 2000): Phase.TRANSITION}
        rules = sorted(d.rule for d in validate_panel(make_panel(values, phases)))
        assert "phase_missing" in rules
        assert "value_missing" in rules

    def test_country_gap_is_flagged(self):
        values = {("AAA", 2000): 3.0, ("AAA", 2010): 2.5, ("BBB", 2000): 4.0, ("BBB", 2005): 3.9, ("BBB", 2010): 3.7}
        phases = {k: Phase.TRANSITION for k in values}
        diags = validate_panel(make_panel(values, phases))
        assert [d.rule for d in diags] == ["country_period_gap"]
        assert diags[0].country == "AAA"


class TestCovariateStore:
    def test_lookup_is_order_invariant(self):
        store = CovariateStore({("AAA", "BBB"): PairCovariates(1, 0, 1)})
        assert store.get("AAA", "BBB") == store.get("BBB", "AAA")
        assert store.get("BBB", "AAA").contig == 1

    def test_missing_pair_defaults_to_zero_with_warning(self, caplog):
        store = CovariateStore()
        with caplog.at_level(logging.WARNING):
            assert store.get("AAA", "BBB") == PairCovariates(0, 0, 0)
            store.get("BBB", "AAA")  # same pair: warn once only
        assert sum("no covariate row" in rec.message for rec in caplog.records) == 1

    def test_strict_store_raises_on_missing_pair(self):
        store = CovariateStore(strict=True)
        with pytest.raises(DataValidationError, match="AAA"):
            store.get("AAA", "BBB")

    def test_conflicting_rows_rejected(self):
        store = CovariateStore()
        store.add("AAA", "BBB", PairCovariates(1, 0, 0))
        with pytest.raises(DataValidationError, match="conflicting"):
            store.add("BBB", "AAA", PairCovariates(0, 0, 0))

    def test_self_pair_rejected(self):
        with pytest.raises(DataValidationError):
            CovariateStore().add("AAA", "AAA", PairCovariates())

    def test_pair_key_canonical(self):
        assert pair_key("ZZZ", "AAA") == ("AAA", "ZZZ")


class TestCorrelationParams:
    def test_default_params_are_valid(self):
        params = CorrelationParams(5.0, (0.11, 0.26, 0.05, 0.09), (0.05, 0.06, 0.00, 0.02))
        assert params.beta("low") == (0.11, 0.26, 0.05, 0.09)
        assert params.beta("high") == (0.05, 0.06, 0.00, 0.02)

    def test_combo_outside_unit_interval_rejected(self):
        with pytest.raises(ValueError, match="outside"):
            CorrelationParams(5.0, (0.5, 0.3, 0.2, 0.2), (0.05, 0.06, 0.0, 0.02))

    def test_kappa_must_be_positive(self):
        with pytest.raises(ValueError):
            CorrelationParams(0.0, (0.1, 0.0, 0.0, 0.0), (0.1, 0.0, 0.0, 0.0))

    def test_unknown_regime_rejected(self):
        params = CorrelationParams(5.0, (0.1, 0.0, 0.0, 0.0), (0.1, 0.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            params.beta("middle")


class TestPopulationWeights:
    def test_weights_renormalized(self, caplog):
        with caplog.at_level(logging.WARNING):
            weights = PopulationWeights("R", {"AAA": 2.0, "BBB": 2.0})
        assert weights.share("AAA") == pytest.approx(0.5)
        assert any("renormalizing" in rec.message for rec in caplog.records)

    def test_near_one_sum_not_warned(self, caplog):
        with caplog.at_level(logging.WARNING):
            PopulationWeights("R", {"AAA": 0.5 + 1e-8, "BBB": 0.5})
        assert not caplog.records

    def test_negative_weight_rejected(self):
        with pytest.raises(DataValidationError):
            PopulationWeights("R", {"AAA": -0.1, "BBB": 1.1})

    def test_missing_country_in_vector(self, lopsided_weights):
        with pytest.raises(DataValidationError, match="CCC"):
            lopsided_weights.as_vector(["AAA", "CCC"])


class TestPosteriorDraws:
    def test_unequal_draw_counts_rejected(self, basic_theta):
        with pytest.raises(DataValidationError, match="differ"):
            PosteriorDraws({"AAA": (basic_theta,), "BBB": (basic_theta, basic_theta)})

    def test_missing_country_lookup(self, basic_theta):
        draws = PosteriorDraws({"AAA": (basic_theta,)})
        with pytest.raises(DataValidationError, match="BBB"):
            draws.for_country("BBB")

    def test_empty_rejected(self):
        with pytest.raises(DataValidationError):
            PosteriorDraws({})


class TestSigmaAndTheta:
    def test_sigma_specs_validate_positivity(self):
        with pytest.raises(ValueError):
            ConstantSigma(0.0)
        with pytest.raises(ValueError):
            PiecewiseSigma((0.2, 0.2, -0.1, 0.2))

    def test_piecewise_interpolates_and_clamps(self):
        sigma = PiecewiseSigma((0.1, 0.2, 0.4, 0.8))
        assert sigma.evaluate(1.0) == 0.1
        assert sigma.evaluate(9.0) == 0.8
        assert sigma.evaluate(0.2) == 0.1  # flat below the first knot
        assert sigma.evaluate(15.0) == 0.8  # flat above the last knot
        assert sigma.evaluate(1.75) == pytest.approx(0.15)

    def test_theta_validates_shapes(self):
        with pytest.raises(ValueError):
            TransitionParams(d=-0.1, deltas=(1, 1, 1, 1), sigma=ConstantSigma(0.2))
        with pytest.raises(ValueError):
            TransitionParams(d=0.5, deltas=(1, 1, 1), sigma=ConstantSigma(0.2))

    def test_phase_parse(self):
        assert Phase.parse(" Transition ") is Phase.TRANSITION
        with pytest.raises(DataValidationError):
            Phase.parse("mid_transition")
