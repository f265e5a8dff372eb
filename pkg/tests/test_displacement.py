import math

import numpy as np
import pytest

import oracles
from embgep import displacement
from embgep.displacement import (
    DEFAULT_POLE_EPS,
    MEAN_AY_RATIO,
    MEAN_MW,
    MEAN_PERIOD_RATIO,
    POLE_PERIOD_RATIO,
    ApplicabilityRange,
    EmbankmentGeometry,
    MissingInputError,
    ModelDomainError,
    ModelInput,
    PoleError,
    ambraseys_menu,
    check_applicability,
    fundamental_period,
    gep_ln_displacement,
    hynes_griffin,
    jibson,
    madiai,
    predict,
    saygili_rathje,
    sensitivity_profile,
    to_meters,
    tsai_chien,
)


def sample_input(**overrides):
    base = dict(m_w=7.0, a_max=0.3, t_p=0.4, t_d=0.6, a_y=0.09, t_m=0.5)
    base.update(overrides)
    return ModelInput(**base)


class TestGepRelationship:
    def test_matches_exact_oracle_at_database_means(self):
        got = gep_ln_displacement(MEAN_MW, MEAN_AY_RATIO, MEAN_PERIOD_RATIO)
        assert got == pytest.approx(float(oracles.gep_formula_exact(MEAN_MW, MEAN_AY_RATIO, MEAN_PERIOD_RATIO)), abs=1e-9)

    def test_matches_exact_oracle_on_grid(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 100:
            m_w = rng.uniform(4.9, 8.3)
            x = rng.uniform(0.0, 3.5)
            r = rng.uniform(0.117, 4.0)
            if abs(5.55 * r - 7.052) < 0.05:
                continue
            got = gep_ln_displacement(m_w, x, r)
            assert got == pytest.approx(float(oracles.gep_formula_exact(m_w, x, r)), abs=1e-9)
            checked += 1

    def test_pole_raises_not_nan(self):
        with pytest.raises(PoleError):
            gep_ln_displacement(7.0, 0.5, 7.052 / 5.55)
        with pytest.raises(PoleError):
            gep_ln_displacement(7.0, 0.5, POLE_PERIOD_RATIO + 0.5 * DEFAULT_POLE_EPS)
        # just outside the guard: finite value, never inf
        v = gep_ln_displacement(7.0, 0.5, POLE_PERIOD_RATIO + 2.0 * DEFAULT_POLE_EPS)
        assert math.isfinite(v)

    def test_zero_ay_ratio_reduces(self):
        m_w, r = 6.5, 2.0
        expected = 6.524 * m_w / 7.864 + (-(r**2)) / (5.55 * r - 7.052) + 3.647 / m_w**2 - r - 5.098
        assert gep_ln_displacement(m_w, 0.0, r) == pytest.approx(expected, abs=1e-12)

    def test_domain_errors(self):
        with pytest.raises(ModelDomainError):
            gep_ln_displacement(0.0, 0.5, 2.0)
        with pytest.raises(ModelDomainError):
            gep_ln_displacement(math.nan, 0.5, 2.0)
        with pytest.raises(ModelDomainError):
            gep_ln_displacement(7.0, math.inf, 2.0)
        # term-1 denominator zero for a crafted negative magnitude
        with pytest.raises((ModelDomainError, PoleError)):
            gep_ln_displacement(-7.864, 1.0, 2.0)


class TestBaselines:
    def test_hynes_griffin_zero(self):
        pred = hynes_griffin(0.0)
        assert pred.value == -0.287
        assert not pred.in_range  # below the 0.01 lower bound

    def test_hynes_griffin_oracle(self):
        pred = hynes_griffin(0.5)
        assert pred.value == pytest.approx(float(oracles.hynes_griffin_exact(0.5)), abs=1e-12)
        assert pred.scale == "log10_D_cm"

    def test_hynes_griffin_range(self):
        assert hynes_griffin(0.3, m_w=7.0).in_range
        assert not hynes_griffin(0.3, m_w=8.5).in_range

    def test_ambraseys_menu_domain(self):
        with pytest.raises(ModelDomainError):
            ambraseys_menu(1.0)
        with pytest.raises(ModelDomainError):
            ambraseys_menu(0.0)

    def test_ambraseys_menu_oracle_and_units(self):
        pred = ambraseys_menu(0.5)
        assert pred.value == pytest.approx(float(oracles.ambraseys_menu_exact(0.5)), abs=1e-12)
        assert pred.scale == "log10_D_m"
        alt = ambraseys_menu(0.5, cm_units=True)
        assert alt.value == pred.value
        assert alt.scale == "log10_D_cm"
        assert alt.d_meters == pytest.approx(pred.d_meters / 100.0)

    def test_ambraseys_menu_range(self):
        assert ambraseys_menu(0.05, m_w=7.0).in_range
        assert not ambraseys_menu(0.04, m_w=7.0).in_range

    def test_jibson(self):
        pred = jibson(0.5)
        assert pred.value == pytest.approx(float(oracles.jibson_exact(0.5)), abs=1e-12)
        with pytest.raises(ModelDomainError):
            jibson(1.0)
        assert jibson(0.4, m_w=6.0, a_y=0.2).in_range

    def test_saygili_rathje(self):
        assert saygili_rathje(1.0, 0.0).value == pytest.approx(5.52, abs=1e-15)
        pred = saygili_rathje(0.3, 0.4)
        assert pred.value == pytest.approx(float(oracles.saygili_rathje_exact(0.3, 0.4)), abs=1e-12)
        assert pred.scale == "ln_D_cm"
        with pytest.raises(ModelDomainError):
            saygili_rathje(0.0, 0.4)
        assert saygili_rathje(0.5, 0.2, m_w=6.0, a_y=0.1).in_range

    def test_madiai(self):
        pred = madiai(0.5)
        expected = -0.418 - 0.857 * math.log10(0.5) + 2.26 * math.log10(0.5)
        assert pred.value == pytest.approx(expected, abs=1e-15)
        assert pred.value == pytest.approx(float(oracles.madiai_exact(0.5)), abs=1e-12)
        with pytest.raises(ModelDomainError):
            madiai(1.0)
        assert madiai(0.1).in_range
        assert not madiai(0.05).in_range

    def test_tsai_chien(self):
        assert tsai_chien(1.0, 0.0, 1.0).value == pytest.approx(6.4, abs=1e-15)
        pred = tsai_chien(0.25, 0.3, 0.5)
        assert pred.value == pytest.approx(float(oracles.tsai_chien_exact(0.25, 0.3, 0.5)), abs=1e-12)
        with pytest.raises(ModelDomainError):
            tsai_chien(0.25, 0.3, 0.0)
        with pytest.raises(ModelDomainError):
            tsai_chien(-1.0, 0.3, 0.5)

    def test_tsai_chien_missing_tm_is_not_applicable(self):
        inp = sample_input(t_m=None)
        with pytest.raises(MissingInputError):
            predict("tsai_chien", inp)

    def test_oracle_grids_all_models(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            x = rng.uniform(0.02, 0.95)
            a_max = rng.uniform(0.06, 0.9)
            t_m = rng.uniform(0.2, 1.2)
            assert hynes_griffin(x).value == pytest.approx(float(oracles.hynes_griffin_exact(x)), abs=1e-9)
            assert ambraseys_menu(x).value == pytest.approx(float(oracles.ambraseys_menu_exact(x)), abs=1e-9)
            assert jibson(x).value == pytest.approx(float(oracles.jibson_exact(x)), abs=1e-9)
            assert saygili_rathje(a_max, x).value == pytest.approx(
                float(oracles.saygili_rathje_exact(a_max, x)), abs=1e-9)
            assert madiai(x).value == pytest.approx(float(oracles.madiai_exact(x)), abs=1e-9)
            assert tsai_chien(a_max, x, t_m).value == pytest.approx(
                float(oracles.tsai_chien_exact(a_max, x, t_m)), abs=1e-9)


class TestScalesAndRegistry:
    def test_unit_round_trip(self):
        for v in (-2.0, 0.0, 1.5):
            assert to_meters(v, "log10_D_cm") == pytest.approx(to_meters(v - 2.0, "log10_D_m"), rel=1e-12)
            assert to_meters(v, "ln_D_cm") == pytest.approx(
                to_meters(v - math.log(100.0), "ln_D_m"), rel=1e-12)

    def test_unknown_scale(self):
        with pytest.raises(ValueError):
            to_meters(1.0, "log2_D_m")

    def test_prediction_meters_consistent(self):
        pred = predict("gep", sample_input())
        assert pred.d_meters == pytest.approx(math.exp(pred.value), rel=1e-15)
        pred = predict("jibson", sample_input())
        assert pred.d_meters == pytest.approx(10.0 ** pred.value / 100.0, rel=1e-15)

    def test_registry_covers_all_ids(self):
        inp = sample_input()
        for model_id in displacement.MODEL_IDS:
            pred = predict(model_id, inp)
            assert math.isfinite(pred.d_meters)

    def test_unknown_model(self):
        with pytest.raises(ValueError):
            predict("newmark", sample_input())

    def test_gep_pole_via_registry(self):
        inp = sample_input(t_p=1.0, t_d=POLE_PERIOD_RATIO)
        with pytest.raises(PoleError):
            predict("gep", inp)


class TestApplicability:
    def test_jibson_magnitude_bound(self):
        verdict = check_applicability("jibson", sample_input(m_w=8.0))
        assert not verdict.ok
        assert any("Mw" in v and "7.6" in v for v in verdict.violations)

    def test_hynes_griffin_in_range(self):
        verdict = check_applicability("hynes_griffin", sample_input(m_w=7.0, a_max=0.3, a_y=0.09))
        assert verdict.ok

    def test_tsai_chien_amax_bound(self):
        verdict = check_applicability("tsai_chien", sample_input(a_max=0.5, a_y=0.15))
        assert not verdict.ok
        assert any("a_max" in v for v in verdict.violations)

    def test_gep_has_no_published_bounds(self):
        assert check_applicability("gep", sample_input(m_w=9.9)).ok

    def test_bad_range_definition_rejected(self):
        with pytest.raises(ValueError):
            ApplicabilityRange(m_w=(8.0, 5.0))


class TestFundamentalPeriod:
    def test_direct_values(self):
        assert fundamental_period(EmbankmentGeometry(25.0, 200.0)) == 0.5
        assert fundamental_period(EmbankmentGeometry(100.0, 400.0)) == 1.0

    def test_realistic_inputs_fall_in_database_span(self):
        # documentation check against the published Td span, not an enforced bound
        for h, vs in ((5.0, 250.0), (40.0, 300.0), (90.0, 280.0)):
            assert 0.05 <= fundamental_period(EmbankmentGeometry(h, vs)) <= 1.58

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            EmbankmentGeometry(0.0, 200.0)
        with pytest.raises(ValueError):
            EmbankmentGeometry(25.0, -1.0)


class TestSensitivity:
    def test_singleton_grid_equals_direct_call(self):
        points = sensitivity_profile("Mw", [6.0])
        assert len(points) == 1
        assert points[0].ln_d == gep_ln_displacement(6.0, MEAN_AY_RATIO, MEAN_PERIOD_RATIO)

    def test_magnitude_trend_increasing(self):
        grid = np.linspace(4.9, 8.3, 35)
        values = [p.ln_d for p in sensitivity_profile("Mw", grid)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_ay_ratio_anchor_comparison(self):
        lo = sensitivity_profile("ay_ratio", [0.5])[0].ln_d
        hi = sensitivity_profile("ay_ratio", [1.0])[0].ln_d
        assert hi < lo

    def test_period_ratio_trend_above_local_max(self):
        # exact-arithmetic oracle shows ln D rises from the pole up to a local
        # max near r = 1.80 at the mean anchors, then falls; the strictly
        # decreasing branch starts there
        f_15 = float(oracles.gep_formula_exact(MEAN_MW, MEAN_AY_RATIO, 1.5))
        f_18 = float(oracles.gep_formula_exact(MEAN_MW, MEAN_AY_RATIO, 1.8))
        assert f_18 > f_15  # not monotone on [1.5, 4.0]
        grid = np.linspace(1.9, 4.0, 30)
        oracle_vals = [float(oracles.gep_formula_exact(MEAN_MW, MEAN_AY_RATIO, float(r))) for r in grid]
        assert all(b < a for a, b in zip(oracle_vals, oracle_vals[1:]))
        values = [p.ln_d for p in sensitivity_profile("period_ratio", grid)]
        assert all(b < a for a, b in zip(values, values[1:]))

    def test_pole_markers_emitted(self):
        grid = [1.2, POLE_PERIOD_RATIO, 1.4]
        points = sensitivity_profile("period_ratio", grid)
        assert [p.pole for p in points] == [False, True, False]
        assert points[1].ln_d is None

    def test_unknown_parameter(self):
        with pytest.raises(ValueError):
            sensitivity_profile("Tp", [1.0])
        with pytest.raises(ValueError):
            sensitivity_profile("Mw", [7.0], anchors={"bogus": 1.0})


class TestModelInput:
    def test_ratios_recomputed(self):
        inp = sample_input(a_y=0.12, a_max=0.4, t_d=0.9, t_p=0.3)
        assert inp.ay_ratio == 0.12 / 0.4
        assert inp.period_ratio == 0.9 / 0.3

    def test_invariants(self):
        with pytest.raises(ValueError):
            sample_input(a_max=0.0)
        with pytest.raises(ValueError):
            sample_input(t_p=-0.1)
        with pytest.raises(ValueError):
            sample_input(a_y=-0.01)
        with pytest.raises(ValueError):
            sample_input(t_d=-0.5)
