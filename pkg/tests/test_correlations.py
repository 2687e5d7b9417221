"""Analytic correlation model: point values and algebraic properties.

Frozen expected values were computed independently with 40-digit
arithmetic from the closed-form expressions.
"""

import math

import numpy as np
import pytest

from gravbell.correlations import (
    AnalyzerSetting,
    CorrelationModel,
    PhaseConvention,
    PortPair,
    Station,
    TWO_SQRT_TWO,
    chsh_from_model,
    chsh_optimal_settings,
    chsh_s,
    coincidence_probability,
    correlation_coefficient,
    s_from_visibility,
)

PLD = 0.267


def setting(phase, station=Station.A):
    return AnalyzerSetting(phase, PLD, station)


class TestCorrelationCoefficient:
    def test_perfect_visibility_zero_phase(self):
        model = CorrelationModel(intrinsic_visibility=1.0)
        assert correlation_coefficient(model, setting(0.0), setting(0.0)) == 1.0

    def test_raw_visibility_zero_phase(self):
        model = CorrelationModel(intrinsic_visibility=0.905)
        assert correlation_coefficient(model, setting(0.0), setting(0.0)) == pytest.approx(
            0.905, abs=1e-12
        )

    def test_split_phase_sum_convention(self):
        # V=0.7, delta1 + delta2 = pi/3 -> E = 0.7 cos(pi/3) = 0.35
        model = CorrelationModel(intrinsic_visibility=0.7)
        e = correlation_coefficient(model, setting(math.pi / 6), setting(math.pi / 6))
        assert e == pytest.approx(0.35, abs=1e-12)

    def test_difference_convention_flips_second_phase(self):
        model = CorrelationModel(phase_convention=PhaseConvention.DIFFERENCE)
        e_sum = correlation_coefficient(
            CorrelationModel(), setting(0.3), setting(-0.4)
        )
        e_diff = correlation_coefficient(model, setting(0.3), setting(0.4))
        assert e_diff == pytest.approx(e_sum, abs=1e-15)

    def test_bounded_by_visibility(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            v = rng.uniform(0.0, 1.0)
            model = CorrelationModel(intrinsic_visibility=v)
            e = correlation_coefficient(
                model, setting(rng.uniform(-10, 10)), setting(rng.uniform(-10, 10))
            )
            assert abs(e) <= v + 1e-15


class TestCoincidenceProbability:
    def test_half_fringe_point(self):
        # (1 + 0.905 cos(pi/2)) / 2 = 0.5
        model = CorrelationModel(intrinsic_visibility=0.905)
        p = coincidence_probability(model, setting(math.pi / 2), setting(0.0), PortPair.SAME)
        assert p == pytest.approx(0.5, abs=1e-12)

    def test_constructive_peak(self):
        model = CorrelationModel(intrinsic_visibility=1.0)
        assert coincidence_probability(
            model, setting(0.0), setting(0.0), PortPair.SAME
        ) == pytest.approx(1.0, abs=1e-15)
        assert coincidence_probability(
            model, setting(0.0), setting(0.0), PortPair.DIFFERENT
        ) == pytest.approx(0.0, abs=1e-15)

    def test_normalization_property(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            model = CorrelationModel(intrinsic_visibility=rng.uniform(0, 1))
            a, b = setting(rng.uniform(-10, 10)), setting(rng.uniform(-10, 10))
            p_same = coincidence_probability(model, a, b, PortPair.SAME)
            p_diff = coincidence_probability(model, a, b, PortPair.DIFFERENT)
            assert 0.0 <= p_same <= 1.0
            assert p_same + p_diff == pytest.approx(1.0, abs=1e-15)
            # E = P(same) - P(different)
            assert p_same - p_diff == pytest.approx(
                correlation_coefficient(model, a, b), abs=1e-15
            )


class TestChsh:
    def test_algebraic_maximum_of_inputs(self):
        assert chsh_s(1.0, 1.0, 1.0, -1.0) == 4.0

    def test_rejects_invalid_correlation(self):
        with pytest.raises(ValueError):
            chsh_s(1.2, 0.0, 0.0, 0.0)
        with pytest.raises(ValueError):
            chsh_s(0.0, 0.0, float("nan"), 0.0)

    def test_quantum_maximum_at_optimal_settings(self):
        model = CorrelationModel(intrinsic_visibility=1.0)
        assert chsh_from_model(model) == pytest.approx(TWO_SQRT_TWO, abs=1e-12)

    def test_optimal_settings_reach_two_sqrt_two_v(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            v = rng.uniform(0.0, 1.0)
            conv = PhaseConvention.SUM if rng.random() < 0.5 else PhaseConvention.DIFFERENCE
            model = CorrelationModel(intrinsic_visibility=v, phase_convention=conv)
            assert chsh_from_model(model) == pytest.approx(TWO_SQRT_TWO * v, rel=1e-12, abs=1e-12)

    def test_optimal_settings_pi_quarter_spacing(self):
        a, a2, b, b2 = chsh_optimal_settings()
        assert a.phase == 0.0
        assert a2.phase == pytest.approx(math.pi / 2)
        assert abs(b.phase) == pytest.approx(math.pi / 4)
        assert b2.phase == pytest.approx(-b.phase)


class TestSFromVisibility:
    def test_raw_paper_point(self):
        assert s_from_visibility(0.905) == pytest.approx(2.559726547895302, abs=1e-12)

    def test_net_paper_point(self):
        assert s_from_visibility(0.967) == pytest.approx(2.735089029629566, abs=1e-12)

    def test_local_bound_at_inverse_sqrt_two(self):
        assert s_from_visibility(1.0 / math.sqrt(2.0)) == pytest.approx(2.0, abs=1e-12)

    def test_endpoints(self):
        assert s_from_visibility(0.0) == 0.0
        assert s_from_visibility(1.0) == pytest.approx(TWO_SQRT_TWO, abs=1e-15)

    def test_monotone(self):
        vs = np.linspace(0, 1, 101)
        ss = [s_from_visibility(v) for v in vs]
        assert all(s1 < s2 for s1, s2 in zip(ss, ss[1:]))

    def test_rejects_out_of_range(self):
        for bad in (-0.1, 1.1, float("nan")):
            with pytest.raises(ValueError):
                s_from_visibility(bad)


class TestValidation:
    def test_model_rejects_bad_visibility(self):
        for bad in (-0.01, 1.01):
            with pytest.raises(ValueError):
                CorrelationModel(intrinsic_visibility=bad)

    def test_setting_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            AnalyzerSetting(float("inf"), PLD)
        with pytest.raises(ValueError):
            AnalyzerSetting(0.0, 0.0)
