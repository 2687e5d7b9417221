"""Analytic two-photon correlation model and CHSH machinery.

The post-selected coincidence rate of two unbalanced interferometers
follows a sinusoidal correlation E = V cos(delta), where delta combines
the two analyzer phases and V is the intrinsic fringe visibility. The
functions here are pure and totally defined on valid inputs; they are the
reference ("oracle") model against which the event-level Monte Carlo in
:mod:`gravbell.apparatus` is checked.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

TWO_SQRT_TWO = 2.0 * math.sqrt(2.0)


class Station(str, enum.Enum):
    A = "A"
    B = "B"


class PhaseConvention(str, enum.Enum):
    """Sign convention for combining the two analyzer phases.

    The sinusoidal correlation depends on a single combined phase; whether
    that is delta1 + delta2 or delta1 - delta2 is a convention. ``SUM`` is
    the default.
    """

    SUM = "sum"
    DIFFERENCE = "difference"


class PortPair(str, enum.Enum):
    SAME = "same"
    DIFFERENT = "different"


@dataclass(frozen=True)
class AnalyzerSetting:
    """Phase and arm imbalance of one station's interferometer."""

    phase: float                   # radians
    path_length_difference: float  # meters, optical
    station_id: Station = Station.A

    def __post_init__(self):
        if not math.isfinite(self.phase):
            raise ValueError("analyzer phase must be finite")
        if not (self.path_length_difference > 0):
            raise ValueError("path_length_difference must be > 0")


@dataclass(frozen=True)
class CorrelationModel:
    """Sinusoidal correlation with a fixed intrinsic visibility."""

    intrinsic_visibility: float = 1.0
    phase_convention: PhaseConvention = PhaseConvention.SUM

    def __post_init__(self):
        if not (0.0 <= self.intrinsic_visibility <= 1.0):
            raise ValueError("intrinsic_visibility must lie in [0, 1]")


def combined_phase(model: CorrelationModel, a: AnalyzerSetting, b: AnalyzerSetting) -> float:
    if model.phase_convention is PhaseConvention.SUM:
        return a.phase + b.phase
    return a.phase - b.phase


def correlation_coefficient(model: CorrelationModel, a: AnalyzerSetting, b: AnalyzerSetting) -> float:
    """Correlation coefficient E = V cos(delta) of the post-selected pairs.

    Bounded by the intrinsic visibility: |E| <= V for any phases.
    """
    return model.intrinsic_visibility * math.cos(combined_phase(model, a, b))


def coincidence_probability(
    model: CorrelationModel,
    a: AnalyzerSetting,
    b: AnalyzerSetting,
    port_pair: PortPair,
) -> float:
    """Probability that a post-selected pair exits the stated port combination.

    Normalized over the interfering (short-short plus long-long) population:
    P(same) = (1 + V cos delta)/2 and P(different) = (1 - V cos delta)/2,
    which reproduces E = P(same) - P(different) = V cos(delta).
    """
    e = correlation_coefficient(model, a, b)
    if port_pair is PortPair.SAME:
        return 0.5 * (1.0 + e)
    return 0.5 * (1.0 - e)


def chsh_s(E11: float, E12: float, E21: float, E22: float) -> float:
    """CHSH combination |E11 + E12 + E21 - E22| for four correlation values.

    Local theories obey S <= 2; the quantum maximum is 2*sqrt(2). Inputs
    with |E| > 1 are not valid correlation coefficients and are rejected.
    """
    for e in (E11, E12, E21, E22):
        if not (abs(e) <= 1.0):
            raise ValueError(f"correlation coefficient {e!r} outside [-1, 1]")
    return abs(E11 + E12 + E21 - E22)


def s_from_visibility(V: float) -> float:
    """S value implied by a sinusoidal correlation of visibility V.

    S = 2*sqrt(2)*V; the local bound S = 2 corresponds to V = 1/sqrt(2).
    """
    if not (0.0 <= V <= 1.0):
        raise ValueError(f"visibility {V!r} outside [0, 1]")
    return TWO_SQRT_TWO * V


def chsh_optimal_settings(
    convention: PhaseConvention = PhaseConvention.SUM,
    path_length_difference: float = 0.267,
) -> tuple[AnalyzerSetting, AnalyzerSetting, AnalyzerSetting, AnalyzerSetting]:
    """Analyzer settings (a, a', b, b') whose four combined phases are
    pi/4-spaced, so that chsh_s over correlation_coefficient equals
    2*sqrt(2)*V analytically.
    """
    sign = 1.0 if convention is PhaseConvention.DIFFERENCE else -1.0
    a = AnalyzerSetting(0.0, path_length_difference, Station.A)
    a2 = AnalyzerSetting(math.pi / 2, path_length_difference, Station.A)
    b = AnalyzerSetting(sign * math.pi / 4, path_length_difference, Station.B)
    b2 = AnalyzerSetting(-sign * math.pi / 4, path_length_difference, Station.B)
    return a, a2, b, b2


def chsh_from_model(model: CorrelationModel,
                    settings: tuple[AnalyzerSetting, AnalyzerSetting,
                                    AnalyzerSetting, AnalyzerSetting] | None = None) -> float:
    """Evaluate the CHSH combination of a correlation model at the given
    (a, a', b, b') settings, defaulting to the optimal preset."""
    if settings is None:
        settings = chsh_optimal_settings(model.phase_convention)
    a, a2, b, b2 = settings
    return chsh_s(
        correlation_coefficient(model, a, b),
        correlation_coefficient(model, a, b2),
        correlation_coefficient(model, a2, b),
        correlation_coefficient(model, a2, b2),
    )
