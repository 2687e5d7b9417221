"""Fringe fitting, accidental subtraction, and the CHSH violation report.

Takes the binned scan produced by the simulator (or loaded from CSV) and
extracts the fringe visibility by weighted least squares, the raw and
accidental-subtracted S values, and the number of standard deviations by
which the local bound S = 2 is exceeded.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .correlations import TWO_SQRT_TWO


class InsufficientSpanError(ValueError):
    """Scan does not cover a full fringe period."""


class DegenerateFitError(ValueError):
    """Fit has no usable fringe (for example an all-zero scan)."""


@dataclass
class FringeScan:
    """Binned scan output: singles and coincidence counts versus phase."""

    bin_index: np.ndarray    # int
    phase: np.ndarray        # radians, per bin
    singles_a: np.ndarray    # counts per bin
    singles_b: np.ndarray
    coincidences: np.ndarray
    bin_width: float         # s
    # diagnostics, not part of the CSV contract
    truth_accidentals: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.bin_index)
        for name in ("phase", "singles_a", "singles_b", "coincidences"):
            if len(getattr(self, name)) != n:
                raise ValueError("all scan columns must have equal length")
        if not np.all(np.isfinite(self.phase)):
            raise ValueError("phases must be finite")
        for name in ("singles_a", "singles_b", "coincidences"):
            if np.any(np.asarray(getattr(self, name)) < 0):
                raise ValueError(f"{name} must be non-negative")

    def __len__(self):
        return len(self.bin_index)

    @property
    def bin_minutes(self) -> float:
        return self.bin_width / 60.0

    def mean_coincidence_rate_per_min(self) -> float:
        return float(np.mean(self.coincidences)) / self.bin_minutes

    def mean_singles_rate_hz(self) -> tuple[float, float]:
        return (
            float(np.mean(self.singles_a)) / self.bin_width,
            float(np.mean(self.singles_b)) / self.bin_width,
        )


@dataclass(frozen=True)
class FringeFit:
    """Result of the sinusoidal fit C(phi) = amplitude * (1 + V cos(phi - phase0))."""

    visibility: float
    visibility_error: float
    amplitude: float          # mean counts per bin
    offset: float             # alias of amplitude in this parametrization
    phase0: float
    angular_rate: float       # phase is taken from the schedule, rate fixed at 1
    chi2: float

    def __post_init__(self):
        if self.visibility_error <= 0:
            raise ValueError("visibility std error must be > 0")


@dataclass(frozen=True)
class BellResult:
    v_raw: float
    v_raw_error: float
    v_net: float
    v_net_error: float
    s_raw: float
    s_raw_error: float
    s_net: float
    s_net_error: float
    sigma_violation_raw: float
    sigma_violation_net: float
    accidental_rate_per_min: float


def fit_fringe(scan: FringeScan) -> FringeFit:
    """Weighted least-squares sinusoidal fit of the coincidence counts.

    The model C(phi) = A (1 + V cos(phi - phi0)) is linear in the
    parameters (A, A V cos phi0, A V sin phi0), so the fit is a direct
    normal-equation solve. Poisson weights come from the model prediction
    rather than the observed counts (iterated twice), which avoids the
    classic low-count bias of 1/N_observed weighting; predictions are
    clamped to at least 1. The visibility error comes from the parameter
    covariance by first-order propagation.
    """
    if len(scan) < 8:
        raise InsufficientSpanError(f"need at least 8 bins, got {len(scan)}")
    phi = np.asarray(scan.phase, dtype=float)
    counts = np.asarray(scan.coincidences, dtype=float)
    if np.ptp(phi) < 2.0 * math.pi:
        raise InsufficientSpanError(
            f"phase span {np.ptp(phi):.3f} rad covers less than one full fringe"
        )
    if np.all(counts == 0):
        raise DegenerateFitError("all coincidence counts are zero")

    # C = p0 + p1 cos(phi) + p2 sin(phi)
    X = np.column_stack([np.ones_like(phi), np.cos(phi), np.sin(phi)])
    var = np.maximum(counts, 1.0)
    for _ in range(3):
        W = 1.0 / var
        XtWX = X.T @ (X * W[:, None])
        XtWy = X.T @ (W * counts)
        try:
            cov = np.linalg.inv(XtWX)
        except np.linalg.LinAlgError as exc:
            raise DegenerateFitError(f"singular normal equations: {exc}") from exc
        p = cov @ XtWy
        var = np.maximum(X @ p, 1.0)
    a0, a1, a2 = p
    if a0 <= 0:
        raise DegenerateFitError(f"non-positive fitted offset {a0:.3g}")

    amp = math.hypot(a1, a2)
    visibility = amp / a0
    phase0 = math.atan2(a2, a1)

    # dV/dp for V = sqrt(a1^2 + a2^2) / a0
    if amp == 0:
        grad = np.array([0.0, 1.0 / a0, 1.0 / a0])
    else:
        grad = np.array([-amp / a0**2, a1 / (amp * a0), a2 / (amp * a0)])
    v_err = float(math.sqrt(grad @ cov @ grad))
    if v_err <= 0:
        v_err = np.finfo(float).tiny

    if visibility > 1.0:
        warnings.warn(f"fitted visibility {visibility:.4f} > 1, clipping", stacklevel=2)
        visibility = 1.0

    resid = counts - X @ p
    chi2 = float(np.sum(W * resid**2))
    return FringeFit(
        visibility=float(visibility),
        visibility_error=v_err,
        amplitude=float(a0),
        offset=float(a0),
        phase0=float(phase0),
        angular_rate=1.0,
        chi2=chi2,
    )


def subtract_accidentals(
    fit: FringeFit, total_rate: float, accidental_rate: float
) -> tuple[float, float]:
    """Visibility after removing a phase-flat accidental background.

    Flat accidentals dilute the contrast by the ratio of totals, so
    V_net = V_raw * total / (total - accidental); the error is propagated
    linearly with the same factor.
    """
    if not (0.0 <= accidental_rate < total_rate):
        raise ValueError(
            f"accidental rate {accidental_rate!r} must lie in [0, total rate {total_rate!r})"
        )
    factor = total_rate / (total_rate - accidental_rate)
    v_net = fit.visibility * factor
    return v_net, fit.visibility_error * factor


def subtract_accidentals_per_bin(scan: FringeScan, accidental_rate_per_min: float) -> FringeFit:
    """Subtract the expected flat accidentals from every bin and refit.

    This is the primary subtraction variant; the aggregate ratio formula in
    :func:`subtract_accidentals` is reported alongside as a cross-check.
    """
    expected = accidental_rate_per_min * scan.bin_minutes
    corrected = np.maximum(np.asarray(scan.coincidences, dtype=float) - expected, 0.0)
    net_scan = FringeScan(
        bin_index=scan.bin_index,
        phase=scan.phase,
        singles_a=scan.singles_a,
        singles_b=scan.singles_b,
        coincidences=corrected,
        bin_width=scan.bin_width,
    )
    return fit_fringe(net_scan)


def violation_sigmas(s: float, s_error: float) -> float:
    """Number of standard deviations by which S exceeds the local bound 2."""
    return (s - 2.0) / s_error


def bell_report(
    fit: FringeFit,
    corrected: tuple[float, float],
    accidental_rate_per_min: float = 0.0,
) -> BellResult:
    """Raw and accidental-subtracted CHSH summary from a fringe fit.

    ``corrected`` is the (visibility, std error) pair after accidental
    subtraction. S = 2*sqrt(2)*V with sigma_S = 2*sqrt(2)*sigma_V; the
    violation is (S - 2) / sigma_S.
    """
    v_raw, dv_raw = fit.visibility, fit.visibility_error
    v_net, dv_net = corrected
    v_net = min(v_net, 1.0)

    s_raw, ds_raw = TWO_SQRT_TWO * v_raw, TWO_SQRT_TWO * dv_raw
    s_net, ds_net = TWO_SQRT_TWO * v_net, TWO_SQRT_TWO * dv_net
    return BellResult(
        v_raw=v_raw,
        v_raw_error=dv_raw,
        v_net=v_net,
        v_net_error=dv_net,
        s_raw=s_raw,
        s_raw_error=ds_raw,
        s_net=s_net,
        s_net_error=ds_net,
        sigma_violation_raw=violation_sigmas(s_raw, ds_raw),
        sigma_violation_net=violation_sigmas(s_net, ds_net),
        accidental_rate_per_min=accidental_rate_per_min,
    )


def analyze_scan(scan: FringeScan, accidental_rate_per_min: float = 0.0) -> BellResult:
    """Fit a scan, subtract accidentals per bin, and build the Bell report."""
    fit = fit_fringe(scan)
    if accidental_rate_per_min > 0:
        net_fit = subtract_accidentals_per_bin(scan, accidental_rate_per_min)
        corrected = (net_fit.visibility, net_fit.visibility_error)
    else:
        corrected = (fit.visibility, fit.visibility_error)
    return bell_report(fit, corrected, accidental_rate_per_min)
