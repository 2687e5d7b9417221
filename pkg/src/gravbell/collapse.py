"""Gravitationally induced collapse times and the measurement timing budget.

Implements the mass-displacement collapse criterion

    t_collapse = 3 hbar V / (2 pi G m^2 d^2)

for a rigid object of mass m and volume V displaced by a distance d,
together with the piezo-driven mirror readout (interference-fringe voltage
to displacement conversion), the total measurement-time budget, and the
light-cone check that decides whether two stations are space-like
separated.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_left
from dataclasses import dataclass, field

from .constants import CODATA, PhysicalConstants

# Plausible solid/liquid density range used for a sanity warning only.
_DENSITY_MIN = 10.0      # kg/m^3
_DENSITY_MAX = 25000.0   # kg/m^3


class UndefinedCollapseError(ValueError):
    """Zero mass or displacement: the collapse time diverges."""


class UnreachableDisplacementError(ValueError):
    """The step response never reaches the requested displacement."""


@dataclass(frozen=True)
class MovingMass:
    """Rigid object whose displacement defines the collapse time."""

    mass: float          # kg
    volume: float        # m^3
    displacement: float  # m

    def __post_init__(self):
        for name in ("mass", "volume", "displacement"):
            v = getattr(self, name)
            if not (v > 0) or not math.isfinite(v):
                raise UndefinedCollapseError(f"{name} must be strictly positive, got {v!r}")
        density = self.mass / self.volume
        if not (_DENSITY_MIN <= density <= _DENSITY_MAX):
            warnings.warn(
                f"density {density:.3g} kg/m^3 outside plausible range "
                f"[{_DENSITY_MIN:g}, {_DENSITY_MAX:g}]",
                stacklevel=2,
            )


@dataclass(frozen=True)
class PiezoStepResponse:
    """Digitized displacement-versus-time curve after a voltage step.

    Samples are (time since step in s, displacement in m), monotone in
    time with non-decreasing displacement. Between samples the curve is
    interpolated linearly; past the last sample it is clamped.
    """

    samples: tuple[tuple[float, float], ...]
    step_voltage: float = 4.0

    def __post_init__(self):
        if len(self.samples) < 1:
            raise ValueError("step response needs at least one sample")
        times = [t for t, _ in self.samples]
        disps = [d for _, d in self.samples]
        if times[0] < 0:
            raise ValueError("sample times must be >= 0")
        if any(t1 > t2 for t1, t2 in zip(times, times[1:])):
            raise ValueError("sample times must be monotone non-decreasing")
        if any(d1 > d2 for d1, d2 in zip(disps, disps[1:])):
            raise ValueError("displacement samples must be non-decreasing")


@dataclass(frozen=True)
class FringeReadout:
    """Photodiode fringe signal used to bound the mirror displacement."""

    laser_wavelength: float    # m
    peak_to_peak_signal: float  # V
    observed_change: float      # V

    def __post_init__(self):
        if not (100e-9 < self.laser_wavelength < 10e-6):
            raise ValueError("laser wavelength outside (100 nm, 10 um)")
        if not (0.0 <= self.observed_change <= self.peak_to_peak_signal):
            raise ValueError("observed change must lie in [0, peak-to-peak]")
        if not (self.peak_to_peak_signal > 0):
            raise ValueError("peak-to-peak signal must be > 0")


@dataclass(frozen=True)
class TimingBudget:
    """Decomposition of the total measurement time.

    total = trigger_latency + displacement_time + collapse_time.
    """

    trigger_latency: float
    displacement_time: float
    collapse_time: float
    total: float = field(default=0.0)

    def __post_init__(self):
        parts = (self.trigger_latency, self.displacement_time, self.collapse_time)
        if any(p < 0 for p in parts):
            raise ValueError("all budget components must be >= 0")
        object.__setattr__(self, "total", sum(parts))


@dataclass(frozen=True)
class GeometryLayout:
    """Source-to-station fiber lengths and the direct inter-station distance.

    Fibers wander, so direct_distance may exceed or undercut the fiber sum.
    """

    fiber_length_a: float      # m
    fiber_length_b: float      # m
    direct_distance: float     # m
    fiber_refractive_index: float = 1.468

    def __post_init__(self):
        if not (self.fiber_length_a > 0 and self.fiber_length_b > 0 and self.direct_distance > 0):
            raise ValueError("all geometry lengths must be > 0")
        if self.fiber_refractive_index < 1.0:
            raise ValueError("refractive index must be >= 1")


@dataclass(frozen=True)
class SpacelikeResult:
    separated: bool
    light_travel_time: float  # s
    margin: float             # s


def diosi_collapse_time(m: MovingMass, k: PhysicalConstants = CODATA) -> float:
    """Collapse time 3*hbar*V / (2*pi*G*m^2*d^2) of a displaced rigid mass.

    Scales as m^-2 and d^-2 and linearly in the volume.
    """
    return (3.0 * k.hbar * m.volume) / (2.0 * math.pi * k.G * m.mass**2 * m.displacement**2)


def penrose_collapse_time(m: MovingMass, k: PhysicalConstants = CODATA) -> float:
    """Same criterion in the convention that is shorter by a factor of 2."""
    return 0.5 * diosi_collapse_time(m, k)


def displacement_from_fringe(r: FringeReadout) -> float:
    """Conservative lower bound on mirror motion from a fringe voltage change.

    Assumes the change happens at a fringe node where the intensity slope
    versus phase is maximal, so delta_phi = dV / (Vpp / 2). A mirror motion
    d changes the optical path by 2d, hence d = delta_phi * lambda / (4 pi).
    """
    delta_phi = r.observed_change / (r.peak_to_peak_signal / 2.0)
    return delta_phi * r.laser_wavelength / (4.0 * math.pi)


def displacement_at(t: float, resp: PiezoStepResponse) -> float:
    """Displacement at time t after the step, by linear interpolation.

    Clamps to the last sample beyond the end of the curve; before the first
    sample the curve is taken to start from (0, 0).
    """
    if t < 0:
        raise ValueError("time since step must be >= 0")
    samples = resp.samples
    times = [s[0] for s in samples]
    i = bisect_left(times, t)
    if i == len(samples):
        return samples[-1][1]
    t1, d1 = samples[i]
    if t1 == t:
        return d1
    t0, d0 = samples[i - 1] if i > 0 else (0.0, 0.0)
    if t1 == t0:
        return d1
    return d0 + (d1 - d0) * (t - t0) / (t1 - t0)


def time_to_reach(target_d: float, resp: PiezoStepResponse) -> float:
    """Earliest time at which the step response reaches target_d."""
    if target_d <= 0:
        return 0.0
    prev_t, prev_d = 0.0, 0.0
    for t, d in resp.samples:
        if d >= target_d:
            if d == prev_d:
                return t
            return prev_t + (t - prev_t) * (target_d - prev_d) / (d - prev_d)
        prev_t, prev_d = t, d
    raise UnreachableDisplacementError(
        f"target displacement {target_d!r} m never reached "
        f"(curve tops out at {resp.samples[-1][1]!r} m)"
    )


def measurement_time(
    trigger: float,
    resp: PiezoStepResponse,
    target_d: float,
    m: MovingMass,
    k: PhysicalConstants = CODATA,
) -> TimingBudget:
    """Total measurement-time budget for one detection.

    trigger latency, plus the time for the mirror to move target_d, plus
    the collapse time evaluated at displacement target_d.
    """
    if trigger < 0:
        raise ValueError("trigger latency must be >= 0")
    displacement_time = time_to_reach(target_d, resp)
    mass_at_d = MovingMass(m.mass, m.volume, target_d)
    return TimingBudget(
        trigger_latency=trigger,
        displacement_time=displacement_time,
        collapse_time=diosi_collapse_time(mass_at_d, k),
    )


def spacelike_check(
    budget: TimingBudget,
    geo: GeometryLayout,
    k: PhysicalConstants = CODATA,
) -> SpacelikeResult:
    """Compare the measurement budget with the vacuum light cone.

    The bound uses the straight-line distance at vacuum c, not the fiber
    length at c/n: a hypothetical signal is not confined to the fiber.
    """
    light_travel_time = geo.direct_distance / k.c
    margin = light_travel_time - budget.total
    return SpacelikeResult(separated=margin > 0, light_travel_time=light_travel_time, margin=margin)
