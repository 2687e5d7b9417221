"""Seedable discrete-event Monte Carlo of the two-station Franson setup.

The modeled chain is: continuous-wave pair source, one lossy fiber link
per station, one unbalanced Michelson interferometer per station, gated
single-photon detectors with dark counts, dead time and timing jitter, and
a start-stop coincidence stage with a narrow discriminator window.

Two execution paths share the same per-pair physics:

* a micro path (``generate_pair_events`` -> ``propagate_and_analyze`` ->
  ``detect`` -> ``coincide``) that tracks every pair individually and is
  used for validation against the analytic correlation model, and
* a thinned path (``run_scan``) that samples detected-outcome classes at
  their exact per-gate rates, so that hour-scale scans stay cheap. Only
  gates that actually receive a click are ever materialized.

All event times are absolute integer picoseconds, which makes runs
bit-identical for a given seed. Fixed propagation delays (fiber transit,
trigger distribution) are folded out of the time axis: only relative
timing within a gate matters for coincidence formation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .analysis import FringeScan
from .constants import CODATA
from .correlations import CorrelationModel, PhaseConvention

PS_PER_S = 1_000_000_000_000

# origin codes
ORIGIN_PHOTON_SHORT = 0
ORIGIN_PHOTON_LONG = 1
ORIGIN_DARK = 2
ORIGIN_LABELS = ("photon_short", "photon_long", "dark")

# coincidence truth classes
CLASS_INTERFERING = 0
CLASS_SIDEPEAK = 1
CLASS_ACCIDENTAL = 2
CLASS_LABELS = ("interfering", "sidepeak", "accidental_truth")


class ApparatusConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SourceConfig:
    """Continuous-wave down-conversion pair source."""

    pairs_per_window: float = 0.07
    window: float = 600e-12                     # s, elementary coincidence window
    signal_wavelength: float = 1573.0e-9        # m
    idler_wavelength: float = 1567.8e-9         # m
    pump_coherence_length: float = 10.0         # m, >> interferometer imbalance
    single_photon_coherence_length: float = 2.5e-3  # m

    def __post_init__(self):
        if self.pairs_per_window < 0:
            raise ApparatusConfigError("pairs_per_window must be >= 0")
        if self.window <= 0:
            raise ApparatusConfigError("window must be > 0")


@dataclass(frozen=True)
class FiberLink:
    """Source-to-station fiber with a calibrated excess-loss fudge.

    ``excess_loss_db`` absorbs every unmodeled loss (coupling, connectors,
    interferometer throughput) and is fitted once so the standard scenario
    reproduces the observed singles rates; see the README.
    """

    loss_db: float = 8.0
    length: float = 10000.0   # m
    excess_loss_db: float = 0.0

    def __post_init__(self):
        if self.loss_db < 0 or self.excess_loss_db < 0:
            raise ApparatusConfigError("fiber losses must be >= 0")

    @property
    def transmission(self) -> float:
        return 10.0 ** (-(self.loss_db + self.excess_loss_db) / 10.0)


@dataclass(frozen=True)
class DetectorConfig:
    """Gated avalanche photodiode."""

    efficiency: float = 0.10
    dark_rate: float = 700.0      # Hz, in-gate Poisson rate of dark clicks
    dead_time: float = 10e-6      # s
    gate_width: float = 100e-9    # s
    gate_rate: float = 1e6        # Hz
    jitter_sigma: float = 100e-12  # s

    def __post_init__(self):
        if not (0.0 <= self.efficiency <= 1.0):
            raise ApparatusConfigError("efficiency must lie in [0, 1]")
        if self.gate_width * self.gate_rate > 1.0 + 1e-12:
            raise ApparatusConfigError("gate_width * gate_rate must be <= 1")
        if self.dark_rate < 0 or self.dead_time < 0 or self.jitter_sigma < 0:
            raise ApparatusConfigError("dark_rate, dead_time and jitter_sigma must be >= 0")


@dataclass(frozen=True)
class InterferometerConfig:
    """Unbalanced Michelson analyzer at one station."""

    path_delay: float = 1.3e-9              # s, long minus short arm
    path_length_difference: float = 0.267   # m
    phase: float = 0.0                      # radians
    temperature_to_phase: float = 0.0       # radians per kelvin
    insertion_loss_db: float = 0.0
    refractive_index: float = 1.468

    def __post_init__(self):
        if not math.isfinite(self.phase):
            raise ApparatusConfigError("phase must be finite")
        expected = self.path_length_difference * self.refractive_index / CODATA.c
        if abs(self.path_delay - expected) > 0.10 * expected:
            raise ApparatusConfigError(
                f"path_delay {self.path_delay!r} s inconsistent with "
                f"path_length_difference (expected about {expected:.3g} s)"
            )


@dataclass
class EventBlock:
    """Detection events of one station, struct-of-arrays."""

    station: str
    time_ps: np.ndarray     # int64, absolute
    gate_index: np.ndarray  # int64
    origin: np.ndarray      # int8

    def __len__(self):
        return self.time_ps.size

    def sorted_by_time(self) -> "EventBlock":
        order = np.argsort(self.time_ps, kind="stable")
        return EventBlock(self.station, self.time_ps[order],
                          self.gate_index[order], self.origin[order])

    def lines(self):
        """Export as `station,time_ps,gate_index,origin` records."""
        for t, g, o in zip(self.time_ps, self.gate_index, self.origin):
            yield f"{self.station},{t},{g},{ORIGIN_LABELS[o]}"


@dataclass
class CoincidenceBatch:
    """Start-stop records: one per gate in which both stations clicked."""

    delta_t_ps: np.ndarray       # int64, stop minus start
    gate_index: np.ndarray       # int64
    classification: np.ndarray   # int8
    in_window: np.ndarray        # bool

    def __len__(self):
        return self.delta_t_ps.size

    @property
    def n_coincidences(self) -> int:
        return int(np.count_nonzero(self.in_window))

    @property
    def n_accidental(self) -> int:
        return int(np.count_nonzero(self.in_window & (self.classification == CLASS_ACCIDENTAL)))


@dataclass
class PairStream:
    """Pair emissions assigned to detector gates."""

    emission_ps: np.ndarray    # int64, offset within the gate
    gate_index: np.ndarray     # int64
    window_index: np.ndarray   # int64, elementary source window within the gate

    def __len__(self):
        return self.emission_ps.size


@dataclass
class PairOutcome:
    """Per-pair propagation result through fibers and interferometers."""

    survive_a: np.ndarray   # bool
    survive_b: np.ndarray
    arm_a: np.ndarray       # 0 short, 1 long
    arm_b: np.ndarray
    port_a: np.ndarray      # 0 monitored, 1 unmonitored
    port_b: np.ndarray

    @property
    def central(self) -> np.ndarray:
        """Post-selected short-short / long-long pairs."""
        return self.arm_a == self.arm_b

    @property
    def arrive_a(self) -> np.ndarray:
        return self.survive_a & (self.port_a == 0)

    @property
    def arrive_b(self) -> np.ndarray:
        return self.survive_b & (self.port_b == 0)


def _combined_phase(model: CorrelationModel, phase_a: float, phase_b: float) -> float:
    if model.phase_convention is PhaseConvention.SUM:
        return phase_a + phase_b
    return phase_a - phase_b


def _ps(seconds: float) -> int:
    return int(round(seconds * PS_PER_S))


@njit(cache=True)
def _dead_time_filter(times, dead_ps, last_kept):
    """Greedy non-paralyzable dead-time mask over a sorted click stream."""
    keep = np.ones(times.size, np.bool_)
    for i in range(times.size):
        if times[i] - last_kept < dead_ps:
            keep[i] = False
        else:
            last_kept = times[i]
    return keep, last_kept


def generate_pair_events(seed, source: SourceConfig, n_gates: int,
                         gate_width: float) -> PairStream:
    """Poisson pair emissions inside the given number of open gates.

    The source is continuous-wave: emissions form a homogeneous Poisson
    process, so the pair count per gate is Poisson with mean
    pairs_per_window * gate_width / window and emission offsets are
    uniform. ``window_index`` locates each pair's elementary source window
    inside its gate.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    mean_per_gate = source.pairs_per_window * gate_width / source.window
    counts = rng.poisson(mean_per_gate, n_gates)
    total = int(counts.sum())
    gate_index = np.repeat(np.arange(n_gates, dtype=np.int64), counts)
    gate_width_ps = _ps(gate_width)
    emission = rng.integers(0, gate_width_ps, total, dtype=np.int64)
    window_ps = _ps(source.window)
    return PairStream(
        emission_ps=emission,
        gate_index=gate_index,
        window_index=emission // window_ps,
    )


def propagate_and_analyze(
    pairs: PairStream,
    link_a: FiberLink,
    link_b: FiberLink,
    ifo_a: InterferometerConfig,
    ifo_b: InterferometerConfig,
    model: CorrelationModel,
    rng: np.random.Generator,
) -> PairOutcome:
    """Propagate every pair through the fibers and analyzers.

    Each photon survives its fiber independently and takes the short or
    long arm with probability 1/2. For the interfering short-short and
    long-long pairs the joint output-port statistics follow the analytic
    coincidence probabilities, split so that each photon's marginal port
    probability stays 1/2 (no single-photon interference). Short-long
    pairs choose ports independently and end up in the side peaks.
    """
    n = len(pairs)
    t_a = link_a.transmission * 10.0 ** (-ifo_a.insertion_loss_db / 10.0)
    t_b = link_b.transmission * 10.0 ** (-ifo_b.insertion_loss_db / 10.0)
    survive_a = rng.random(n) < t_a
    survive_b = rng.random(n) < t_b
    arm_a = rng.integers(0, 2, n, dtype=np.int8)
    arm_b = rng.integers(0, 2, n, dtype=np.int8)

    delta = _combined_phase(model, ifo_a.phase, ifo_b.phase)
    p_same = 0.5 * (1.0 + model.intrinsic_visibility * math.cos(delta))

    central = arm_a == arm_b
    same_port = np.where(central, rng.random(n) < p_same, False)
    port_a = rng.integers(0, 2, n, dtype=np.int8)
    # central pairs: B's port is tied to A's through the interference weight
    port_b_central = np.where(same_port, port_a, 1 - port_a).astype(np.int8)
    port_b_side = rng.integers(0, 2, n, dtype=np.int8)
    port_b = np.where(central, port_b_central, port_b_side).astype(np.int8)

    return PairOutcome(
        survive_a=survive_a,
        survive_b=survive_b,
        arm_a=arm_a,
        arm_b=arm_b,
        port_a=port_a,
        port_b=port_b,
    )


def arrivals_from_outcome(
    pairs: PairStream,
    outcome: PairOutcome,
    ifo: InterferometerConfig,
    which: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Monitored-port arrival times for one station: (time_ps, gate, origin)."""
    if which == "A":
        mask = outcome.arrive_a
        arm = outcome.arm_a
    else:
        mask = outcome.arrive_b
        arm = outcome.arm_b
    delay_ps = _ps(ifo.path_delay)
    times = pairs.emission_ps[mask] + arm[mask].astype(np.int64) * delay_ps
    origin = arm[mask].astype(np.int8)  # 0 short -> photon_short, 1 -> photon_long
    return times, pairs.gate_index[mask], origin


def detect(
    arrival_time_ps: np.ndarray,
    arrival_gate: np.ndarray,
    arrival_origin: np.ndarray,
    det: DetectorConfig,
    n_gates: int,
    rng: np.random.Generator,
    station: str = "A",
    include_darks: bool = True,
    apply_dead_time: bool = True,
    last_kept_ps: int = np.iinfo(np.int64).min // 2,
) -> EventBlock:
    """Convert photon arrivals in open gates into detector clicks.

    Photon arrivals convert with probability ``efficiency`` and get a
    Gaussian timing jitter; dark clicks are Poisson at ``dark_rate`` and
    uniform over each gate. A non-paralyzable dead time then suppresses
    any click closer than ``dead_time`` to the previous kept click.
    """
    gate_width_ps = _ps(det.gate_width)
    gate_period_ps = _ps(1.0 / det.gate_rate)

    fired = rng.random(arrival_time_ps.size) < det.efficiency
    t = arrival_time_ps[fired]
    g = arrival_gate[fired].astype(np.int64)
    o = arrival_origin[fired]
    if det.jitter_sigma > 0 and t.size:
        jitter = np.rint(rng.normal(0.0, det.jitter_sigma * PS_PER_S, t.size)).astype(np.int64)
        t = np.clip(t + jitter, 0, gate_width_ps - 1)

    if include_darks and det.dark_rate > 0:
        n_dark = rng.poisson(det.dark_rate / det.gate_rate * n_gates)
        dg = rng.integers(0, n_gates, n_dark, dtype=np.int64)
        dt = rng.integers(0, gate_width_ps, n_dark, dtype=np.int64)
        t = np.concatenate([t, dt])
        g = np.concatenate([g, dg])
        o = np.concatenate([o, np.full(n_dark, ORIGIN_DARK, np.int8)])

    abs_t = g * gate_period_ps + t
    block = EventBlock(station, abs_t, g, o).sorted_by_time()
    if apply_dead_time and det.dead_time > 0 and len(block):
        keep, _ = _dead_time_filter(block.time_ps, _ps(det.dead_time), last_kept_ps)
        block = EventBlock(station, block.time_ps[keep], block.gate_index[keep],
                           block.origin[keep])
    return block


def _first_click_per_gate(block: EventBlock) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Earliest click per gate: (gates, times, origins), gates ascending."""
    order = np.lexsort((block.time_ps, block.gate_index))
    g = block.gate_index[order]
    if g.size == 0:
        return g, block.time_ps[order], block.origin[order]
    first = np.ones(g.size, dtype=bool)
    first[1:] = g[1:] != g[:-1]
    idx = order[first]
    return block.gate_index[idx], block.time_ps[idx], block.origin[idx]


def coincide(
    events_a: EventBlock,
    events_b: EventBlock,
    window: float = 600e-12,
    peak_center: float = 0.0,
    start_station: str = "A",
) -> CoincidenceBatch:
    """Start-stop coincidence stage with a narrow discriminator window.

    Per gate, the first click at the start station opens the converter and
    the first click at the other station closes it; ``delta_t`` is stop
    minus start. A record counts as a coincidence when
    |delta_t - peak_center| <= window / 2, which keeps the interfering
    central peak and discards the short-long / long-short side peaks.
    """
    ga, ta, oa = _first_click_per_gate(events_a)
    gb, tb, ob = _first_click_per_gate(events_b)
    common, ia, ib = np.intersect1d(ga, gb, assume_unique=True, return_indices=True)
    if start_station == "A":
        delta = tb[ib] - ta[ia]
    else:
        delta = ta[ia] - tb[ib]
    o1, o2 = oa[ia], ob[ib]

    dark = (o1 == ORIGIN_DARK) | (o2 == ORIGIN_DARK)
    same_arm = o1 == o2
    classification = np.where(dark, CLASS_ACCIDENTAL,
                              np.where(same_arm, CLASS_INTERFERING, CLASS_SIDEPEAK)).astype(np.int8)
    half = _ps(window) // 2
    center = _ps(peak_center)
    in_window = np.abs(delta - center) <= half
    return CoincidenceBatch(
        delta_t_ps=delta.astype(np.int64),
        gate_index=common.astype(np.int64),
        classification=classification,
        in_window=in_window,
    )


@dataclass(frozen=True)
class ApparatusConfigs:
    """Bundle of every configuration feeding the simulation."""

    source: SourceConfig = field(default_factory=SourceConfig)
    link_a: FiberLink = field(default_factory=FiberLink)
    link_b: FiberLink = field(default_factory=FiberLink)
    detector_a: DetectorConfig = field(default_factory=DetectorConfig)
    detector_b: DetectorConfig = field(default_factory=DetectorConfig)
    ifo_a: InterferometerConfig = field(default_factory=InterferometerConfig)
    ifo_b: InterferometerConfig = field(default_factory=InterferometerConfig)
    model: CorrelationModel = field(default_factory=CorrelationModel)
    discriminator_window: float = 600e-12
    start_station: str = "A"

    def __post_init__(self):
        if self.detector_a.gate_width != self.detector_b.gate_width:
            raise ApparatusConfigError("gate widths must match between stations")
        if self.detector_a.gate_rate != self.detector_b.gate_rate:
            raise ApparatusConfigError("gate rates must match between stations")
        if self.start_station not in ("A", "B"):
            raise ApparatusConfigError("start_station must be 'A' or 'B'")


@dataclass(frozen=True)
class GateRates:
    """Per-gate outcome-class probabilities of the thinned sampler.

    Derived once from the per-pair physics of ``propagate_and_analyze``:
    with n pairs per gate, per-photon monitored-click probabilities
    p = transmission * efficiency / 2, the central interfering joint rate
    is n * (p_a p_b / 2) * (1 + V cos delta) / 2 and the side-peak joint
    rate is n * p_a p_b / 2 * 1/2 (two side combos times independent 1/4
    port odds), i.e. both share the base n * t_a t_b eta_a eta_b / 8.
    """

    pairs_per_gate: float
    joint_base: float       # central joint, to be scaled by (1 + V cos delta)
    side: float             # total for both side-peak combos
    click_a: float          # marginal photon-click probability, station A
    click_b: float
    dark_a: float
    dark_b: float


def gate_rates(cfg: ApparatusConfigs) -> GateRates:
    src, da, db = cfg.source, cfg.detector_a, cfg.detector_b
    n_pairs = src.pairs_per_window * da.gate_width / src.window
    t_a = cfg.link_a.transmission * 10.0 ** (-cfg.ifo_a.insertion_loss_db / 10.0)
    t_b = cfg.link_b.transmission * 10.0 ** (-cfg.ifo_b.insertion_loss_db / 10.0)
    pa = t_a * da.efficiency
    pb = t_b * db.efficiency
    base = n_pairs * pa * pb / 8.0
    return GateRates(
        pairs_per_gate=n_pairs,
        joint_base=base,
        side=base,
        click_a=n_pairs * pa / 2.0,
        click_b=n_pairs * pb / 2.0,
        dark_a=da.dark_rate / da.gate_rate,
        dark_b=db.dark_rate / db.gate_rate,
    )


def calibrate_excess_loss(
    cfg: ApparatusConfigs,
    target_singles_a_hz: float,
    target_singles_b_hz: float,
) -> ApparatusConfigs:
    """Fit the per-link excess loss so observed singles match the targets.

    Inverts the non-paralyzable dead-time relation R_obs = R / (1 + R tau)
    to get the needed true click rate, removes the dark contribution, and
    solves the per-gate click probability for the link transmission.
    """
    out_links = []
    for det, link, ifo, target in (
        (cfg.detector_a, cfg.link_a, cfg.ifo_a, target_singles_a_hz),
        (cfg.detector_b, cfg.link_b, cfg.ifo_b, target_singles_b_hz),
    ):
        r_true = target / (1.0 - target * det.dead_time)
        photon_true = r_true - det.dark_rate
        if photon_true <= 0:
            raise ApparatusConfigError("target singles below the dark rate")
        n_pairs = cfg.source.pairs_per_window * det.gate_width / cfg.source.window
        t_needed = 2.0 * photon_true / (n_pairs * det.efficiency * det.gate_rate)
        total_db = -10.0 * math.log10(t_needed)
        excess = total_db - link.loss_db - ifo.insertion_loss_db
        if excess < 0:
            raise ApparatusConfigError(
                f"target singles {target!r} Hz unreachable: needs negative excess loss"
            )
        out_links.append(replace(link, excess_loss_db=excess))
    return replace(cfg, link_a=out_links[0], link_b=out_links[1])


def _suppress_uncorrelated_photon_overlap(
    gates_a: np.ndarray, times_a: np.ndarray,
    gates_b: np.ndarray, times_b: np.ndarray,
    window_ps: int, span_ps: int, rng: np.random.Generator,
) -> np.ndarray:
    """Move lone B-photon clicks out of the discriminator window of lone
    A-photon clicks sharing a gate.

    Uncorrelated photons from distinct pairs are excluded from the
    coincidence peak by design (see the README model notes); only
    dark-involved overlaps contribute flat coincidences.
    """
    times_b = times_b.copy()
    for _ in range(16):
        common, ia, ib = np.intersect1d(gates_a, gates_b, return_indices=True)
        if common.size == 0:
            break
        clash = np.abs(times_b[ib] - times_a[ia]) <= 2 * window_ps
        if not np.any(clash):
            break
        idx = ib[clash]
        times_b[idx] = (times_b[idx] + 4 * window_ps) % span_ps
    return times_b


def _simulate_bin(
    rng: np.random.Generator,
    cfg: ApparatusConfigs,
    rates: GateRates,
    phase_a: float,
    phase_b: float,
    n_gates: int,
    gate_offset: int,
) -> tuple[EventBlock, EventBlock]:
    """Thinned click generation for one scan bin (no dead time yet)."""
    det = cfg.detector_a
    gate_width_ps = _ps(det.gate_width)
    gate_period_ps = _ps(1.0 / det.gate_rate)
    delay_ps = _ps(cfg.ifo_a.path_delay)
    window_ps = _ps(cfg.discriminator_window)
    span = gate_width_ps - delay_ps  # emission offsets keep long-arm clicks in gate

    delta = _combined_phase(cfg.model, phase_a, phase_b)
    fringe = 1.0 + cfg.model.intrinsic_visibility * math.cos(delta)

    # --- jointly detected pairs (central interfering and side peaks) ---
    n_cc = rng.poisson(n_gates * rates.joint_base * fringe)
    cc_gate = rng.integers(0, n_gates, n_cc, dtype=np.int64)
    cc_off = rng.integers(0, span, n_cc, dtype=np.int64)
    cc_arm = rng.integers(0, 2, n_cc, dtype=np.int8)
    cc_t = cc_off + cc_arm.astype(np.int64) * delay_ps

    n_sp = rng.poisson(n_gates * rates.side)
    sp_gate = rng.integers(0, n_gates, n_sp, dtype=np.int64)
    sp_off = rng.integers(0, span, n_sp, dtype=np.int64)
    sp_swap = rng.integers(0, 2, n_sp, dtype=np.int8)  # which station took the long arm
    sp_ta = sp_off + sp_swap.astype(np.int64) * delay_ps
    sp_tb = sp_off + (1 - sp_swap).astype(np.int64) * delay_ps

    # --- photons detected at only one station ---
    lone_a_rate = max(rates.click_a - rates.joint_base * fringe - rates.side, 0.0)
    lone_b_rate = max(rates.click_b - rates.joint_base * fringe - rates.side, 0.0)
    n_la = rng.poisson(n_gates * lone_a_rate)
    la_gate = rng.integers(0, n_gates, n_la, dtype=np.int64)
    la_arm = rng.integers(0, 2, n_la, dtype=np.int8)
    la_t = rng.integers(0, span, n_la, dtype=np.int64) + la_arm.astype(np.int64) * delay_ps
    n_lb = rng.poisson(n_gates * lone_b_rate)
    lb_gate = rng.integers(0, n_gates, n_lb, dtype=np.int64)
    lb_arm = rng.integers(0, 2, n_lb, dtype=np.int8)
    lb_t = rng.integers(0, span, n_lb, dtype=np.int64) + lb_arm.astype(np.int64) * delay_ps
    lb_t = _suppress_uncorrelated_photon_overlap(
        la_gate, la_t, lb_gate, lb_t, window_ps, span, rng
    )

    # --- dark clicks, uniform over the gate ---
    n_da = rng.poisson(n_gates * rates.dark_a)
    da_gate = rng.integers(0, n_gates, n_da, dtype=np.int64)
    da_t = rng.integers(0, gate_width_ps, n_da, dtype=np.int64)
    n_db = rng.poisson(n_gates * rates.dark_b)
    db_gate = rng.integers(0, n_gates, n_db, dtype=np.int64)
    db_t = rng.integers(0, gate_width_ps, n_db, dtype=np.int64)

    def station_block(name, det_cfg, parts):
        times = np.concatenate([p[0] for p in parts])
        gates = np.concatenate([p[1] for p in parts])
        origins = np.concatenate([p[2] for p in parts])
        photon = origins != ORIGIN_DARK
        if det_cfg.jitter_sigma > 0 and photon.any():
            jit = np.rint(
                rng.normal(0.0, det_cfg.jitter_sigma * PS_PER_S, int(photon.sum()))
            ).astype(np.int64)
            times = times.copy()
            times[photon] = np.clip(times[photon] + jit, 0, gate_width_ps - 1)
        gates = gates + gate_offset
        abs_t = gates * gate_period_ps + times
        return EventBlock(name, abs_t, gates, origins).sorted_by_time()

    block_a = station_block("A", cfg.detector_a, [
        (cc_t, cc_gate, cc_arm),
        (sp_ta, sp_gate, sp_swap),
        (la_t, la_gate, la_arm),
        (da_t, da_gate, np.full(n_da, ORIGIN_DARK, np.int8)),
    ])
    block_b = station_block("B", cfg.detector_b, [
        (cc_t, cc_gate, cc_arm),
        (sp_tb, sp_gate, (1 - sp_swap).astype(np.int8)),
        (lb_t, lb_gate, lb_arm),
        (db_t, db_gate, np.full(n_db, ORIGIN_DARK, np.int8)),
    ])
    return block_a, block_b


def _bin_worker(args):
    """Top-level entry so worker pools can pickle the per-bin generation."""
    child, cfg, rates, phase_a, phase_b, n_gates, offset = args
    rng = np.random.default_rng(child)
    return _simulate_bin(rng, cfg, rates, phase_a, phase_b, n_gates, offset)


def run_scan(
    seed,
    cfg: ApparatusConfigs,
    phase_schedule: list[tuple[float, float]],
    bin_width: float = 60.0,
    event_sink=None,
    workers: int = 1,
) -> FringeScan:
    """Simulate a full phase scan and bin the counts.

    ``phase_schedule`` is a list of (bin start time in s, scanned phase in
    radians); each entry becomes one bin of ``bin_width`` seconds. The
    scanned phase is applied to station B's interferometer on top of its
    static phase. Identical seed and configuration give bit-identical
    output regardless of ``workers``: bins draw from independently spawned
    child seeds, and the order-sensitive dead-time chain always runs
    sequentially in the caller. ``event_sink``, if given, receives the
    per-bin (EventBlock, EventBlock) pairs after dead-time filtering.
    """
    if not phase_schedule:
        raise ApparatusConfigError("phase schedule must be non-empty")
    starts = [s for s, _ in phase_schedule]
    if any(t2 <= t1 for t1, t2 in zip(starts, starts[1:])):
        raise ApparatusConfigError("phase schedule must be monotone in time")

    rates = gate_rates(cfg)
    det_a, det_b = cfg.detector_a, cfg.detector_b
    gates_per_bin = int(round(bin_width * det_a.gate_rate))
    dead_a, dead_b = _ps(det_a.dead_time), _ps(det_b.dead_time)

    children = np.random.SeedSequence(seed).spawn(len(phase_schedule))
    far_past = np.iinfo(np.int64).min // 2
    last_a, last_b = far_past, far_past

    n_bins = len(phase_schedule)
    singles_a = np.zeros(n_bins, np.int64)
    singles_b = np.zeros(n_bins, np.int64)
    coincidences = np.zeros(n_bins, np.int64)
    accidentals = np.zeros(n_bins, np.int64)
    phases = np.zeros(n_bins, float)

    jobs = [
        (children[i], cfg, rates, cfg.ifo_a.phase, cfg.ifo_b.phase + phase,
         gates_per_bin, i * gates_per_bin)
        for i, (_, phase) in enumerate(phase_schedule)
    ]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        executor = ProcessPoolExecutor(max_workers=workers)
        generated = executor.map(_bin_worker, jobs, chunksize=1)
    else:
        executor = None
        generated = map(_bin_worker, jobs)

    for i, (block_a, block_b) in enumerate(generated):
        phase = phase_schedule[i][1]
        if dead_a > 0 and len(block_a):
            keep, last_a = _dead_time_filter(block_a.time_ps, dead_a, last_a)
            block_a = EventBlock("A", block_a.time_ps[keep],
                                 block_a.gate_index[keep], block_a.origin[keep])
        if dead_b > 0 and len(block_b):
            keep, last_b = _dead_time_filter(block_b.time_ps, dead_b, last_b)
            block_b = EventBlock("B", block_b.time_ps[keep],
                                 block_b.gate_index[keep], block_b.origin[keep])

        batch = coincide(block_a, block_b, cfg.discriminator_window,
                         start_station=cfg.start_station)
        singles_a[i] = len(block_a)
        singles_b[i] = len(block_b)
        coincidences[i] = batch.n_coincidences
        accidentals[i] = batch.n_accidental
        phases[i] = phase
        if event_sink is not None:
            event_sink(block_a, block_b)

    if executor is not None:
        executor.shutdown()
    return FringeScan(
        bin_index=np.arange(n_bins, dtype=np.int64),
        phase=phases,
        singles_a=singles_a,
        singles_b=singles_b,
        coincidences=coincidences,
        bin_width=bin_width,
        truth_accidentals=accidentals,
    )

