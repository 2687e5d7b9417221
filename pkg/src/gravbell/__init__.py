"""Desk-scale simulator for a long-distance energy-time Bell test whose
measurement time is set by a gravitationally induced collapse criterion."""

__version__ = "0.1.0"

from .analysis import (
    BellResult,
    DegenerateFitError,
    FringeFit,
    FringeScan,
    InsufficientSpanError,
    analyze_scan,
    bell_report,
    fit_fringe,
    subtract_accidentals,
    subtract_accidentals_per_bin,
)
from .apparatus import (
    ApparatusConfigError,
    ApparatusConfigs,
    DetectorConfig,
    EventBlock,
    FiberLink,
    InterferometerConfig,
    SourceConfig,
    calibrate_excess_loss,
    coincide,
    detect,
    generate_pair_events,
    propagate_and_analyze,
    run_scan,
)
from .collapse import (
    FringeReadout,
    GeometryLayout,
    MovingMass,
    PiezoStepResponse,
    TimingBudget,
    UndefinedCollapseError,
    UnreachableDisplacementError,
    diosi_collapse_time,
    displacement_at,
    displacement_from_fringe,
    measurement_time,
    penrose_collapse_time,
    spacelike_check,
)
from .constants import CODATA, PhysicalConstants
from .correlations import (
    AnalyzerSetting,
    CorrelationModel,
    PhaseConvention,
    chsh_from_model,
    chsh_optimal_settings,
    chsh_s,
    coincidence_probability,
    correlation_coefficient,
    s_from_visibility,
)
from .scenario import ConfigError, Scenario, load_preset, parse_scenario, serialize_scenario

__all__ = [name for name in dir() if not name.startswith("_")]
