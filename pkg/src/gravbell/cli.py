"""Command-line orchestration: budget, simulate, analyze, presets.

Exit codes: 0 ok, 1 configuration error, 2 runtime error, 3 degenerate
analysis.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    BellResult,
    DegenerateFitError,
    FringeScan,
    InsufficientSpanError,
    analyze_scan,
)
from .apparatus import ApparatusConfigError, run_scan
from .collapse import (
    MovingMass,
    SpacelikeResult,
    TimingBudget,
    UndefinedCollapseError,
    UnreachableDisplacementError,
    diosi_collapse_time,
    measurement_time,
    penrose_collapse_time,
    spacelike_check,
)
from .scenario import (
    PRESETS,
    ConfigError,
    Scenario,
    load_preset,
    parse_scenario,
    serialize_scenario,
)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_DEGENERATE = 3

CSV_HEADER = "bin_index,phase_rad,singles_a,singles_b,coincidences"


class MalformedScanError(ValueError):
    pass


def scan_to_csv(scan: FringeScan) -> str:
    lines = [CSV_HEADER]
    for i in range(len(scan)):
        lines.append(
            f"{int(scan.bin_index[i])},{float(scan.phase[i])!r},"
            f"{int(scan.singles_a[i])},{int(scan.singles_b[i])},{int(scan.coincidences[i])}"
        )
    return "\n".join(lines) + "\n"


def scan_from_csv(text: str, bin_width: float = 60.0) -> FringeScan:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise MalformedScanError(f"line 1: expected header {CSV_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise MalformedScanError(f"line {lineno}: expected 5 columns, got {len(parts)}")
        try:
            rows.append((int(parts[0]), float(parts[1]), int(parts[2]),
                         int(parts[3]), int(parts[4])))
        except ValueError as exc:
            raise MalformedScanError(f"line {lineno}: {exc}") from exc
    if not rows:
        raise MalformedScanError("scan file contains no data rows")
    cols = list(zip(*rows))
    return FringeScan(
        bin_index=np.asarray(cols[0], dtype=np.int64),
        phase=np.asarray(cols[1], dtype=float),
        singles_a=np.asarray(cols[2], dtype=np.int64),
        singles_b=np.asarray(cols[3], dtype=np.int64),
        coincidences=np.asarray(cols[4], dtype=np.int64),
        bin_width=bin_width,
    )


def compute_budget(sc: Scenario, include_piezo: bool = False):
    mass = sc.mirror_with_piezo if include_piezo else sc.mirror
    mass_at_d = MovingMass(mass.mass, mass.volume, sc.target_displacement)
    budget = measurement_time(sc.trigger_latency, sc.piezo_curve,
                              sc.target_displacement, mass)
    check = spacelike_check(budget, sc.geometry)
    return mass_at_d, budget, check


def budget_dict(sc: Scenario, mass: MovingMass, budget: TimingBudget,
                check: SpacelikeResult) -> dict:
    return {
        "collapse_time_diosi_s": diosi_collapse_time(mass),
        "collapse_time_penrose_s": penrose_collapse_time(mass),
        "trigger_latency_s": budget.trigger_latency,
        "displacement_time_s": budget.displacement_time,
        "collapse_time_s": budget.collapse_time,
        "total_measurement_time_s": budget.total,
        "light_travel_time_s": check.light_travel_time,
        "margin_s": check.margin,
        "separated": check.separated,
    }


def bell_dict(bell: BellResult) -> dict:
    return {
        "v_raw": bell.v_raw,
        "v_raw_error": bell.v_raw_error,
        "v_net": bell.v_net,
        "v_net_error": bell.v_net_error,
        "s_raw": bell.s_raw,
        "s_raw_error": bell.s_raw_error,
        "s_net": bell.s_net,
        "s_net_error": bell.s_net_error,
        "sigma_violation_raw": bell.sigma_violation_raw,
        "sigma_violation_net": bell.sigma_violation_net,
        "accidental_rate_per_min": bell.accidental_rate_per_min,
    }


def run_report(sc: Scenario, scan: FringeScan, bell: BellResult) -> dict:
    mass, budget, check = compute_budget(sc)
    mean_a, mean_b = scan.mean_singles_rate_hz() if len(scan) else (0.0, 0.0)
    acc = scan.truth_accidentals
    return {
        "software_version": __version__,
        "scenario": sc.name,
        "seed": sc.seed,
        "bell": bell_dict(bell),
        "rates": {
            "mean_coincidences_per_min":
                scan.mean_coincidence_rate_per_min() if len(scan) else 0.0,
            "mean_singles_a_hz": mean_a,
            "mean_singles_b_hz": mean_b,
            "truth_accidentals_per_min":
                float(np.mean(acc)) / scan.bin_minutes if acc is not None and len(scan) else 0.0,
        },
        "budget": budget_dict(sc, mass, budget, check),
        "config": serialize_scenario(sc),
    }


def _load_scenario(args) -> Scenario:
    if getattr(args, "config", None):
        text = Path(args.config).read_text()
        sc = parse_scenario(text)
        if args.seed is not None:
            from dataclasses import replace
            sc = replace(sc, seed=args.seed)
        if getattr(args, "duration", None) is not None:
            from dataclasses import replace
            sc = replace(sc, duration=args.duration)
        return sc
    return load_preset(args.scenario, seed=args.seed,
                       duration=getattr(args, "duration", None))


def cmd_presets(_args) -> int:
    for name in sorted(PRESETS):
        print(name)
    return EXIT_OK


def cmd_budget(args) -> int:
    sc = _load_scenario(args)
    mass, budget, check = compute_budget(sc, include_piezo=args.include_piezo)
    for key, value in budget_dict(sc, mass, budget, check).items():
        print(f"{key} = {value}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    sc = _load_scenario(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    event_file = None
    event_sink = None
    if args.emit_events:
        event_file = (out / "events.csv").open("w")
        event_file.write("station,time_ps,gate_index,origin\n")

        def event_sink(block_a, block_b):
            for block in (block_a, block_b):
                for line in block.lines():
                    event_file.write(line + "\n")

    schedule = sc.phase_schedule()
    try:
        if schedule:
            scan = run_scan(sc.seed, sc.apparatus, schedule,
                            bin_width=sc.bin_width, event_sink=event_sink,
                            workers=args.workers)
        else:
            empty = np.zeros(0, np.int64)
            scan = FringeScan(empty, np.zeros(0), empty, empty, empty,
                              bin_width=sc.bin_width, truth_accidentals=empty)
    finally:
        if event_file is not None:
            event_file.close()

    (out / "scan.csv").write_text(scan_to_csv(scan))
    acc_rate = 0.0
    if scan.truth_accidentals is not None and len(scan):
        acc_rate = float(np.mean(scan.truth_accidentals)) / scan.bin_minutes
    try:
        bell = analyze_scan(scan, accidental_rate_per_min=acc_rate)
        report = run_report(sc, scan, bell)
    except (DegenerateFitError, InsufficientSpanError) as exc:
        mass, budget, check = compute_budget(sc)
        report = {
            "software_version": __version__,
            "scenario": sc.name,
            "seed": sc.seed,
            "bell": None,
            "bell_skipped": str(exc),
            "rates": None,
            "budget": budget_dict(sc, mass, budget, check),
            "config": serialize_scenario(sc),
        }
    (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
    print(f"wrote {out / 'scan.csv'} and {out / 'report.json'}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    scan = scan_from_csv(Path(args.scan).read_text(), bin_width=args.bin_width)
    bell = analyze_scan(scan, accidental_rate_per_min=args.accidental_rate)
    print(json.dumps(bell_dict(bell), indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravbell",
        description="Franson Bell-test simulator with a collapse timing budget",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_args(p, with_duration=True):
        p.add_argument("--scenario", default="paper-2008",
                       help="preset name (see `gravbell presets`)")
        p.add_argument("--config", help="scenario config file overriding the preset")
        p.add_argument("--seed", type=int, default=None)
        if with_duration:
            p.add_argument("--duration", type=float, default=None,
                           help="run duration in seconds")

    p = sub.add_parser("presets", help="list scenario presets")
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("budget", help="measurement-time budget and light-cone check")
    add_scenario_args(p, with_duration=False)
    p.add_argument("--include-piezo", action="store_true",
                   help="use the mirror-plus-actuator mass instead of the mirror alone")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("simulate", help="run a scan and write scan.csv / report.json")
    add_scenario_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--emit-events", action="store_true",
                   help="also write the raw detection events")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="re-analyze a stored scan.csv")
    p.add_argument("scan", help="path to scan.csv")
    p.add_argument("--bin-width", type=float, default=60.0)
    p.add_argument("--accidental-rate", type=float, default=0.0,
                   help="flat accidental rate to subtract, per minute")
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ApparatusConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DegenerateFitError, InsufficientSpanError) as exc:
        print(f"analysis degenerate: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UndefinedCollapseError, UnreachableDisplacementError,
            MalformedScanError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
