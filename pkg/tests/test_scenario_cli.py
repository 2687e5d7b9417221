"""Config format round-trips, preset contents, and CLI behavior."""

import json
import math

import numpy as np
import pytest

from gravbell.cli import (
    EXIT_CONFIG,
    EXIT_DEGENERATE,
    EXIT_OK,
    EXIT_RUNTIME,
    MalformedScanError,
    main,
    scan_from_csv,
    scan_to_csv,
)
from gravbell.scenario import (
    ConfigError,
    load_preset,
    paper_scenario,
    parse_quantity,
    parse_scenario,
    serialize_scenario,
)


class TestQuantityParsing:
    def test_unit_conversions(self):
        assert parse_quantity("600 ps", "time") == pytest.approx(600e-12)
        assert parse_quantity("1.3 ns", "time") == pytest.approx(1.3e-9)
        assert parse_quantity("267 mm", "length") == pytest.approx(0.267)
        assert parse_quantity("18 km", "length") == pytest.approx(18000.0)
        assert parse_quantity("0.9 mm3", "volume") == pytest.approx(0.9e-9)
        assert parse_quantity("2 mg", "mass") == pytest.approx(2e-6)
        assert parse_quantity("8 dB", "db") == 8.0
        assert parse_quantity("1 MHz", "frequency") == 1e6
        assert parse_quantity("90 deg", "angle") == pytest.approx(math.pi / 2)

    def test_rejects_wrong_dimension(self):
        with pytest.raises(ConfigError):
            parse_quantity("600 ps", "length")

    def test_rejects_missing_unit(self):
        with pytest.raises(ConfigError):
            parse_quantity("600", "time")

    def test_rejects_garbage_value(self):
        with pytest.raises(ConfigError):
            parse_quantity("abc ps", "time")

    def test_dimensionless_takes_bare_number(self):
        assert parse_quantity("0.07", "dimensionless") == 0.07
        with pytest.raises(ConfigError):
            parse_quantity("0.07 Hz", "dimensionless")


class TestScenarioRoundTrip:
    def test_serialize_parse_identity(self):
        sc = paper_scenario()
        assert parse_scenario(serialize_scenario(sc)) == sc

    def test_duplicate_key_rejected(self):
        text = serialize_scenario(paper_scenario())
        text += "scenario.seed = 1\n"
        with pytest.raises(ConfigError, match="duplicate"):
            parse_scenario(text)

    def test_unknown_key_rejected(self):
        text = serialize_scenario(paper_scenario()) + "source.color = blue\n"
        with pytest.raises(ConfigError, match="unknown"):
            parse_scenario(text)

    def test_missing_key_rejected(self):
        lines = serialize_scenario(paper_scenario()).splitlines()
        text = "\n".join(line for line in lines if not line.startswith("mirror.mass"))
        with pytest.raises(ConfigError, match="missing"):
            parse_scenario(text)

    def test_bad_unit_names_offending_key(self):
        text = serialize_scenario(paper_scenario()).replace(
            "source.window = 6e-10 s", "source.window = 6e-10 kg"
        )
        with pytest.raises(ConfigError, match="source.window"):
            parse_scenario(text)


class TestPresetContents:
    def test_paper_constants(self):
        sc = paper_scenario()
        assert sc.apparatus.source.pairs_per_window == 0.07
        assert sc.apparatus.source.window == 600e-12
        assert sc.apparatus.link_a.loss_db == 8.0
        assert sc.apparatus.link_b.loss_db == 8.0
        assert sc.apparatus.detector_a.efficiency == 0.10
        assert sc.apparatus.detector_a.dark_rate == 700.0
        assert sc.apparatus.detector_b.dark_rate == 1100.0
        assert sc.apparatus.detector_a.dead_time == 10e-6
        assert sc.apparatus.detector_a.gate_width == 100e-9
        assert sc.apparatus.detector_a.gate_rate == 1e6
        assert sc.apparatus.ifo_a.path_delay == 1.3e-9
        assert sc.apparatus.ifo_a.path_length_difference == 0.267
        assert sc.apparatus.model.intrinsic_visibility == 0.967
        assert sc.apparatus.discriminator_window == 600e-12
        assert sc.mirror.mass == 2e-6
        assert sc.mirror.volume == 0.9e-9
        assert sc.target_displacement == 12.6e-9
        assert sc.trigger_latency == 0.1e-6
        assert sc.readout.laser_wavelength == 633e-9
        assert sc.readout.peak_to_peak_signal == 2.4
        assert sc.readout.observed_change == 0.3
        assert sc.geometry.fiber_length_a == 8200.0
        assert sc.geometry.fiber_length_b == 10700.0
        assert sc.geometry.direct_distance == 18000.0
        assert sc.phase_stop == pytest.approx(13.0 * math.pi)
        assert sc.n_bins == 100

    def test_piezo_curve_anchor(self):
        from gravbell.collapse import displacement_at

        sc = paper_scenario()
        assert displacement_at(6e-6, sc.piezo_curve) == pytest.approx(12.6e-9, rel=1e-12)

    def test_calibrated_singles_targets(self):
        sc = paper_scenario()
        for det, link, target in (
            (sc.apparatus.detector_a, sc.apparatus.link_a, 5000.0),
            (sc.apparatus.detector_b, sc.apparatus.link_b, 4100.0),
        ):
            n_pairs = sc.apparatus.source.pairs_per_window * det.gate_width / sc.apparatus.source.window
            true_rate = (n_pairs * link.transmission * det.efficiency / 2.0
                         * det.gate_rate + det.dark_rate)
            observed = true_rate / (1.0 + true_rate * det.dead_time)
            assert observed == pytest.approx(target, rel=1e-9)

    def test_nearby_preset_differs_only_in_distance(self):
        near = load_preset("nearby-3km")
        far = paper_scenario()
        assert near.geometry.direct_distance == 3000.0
        assert near.apparatus == far.apparatus

    def test_unknown_preset_rejected(self):
        with pytest.raises(ConfigError):
            load_preset("no-such-preset")


class TestScanCsv:
    def test_round_trip(self):
        n = 12
        from gravbell.analysis import FringeScan

        scan = FringeScan(
            bin_index=np.arange(n, dtype=np.int64),
            phase=np.linspace(0, 7, n),
            singles_a=np.arange(n, dtype=np.int64) * 10,
            singles_b=np.arange(n, dtype=np.int64) * 11,
            coincidences=np.arange(n, dtype=np.int64),
            bin_width=60.0,
        )
        back = scan_from_csv(scan_to_csv(scan))
        assert np.array_equal(back.phase, scan.phase)
        assert np.array_equal(back.coincidences, scan.coincidences)

    def test_rejects_bad_header(self):
        with pytest.raises(MalformedScanError, match="line 1"):
            scan_from_csv("nope\n1,2,3,4,5\n")

    def test_rejects_short_row_with_line_number(self):
        good = "bin_index,phase_rad,singles_a,singles_b,coincidences\n"
        with pytest.raises(MalformedScanError, match="line 2"):
            scan_from_csv(good + "1,2,3\n")

    def test_rejects_empty_body(self):
        with pytest.raises(MalformedScanError, match="no data"):
            scan_from_csv("bin_index,phase_rad,singles_a,singles_b,coincidences\n")


class TestCliBudget:
    def test_budget_values(self, capsys):
        assert main(["budget", "--scenario", "paper-2008"]) == EXIT_OK
        out = dict(line.split(" = ") for line in capsys.readouterr().out.strip().splitlines())
        assert float(out["collapse_time_diosi_s"]) == pytest.approx(1.0691859703353414e-06, rel=1e-12)
        assert float(out["collapse_time_penrose_s"]) == pytest.approx(5.345929851676707e-07, rel=1e-12)
        assert float(out["total_measurement_time_s"]) == pytest.approx(7.1e-6, abs=0.05e-6)
        assert float(out["light_travel_time_s"]) == pytest.approx(6.004153713566737e-05, rel=1e-9)
        assert float(out["margin_s"]) == pytest.approx(5.294153713566737e-05, abs=0.2e-6)
        assert out["separated"] == "True"

    def test_budget_with_piezo_mass_is_faster(self, capsys):
        assert main(["budget", "--include-piezo"]) == EXIT_OK
        out = dict(line.split(" = ") for line in capsys.readouterr().out.strip().splitlines())
        # heavier moving mass collapses sooner, so the budget shrinks
        assert float(out["total_measurement_time_s"]) < 7.1e-6
        assert out["separated"] == "True"

    def test_nearby_preset_still_separated(self, capsys):
        assert main(["budget", "--scenario", "nearby-3km"]) == EXIT_OK
        out = dict(line.split(" = ") for line in capsys.readouterr().out.strip().splitlines())
        assert float(out["light_travel_time_s"]) == pytest.approx(1.0006922855944561e-05, rel=1e-9)
        assert out["separated"] == "True"

    def test_presets_listing(self, capsys):
        assert main(["presets"]) == EXIT_OK
        names = capsys.readouterr().out.split()
        assert "paper-2008" in names
        assert "nearby-3km" in names


class TestCliSimulateAnalyze:
    def test_empty_duration_emits_valid_empty_scan(self, tmp_path):
        out = tmp_path / "run"
        assert main(["simulate", "--duration", "0", "--out", str(out)]) == EXIT_OK
        text = (out / "scan.csv").read_text()
        assert text.splitlines()[0] == "bin_index,phase_rad,singles_a,singles_b,coincidences"
        assert len(text.splitlines()) == 1
        report = json.loads((out / "report.json").read_text())
        assert report["bell"] is None
        assert report["budget"]["separated"] is True

    def test_same_seed_byte_identical_csv(self, tmp_path):
        outs = []
        for name in ("one", "two"):
            out = tmp_path / name
            assert main(["simulate", "--duration", "120", "--seed", "9",
                         "--out", str(out)]) == EXIT_OK
            outs.append((out / "scan.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_simulate_then_standalone_analyze_matches(self, tmp_path):
        out = tmp_path / "run"
        assert main(["simulate", "--duration", "780", "--seed", "4",
                     "--out", str(out)]) == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        acc = report["rates"]["truth_accidentals_per_min"]
        assert main(["analyze", str(out / "scan.csv"),
                     "--accidental-rate", repr(acc)], ) == EXIT_OK

    def test_analyze_reproduces_report_exactly(self, tmp_path, capsys):
        out = tmp_path / "run"
        main(["simulate", "--duration", "780", "--seed", "8", "--out", str(out)])
        report = json.loads((out / "report.json").read_text())
        capsys.readouterr()
        acc = report["rates"]["truth_accidentals_per_min"]
        assert main(["analyze", str(out / "scan.csv"),
                     "--accidental-rate", repr(acc)]) == EXIT_OK
        bell = json.loads(capsys.readouterr().out)
        assert bell == report["bell"]

    def test_emit_events_writes_event_log(self, tmp_path):
        out = tmp_path / "run"
        assert main(["simulate", "--duration", "120", "--seed", "3",
                     "--emit-events", "--out", str(out)]) == EXIT_OK
        lines = (out / "events.csv").read_text().splitlines()
        assert lines[0] == "station,time_ps,gate_index,origin"
        assert len(lines) > 1000
        station, t, g, origin = lines[1].split(",")
        assert station in ("A", "B")
        assert int(t) >= 0
        assert origin in ("photon_short", "photon_long", "dark")

    def test_config_file_round_trip_through_cli(self, tmp_path, capsys):
        cfg_path = tmp_path / "scenario.cfg"
        cfg_path.write_text(serialize_scenario(paper_scenario()))
        assert main(["budget", "--config", str(cfg_path)]) == EXIT_OK
        out = dict(line.split(" = ") for line in capsys.readouterr().out.strip().splitlines())
        assert float(out["total_measurement_time_s"]) == pytest.approx(7.1e-6, abs=0.05e-6)


class TestCliExitCodes:
    def test_unknown_preset_is_config_error(self, capsys):
        assert main(["budget", "--scenario", "bogus"]) == EXIT_CONFIG

    def test_missing_scan_file_is_config_error(self):
        assert main(["analyze", "/no/such/scan.csv"]) == EXIT_CONFIG

    def test_malformed_scan_is_runtime_error(self, tmp_path):
        bad = tmp_path / "scan.csv"
        bad.write_text("this,is,not,a,scan\n")
        assert main(["analyze", str(bad)]) == EXIT_RUNTIME

    def test_all_zero_scan_is_degenerate(self, tmp_path):
        header = "bin_index,phase_rad,singles_a,singles_b,coincidences\n"
        rows = "".join(f"{i},{i * 0.7},0,0,0\n" for i in range(20))
        path = tmp_path / "scan.csv"
        path.write_text(header + rows)
        assert main(["analyze", str(path)]) == EXIT_DEGENERATE

    def test_broken_config_file_is_config_error(self, tmp_path):
        path = tmp_path / "broken.cfg"
        path.write_text("scenario.name = x\n")
        assert main(["budget", "--config", str(path)]) == EXIT_CONFIG
