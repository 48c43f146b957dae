import json
from pathlib import Path

import pytest

from ringalert.cli import build_parser, main
from tests.conftest import SAMPLE_LOG_ROWS


def run_cli(args) -> int:
    return main([str(a) for a in args])


def write_sample_log(path: Path, extra_rows=()) -> Path:
    log = path / "stream.txt"
    log.write_text("\n".join(list(SAMPLE_LOG_ROWS) + list(extra_rows)) + "\n")
    return log


def dir_bytes(path: Path) -> dict:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


class TestParserContract:
    def test_every_flag_is_documented(self):
        parser = build_parser()
        subparsers = next(
            a for a in parser._actions if isinstance(a.choices, dict)
        )
        assert set(subparsers.choices) == {"ingest", "analyze", "simulate", "detect", "evaluate"}
        for name, sub in subparsers.choices.items():
            help_text = sub.format_help()
            for action in sub._actions:
                for option in action.option_strings:
                    assert option in help_text, f"{name}: {option} missing from --help"

    def test_unknown_flag_exits_one(self):
        with pytest.raises(SystemExit) as exc:
            run_cli(["ingest", "--nonsense"])
        assert exc.value.code == 1

    def test_missing_subcommand_exits_one(self):
        with pytest.raises(SystemExit) as exc:
            run_cli([])
        assert exc.value.code == 1


class TestIngestCommand:
    def test_happy_path(self, tmp_path, capsys):
        log = write_sample_log(tmp_path, ["corrupted row"])
        report = tmp_path / "out"
        assert run_cli(["ingest", "--input", log, "--report", report]) == 0
        summary = json.loads((report / "ingest_summary.json").read_text())
        assert summary["report"]["accepted"] == 7
        assert summary["report"]["malformed"] == 1
        assert summary["records_per_satellite"] == {"115": 7}
        assert "accepted 7" in capsys.readouterr().out

    def test_missing_input_is_data_error(self, tmp_path, capsys):
        assert run_cli(["ingest", "--input", tmp_path / "nope.txt",
                        "--report", tmp_path / "r"]) == 2
        assert "error" in capsys.readouterr().err

    def test_normalized_output_parses_back(self, tmp_path):
        log = write_sample_log(tmp_path)
        normalized = tmp_path / "normalized.txt"
        assert run_cli(["ingest", "--input", log, "--report", tmp_path / "r",
                        "--normalized-out", normalized]) == 0
        assert run_cli(["ingest", "--input", normalized, "--report", tmp_path / "r2"]) == 0

    def test_report_dir_env_fallback(self, tmp_path, monkeypatch):
        log = write_sample_log(tmp_path)
        env_dir = tmp_path / "envreports"
        monkeypatch.setenv("RINGALERT_REPORT_DIR", str(env_dir))
        monkeypatch.chdir(tmp_path)
        assert run_cli(["ingest", "--input", log]) == 0
        assert (env_dir / "ingest_summary.json").exists()


class TestSimulateCommand:
    def test_deterministic_output(self, tmp_path):
        out_a = tmp_path / "a.txt"
        out_b = tmp_path / "b.txt"
        args = ["simulate", "--per", 0.99, "--duration", 300, "--seed", 7,
                "--n-sats", 11, "--planes", 1, "--plane-nodes", "0",
                "--inclination", 90]
        assert run_cli(args + ["--output", out_a]) == 0
        assert run_cli(args + ["--output", out_b]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()
        assert out_a.stat().st_size > 0

    def test_seed_matters(self, tmp_path):
        base = ["simulate", "--per", 0.99, "--duration", 300, "--n-sats", 11,
                "--planes", 1, "--plane-nodes", "0", "--inclination", 90]
        run_cli(base + ["--seed", 1, "--output", tmp_path / "a.txt"])
        run_cli(base + ["--seed", 2, "--output", tmp_path / "b.txt"])
        assert (tmp_path / "a.txt").read_bytes() != (tmp_path / "b.txt").read_bytes()

    def test_output_ingests_cleanly(self, tmp_path):
        out = tmp_path / "sim.txt"
        run_cli(["simulate", "--duration", 30, "--n-sats", 11, "--planes", 1,
                 "--plane-nodes", "0", "--inclination", 90, "--output", out])
        report = tmp_path / "r"
        assert run_cli(["ingest", "--input", out, "--report", report]) == 0
        summary = json.loads((report / "ingest_summary.json").read_text())
        assert summary["report"]["quarantined"] == 0
        assert summary["report"]["accepted"] > 0

    def test_scenario_file(self, tmp_path):
        scenario = {
            "receiver": {"start": {"lat_deg": 0.0, "lon_deg": 0.0},
                         "course_deg": 0.0, "speed_kmh": 40.0},
            "spoof": {"start_s": 0.0, "offset_course_deg": 90.0, "offset_speed_kmh": 30.0},
        }
        scenario_path = tmp_path / "scenario.json"
        scenario_path.write_text(json.dumps(scenario))
        out = tmp_path / "sim.txt"
        track = tmp_path / "track.txt"
        assert run_cli(["simulate", "--duration", 60, "--n-sats", 11, "--planes", 1,
                        "--plane-nodes", "0", "--inclination", 90,
                        "--scenario", scenario_path, "--output", out,
                        "--track-out", track, "--track-interval-s", 30]) == 0
        lines = [l for l in track.read_text().splitlines() if not l.startswith("#")]
        assert len(lines) == 3  # t = 0, 30, 60


class TestAnalyzeCommand:
    def test_reports_and_determinism(self, tmp_path):
        stream = tmp_path / "sim.txt"
        run_cli(["simulate", "--duration", 1200, "--per", 0.5, "--seed", 3,
                 "--n-sats", 11, "--planes", 1, "--plane-nodes", "0",
                 "--inclination", 90, "--output", stream])
        rep_a, rep_b = tmp_path / "ra", tmp_path / "rb"
        args = ["analyze", "--input", stream, "--receiver", "0,0"]
        assert run_cli(args + ["--report", rep_a]) == 0
        assert run_cli(args + ["--report", rep_b]) == 0
        assert dir_bytes(rep_a) == dir_bytes(rep_b)
        summary = json.loads((rep_a / "analyze_summary.json").read_text())
        assert summary["speed"]["samples"] > 0
        assert summary["interarrival"]["max_grid_residual_s"] < 1e-9
        assert summary["coverage"]["max_km"] <= 1625.0 + 1e-6
        assert (rep_a / "speed_histogram.tsv").exists()
        assert (rep_a / "passes.tsv").exists()

    def test_table1_style_input(self, tmp_path):
        log = write_sample_log(tmp_path)
        report = tmp_path / "r"
        assert run_cli(["analyze", "--input", log, "--report", report]) == 0
        summary = json.loads((report / "analyze_summary.json").read_text())
        assert summary["passes"]["count"] == 1


class TestDetectCommand:
    def _simulate_scenario(self, tmp_path, spoof):
        stream = tmp_path / "sim.txt"
        track = tmp_path / "track.txt"
        args = ["simulate", "--duration", 600, "--per", 0.2, "--seed", 5,
                "--n-sats", 22, "--planes", 2, "--plane-nodes=-0.02,0.02",
                "--inclination", 90, "--motion", "0,0,0,40",
                "--output", stream, "--track-out", track, "--track-interval-s", 10]
        if spoof:
            args += ["--spoof", "0,90,300"]  # 50 km detour by t = 600 s
        assert run_cli(args) == 0
        return stream, track

    def test_spoofed_run_alarms(self, tmp_path):
        stream, track = self._simulate_scenario(tmp_path, spoof=True)
        report = tmp_path / "r"
        assert run_cli(["detect", "--input", stream, "--threshold-km", 20,
                        "--window-n", 500, "--gnss-track", track,
                        "--motion", "0,0,0,40", "--report", report]) == 0
        summary = json.loads((report / "detect_summary.json").read_text())
        assert summary["windows"] >= 1
        assert summary["alarms"] >= 1
        table = (report / "detect_windows.tsv").read_text().splitlines()
        assert table[0].split("\t") == ["window", "t_ref", "n_used", "i_lat", "i_lon",
                                        "g_lat", "g_lon", "deviation_km", "alarm"]

    def test_window_larger_than_stream_is_data_error(self, tmp_path):
        stream, track = self._simulate_scenario(tmp_path, spoof=False)
        assert run_cli(["detect", "--input", stream, "--threshold-km", 20,
                        "--window-n", 10_000_000, "--gnss-track", track,
                        "--report", tmp_path / "r"]) == 2


class TestEvaluateCommand:
    def test_small_grid(self, tmp_path):
        report = tmp_path / "r"
        assert run_cli(["evaluate", "--windows", 20, "--n-grid", "10,50",
                        "--thresholds", "10,20", "--per", 0.5, "--seed", 2,
                        "--n-sats", 22, "--planes", 2, "--plane-nodes=-0.02,0.02",
                        "--inclination", 90, "--receiver", "0,0",
                        "--report", report]) == 0
        summary = json.loads((report / "evaluate_summary.json").read_text())
        assert set(summary["rates"]) == {"10:10.0", "10:20.0", "50:10.0", "50:20.0"}
        assert (report / "fp_rates.tsv").exists()
        assert (report / "fp_fits.tsv").exists()
