"""Command-line interface: wiring, exit codes, and pipeline round-trips."""

from __future__ import annotations

import json

import numpy as np
import pytest

from temporal_audit import read_measurements
from temporal_audit.cli import main, parse_tz_offset

SINES_SCENARIO = {
    "kind": "sines",
    "fs": 8,
    "duration": 56,
    "noise_sd": 0.01,
    "seed": 3,
    "components": [[0.05, 1.0, 0.0], [0.03, 2.0, 1.0]],
}


def write_scenario(tmp_path, scenario):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(scenario))
    return path


class TestParseTzOffset:
    def test_positive(self):
        assert parse_tz_offset("+02:00") == 120

    def test_negative(self):
        assert parse_tz_offset("-05:30") == -330

    def test_zulu(self):
        assert parse_tz_offset("Z") == 0

    def test_compact(self):
        assert parse_tz_offset("+0200") == 120

    def test_invalid(self):
        from temporal_audit import UsageError

        with pytest.raises(UsageError):
            parse_tz_offset("CEST")


class TestExitCodes:
    def test_no_arguments_is_usage_error(self, capsys):
        assert main([]) == 1
        assert "usage error" in capsys.readouterr().err

    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert main(["frobnicate"]) == 1

    def test_missing_required_flag_is_usage_error(self, capsys):
        assert main(["analyze", "--log", "x.jsonl"]) == 1  # no --out

    def test_missing_log_file_is_data_error(self, tmp_path, capsys):
        code = main(
            ["analyze", "--log", str(tmp_path / "absent.jsonl"),
             "--out", str(tmp_path / "out")]
        )
        assert code == 2
        assert "data error" in capsys.readouterr().err

    def test_invalid_scenario_json_is_data_error(self, tmp_path, capsys):
        bad = tmp_path / "scenario.json"
        bad.write_text("{not json")
        code = main(
            ["simulate", "--scenario", str(bad), "--out", str(tmp_path / "o.jsonl")]
        )
        assert code == 2

    def test_unknown_scenario_kind_is_data_error(self, tmp_path):
        path = write_scenario(tmp_path, {"kind": "fractal"})
        assert main(
            ["simulate", "--scenario", str(path),
             "--out", str(tmp_path / "o.jsonl")]
        ) == 2

    def test_missing_probe_config_is_usage_error(self, tmp_path):
        assert main(
            ["probe", "--config", str(tmp_path / "absent.json"),
             "--log", str(tmp_path / "log.jsonl")]
        ) == 1

    def test_probe_without_api_key_is_usage_error(self, tmp_path, monkeypatch):
        from temporal_audit.probe import API_KEY_ENV

        monkeypatch.delenv(API_KEY_ENV, raising=False)
        cfg = {
            "endpoint_url": "http://127.0.0.1:9/v1",
            "model_snapshot": "m",
            "task": {
                "options": ["A", "B"],
                "key": ["A"],
                "system_prompt": "s",
                "user_prompt": "u",
            },
            "start": "2025-01-06T00:00:00Z",
            "end": "2025-01-06T00:00:00Z",
        }
        path = tmp_path / "probe.json"
        path.write_text(json.dumps(cfg))
        assert main(
            ["probe", "--config", str(path), "--log", str(tmp_path / "l.jsonl")]
        ) == 1

    def test_probe_all_transport_failures_is_exit_3(self, tmp_path, monkeypatch):
        from datetime import datetime, timezone

        from temporal_audit.probe import API_KEY_ENV

        monkeypatch.setenv(API_KEY_ENV, "k")
        now = datetime.now(timezone.utc)
        cfg = {
            "endpoint_url": "http://127.0.0.1:9/v1",  # connection refused
            "model_snapshot": "m",
            "task": {
                "options": ["A", "B"],
                "key": ["A"],
                "system_prompt": "s",
                "user_prompt": "u",
            },
            "replicates_per_slot": 2,
            "max_retries": 0,
            "request_timeout_seconds": 0.5,
            # a single slot at "now" (grace window keeps it live)
            "start": now.strftime("%Y-%m-%dT%H:%M:%S+00:00"),
            "end": now.strftime("%Y-%m-%dT%H:%M:%S+00:00"),
        }
        path = tmp_path / "probe.json"
        path.write_text(json.dumps(cfg))
        log = tmp_path / "l.jsonl"
        assert main(["probe", "--config", str(path), "--log", str(log)]) == 3
        # the failures were still logged before exiting
        assert log.read_text().count("transport_failed") == 2


class TestSimulate:
    def test_sines_scenario_writes_log(self, tmp_path):
        scenario = write_scenario(tmp_path, SINES_SCENARIO)
        out = tmp_path / "log.jsonl"
        assert main(["simulate", "--scenario", str(scenario),
                     "--out", str(out)]) == 0
        recs, skipped = read_measurements(out)
        assert len(recs) == 448
        assert skipped == 0

    def test_modulated_scenario_writes_log(self, tmp_path):
        scenario = write_scenario(
            tmp_path,
            {
                "kind": "modulated",
                "fs": 8,
                "days": 28,
                "baseline": 0.6,
                "noise_sd": 0.02,
                "seed": 1,
                "daily_profile": list(np.sin(2 * np.pi * np.arange(24) / 24)),
                "weekly_envelope": [0.1, 0.05, 0.0, -0.05, -0.1, -0.05, 0.0],
            },
        )
        out = tmp_path / "log.jsonl"
        assert main(["simulate", "--scenario", str(scenario),
                     "--out", str(out)]) == 0
        recs, _ = read_measurements(out)
        assert len(recs) == 224

    def test_scenario_missing_field_is_data_error(self, tmp_path):
        scenario = write_scenario(tmp_path, {"kind": "sines", "fs": 8})
        assert main(["simulate", "--scenario", str(scenario),
                     "--out", str(tmp_path / "o.jsonl")]) == 2


class TestAnalyzeAndReport:
    def run_pipeline(self, tmp_path, extra=()):
        scenario = write_scenario(tmp_path, SINES_SCENARIO)
        log = tmp_path / "log.jsonl"
        out = tmp_path / "out"
        assert main(["simulate", "--scenario", str(scenario),
                     "--out", str(log)]) == 0
        args = ["analyze", "--log", str(log), "--out", str(out),
                "--nperm", "200", *extra]
        assert main(args) == 0
        return out

    def test_analyze_writes_report_and_sidecars(self, tmp_path):
        out = self.run_pipeline(tmp_path)
        for name in ("report.json", "spectrum.csv", "peaks.json",
                     "slot_means.csv"):
            assert (out / name).exists(), name

    def test_report_contents(self, tmp_path):
        out = self.run_pipeline(tmp_path)
        report = json.loads((out / "report.json").read_text())
        assert report["series_summary"]["n_slots"] == 448
        assert report["series_summary"]["fs_per_day"] == pytest.approx(8.0)
        peak_freqs = [p["freq_per_day"] for p in report["peaks"]]
        assert any(abs(f - 1.0) < 0.05 for f in peak_freqs)
        assert any(abs(f - 2.0) < 0.05 for f in peak_freqs)
        assert report["config_echo"]["n_perm"] == 200

    def test_flags_echoed(self, tmp_path):
        out = self.run_pipeline(
            tmp_path,
            extra=["--alpha", "0.01", "--seed", "9", "--hac-days", "3",
                   "--nperseg-div", "8", "--tz-offset", "+02:00"],
        )
        echo = json.loads((out / "report.json").read_text())["config_echo"]
        assert echo["alpha"] == 0.01
        assert echo["seed"] == 9
        assert echo["hac_lag_days"] == 3.0
        assert echo["nperseg_div"] == 8
        assert echo["tz_offset_minutes"] == 120

    def test_report_text_rendering(self, tmp_path, capsys):
        out = self.run_pipeline(tmp_path)
        capsys.readouterr()  # drop pipeline chatter
        assert main(["report", "--in", str(out / "report.json"),
                     "--format", "text"]) == 0
        text = capsys.readouterr().out
        assert "Drift" in text
        assert "Peaks" in text

    def test_report_csv_rendering(self, tmp_path, capsys):
        out = self.run_pipeline(tmp_path)
        capsys.readouterr()  # drop pipeline chatter
        assert main(["report", "--in", str(out / "report.json"),
                     "--format", "csv"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0].startswith("period,freq_per_day,power")

    def test_report_on_garbage_json_is_data_error(self, tmp_path):
        bad = tmp_path / "report.json"
        bad.write_text(json.dumps({"peaks": "nope"}))
        assert main(["report", "--in", str(bad), "--format", "text"]) == 2
