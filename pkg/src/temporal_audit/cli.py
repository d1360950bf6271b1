"""Command-line interface: probe, analyze, simulate, report.

Exit codes: 0 success, 1 usage error, 2 data error, 3 transport error.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

from .errors import DataError, TransportError, UsageError
from .logio import JsonlLogSink, series_to_records, write_measurements
from .modulation import synth_modulated, synth_sines
from .probe import TRANSPORT_FAILED, ProbeConfig, run_schedule
from .report import REPORT_FILE, AnalysisConfig, render_report, run_analysis

_TZ_RE = re.compile(r"^([+-])(\d{2}):?(\d{2})$")


def parse_tz_offset(text: str) -> int:
    """Parse '+02:00' / '-0530' / 'Z' into signed minutes."""
    if text in ("Z", "z", "+00:00", "-00:00"):
        return 0
    m = _TZ_RE.match(text)
    if not m:
        raise UsageError(f"invalid timezone offset {text!r}; expected +HH:MM")
    sign = 1 if m.group(1) == "+" else -1
    hours, minutes = int(m.group(2)), int(m.group(3))
    if hours > 23 or minutes > 59:
        raise UsageError(f"timezone offset {text!r} out of range")
    return sign * (hours * 60 + minutes)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we map usage to 1
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="temporal-audit",
        description=(
            "Audit a stochastic networked service for time-invariant "
            "performance: probe it on a fixed schedule, then test the scored "
            "series for drift and periodic structure."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("probe", help="run the probe schedule from a config file")
    p.add_argument("--config", required=True, help="probe config JSON")
    p.add_argument("--log", required=True, help="JSONL log to append to")

    a = sub.add_parser("analyze", help="analyze a measurement log")
    a.add_argument("--log", required=True, help="JSONL measurement log")
    a.add_argument("--out", required=True, help="output directory")
    a.add_argument("--nperseg-div", type=int, default=4)
    a.add_argument("--nperm", type=int, default=1000)
    a.add_argument("--alpha", type=float, default=0.05)
    a.add_argument("--hac-days", type=float, default=7.0)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--tz-offset", default="+00:00")

    s = sub.add_parser("simulate", help="materialize a synthetic scenario log")
    s.add_argument("--scenario", required=True, help="scenario JSON file")
    s.add_argument("--out", required=True, help="JSONL log to write")

    r = sub.add_parser("report", help="render a stored report")
    r.add_argument("--in", dest="report_path", required=True)
    r.add_argument("--format", choices=("text", "csv"), default="text")
    return parser


def _load_json(path, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise UsageError(f"{what} file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{what} file {path} is not valid JSON: {exc}") from exc


def cmd_probe(config_path, log_path) -> int:
    cfg = ProbeConfig.from_mapping(_load_json(config_path, "probe config"))
    with JsonlLogSink(log_path) as sink:
        summary = run_schedule(cfg, sink)
    issued = sum(summary.outcomes.values())
    print(
        f"slots: {summary.slots_probed}/{summary.slots_total} probed, "
        f"{summary.slots_skipped} skipped; outcomes: {summary.outcomes}"
    )
    if issued and summary.outcomes[TRANSPORT_FAILED] == issued:
        raise TransportError("every request failed at the transport layer")
    return 0


def cmd_analyze(
    log_path,
    out_dir,
    *,
    nperseg_div: int = 4,
    n_perm: int = 1000,
    alpha: float = 0.05,
    hac_lag_days: float = 7.0,
    seed: int = 0,
    tz_offset_minutes: int = 0,
) -> dict:
    cfg = AnalysisConfig(
        nperseg_div=nperseg_div,
        n_perm=n_perm,
        alpha=alpha,
        hac_lag_days=hac_lag_days,
        seed=seed,
        tz_offset_minutes=tz_offset_minutes,
    )
    report = run_analysis(log_path, cfg, out_dir=out_dir)
    return report


def cmd_simulate(scenario_path, out_log_path) -> int:
    scenario = _load_json(scenario_path, "scenario")
    kind = scenario.get("kind")
    try:
        if kind == "sines":
            series = synth_sines(
                components=[tuple(c) for c in scenario["components"]],
                fs=scenario["fs"],
                duration=scenario["duration"],
                noise_sd=scenario.get("noise_sd", 0.0),
                seed=scenario.get("seed", 0),
            )
        elif kind == "modulated":
            series = synth_modulated(
                daily_profile=scenario["daily_profile"],
                weekly_envelope=scenario["weekly_envelope"],
                baseline=scenario.get("baseline", 0.0),
                noise_sd=scenario.get("noise_sd", 0.0),
                fs=scenario["fs"],
                days=scenario["days"],
                seed=scenario.get("seed", 0),
            )
        else:
            raise DataError(
                f"scenario kind must be 'sines' or 'modulated', got {kind!r}"
            )
    except KeyError as exc:
        raise DataError(f"scenario missing field {exc.args[0]!r}") from exc
    except ValueError as exc:
        raise DataError(f"invalid scenario: {exc}") from exc

    records = series_to_records(series, meta={"scenario": kind})
    write_measurements(out_log_path, records)
    print(f"wrote {len(records)} records to {out_log_path}")
    return 0


def cmd_report(report_path, fmt: str) -> int:
    report = _load_json(report_path, "report")
    try:
        sys.stdout.write(render_report(report, fmt))
    except (KeyError, TypeError) as exc:
        raise DataError(f"report file is missing expected fields: {exc}") from exc
    return 0


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        if args.command == "probe":
            return cmd_probe(args.config, args.log)
        if args.command == "analyze":
            out_dir = Path(args.out)
            cmd_analyze(
                args.log,
                out_dir,
                nperseg_div=args.nperseg_div,
                n_perm=args.nperm,
                alpha=args.alpha,
                hac_lag_days=args.hac_days,
                seed=args.seed,
                tz_offset_minutes=parse_tz_offset(args.tz_offset),
            )
            print(f"report written to {out_dir / REPORT_FILE}")
            return 0
        if args.command == "simulate":
            return cmd_simulate(args.scenario, args.out)
        if args.command == "report":
            return cmd_report(args.report_path, args.format)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
