"""Shared fixtures and the acceptance-summary terminal hook.

Tests marked ``@pytest.mark.criterion(n, "title")`` are aggregated into one
``ACCEPTANCE <n> <PASS|FAIL|SKIP>`` line each at the end of the run, so the
acceptance checklist can be read off a full ``pytest -v`` transcript.
"""

from __future__ import annotations

import json
from collections import defaultdict
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from temporal_audit import MeasurementRecord, format_rfc3339

T0 = datetime(2025, 1, 6, 0, 0, tzinfo=timezone.utc)  # a Monday, 00:00 UTC


def make_records(values, fs=8.0, t0=T0, replicates=1):
    """One MeasurementRecord per (slot, replicate) from slot values."""
    dt = timedelta(seconds=86400.0 / fs)
    records = []
    for i, v in enumerate(values):
        for rep in range(replicates):
            records.append(
                MeasurementRecord(
                    timestamp=t0 + i * dt, replicate_index=rep, score=float(v)
                )
            )
    return records


def write_log(path, records, meta=None):
    """Write records as a JSONL measurement log; returns the path."""
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {
                "ts": format_rfc3339(r.timestamp),
                "rep": r.replicate_index,
                "score": r.score,
            }
            if meta:
                obj["meta"] = meta
            fh.write(json.dumps(obj, sort_keys=True) + "\n")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "criterion(n, title): tag a test as part of acceptance criterion n",
    )
    config._criterion_results = defaultdict(list)
    config._criterion_titles = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n = marker.args[0]
    title = marker.args[1] if len(marker.args) > 1 else ""
    cfg = item.config
    cfg._criterion_titles.setdefault(n, title)
    if report.when == "call" or (report.when == "setup" and report.skipped):
        cfg._criterion_results[n].append(report.outcome)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = getattr(config, "_criterion_results", None)
    if not results:
        return
    tw = terminalreporter
    tw.section("acceptance summary")
    for n in sorted(results):
        outcomes = results[n]
        if any(o == "failed" for o in outcomes):
            status = "FAIL"
        elif outcomes and all(o == "skipped" for o in outcomes):
            status = "SKIP"
        else:
            status = "PASS"
        title = config._criterion_titles.get(n, "")
        tw.write_line(f"ACCEPTANCE {n:>2} {status}  {title}")
