"""JSON-lines measurement log: durable appends, tolerant reads, CSV export.

One JSON object per line with fields ``ts`` (RFC 3339 with offset), ``rep``
(int), ``score`` (number, or null for failed probes), optional ``raw`` and
``meta``; probe outcomes add ``status``, ``latency_ms``, ``attempts``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import threading
import warnings
from datetime import datetime
from pathlib import Path
from typing import Iterable

from .errors import DataError
from .series import EvenSeries, MeasurementRecord


def parse_rfc3339(text: str) -> datetime:
    """Parse an RFC 3339 timestamp; a trailing Z means UTC."""
    if not isinstance(text, str):
        raise DataError(f"timestamp must be a string, got {type(text).__name__}")
    # Python 3.10's fromisoformat rejects the Z suffix
    ts_text = text[:-1] + "+00:00" if text.endswith(("Z", "z")) else text
    try:
        ts = datetime.fromisoformat(ts_text)
    except ValueError as exc:
        raise DataError(f"invalid timestamp {text!r}: {exc}") from exc
    if ts.tzinfo is None:
        raise DataError(f"timestamp {text!r} lacks a UTC offset")
    return ts


def format_rfc3339(ts: datetime) -> str:
    return ts.isoformat()


def _record_from_obj(obj: dict, lineno: int) -> MeasurementRecord | None:
    """Build a record from one parsed log line; None for non-scored lines."""
    if not isinstance(obj, dict):
        raise DataError(f"log line {lineno}: expected a JSON object")
    try:
        ts = parse_rfc3339(obj["ts"])
        rep = obj["rep"]
    except KeyError as exc:
        raise DataError(f"log line {lineno}: missing field {exc.args[0]!r}")
    if not isinstance(rep, int) or isinstance(rep, bool) or rep < 0:
        raise DataError(f"log line {lineno}: 'rep' must be a non-negative int")

    if "score" not in obj:
        raise DataError(f"log line {lineno}: missing required field 'score'")
    score = obj["score"]
    status = obj.get("status", "scored")
    if score is None or status != "scored":
        return None
    if not isinstance(score, (int, float)) or isinstance(score, bool):
        raise DataError(f"log line {lineno}: 'score' must be a number")
    if not math.isfinite(float(score)):
        raise DataError(f"log line {lineno}: 'score' must be finite")

    raw = obj.get("raw")
    if raw is not None and not isinstance(raw, str):
        raise DataError(f"log line {lineno}: 'raw' must be a string")
    meta = obj.get("meta") or {}
    if not isinstance(meta, dict):
        raise DataError(f"log line {lineno}: 'meta' must be an object")
    return MeasurementRecord(
        timestamp=ts,
        replicate_index=rep,
        score=float(score),
        raw_response=raw,
        metadata={str(k): str(v) for k, v in meta.items()},
    )


def read_measurements(path) -> tuple[list[MeasurementRecord], int]:
    """Read a JSONL log; returns (scored records, skipped line count).

    Skipped lines are failed-probe entries (null score / non-scored status)
    and at most one truncated final line. Malformed interior lines raise
    DataError: they indicate corruption, not an interrupted write.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"log file not found: {path}")
    records: list[MeasurementRecord] = []
    skipped = 0
    text = path.read_text(encoding="utf-8")
    ends_complete = text.endswith("\n") or text == ""
    lines = text.split("\n")
    # a trailing newline yields one empty tail element; drop it
    if lines and lines[-1] == "":
        lines.pop()
    last = len(lines)
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            if lineno == last and not ends_complete:
                warnings.warn(
                    f"{path}: skipping truncated final line {lineno}",
                    stacklevel=2,
                )
                skipped += 1
                continue
            raise DataError(f"{path}: malformed log line {lineno}: {exc}") from exc
        rec = _record_from_obj(obj, lineno)
        if rec is None:
            skipped += 1
        else:
            records.append(rec)
    return records, skipped


class JsonlLogSink:
    """Append-only, crash-consistent log writer.

    On open, a truncated final line left by a crash is moved to
    ``<path>.quarantine`` so the log always contains complete lines. Each
    append is flushed and fsynced before returning.
    """

    def __init__(self, path) -> None:
        self.path = Path(path)
        self._lock = threading.Lock()
        self._quarantine_partial_tail()
        self._fh = self.path.open("a", encoding="utf-8")

    def _quarantine_partial_tail(self) -> None:
        if not self.path.exists() or self.path.stat().st_size == 0:
            return
        with self.path.open("rb+") as fh:
            fh.seek(-1, os.SEEK_END)
            if fh.read(1) == b"\n":
                return
            # walk back to the start of the incomplete last line
            data = self.path.read_bytes()
            cut = data.rfind(b"\n") + 1
            fragment = data[cut:]
            fh.truncate(cut)
        with self.path.with_suffix(self.path.suffix + ".quarantine").open(
            "ab"
        ) as qf:
            qf.write(fragment + b"\n")

    def append(self, obj: dict) -> None:
        line = json.dumps(obj, ensure_ascii=False, sort_keys=True)
        with self._lock:
            self._fh.write(line + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self._lock:
            self._fh.close()

    def __enter__(self) -> "JsonlLogSink":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def record_to_obj(rec: MeasurementRecord) -> dict:
    obj: dict = {
        "ts": format_rfc3339(rec.timestamp),
        "rep": rec.replicate_index,
        "score": rec.score,
    }
    if rec.raw_response is not None:
        obj["raw"] = rec.raw_response
    if rec.metadata:
        obj["meta"] = dict(rec.metadata)
    return obj


def write_measurements(path, records: Iterable[MeasurementRecord]) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_obj(rec), sort_keys=True) + "\n")


def series_to_records(
    series: EvenSeries, meta: dict | None = None
) -> list[MeasurementRecord]:
    """Flatten an EvenSeries into records (observed slots only)."""
    records = []
    for i, point in enumerate(series.points):
        if point.missing:
            continue
        ts = series.timestamp(i)
        for rep, score in enumerate(point.replicate_scores):
            records.append(
                MeasurementRecord(
                    timestamp=ts,
                    replicate_index=rep,
                    score=score,
                    metadata=dict(meta or {}),
                )
            )
    return records


def export_csv(path, records: Iterable[MeasurementRecord]) -> None:
    """Write records as CSV with header ts,rep,score."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ts", "rep", "score"])
        for rec in records:
            writer.writerow(
                [format_rfc3339(rec.timestamp), rec.replicate_index, rec.score]
            )
