"""Scheduled, replicated probing of an OpenAI-compatible chat endpoint.

Slots fire at absolute times t0 + i*interval; a slot the process misses
(beyond a small grace window) is left as a gap and never backfilled, since a
late probe would measure a different time. Replicates within a slot run
concurrently and every outcome is appended to the JSONL log as it completes.

The API key comes only from the TEMPORAL_AUDIT_API_KEY environment variable.
"""

from __future__ import annotations

import json
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Callable

import requests

from .errors import ParseFailure, UsageError
from .logio import format_rfc3339, parse_rfc3339
from .scoring import TaskSpec, parse_structured, score_response
from .validation import check_tz_aware

API_KEY_ENV = "TEMPORAL_AUDIT_API_KEY"
BACKOFF_BASE_SECONDS = 2.0
# a slot more than this fraction of the interval in the past is a gap
LATE_TOLERANCE = 0.1

SCORED = "scored"
PARSE_FAILED = "parse_failed"
TRANSPORT_FAILED = "transport_failed"


@dataclass(frozen=True)
class ProbeConfig:
    endpoint_url: str
    model_snapshot: str
    task: TaskSpec
    temperature: float = 1.0
    replicates_per_slot: int = 10
    interval: timedelta = timedelta(hours=3)
    start: datetime | None = None
    end: datetime | None = None
    request_timeout: float = 30.0
    max_retries: int = 3
    concurrency_limit: int = 5

    def __post_init__(self) -> None:
        if self.replicates_per_slot < 1:
            raise ValueError("replicates_per_slot must be >= 1")
        if self.interval < timedelta(minutes=1):
            raise ValueError("interval must be at least one minute")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.start is not None:
            check_tz_aware(self.start, "start")
        if self.end is not None:
            check_tz_aware(self.end, "end")

    @classmethod
    def from_mapping(cls, obj: dict) -> "ProbeConfig":
        try:
            task = TaskSpec.from_mapping(obj["task"])
            return cls(
                endpoint_url=str(obj["endpoint_url"]).rstrip("/"),
                model_snapshot=str(obj["model_snapshot"]),
                task=task,
                temperature=float(obj.get("temperature", 1.0)),
                replicates_per_slot=int(obj.get("replicates_per_slot", 10)),
                interval=timedelta(
                    minutes=float(obj.get("interval_minutes", 180))
                ),
                start=parse_rfc3339(obj["start"]) if "start" in obj else None,
                end=parse_rfc3339(obj["end"]) if "end" in obj else None,
                request_timeout=float(obj.get("request_timeout_seconds", 30.0)),
                max_retries=int(obj.get("max_retries", 3)),
                concurrency_limit=int(obj.get("concurrency_limit", 5)),
            )
        except KeyError as exc:
            raise UsageError(
                f"probe config missing field {exc.args[0]!r}"
            ) from exc


@dataclass(frozen=True)
class ProbeOutcome:
    slot_timestamp: datetime
    replicate_index: int
    status: str
    score: float | None
    latency_ms: float
    raw_response: str | None
    attempt_count: int

    def to_log_obj(self, cfg: ProbeConfig) -> dict:
        obj = {
            "ts": format_rfc3339(self.slot_timestamp),
            "rep": self.replicate_index,
            "score": self.score,
            "status": self.status,
            "latency_ms": round(self.latency_ms, 3),
            "attempts": self.attempt_count,
            "meta": {
                "model": cfg.model_snapshot,
                "temperature": str(cfg.temperature),
            },
        }
        if self.raw_response is not None:
            obj["raw"] = self.raw_response
        return obj


def _api_key(explicit: str | None = None) -> str:
    key = explicit if explicit is not None else os.environ.get(API_KEY_ENV)
    if not key:
        raise UsageError(
            f"no API key: set the {API_KEY_ENV} environment variable"
        )
    return key


def request_body(cfg: ProbeConfig) -> dict:
    """The fixed request body; identical for every replicate by construction."""
    return {
        "model": cfg.model_snapshot,
        "temperature": cfg.temperature,
        "messages": [
            {"role": "system", "content": cfg.task.system_prompt},
            {"role": "user", "content": cfg.task.user_prompt},
        ],
        "response_format": {"type": "json_object"},
    }


def issue_request(
    cfg: ProbeConfig,
    replicate_index: int,
    slot_timestamp: datetime,
    *,
    session: requests.Session | None = None,
    api_key: str | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ProbeOutcome:
    """One chat-completions request, scored.

    Timeouts and 5xx responses are retried with jittered exponential backoff
    (base 2 s) up to max_retries; 4xx means a configuration problem and is
    terminal. Unparseable response bodies are recorded as parse_failed and
    never retried.
    """
    key = _api_key(api_key)
    http = session or requests.Session()
    url = cfg.endpoint_url.rstrip("/") + "/chat/completions"
    headers = {"Authorization": f"Bearer {key}"}
    body = request_body(cfg)

    attempts = 0
    latency_ms = 0.0
    last_raw: str | None = None
    while True:
        attempts += 1
        start = time.monotonic()
        try:
            resp = http.post(
                url, json=body, headers=headers, timeout=cfg.request_timeout
            )
            latency_ms = (time.monotonic() - start) * 1000.0
            retryable = resp.status_code >= 500
            failed = resp.status_code != 200
            last_raw = resp.text
        except requests.RequestException:
            latency_ms = (time.monotonic() - start) * 1000.0
            retryable = True
            failed = True
            last_raw = None

        if not failed:
            break
        if retryable and attempts <= cfg.max_retries:
            backoff = BACKOFF_BASE_SECONDS * (2 ** (attempts - 1))
            sleep(backoff * random.uniform(0.5, 1.5))
            continue
        return ProbeOutcome(
            slot_timestamp=slot_timestamp,
            replicate_index=replicate_index,
            status=TRANSPORT_FAILED,
            score=None,
            latency_ms=latency_ms,
            raw_response=last_raw,
            attempt_count=attempts,
        )

    try:
        payload = resp.json()
        content = payload["choices"][0]["message"]["content"]
        answer = parse_structured(content, cfg.task)
        score = score_response(answer.selected, cfg.task)
    except (ParseFailure, KeyError, IndexError, TypeError, ValueError,
            json.JSONDecodeError):
        return ProbeOutcome(
            slot_timestamp=slot_timestamp,
            replicate_index=replicate_index,
            status=PARSE_FAILED,
            score=None,
            latency_ms=latency_ms,
            raw_response=last_raw,
            attempt_count=attempts,
        )
    return ProbeOutcome(
        slot_timestamp=slot_timestamp,
        replicate_index=replicate_index,
        status=SCORED,
        score=score,
        latency_ms=latency_ms,
        raw_response=content,
        attempt_count=attempts,
    )


@dataclass
class ScheduleSummary:
    slots_total: int = 0
    slots_probed: int = 0
    slots_skipped: int = 0
    outcomes: dict = field(
        default_factory=lambda: {SCORED: 0, PARSE_FAILED: 0, TRANSPORT_FAILED: 0}
    )


def run_schedule(
    cfg: ProbeConfig,
    log_sink,
    *,
    now_fn: Callable[[], datetime] | None = None,
    sleep_fn: Callable[[float], None] = time.sleep,
    api_key: str | None = None,
) -> ScheduleSummary:
    """Probe every slot from cfg.start to cfg.end (inclusive).

    Each outcome is appended to ``log_sink`` before the slot is considered
    complete. Log-write failures propagate (fatal); transport failures are
    recorded and the schedule continues.
    """
    if cfg.start is None or cfg.end is None:
        raise UsageError("probe config needs both start and end instants")
    _api_key(api_key)  # fail fast before the first slot

    now_fn = now_fn or (lambda: datetime.now(tz=cfg.start.tzinfo))
    summary = ScheduleSummary()
    session = requests.Session()
    grace = cfg.interval * LATE_TOLERANCE

    n_slots = int((cfg.end - cfg.start) / cfg.interval) + 1
    summary.slots_total = n_slots
    for i in range(n_slots):
        target = cfg.start + i * cfg.interval
        now = now_fn()
        if now > target + grace:
            summary.slots_skipped += 1  # missed while down; stays a gap
            continue
        wait = (target - now).total_seconds()
        if wait > 0:
            sleep_fn(wait)

        workers = min(cfg.concurrency_limit, cfg.replicates_per_slot)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    issue_request,
                    cfg,
                    rep,
                    target,
                    session=session,
                    api_key=api_key,
                    sleep=sleep_fn,
                )
                for rep in range(cfg.replicates_per_slot)
            ]
            for fut in as_completed(futures):
                outcome = fut.result()
                log_sink.append(outcome.to_log_obj(cfg))
                summary.outcomes[outcome.status] += 1
        summary.slots_probed += 1
    return summary
