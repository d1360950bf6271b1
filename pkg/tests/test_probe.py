"""Probe transport: request shape, retry policy, scoring, and scheduling.

A scripted local HTTP server plays the chat-completions endpoint, so these
tests exercise the real network stack without leaving the machine.
"""

from __future__ import annotations

import json
import threading
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from temporal_audit import (
    PARSE_FAILED,
    SCORED,
    TRANSPORT_FAILED,
    ProbeConfig,
    TaskSpec,
    UsageError,
    issue_request,
    request_body,
    run_schedule,
)
from temporal_audit.probe import API_KEY_ENV

T0 = datetime(2025, 1, 6, 0, 0, tzinfo=timezone.utc)

GOOD_CONTENT = json.dumps({"solution_path": "steps", "answer": "D"})
GOOD_BODY = json.dumps(
    {"choices": [{"message": {"content": GOOD_CONTENT}}]}
)


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        payload = json.loads(self.rfile.read(length) or b"{}")
        self.server.requests.append(
            {
                "path": self.path,
                "auth": self.headers.get("Authorization"),
                "body": payload,
            }
        )
        if self.server.script:
            status, body = self.server.script.pop(0)
        else:
            status, body = 200, GOOD_BODY
        data = body.encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):  # keep test output clean
        pass


@pytest.fixture
def server():
    srv = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    srv.requests = []
    srv.script = []
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield srv
    srv.shutdown()
    srv.server_close()


def make_cfg(server, **overrides):
    task = TaskSpec(
        option_labels=("A", "B", "C", "D"),
        answer_key=frozenset({"D"}),
        system_prompt="sys",
        user_prompt="user",
    )
    defaults = dict(
        endpoint_url=f"http://127.0.0.1:{server.server_address[1]}/v1",
        model_snapshot="test-model-2025-01-01",
        task=task,
        temperature=1.0,
        replicates_per_slot=2,
        interval=timedelta(hours=3),
        request_timeout=5.0,
        max_retries=3,
        concurrency_limit=2,
    )
    defaults.update(overrides)
    return ProbeConfig(**defaults)


class TestIssueRequest:
    def test_happy_path_scored(self, server):
        cfg = make_cfg(server)
        out = issue_request(cfg, 0, T0, api_key="k")
        assert out.status == SCORED
        assert out.score == 1.0
        assert out.attempt_count == 1
        assert out.latency_ms > 0
        assert out.raw_response == GOOD_CONTENT

    def test_request_shape(self, server):
        cfg = make_cfg(server)
        issue_request(cfg, 0, T0, api_key="secret-key")
        req = server.requests[0]
        assert req["path"] == "/v1/chat/completions"
        assert req["auth"] == "Bearer secret-key"
        assert req["body"]["model"] == "test-model-2025-01-01"
        assert req["body"]["temperature"] == 1.0
        assert req["body"]["response_format"] == {"type": "json_object"}
        assert [m["role"] for m in req["body"]["messages"]] == ["system", "user"]

    def test_body_identical_across_replicates(self, server):
        cfg = make_cfg(server)
        issue_request(cfg, 0, T0, api_key="k")
        issue_request(cfg, 1, T0, api_key="k")
        b0 = json.dumps(server.requests[0]["body"], sort_keys=True)
        b1 = json.dumps(server.requests[1]["body"], sort_keys=True)
        assert b0 == b1
        assert b0 == json.dumps(request_body(cfg), sort_keys=True)

    def test_partial_credit_scoring(self, server):
        content = json.dumps({"answer": ["B", "D"]})
        server.script = [
            (200, json.dumps({"choices": [{"message": {"content": content}}]}))
        ]
        cfg = make_cfg(server)
        out = issue_request(cfg, 0, T0, api_key="k")
        assert out.status == SCORED
        assert out.score == 0.75  # B wrongly selected, A/C/D agree

    def test_5xx_then_success_retries(self, server):
        server.script = [(503, "busy"), (200, GOOD_BODY)]
        cfg = make_cfg(server)
        sleeps = []
        out = issue_request(cfg, 0, T0, api_key="k", sleep=sleeps.append)
        assert out.status == SCORED
        assert out.attempt_count == 2
        assert len(sleeps) == 1
        assert 1.0 <= sleeps[0] <= 3.0  # 2 s base with 0.5-1.5 jitter

    def test_5xx_exhaustion_is_transport_failure(self, server):
        server.script = [(500, "down")] * 10
        cfg = make_cfg(server, max_retries=2)
        sleeps = []
        out = issue_request(cfg, 0, T0, api_key="k", sleep=sleeps.append)
        assert out.status == TRANSPORT_FAILED
        assert out.attempt_count == 3  # initial try + 2 retries
        assert len(sleeps) == 2
        assert sleeps[1] > sleeps[0] * 0.9  # exponential growth modulo jitter

    def test_4xx_terminal_no_retry(self, server):
        server.script = [(401, json.dumps({"error": "bad key"}))]
        cfg = make_cfg(server)
        sleeps = []
        out = issue_request(cfg, 0, T0, api_key="k", sleep=sleeps.append)
        assert out.status == TRANSPORT_FAILED
        assert out.attempt_count == 1
        assert sleeps == []
        assert "bad key" in out.raw_response

    def test_connection_error_retried_then_failed(self):
        task = TaskSpec(("A", "B"), frozenset({"A"}), "s", "u")
        cfg = ProbeConfig(
            endpoint_url="http://127.0.0.1:9",  # nothing listens on port 9
            model_snapshot="m",
            task=task,
            max_retries=2,
            request_timeout=0.5,
        )
        sleeps = []
        out = issue_request(cfg, 0, T0, api_key="k", sleep=sleeps.append)
        assert out.status == TRANSPORT_FAILED
        assert out.attempt_count == 3
        assert len(sleeps) == 2

    def test_unparseable_content_is_parse_failure_no_retry(self, server):
        content = "The answer is D."  # plain prose, not the JSON schema
        server.script = [
            (200, json.dumps({"choices": [{"message": {"content": content}}]}))
        ]
        cfg = make_cfg(server)
        out = issue_request(cfg, 0, T0, api_key="k")
        assert out.status == PARSE_FAILED
        assert out.score is None
        assert out.attempt_count == 1
        assert len(server.requests) == 1

    def test_malformed_envelope_is_parse_failure(self, server):
        server.script = [(200, json.dumps({"unexpected": True}))]
        cfg = make_cfg(server)
        out = issue_request(cfg, 0, T0, api_key="k")
        assert out.status == PARSE_FAILED

    def test_missing_api_key(self, server, monkeypatch):
        monkeypatch.delenv(API_KEY_ENV, raising=False)
        cfg = make_cfg(server)
        with pytest.raises(UsageError):
            issue_request(cfg, 0, T0)

    def test_api_key_from_environment(self, server, monkeypatch):
        monkeypatch.setenv(API_KEY_ENV, "env-key")
        cfg = make_cfg(server)
        out = issue_request(cfg, 0, T0)
        assert out.status == SCORED
        assert server.requests[0]["auth"] == "Bearer env-key"

    def test_log_object_shape(self, server):
        cfg = make_cfg(server)
        out = issue_request(cfg, 3, T0, api_key="k")
        obj = out.to_log_obj(cfg)
        assert obj["ts"] == "2025-01-06T00:00:00+00:00"
        assert obj["rep"] == 3
        assert obj["score"] == 1.0
        assert obj["status"] == SCORED
        assert obj["attempts"] == 1
        assert obj["latency_ms"] > 0
        assert obj["meta"]["model"] == "test-model-2025-01-01"


class FakeClock:
    """Deterministic clock; sleeping advances it."""

    def __init__(self, start):
        self.now = start

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.now += timedelta(seconds=max(0.0, seconds))


class ListSink:
    def __init__(self):
        self.items = []

    def append(self, obj):
        self.items.append(obj)


class TestRunSchedule:
    def test_all_slots_probed_and_logged(self, server):
        cfg = make_cfg(
            server,
            replicates_per_slot=3,
            start=T0,
            end=T0 + 2 * timedelta(hours=3),
        )
        clock = FakeClock(T0 - timedelta(minutes=1))
        sink = ListSink()
        summary = run_schedule(
            cfg, sink, now_fn=clock, sleep_fn=clock.sleep, api_key="k"
        )
        assert summary.slots_total == 3
        assert summary.slots_probed == 3
        assert summary.slots_skipped == 0
        assert summary.outcomes[SCORED] == 9
        assert len(sink.items) == 9
        stamps = {item["ts"] for item in sink.items}
        assert stamps == {
            "2025-01-06T00:00:00+00:00",
            "2025-01-06T03:00:00+00:00",
            "2025-01-06T06:00:00+00:00",
        }
        reps = sorted(
            item["rep"] for item in sink.items
            if item["ts"] == "2025-01-06T00:00:00+00:00"
        )
        assert reps == [0, 1, 2]

    def test_missed_slots_become_gaps(self, server):
        cfg = make_cfg(
            server, start=T0, end=T0 + 3 * timedelta(hours=3)
        )
        # wake up 7 h late: slots at 0 h, 3 h, 6 h are unrecoverable
        clock = FakeClock(T0 + timedelta(hours=7))
        sink = ListSink()
        summary = run_schedule(
            cfg, sink, now_fn=clock, sleep_fn=clock.sleep, api_key="k"
        )
        assert summary.slots_skipped == 3
        assert summary.slots_probed == 1
        stamps = {item["ts"] for item in sink.items}
        assert stamps == {"2025-01-06T09:00:00+00:00"}

    def test_slight_lateness_within_grace_still_probes(self, server):
        cfg = make_cfg(server, start=T0, end=T0)
        clock = FakeClock(T0 + timedelta(minutes=10))  # grace is 18 min
        sink = ListSink()
        summary = run_schedule(
            cfg, sink, now_fn=clock, sleep_fn=clock.sleep, api_key="k"
        )
        assert summary.slots_probed == 1

    def test_missing_window_rejected(self, server):
        cfg = make_cfg(server, start=T0)  # no end
        with pytest.raises(UsageError):
            run_schedule(cfg, ListSink(), api_key="k")

    def test_missing_key_fails_before_first_request(self, server, monkeypatch):
        monkeypatch.delenv(API_KEY_ENV, raising=False)
        cfg = make_cfg(server, start=T0, end=T0)
        with pytest.raises(UsageError):
            run_schedule(cfg, ListSink())
        assert server.requests == []

    def test_log_failure_propagates(self, server):
        cfg = make_cfg(server, start=T0, end=T0)

        class BrokenSink:
            def append(self, obj):
                raise OSError("disk full")

        clock = FakeClock(T0)
        with pytest.raises(OSError):
            run_schedule(
                cfg, BrokenSink(), now_fn=clock, sleep_fn=clock.sleep,
                api_key="k",
            )

    def test_transport_failures_recorded_not_fatal(self, server):
        server.script = [(401, "no")] * 4
        cfg = make_cfg(server, start=T0, end=T0 + timedelta(hours=3))
        clock = FakeClock(T0)
        sink = ListSink()
        summary = run_schedule(
            cfg, sink, now_fn=clock, sleep_fn=clock.sleep, api_key="k"
        )
        assert summary.outcomes[TRANSPORT_FAILED] == 4
        assert summary.slots_probed == 2
        assert all(item["score"] is None for item in sink.items)


class TestProbeConfig:
    def test_from_mapping_round_trip(self):
        cfg = ProbeConfig.from_mapping(
            {
                "endpoint_url": "https://api.example.test/v1/",
                "model_snapshot": "m-2025",
                "task": {
                    "options": ["A", "B", "C", "D"],
                    "key": ["D"],
                    "system_prompt": "s",
                    "user_prompt": "u",
                },
                "temperature": 0.7,
                "replicates_per_slot": 4,
                "interval_minutes": 60,
                "start": "2025-01-06T00:00:00Z",
                "end": "2025-01-07T00:00:00Z",
            }
        )
        assert cfg.endpoint_url == "https://api.example.test/v1"
        assert cfg.temperature == 0.7
        assert cfg.interval == timedelta(hours=1)
        assert cfg.start == T0

    def test_from_mapping_missing_field(self):
        with pytest.raises(UsageError):
            ProbeConfig.from_mapping({"endpoint_url": "x"})

    def test_invalid_replicates(self, server):
        with pytest.raises(ValueError):
            make_cfg(server, replicates_per_slot=0)

    def test_invalid_interval(self, server):
        with pytest.raises(ValueError):
            make_cfg(server, interval=timedelta(seconds=10))
