"""Conformance corpus for adapter servers.

Each case is a raw request line plus an expectation on the reply. Servers
implementing the wire protocol must pass :func:`run_conformance` against
any transport (stdio subprocess, TCP, or an in-process loopback).
"""
from __future__ import annotations

from dataclasses import dataclass

from .errors import AdapterError
from .models import PROTOCOL_VERSION, encode_line


@dataclass(frozen=True)
class ConformanceCase:
    name: str
    request: dict
    # "forecast" -> forecast of the requested length; "error" -> error object
    expect: str
    horizon: int = 0


def corpus() -> list[ConformanceCase]:
    history_24 = [float(1 + (i % 24)) for i in range(24)]
    history_nulls = [None if i % 7 == 3 else float(i % 24) for i in range(48)]
    return [
        ConformanceCase(
            "plain_24_24",
            {"type": "forecast", "id": "c1", "history": history_24, "horizon": 24},
            "forecast",
            24,
        ),
        ConformanceCase(
            "long_horizon",
            {"type": "forecast", "id": "c2", "history": history_24, "horizon": 48},
            "forecast",
            48,
        ),
        ConformanceCase(
            "nulls_in_history",
            {"type": "forecast", "id": "c3", "history": history_nulls, "horizon": 24},
            "forecast",
            24,
        ),
        ConformanceCase(
            "partial_horizon",
            {"type": "forecast", "id": "c4", "history": history_24, "horizon": 5},
            "forecast",
            5,
        ),
        ConformanceCase(
            "zero_horizon",
            {"type": "forecast", "id": "c5", "history": history_24, "horizon": 0},
            "error",
        ),
        ConformanceCase(
            "short_history",
            {"type": "forecast", "id": "c6", "history": [1.0, 2.0], "horizon": 24},
            "error",
        ),
        ConformanceCase(
            "unknown_type",
            {"type": "frobnicate", "id": "c7"},
            "error",
        ),
    ]


def run_conformance(transport, timeout: float = 30.0) -> list[str]:
    """Drive the corpus through a transport; returns a list of failure
    descriptions (empty = pass). The connection must survive every case."""
    failures = []
    transport.send({"type": "hello", "protocol": PROTOCOL_VERSION}, timeout)
    hello = transport.recv(timeout)
    if not (isinstance(hello, dict) and hello.get("type") == "hello"
            and hello.get("protocol") == PROTOCOL_VERSION):
        failures.append(f"handshake: bad reply {hello!r}")
        return failures

    for case in corpus():
        try:
            transport.send(case.request, timeout)
            reply = transport.recv(timeout)
        except AdapterError as exc:
            failures.append(f"{case.name}: transport failure {exc}")
            return failures
        if not isinstance(reply, dict):
            failures.append(f"{case.name}: non-object reply")
            continue
        if reply.get("id") != case.request.get("id"):
            failures.append(f"{case.name}: id {reply.get('id')!r} not echoed")
            continue
        if case.expect == "forecast":
            fc = reply.get("forecast")
            if reply.get("type") != "forecast" or not isinstance(fc, list):
                failures.append(f"{case.name}: expected forecast, got {reply.get('type')}")
            elif len(fc) != case.horizon:
                failures.append(f"{case.name}: length {len(fc)} != horizon {case.horizon}")
            elif not all(isinstance(v, (int, float)) and v == v for v in fc):
                failures.append(f"{case.name}: non-numeric forecast values")
        else:
            if reply.get("type") != "error" or not reply.get("message"):
                failures.append(f"{case.name}: expected error object, got {reply!r}")
    return failures


def corpus_lines() -> bytes:
    """The raw request lines, for servers tested outside this process."""
    return b"".join(encode_line(case.request) for case in corpus())
