"""Forecaster contract, the native SeasonalAverage baseline and the client
side of the newline-delimited JSON adapter protocol.

Wire protocol (one JSON object per line, UTF-8):
  handshake   {"type":"hello","protocol":1}  ->  {"type":"hello","protocol":1,
               "model_id":...,"kind":...}
  request     {"type":"forecast","id":str,"history":[num|null,...],
               "horizon":int,"retrain_context":optional}
  response    {"type":"forecast","id":str,"forecast":[num,...]}
           |  {"type":"error","id":str,"message":str}
"""
from __future__ import annotations

import itertools
import json
import select
import socket
import subprocess
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .core import format_timestamp
from .errors import AdapterError, InsufficientHistory

PROTOCOL_VERSION = 1
DEFAULT_SEASON = 24


@dataclass(frozen=True)
class ForecasterDescriptor:
    model_id: str
    kind: str = "Baseline"  # Baseline | ZeroShot | Trainable
    transport: str = "InProcess"  # InProcess | Subprocess | Socket
    training_cutoff: datetime | None = None
    pretraining_corpora: str = ""

    def __post_init__(self):
        if self.kind not in ("Baseline", "ZeroShot", "Trainable"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.transport not in ("InProcess", "Subprocess", "Socket"):
            raise ValueError(f"unknown transport {self.transport!r}")
        if self.kind == "Baseline" and self.transport != "InProcess":
            raise ValueError("Baseline forecasters must run in-process")


def seasonal_average_forecast(input_values, horizon: int, season: int = DEFAULT_SEASON):
    """Forecast each cycle position as the mean of the input values at that
    position, aligned so the last input slot sits at position season-1
    relative to the first forecast slot; all-missing positions fall back to
    the mean of the present profile values."""
    values = np.asarray(input_values, dtype=float)
    n = len(values)
    if n < season:
        raise InsufficientHistory(f"input of {n} values, need at least {season}")
    positions = (np.arange(n) - n) % season
    profile = np.full(season, np.nan)
    for c in range(season):
        bucket = values[positions == c]
        bucket = bucket[~np.isnan(bucket)]
        if len(bucket):
            profile[c] = bucket.mean()
    if np.isnan(profile).all():
        raise InsufficientHistory("input window has no present values")
    profile = np.where(np.isnan(profile), np.nanmean(profile), profile)
    return [float(profile[k % season]) for k in range(horizon)]


class SeasonalAverageForecaster:
    """Native baseline; pure and thread-safe."""

    def __init__(self, model_id: str = "SeasonalAverage", season: int = DEFAULT_SEASON):
        self.descriptor = ForecasterDescriptor(model_id=model_id, kind="Baseline")
        self.season = season

    def forecast(self, history, horizon, retrain_context=None):
        return seasonal_average_forecast(history, horizon, self.season)

    def close(self):
        pass


def encode_line(obj) -> bytes:
    return (json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n").encode("utf-8")


def decode_line(line: bytes):
    try:
        return json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise AdapterError(f"malformed protocol line: {exc}", payload=line) from None


def history_to_wire(history):
    return [None if (isinstance(v, float) and np.isnan(v)) else float(v) for v in history]


class LoopbackTransport:
    """In-process transport calling a handler(request_dict) -> response_dict.

    Lets the full adapter code path run with no external server built.
    """

    def __init__(self, handler):
        self.handler = handler

    def send(self, obj, timeout=None):
        self._pending = self.handler(obj)

    def recv(self, timeout=None):
        pending, self._pending = self._pending, None
        if pending is None:
            raise AdapterError("no response pending")
        return pending

    def close(self):
        pass


class SubprocessTransport:
    """Line-oriented stdio transport to a spawned adapter process; spawns
    lazily so a broken command fails per request."""

    def __init__(self, command: list[str]):
        self.command = list(command)
        self.proc = None

    def _spawn(self):
        try:
            self.proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise AdapterError(f"cannot spawn adapter {self.command!r}: {exc}") from None

    def send(self, obj, timeout=None):
        if self.proc is None:
            self._spawn()
        try:
            self.proc.stdin.write(encode_line(obj))
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise AdapterError(f"adapter process closed stdin: {exc}") from None

    def recv(self, timeout=None):
        if self.proc is None:
            raise AdapterError("adapter process not running")
        fd = self.proc.stdout
        if timeout is not None:
            ready, _, _ = select.select([fd], [], [], timeout)
            if not ready:
                raise AdapterError(f"adapter timed out after {timeout}s")
        line = fd.readline()
        if not line:
            raise AdapterError("adapter process closed its output stream")
        return decode_line(line)

    def close(self):
        if self.proc is None:
            return
        try:
            self.proc.stdin.close()
        except OSError:
            pass
        self.proc.wait(timeout=10)


class TcpTransport:
    """Line-oriented TCP transport to a serving adapter; connects lazily so
    a dead endpoint fails per request and lands in the failure budget."""

    def __init__(self, host: str, port: int, timeout: float = 10.0):
        self.host = host
        self.port = port
        self.timeout = timeout
        self.sock = None
        self.reader = None

    def _connect(self):
        try:
            self.sock = socket.create_connection(
                (self.host, self.port), timeout=self.timeout
            )
        except OSError as exc:
            raise AdapterError(
                f"cannot connect to {self.host}:{self.port}: {exc}"
            ) from None
        self.reader = self.sock.makefile("rb")

    def send(self, obj, timeout=None):
        if self.sock is None:
            self._connect()
        try:
            self.sock.sendall(encode_line(obj))
        except OSError as exc:
            raise AdapterError(f"send failed: {exc}") from None

    def recv(self, timeout=None):
        if self.sock is None:
            raise AdapterError("not connected")
        if timeout is not None:
            self.sock.settimeout(timeout)
        try:
            line = self.reader.readline()
        except socket.timeout:
            raise AdapterError(f"adapter timed out after {timeout}s") from None
        except OSError as exc:
            raise AdapterError(f"recv failed: {exc}") from None
        if not line:
            raise AdapterError("adapter closed the connection")
        return decode_line(line)

    def close(self):
        if self.sock is not None:
            self.reader.close()
            self.sock.close()


class AdapterForecaster:
    """Client for external forecasters speaking the wire protocol.

    One transport is owned by exactly one worker at a time; pool clients
    for parallelism instead of sharing a connection.
    """

    def __init__(self, descriptor: ForecasterDescriptor, transport, timeout: float = 60.0):
        self.descriptor = descriptor
        self.transport = transport
        self.timeout = timeout
        self._ids = itertools.count()
        self._greeted = False

    def _handshake(self):
        self.transport.send({"type": "hello", "protocol": PROTOCOL_VERSION}, self.timeout)
        reply = self.transport.recv(self.timeout)
        if not isinstance(reply, dict) or reply.get("type") != "hello":
            raise AdapterError("handshake failed", payload=reply)
        if reply.get("protocol") != PROTOCOL_VERSION:
            raise AdapterError(
                f"protocol mismatch: server speaks {reply.get('protocol')}", payload=reply
            )

    def forecast(self, history, horizon, retrain_context=None):
        if not self._greeted:
            self._handshake()
            self._greeted = True
        req_id = f"r{next(self._ids)}"
        request = {
            "type": "forecast",
            "id": req_id,
            "history": history_to_wire(history),
            "horizon": int(horizon),
        }
        if retrain_context is not None:
            request["retrain_context"] = [history_to_wire(s) for s in retrain_context]
        self.transport.send(request, self.timeout)
        reply = self.transport.recv(self.timeout)
        if not isinstance(reply, dict):
            raise AdapterError("non-object reply", payload=reply)
        if reply.get("id") != req_id:
            raise AdapterError(
                f"correlation id mismatch: sent {req_id}, got {reply.get('id')}",
                payload=reply,
            )
        if reply.get("type") == "error":
            raise AdapterError(f"adapter error: {reply.get('message')}", payload=reply)
        if reply.get("type") != "forecast":
            raise AdapterError(f"unexpected reply type {reply.get('type')!r}", payload=reply)
        forecast = reply.get("forecast")
        if not isinstance(forecast, list) or len(forecast) != horizon:
            raise AdapterError(
                f"forecast length {len(forecast) if isinstance(forecast, list) else '?'} "
                f"!= horizon {horizon}",
                payload=reply,
            )
        try:
            return [float(v) for v in forecast]
        except (TypeError, ValueError):
            raise AdapterError("non-numeric forecast values", payload=reply) from None

    def close(self):
        self.transport.close()


def seasonal_naive_reference(history, horizon: int):
    """Repeat the last 24 values cyclically; nulls in that cycle are
    replaced by the mean of its present values. Conformance oracle for
    adapter servers; coincides with SeasonalAverage at input size 24."""
    values = [float("nan") if v is None else float(v) for v in history]
    if len(values) < DEFAULT_SEASON:
        raise InsufficientHistory(f"need at least {DEFAULT_SEASON} history values")
    cycle = np.asarray(values[-DEFAULT_SEASON:], dtype=float)
    present = cycle[~np.isnan(cycle)]
    if len(present) == 0:
        raise InsufficientHistory("last cycle has no present values")
    cycle = np.where(np.isnan(cycle), present.mean(), cycle)
    return [float(cycle[k % DEFAULT_SEASON]) for k in range(horizon)]


def make_reference_handler(model_id: str = "mock-seasonal-naive", kind: str = "ZeroShot"):
    """In-process implementation of the server side of the wire protocol,
    used with LoopbackTransport so the full adapter path runs with no
    external process."""

    def handler(request):
        if not isinstance(request, dict):
            return {"type": "error", "id": None, "message": "non-object request"}
        rtype = request.get("type")
        if rtype == "hello":
            return {
                "type": "hello",
                "protocol": PROTOCOL_VERSION,
                "model_id": model_id,
                "kind": kind,
            }
        req_id = request.get("id")
        if rtype != "forecast":
            return {"type": "error", "id": req_id, "message": f"unknown type {rtype!r}"}
        horizon = request.get("horizon")
        history = request.get("history")
        if not isinstance(horizon, int) or horizon < 1:
            return {"type": "error", "id": req_id, "message": "horizon must be >= 1"}
        if not isinstance(history, list):
            return {"type": "error", "id": req_id, "message": "history must be a list"}
        try:
            forecast = seasonal_naive_reference(history, horizon)
        except Exception as exc:
            return {"type": "error", "id": req_id, "message": str(exc)}
        return {"type": "forecast", "id": req_id, "forecast": forecast}

    return handler


def validate_descriptor(descriptor: ForecasterDescriptor, split_spec) -> list[str]:
    """Advisory temporal-overlap and contamination warnings for zero-shot
    models evaluated on data their pre-training may cover."""
    warnings_out = []
    cutoff = descriptor.training_cutoff
    if cutoff is None:
        if descriptor.kind == "ZeroShot":
            warnings_out.append(f"{descriptor.model_id}: training cutoff undisclosed")
    elif cutoff >= split_spec.split_date:
        warnings_out.append(
            f"{descriptor.model_id}: training cutoff {format_timestamp(cutoff)} "
            f"overlaps the test period of {split_spec.dataset_id}"
        )
    corpora = descriptor.pretraining_corpora.lower()
    if corpora and split_spec.dataset_id.lower() in corpora:
        warnings_out.append(
            f"{descriptor.model_id}: declared pre-training corpora mention "
            f"{split_spec.dataset_id} (possible contamination)"
        )
    return warnings_out
