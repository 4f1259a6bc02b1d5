"""Pluggable photo-type predictor bindings.

The platform never calls a classifier directly; it talks to a predictor
object that is either the in-process reference model or a client for an
external classifier process. The external wire protocol is one JSON record
per line over a TCP connection: request
``{"task_id": ..., "submission_id": ..., "feature": [...]}`` answered by
``{"submission_id": ..., "class": <int>, "confidence": <0..1>}``. The
response must echo the request's submission_id.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading

import numpy as np

from .model import ClassRegistry
from .screening import ClassifierModel, classify

DEFAULT_ATTEMPTS = 3
DEFAULT_TIMEOUT_S = 5.0


class PredictorProtocolError(RuntimeError):
    """The external predictor answered, but the answer violates the protocol."""


class PredictorUnavailableError(RuntimeError):
    """Transport to the external predictor failed on every attempt."""


class ReferencePredictor:
    """In-process nearest-centroid predictor."""

    kind = "reference"

    def __init__(self, model: ClassifierModel, registry: ClassRegistry) -> None:
        if not model.covers(registry):
            raise ValueError("model centroids do not cover the registered classes")
        self.model = model
        self.registry = registry

    def predict(self, task_id: str, submission_id: str, feature: np.ndarray) -> tuple[int, float]:
        return classify(self.model, feature)


class ExternalPredictor:
    """Client for a classifier reachable at host:port.

    Transport failures (refused, timeout, connection dropped before a full
    response line) are retried up to ``attempts`` times and then raised as
    PredictorUnavailableError. Malformed or out-of-contract responses are
    protocol errors and are never retried.
    """

    kind = "external"

    def __init__(
        self,
        endpoint: str,
        registry: ClassRegistry,
        attempts: int = DEFAULT_ATTEMPTS,
        timeout_s: float = DEFAULT_TIMEOUT_S,
    ) -> None:
        host, sep, port = endpoint.rpartition(":")
        if not sep or not host or not port.isdigit():
            raise ValueError(f"endpoint must look like host:port, got {endpoint!r}")
        if attempts < 1:
            raise ValueError(f"attempts must be at least 1, got {attempts}")
        self.host = host
        self.port = int(port)
        self.registry = registry
        self.attempts = attempts
        self.timeout_s = timeout_s

    def predict(self, task_id: str, submission_id: str, feature: np.ndarray) -> tuple[int, float]:
        request = {
            "task_id": task_id,
            "submission_id": submission_id,
            "feature": [float(x) for x in np.asarray(feature, dtype=float)],
        }
        payload = (json.dumps(request) + "\n").encode("utf-8")
        last_error: Exception | None = None
        for _ in range(self.attempts):
            try:
                with socket.create_connection((self.host, self.port), timeout=self.timeout_s) as sock:
                    sock.sendall(payload)
                    with sock.makefile("r", encoding="utf-8") as reader:
                        line = reader.readline()
                if not line:
                    raise ConnectionError("predictor closed the connection before responding")
            except OSError as exc:
                last_error = exc
                continue
            return self._parse_response(line, submission_id)
        raise PredictorUnavailableError(
            f"predictor at {self.host}:{self.port} unreachable after {self.attempts} attempts: {last_error}"
        )

    def _parse_response(self, line: str, submission_id: str) -> tuple[int, float]:
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise PredictorProtocolError(f"unparseable predictor response: {exc}") from exc
        if not isinstance(data, dict):
            raise PredictorProtocolError("predictor response is not an object")
        if data.get("submission_id") != submission_id:
            raise PredictorProtocolError(
                f"response echoes submission_id {data.get('submission_id')!r}, expected {submission_id!r}"
            )
        class_id = data.get("class")
        if isinstance(class_id, bool) or not isinstance(class_id, int):
            raise PredictorProtocolError(f"response class must be an integer, got {class_id!r}")
        if class_id not in self.registry:
            raise PredictorProtocolError(f"response names unregistered class {class_id}")
        confidence = data.get("confidence")
        if isinstance(confidence, bool) or not isinstance(confidence, (int, float)):
            raise PredictorProtocolError(f"response confidence must be a number, got {confidence!r}")
        confidence = float(confidence)
        if not (0.0 <= confidence <= 1.0):
            raise PredictorProtocolError(f"response confidence {confidence} outside [0, 1]")
        return class_id, confidence


class _ModelHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        for raw in self.rfile:
            line = raw.decode("utf-8").strip()
            if not line:
                continue
            request = json.loads(line)
            feature = np.asarray(request["feature"], dtype=float)
            class_id, confidence = classify(self.server.model, feature)  # type: ignore[attr-defined]
            response = {
                "submission_id": request["submission_id"],
                "class": class_id,
                "confidence": confidence,
            }
            self.wfile.write((json.dumps(response) + "\n").encode("utf-8"))
            self.wfile.flush()


class _ModelTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class ModelServer:
    """Serves a ClassifierModel over the predictor wire protocol.

    Handy for running the platform with --predictor external:... locally and
    for integration tests of the client side.
    """

    def __init__(self, model: ClassifierModel, host: str = "127.0.0.1", port: int = 0) -> None:
        self._server = _ModelTCPServer((host, port), _ModelHandler)
        self._server.model = model  # type: ignore[attr-defined]
        self._thread: threading.Thread | None = None

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"{host}:{port}"

    def start(self) -> "ModelServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def build_predictor(
    spec: str,
    registry: ClassRegistry,
    model: ClassifierModel | None = None,
    attempts: int = DEFAULT_ATTEMPTS,
    timeout_s: float = DEFAULT_TIMEOUT_S,
):
    """Construct a predictor from its CLI/config spelling.

    "reference" uses the given in-process model; "external:HOST:PORT"
    returns a wire-protocol client.
    """
    if spec == "reference":
        if model is None:
            raise ValueError("reference predictor requires a classifier model")
        return ReferencePredictor(model, registry)
    if spec.startswith("external:"):
        return ExternalPredictor(spec[len("external:"):], registry, attempts=attempts, timeout_s=timeout_s)
    raise ValueError(f"unknown predictor spec {spec!r}; use 'reference' or 'external:HOST:PORT'")
