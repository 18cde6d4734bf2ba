"""Single-app verification over HTTP.

Endpoints: ``POST /verify`` classifies one app listing, ``GET /health``
reports readiness plus the loaded model version. The model is loaded once
before the server starts accepting connections and never mutated, so the
threading server can answer any number of concurrent requests; missing
optional metadata fields default to the training means stored in the model.

The request logic lives in :class:`VerifyApp`, independent of sockets, so
it can be exercised directly; the HTTP layer is a thin stdlib handler.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .classifiers import TrainedModel
from .corpus import AppRecord, PERMISSION_RE
from .features import META_FIELDS


class RequestError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


@dataclass
class VerifyApp:
    """Request handling against one immutable loaded model."""

    model: TrainedModel | None

    def health(self):
        if self.model is None:
            return 503, {"status": "loading", "error": "model not loaded"}
        return 200, {"status": "ok", "model_version": self.model.version}

    def verify(self, body: bytes):
        started = time.perf_counter()
        if self.model is None:
            return 503, {"error": "model not loaded"}
        try:
            record = self._parse_request(body)
        except RequestError as exc:
            return 400, {"error": exc.message}
        prediction = self.model.predict(record, top_k=5)
        latency_ms = (time.perf_counter() - started) * 1000.0
        return 200, {
            "label": prediction.label.name.lower(),
            "confidence": prediction.confidence,
            "top_features": [[name, weight] for name, weight in prediction.top_features],
            "model_version": self.model.version,
            "latency_ms": latency_ms,
        }

    def _parse_request(self, body: bytes) -> AppRecord:
        try:
            obj = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise RequestError(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise RequestError("request body must be a JSON object")
        description = obj.get("description")
        if description is None:
            raise RequestError("missing required field 'description'")
        if not isinstance(description, str) or not description.strip():
            raise RequestError("field 'description' must be a non-empty string")
        name = obj.get("name", "")
        if not isinstance(name, str):
            raise RequestError("field 'name' must be a string")
        raw_perms = obj.get("permissions", [])
        if not isinstance(raw_perms, list) or any(not isinstance(p, str) for p in raw_perms):
            raise RequestError("field 'permissions' must be an array of strings")
        perms = []
        for p in raw_perms:
            upper = p.upper()
            if not PERMISSION_RE.match(upper):
                raise RequestError(f"invalid permission identifier {p!r}")
            perms.append(upper)

        means = dict(zip(META_FIELDS, self._training_means()))
        download_count = self._number(obj, "download_count", means["download_count"])
        rating = self._number(obj, "rating", means["rating"])
        if not 0.0 <= rating <= 5.0:
            raise RequestError("field 'rating' must be within [0, 5]")
        size_mb = self._number(obj, "size_mb", means["size_mb"])
        if size_mb <= 0:
            raise RequestError("field 'size_mb' must be positive")
        days = self._number(obj, "days_since_update", means["days_since_update"])
        if days < 0:
            raise RequestError("field 'days_since_update' must be >= 0")
        return AppRecord(
            app_id="verify-request",
            name=name,
            developer_name=str(obj.get("developer_name", "")),
            developer_email_domain=str(obj.get("developer_email_domain", "")),
            description=description,
            permissions=frozenset(perms),
            download_count=int(download_count),
            rating=rating,
            size_mb=size_mb,
            days_since_update=int(days),
        )

    def _training_means(self):
        stats = self.model.pipeline.meta_stats
        if stats is None:
            return (0.0, 2.5, 10.0, 0.0, 0.0)
        return tuple(float(v) for v in stats.means)

    @staticmethod
    def _number(obj, key, default):
        value = obj.get(key)
        if value is None:
            return float(default)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise RequestError(f"field {key!r} must be a number")
        return float(value)


class _Handler(BaseHTTPRequestHandler):
    app: VerifyApp = None       # installed by make_server
    protocol_version = "HTTP/1.1"
    # buffer the whole response into one segment and skip Nagle, otherwise
    # the header/body writes stall ~40ms each on delayed ACKs
    wbufsize = -1
    disable_nagle_algorithm = True

    def log_message(self, fmt, *args):
        pass                    # keep request handling quiet

    def _send(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/health":
            status, payload = self.app.health()
            self._send(status, payload)
        else:
            self._send(404, {"error": f"no such endpoint {self.path!r}"})

    def do_POST(self):
        if self.path != "/verify":
            self._send(404, {"error": f"no such endpoint {self.path!r}"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        body = self.rfile.read(length) if length else b""
        status, payload = self.app.verify(body)
        self._send(status, payload)


class _Server(ThreadingHTTPServer):
    # default backlog of 5 stalls bursts of concurrent clients on SYN
    # retransmits; size it for the contract of 32 parallel callers
    request_queue_size = 128
    daemon_threads = True


def make_server(model: TrainedModel, host: str = "127.0.0.1",
                port: int = 8080) -> ThreadingHTTPServer:
    """Build (but do not start) a threading HTTP server bound to the model."""
    app = VerifyApp(model=model)
    handler = type("BoundHandler", (_Handler,), {"app": app})
    return _Server((host, port), handler)


def serve(model: TrainedModel, host: str, port: int):
    server = make_server(model, host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
