"""HTTP sidecar serving risk predictions from a trained artifact.

``POST /v1/predict`` takes a prediction request (see :class:`Predictor`) and
answers with the same JSON the ``predict`` subcommand writes. ``GET /v1/health``
reports whether a model is loaded. With the session store enabled, a request may
omit ``history`` and the server replays what it has seen for that
(student, assignment) pair.
"""

from __future__ import annotations

import json
import logging
import threading
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .artifacts import PipelineArtifact, Predictor, RequestError
from .ingest import parse_timestamp
from .persistence import dumps

log = logging.getLogger(__name__)

MAX_BODY = 1 << 20


class SessionStore:
    """In-memory submission history per (student, assignment).

    Histories of an assignment are dropped once a request arrives dated after that
    assignment's deadline.
    """

    def __init__(self, configs):
        self._deadlines = {c.assignment_id: c.deadline for c in configs}
        self._lock = threading.Lock()
        self._history = {}

    def expand(self, request):
        """Request with the stored history filled in (unless it brings its own)."""
        if "history" in request:
            return request
        key = (request.get("student_id"), request.get("assignment_id"))
        with self._lock:
            history = list(self._history.get(key, ()))
        return {**request, "history": history}

    def record(self, request):
        key = (request["student_id"], request["assignment_id"])
        entry = {"submitted_at": request["submitted_at"]}
        if request.get("verdict") is not None:
            entry["verdict"] = request["verdict"]
        with self._lock:
            self._history.setdefault(key, []).append(entry)

    def flush_expired(self, now):
        with self._lock:
            for key in [k for k in self._history if self._deadlines.get(k[1]) and self._deadlines[k[1]] < now]:
                del self._history[key]

    def __len__(self):
        with self._lock:
            return len(self._history)


class PredictionService:
    """Request handling independent of the HTTP transport; returns ``(status, body)``."""

    def __init__(self, predictor=None, sessions=False):
        self.predictor = predictor
        self.sessions = SessionStore(predictor.artifact.configs) if (sessions and predictor) else None

    @classmethod
    def from_path(cls, path, sessions=False):
        return cls(Predictor(PipelineArtifact.load(path)), sessions)

    def health(self):
        if self.predictor is None:
            return HTTPStatus.SERVICE_UNAVAILABLE, {"status": "unavailable", "model_version": None}
        return HTTPStatus.OK, {"status": "ok", "model_version": self.predictor.version}

    def predict(self, body):
        if self.predictor is None:
            return HTTPStatus.SERVICE_UNAVAILABLE, {"error": "model not loaded"}
        try:
            request = json.loads(body)
        except (ValueError, UnicodeDecodeError):
            return HTTPStatus.BAD_REQUEST, {"error": "body is not valid JSON"}
        try:
            if self.sessions is not None and isinstance(request, dict):
                try:
                    self.sessions.flush_expired(parse_timestamp(str(request.get("submitted_at"))))
                except ValueError:
                    pass
                request = self.sessions.expand(request)
            response = self.predictor.predict(request)
        except RequestError as exc:
            return exc.status, {"error": str(exc)}
        if self.sessions is not None:
            self.sessions.record({**request, "submitted_at": response["submitted_at"]})
        return HTTPStatus.OK, response


def _handler(service):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def _send(self, status, payload):
            data = dumps(payload).encode()
            self.send_response(int(status))
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def do_GET(self):
            if self.path == "/v1/health":
                self._send(*service.health())
            else:
                self._send(HTTPStatus.NOT_FOUND, {"error": f"no route {self.path}"})

        def do_POST(self):
            if self.path != "/v1/predict":
                self._send(HTTPStatus.NOT_FOUND, {"error": f"no route {self.path}"})
                return
            length = int(self.headers.get("Content-Length") or 0)
            if length > MAX_BODY:
                self._send(HTTPStatus.REQUEST_ENTITY_TOO_LARGE, {"error": "request body too large"})
                return
            try:
                self._send(*service.predict(self.rfile.read(length)))
            except Exception:  # keep the server alive on unexpected failures
                log.exception("prediction failed")
                self._send(HTTPStatus.INTERNAL_SERVER_ERROR, {"error": "internal error"})

        def log_message(self, fmt, *args):
            log.info("%s " + fmt, self.address_string(), *args)

    return Handler


def make_server(service, host="127.0.0.1", port=8080):
    """A threading HTTP server bound to ``(host, port)``; port 0 picks a free port."""
    return ThreadingHTTPServer((host, port), _handler(service))


def serve(artifact_path, host="127.0.0.1", port=8080, sessions=False):
    service = PredictionService.from_path(artifact_path, sessions)
    server = make_server(service, host, port)
    log.info("serving model %s on %s:%d", service.predictor.version, *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
