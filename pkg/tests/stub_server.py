"""Deterministic local HTTP stub imitating a text-generation endpoint.

Responses are a pure function of the request body (prompt, n), so repeated
runs produce identical bytes. Failure modes are keyed off magic substrings
in the prompt:

    FAIL_ONCE   -> first request for this exact body returns HTTP 500
    ALWAYS_500  -> every request returns HTTP 500
    BAD_PATH    -> JSON body without the expected extraction path
    EMPTY       -> a response that contains zero samples
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class _Handler(BaseHTTPRequestHandler):
    def log_message(self, *args):  # keep test output quiet
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        prompt = body.get("prompt", "")
        n = int(body.get("n", 1))
        server: StubServer = self.server  # type: ignore[assignment]

        if "ALWAYS_500" in prompt:
            self._respond(500, {"error": "boom"})
            return
        if "FAIL_ONCE" in prompt:
            key = json.dumps(body, sort_keys=True)
            with server.lock:
                first = key not in server.seen
                server.seen.add(key)
            if first:
                self._respond(500, {"error": "transient"})
                return
        if "BAD_PATH" in prompt:
            self._respond(200, {"unexpected": []})
            return
        if "EMPTY" in prompt:
            self._respond(200, {"choices": []})
            return

        per_call = min(n, server.samples_per_call)
        start = 0
        # sample text derives only from (prompt, n), keeping runs identical
        texts = [f"{prompt}::sample-{n}-{start + i}" for i in range(per_call)]
        self._respond(200, {"choices": [{"text": t} for t in texts]})

    def _respond(self, status: int, payload: dict):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class StubServer(ThreadingHTTPServer):
    def __init__(self, samples_per_call: int = 2):
        super().__init__(("127.0.0.1", 0), _Handler)
        self.samples_per_call = samples_per_call
        self.seen: set[str] = set()
        self.lock = threading.Lock()
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}/generate"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.shutdown()
        self.server_close()
