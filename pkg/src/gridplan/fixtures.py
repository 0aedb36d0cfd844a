"""Offline chat-completion fixture server for tests and demos.

Serves an OpenAI-compatible /chat/completions endpoint from a canned list
of replies (cycled when exhausted) and records every request body so tests
can assert on the transcript that was actually sent.

Run standalone:  python -m gridplan.fixtures "ACCEPT 0" "SUBGOAL (3,4)"
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class CannedChatServer:
    """Context manager hosting the fixture endpoint on an ephemeral port."""

    def __init__(self, replies: list[str], status: int = 200):
        self.replies = list(replies)
        self.status = status
        self.requests: list[dict] = []
        self._count = 0
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):  # noqa: N802 (http.server API)
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                with outer._lock:
                    outer.requests.append(body)
                    reply = outer.replies[outer._count % len(outer.replies)]
                    outer._count += 1
                if outer.status != 200:
                    self.send_response(outer.status)
                    self.end_headers()
                    self.wfile.write(b"fixture error")
                    return
                payload = json.dumps(
                    {"choices": [{"message": {"role": "assistant", "content": reply}}]}
                ).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):  # silence request logging
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def __enter__(self) -> "CannedChatServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()


if __name__ == "__main__":
    import sys
    import time

    replies = sys.argv[1:] or ["ACCEPT 0"]
    with CannedChatServer(replies) as server:
        print(f"fixture chat endpoint at {server.base_url}")
        try:
            while True:
                time.sleep(1)
        except KeyboardInterrupt:
            pass
