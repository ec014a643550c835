"""A tiny OpenAI-style chat-completion server that always returns one text.

Used by the test suite and handy for dry runs of the HTTP backend::

    python -m bnfinfer.stub --port 8089 --response-file grammar.txt
"""
from __future__ import annotations

import argparse
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class StubServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, response_text: str, fail_first: int = 0, status: int = 500):
        super().__init__(address, _Handler)
        self.response_text = response_text
        self.fail_first = fail_first
        self.fail_status = status
        self.requests: list[dict] = []
        self._lock = threading.Lock()

    @property
    def url(self) -> str:
        host, port = self.server_address[:2]
        return f"http://{host}:{port}/v1"

    def start(self) -> "StubServer":
        threading.Thread(target=self.serve_forever, daemon=True).start()
        return self


class _Handler(BaseHTTPRequestHandler):
    server: StubServer

    def log_message(self, *args):
        pass

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        srv = self.server
        with srv._lock:
            srv.requests.append({"path": self.path, "body": body,
                                 "auth": self.headers.get("Authorization")})
            failing = srv.fail_first > 0
            if failing:
                srv.fail_first -= 1
        if failing:
            self.send_response(srv.fail_status)
            self.end_headers()
            return
        if not self.path.endswith("/chat/completions"):
            self.send_response(404)
            self.end_headers()
            return
        payload = json.dumps({
            "object": "chat.completion",
            "model": body.get("model", ""),
            "choices": [{"index": 0, "finish_reason": "stop",
                         "message": {"role": "assistant", "content": srv.response_text}}],
        }).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


def serve(response_text: str, host: str = "127.0.0.1", port: int = 0, **kwargs) -> StubServer:
    return StubServer((host, port), response_text, **kwargs).start()


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8089)
    ap.add_argument("--response-file", required=True)
    args = ap.parse_args(argv)
    with open(args.response_file, encoding="utf-8") as fh:
        text = fh.read()
    srv = StubServer((args.host, args.port), text)
    print(f"serving on {srv.url}", flush=True)
    srv.serve_forever()


if __name__ == "__main__":
    main()
