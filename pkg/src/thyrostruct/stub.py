"""Scriptable HTTP stub for the two remote wire contracts.

Stands in for the token-classification service (POST /tag) and the
hosted-completion endpoint (POST anywhere else). Tests and local development
script its answers; it also supports dropping a number of connections to
exercise retry paths, and records every request it sees.

Run standalone: python -m thyrostruct.stub [port]
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Callable

from .bio import tokenize
from .structurer import LanguagePack

Responder = Callable[[dict], dict]


def all_o_tagger(payload: dict) -> dict:
    """Default /tag answer: tokenize and label everything O."""
    tokens = tokenize(payload.get("text", ""))
    return {
        "tokens": [list(t) for t in tokens],
        "labels": ["O"] * len(tokens),
        "scores": [1.0] * len(tokens),
    }


def echo_completion(payload: dict) -> dict:
    """Default completion answer: empty record."""
    return {"text": "{}"}


def extract_last_quoted(prompt: str) -> str:
    """The last triple-quoted block in a prompt (the target document)."""
    parts = prompt.split('"""')
    if len(parts) < 3:
        return ""
    return parts[-2]


def pack_normalizer(pack: LanguagePack | None = None) -> Responder:
    """Completion responder that rewrites known variant terms to their
    canonical forms — a deterministic stand-in for LLM normalization."""
    pack = pack or LanguagePack.load()
    replacements: dict[str, str] = {}
    for canonical, variant in pack.vocab.get("diagnosis_variants", {}).items():
        replacements[variant] = canonical
    for canonical, variant in pack.vocab.get("method_variants", {}).items():
        replacements[variant] = canonical

    def responder(payload: dict) -> dict:
        prompt = payload["messages"][-1]["content"]
        text = extract_last_quoted(prompt)
        for variant, canonical in replacements.items():
            text = text.replace(variant, canonical)
        return {"text": text}

    return responder


class _Handler(BaseHTTPRequestHandler):
    server: "StubServer"

    def log_message(self, fmt: str, *args: Any) -> None:
        pass

    def do_POST(self) -> None:
        stub: StubServer = self.server.stub  # type: ignore[attr-defined]
        length = int(self.headers.get("content-length", 0))
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw.decode("utf-8"))
        except Exception:
            payload = {}
        with stub.lock:
            stub.requests.append({
                "path": self.path,
                "headers": {k.lower(): v for k, v in self.headers.items()},
                "payload": payload,
            })
            if stub.fail_remaining > 0:
                stub.fail_remaining -= 1
                # drop the connection to simulate an unreachable endpoint
                self.connection.close()
                return
        if self.path.rstrip("/").endswith("/tag"):
            answer = stub.tag_responder(payload)
        else:
            answer = stub.llm_responder(payload)
        if isinstance(answer, tuple):
            status, body = answer
        else:
            status, body = 200, answer
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)


class StubServer:
    """Context-managed stub bound to an ephemeral localhost port."""

    def __init__(
        self,
        tag_responder: Responder | None = None,
        llm_responder: Responder | None = None,
        fail_times: int = 0,
    ):
        self.tag_responder = tag_responder or all_o_tagger
        self.llm_responder = llm_responder or echo_completion
        self.fail_remaining = fail_times
        self.requests: list[dict] = []
        self.lock = threading.Lock()
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
        self._httpd.stub = self  # type: ignore[attr-defined]
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "StubServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self) -> "StubServer":
        return self.start()

    def __exit__(self, *exc: Any) -> None:
        self.stop()


def main() -> None:
    import sys

    port = int(sys.argv[1]) if len(sys.argv) > 1 else 8499
    stub = StubServer(llm_responder=pack_normalizer())
    stub._httpd.server_close()
    stub._httpd = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
    stub._httpd.stub = stub  # type: ignore[attr-defined]
    print(f"stub listening on http://127.0.0.1:{port} (POST /tag or /)")
    stub._httpd.serve_forever()


if __name__ == "__main__":
    main()
