"""Wire protocol: POST /score over HTTP, and offline request-file translation."""
from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from .models import ModelHandle
from .scoring import ItemError, score_item


def compute_scores(handle: ModelHandle, mode: str, items: list[dict]) -> tuple[list[dict], list[dict]]:
    """Score items in order; failures become per-item error records."""
    scores = []
    errors = []
    for item in items:
        item_id = item.get("id")
        try:
            if item_id is None or "text" not in item:
                raise ItemError("item needs id and text fields")
            scored = score_item(handle, mode, item["text"], item.get("prefix"))
            scores.append(
                {"id": item_id, "logprob": scored.logprob, "scored_tokens": scored.scored_tokens}
            )
        except ItemError as err:
            errors.append({"id": item_id, "error": str(err)})
    return scores, errors


def batch(handle: ModelHandle, mode: str, in_file: str | Path, out_file: str | Path) -> dict:
    """Translate a requests JSONL ({id, text, prefix?}) into scores JSONL."""
    items = [
        json.loads(line)
        for line in Path(in_file).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    scores, errors = compute_scores(handle, mode, items)
    out = Path(out_file)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(
        "".join(json.dumps(s, sort_keys=True) + "\n" for s in scores), encoding="utf-8"
    )
    return {"scored": len(scores), "errors": errors}


class _Handler(BaseHTTPRequestHandler):
    model_handle: ModelHandle = None

    def log_message(self, *args):
        pass

    def _reply(self, status: int, payload: dict):
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self):
        if self.path.rstrip("/") != "/score":
            self._reply(404, {"error": f"unknown path {self.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            request = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, json.JSONDecodeError) as err:
            self._reply(400, {"error": f"bad request body: {err}"})
            return
        mode = request.get("mode")
        items = request.get("items")
        if not isinstance(mode, str) or not isinstance(items, list):
            self._reply(400, {"error": "request needs string 'mode' and list 'items'"})
            return
        if not self.model_handle.supports(mode):
            self._reply(400, {"error": f"model does not support mode {mode!r}"})
            return
        scores, errors = compute_scores(self.model_handle, mode, items)
        self._reply(200, {"scores": scores, "errors": errors})


class ScorerServer:
    """Threading HTTP server bound to an ephemeral or fixed port."""

    def __init__(self, handle: ModelHandle, port: int = 0, host: str = "127.0.0.1"):
        handler = type("BoundHandler", (_Handler,), {"model_handle": handle})
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.port = self.httpd.server_address[1]
        self._thread = None

    def start(self):
        self._thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


def serve(handle: ModelHandle, port: int, host: str = "0.0.0.0") -> None:
    server = ScorerServer(handle, port=port, host=host)
    print(f"serving /score for {handle.model_id} on {host}:{server.port}")
    try:
        server.httpd.serve_forever()
    except KeyboardInterrupt:
        server.stop()
