"""Test builders: run construction and a configurable local HTTP stub service."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


from xlrank.models import Candidate, Passage, Question, RetrievalRun


def make_run(
    q_id: str = "q1",
    q_text: str = "who wrote the book",
    q_lang: str = "en",
    passages: list[tuple[str, bool]] | None = None,
    langs: list[str] | None = None,
    scores: list[float | None] | None = None,
    total_positives: int | None = None,
) -> RetrievalRun:
    """Build a run from (text, is_positive) pairs; ids are p1, p2, ..."""
    if passages is None:
        passages = [("alpha beta gamma", True), ("delta epsilon", False)]
    candidates = []
    for i, (text, positive) in enumerate(passages):
        lang = langs[i] if langs else "en"
        score = scores[i] if scores else None
        candidates.append(
            Candidate(
                passage=Passage(id=f"p{i + 1}", title="", text=text, lang=lang),
                orig_rank=i + 1,
                is_positive=positive,
                retriever_score=score,
            )
        )
    return RetrievalRun(
        question=Question(id=q_id, text=q_text, lang=q_lang),
        candidates=tuple(candidates),
        total_positives=total_positives,
    )


class StubService:
    """In-process HTTP service with pluggable per-path POST handlers.

    Handlers receive the parsed JSON body and return (status, payload).
    Every request is recorded for call-count assertions.
    """

    def __init__(self):
        self.calls: list[tuple[str, dict]] = []
        self.handlers = {}
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_GET(self):
                if self.path == "/v1/health":
                    self._reply(200, {"status": "ok"})
                else:
                    self._reply(404, {"error": "not found"})

            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length).decode("utf-8"))
                with stub._lock:
                    stub.calls.append((self.path, body))
                handler = stub.handlers.get(self.path)
                if handler is None:
                    self._reply(404, {"error": f"no handler for {self.path}"})
                    return
                status, payload = handler(body)
                self._reply(status, payload)

            def _reply(self, status, payload):
                raw = json.dumps(payload, ensure_ascii=False).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(raw)))
                self.end_headers()
                self.wfile.write(raw)

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def unigram_score_handler(self):
        """Score items with the built-in scorer semantics (echo transport)."""
        from xlrank.rerank import ScorerRequest
        from xlrank.scoring import UnigramScorer

        scorer = UnigramScorer()

        def handler(body):
            items = []
            for item in body["items"]:
                result = scorer.score(ScorerRequest(
                    question_text=item["question"],
                    question_lang=item["question_lang"],
                    passage_text=item["passage"],
                    passage_lang=item["passage_lang"],
                    prompt_suffix=item.get("prompt_suffix"),
                    target_lang_tag=item.get("target_lang_tag"),
                ))
                items.append({
                    "avg_log_likelihood": result.avg_log_likelihood,
                    "num_tokens": result.num_tokens,
                })
            return 200, {"items": items}

        return handler

    def close(self):
        self._server.shutdown()
        self._server.server_close()

