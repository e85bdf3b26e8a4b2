"""HTTP clients for external scorer and translator services.

Wire protocol (HTTP/1.1, UTF-8 JSON):

    POST {base_url}/v1/score     {"items": [request, ...]} -> {"items": [score, ...]}
    POST {base_url}/v1/translate {"text", "src", "tgt"}    -> {"text": ...}
    GET  {base_url}/v1/health                              -> {"status": "ok"}

Errors come back as 4xx/5xx with a {"error": str} body. Scoring and
translation are read-only, so retries are always safe.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import requests

from .errors import ProtocolError, ServiceError, TransportError, ValidationError
from .models import UND
from .rerank import ScorerRequest
from .scoring import LikelihoodScore

BACKOFF_BASE_MS = 250
BACKOFF_FACTOR = 2


@dataclass(frozen=True)
class ServiceEndpoint:
    base_url: str
    timeout_ms: int = 30_000
    max_retries: int = 2
    batch_size: int = 64

    def __post_init__(self):
        object.__setattr__(self, "base_url", self.base_url.rstrip("/"))
        if self.timeout_ms <= 0:
            raise ValidationError("timeout_ms must be > 0")
        if self.max_retries < 0:
            raise ValidationError("max_retries must be >= 0")
        if not 1 <= self.batch_size <= 256:
            raise ValidationError("batch_size must be in 1..256")


@dataclass(frozen=True)
class ScoreResponse:
    avg_log_likelihood: float
    num_tokens: int

    def __post_init__(self):
        if not math.isfinite(self.avg_log_likelihood):
            raise ProtocolError("service returned a non-finite score")
        if self.num_tokens < 1:
            raise ProtocolError("service returned num_tokens < 1")


def encode_score_request(requests_batch: list[ScorerRequest]) -> bytes:
    """Canonical byte encoding of a score request (fixed key order, compact)."""
    items = [
        {
            "question": r.question_text,
            "question_lang": r.question_lang,
            "passage": r.passage_text,
            "passage_lang": r.passage_lang,
            "prompt_suffix": r.prompt_suffix,
            "target_lang_tag": r.target_lang_tag,
        }
        for r in requests_batch
    ]
    return json.dumps({"items": items}, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def encode_translate_request(text: str, src: str, tgt: str) -> bytes:
    return json.dumps(
        {"text": text, "src": src, "tgt": tgt}, ensure_ascii=False, separators=(",", ":")
    ).encode("utf-8")


def _post(endpoint: ServiceEndpoint, path: str, payload: bytes, sleep=time.sleep) -> dict:
    """POST with retries on transport failure; exponential backoff."""
    url = f"{endpoint.base_url}{path}"
    timeout_s = endpoint.timeout_ms / 1000.0
    last_exc: Exception | None = None
    for attempt in range(endpoint.max_retries + 1):
        if attempt > 0:
            sleep(BACKOFF_BASE_MS * BACKOFF_FACTOR ** (attempt - 1) / 1000.0)
        try:
            resp = requests.post(
                url,
                data=payload,
                headers={"Content-Type": "application/json"},
                timeout=timeout_s,
            )
        except requests.RequestException as exc:
            last_exc = exc
            continue
        if resp.status_code != 200:
            raise ServiceError(f"POST {path} failed", status=resp.status_code, body=resp.text)
        try:
            return resp.json()
        except ValueError:
            raise ProtocolError(f"POST {path}: response body is not JSON") from None
    raise TransportError(
        f"POST {url} failed after {endpoint.max_retries + 1} attempts: {last_exc}"
    )


def _parse_score_items(body: dict, expected: int) -> list[ScoreResponse]:
    items = body.get("items")
    if not isinstance(items, list):
        raise ProtocolError("score response missing 'items' list")
    if len(items) != expected:
        raise ProtocolError(
            f"score response has {len(items)} items for {expected} requests"
        )
    out = []
    for item in items:
        if not isinstance(item, dict):
            raise ProtocolError("score response item is not an object")
        try:
            avg = float(item["avg_log_likelihood"])
            num = int(item["num_tokens"])
        except (KeyError, TypeError, ValueError):
            raise ProtocolError(f"malformed score response item: {item!r}") from None
        out.append(ScoreResponse(avg_log_likelihood=avg, num_tokens=num))
    return out


def score_batch(
    endpoint: ServiceEndpoint,
    requests_batch: list[ScorerRequest],
    parallelism: int = 4,
    sleep=time.sleep,
) -> list[ScoreResponse]:
    """Score requests over the wire, split into endpoint.batch_size chunks.

    Responses are positionally aligned with the requests after chunk
    reassembly. Chunks are issued concurrently up to ``parallelism``,
    with at most one in-flight call per chunk.
    """
    if not requests_batch:
        raise ValidationError("score_batch requires at least one request")
    chunks = [
        requests_batch[i : i + endpoint.batch_size]
        for i in range(0, len(requests_batch), endpoint.batch_size)
    ]

    def call(chunk: list[ScorerRequest]) -> list[ScoreResponse]:
        body = _post(endpoint, "/v1/score", encode_score_request(chunk), sleep=sleep)
        return _parse_score_items(body, expected=len(chunk))

    if parallelism <= 1 or len(chunks) == 1:
        parts = [call(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            parts = list(pool.map(call, chunks))
    return [resp for part in parts for resp in part]


def translate(endpoint: ServiceEndpoint, text: str, src: str, tgt: str, sleep=time.sleep) -> str:
    """Translate text via the wire protocol; src may be "und", tgt must not."""
    if not text:
        raise ValidationError("translate requires non-empty text")
    if tgt == UND:
        raise ValidationError("translate target language must not be 'und'")
    body = _post(endpoint, "/v1/translate", encode_translate_request(text, src, tgt), sleep=sleep)
    translated = body.get("text")
    if not isinstance(translated, str):
        raise ProtocolError("translate response missing 'text'")
    if not translated:
        raise ProtocolError("translate response is empty")
    return translated


def health_check(endpoint: ServiceEndpoint) -> bool:
    try:
        resp = requests.get(
            f"{endpoint.base_url}/v1/health", timeout=endpoint.timeout_ms / 1000.0
        )
    except requests.RequestException:
        return False
    return resp.status_code == 200 and resp.json().get("status") == "ok"


class HttpScorer:
    """Scorer contract over the wire protocol; safe for concurrent use."""

    def __init__(self, endpoint: ServiceEndpoint, parallelism: int = 4):
        self.endpoint = endpoint
        self.parallelism = parallelism

    def score(self, request: ScorerRequest) -> LikelihoodScore:
        return self.score_many([request])[0]

    def score_many(self, requests_batch: list[ScorerRequest]) -> list[LikelihoodScore]:
        responses = score_batch(self.endpoint, list(requests_batch), self.parallelism)
        return [
            LikelihoodScore(avg_log_likelihood=r.avg_log_likelihood, num_tokens=r.num_tokens)
            for r in responses
        ]


class HttpTranslator:
    """Translator contract over the wire protocol."""

    def __init__(self, endpoint: ServiceEndpoint):
        self.endpoint = endpoint

    def translate(self, text: str, src: str, tgt: str) -> str:
        return translate(self.endpoint, text, src, tgt)
