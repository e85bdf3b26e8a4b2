"""FastAPI application exposing /v1/score, /v1/translate, /v1/health.

Errors are always JSON objects with a single "error" field. Stub mode is
fully deterministic; model mode serializes scoring through one model
instance.
"""

from __future__ import annotations

import math
import threading

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .config import ServiceConfig
from .scoring_stub import stub_score
from .translate_stub import StubTranslator


class ScoreItem(BaseModel):
    question: str
    question_lang: str = "und"
    passage: str
    passage_lang: str = "und"
    prompt_suffix: str | None = None
    target_lang_tag: str | None = None


class ScoreBatch(BaseModel):
    items: list[ScoreItem]


class ScoreValue(BaseModel):
    avg_log_likelihood: float
    num_tokens: int


class ScoreBatchResult(BaseModel):
    items: list[ScoreValue]


class TranslateIn(BaseModel):
    text: str
    src: str = "und"
    tgt: str


class TranslateOut(BaseModel):
    text: str


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="xlrank-service", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.score_calls = 0
    app.state.translate_calls = 0

    if config.mode == "model":
        from .model_backend import ModelScorer, ModelTranslator, SequenceTooLong

        scorer = ModelScorer(config.score_model)
        scorer.load()  # refuse to start on load failure
        app.state.model_scorer = scorer
        app.state.model_lock = threading.Lock()
        translator = None
        if config.translation_model:
            translator = ModelTranslator(config.translation_model)
            translator.load()
        app.state.model_translator = translator
    else:
        app.state.model_scorer = None
        app.state.model_translator = None

    stub_translator = (
        StubTranslator.from_file(config.mapping_file)
        if config.mapping_file
        else StubTranslator()
    )
    app.state.stub_translator = stub_translator

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return _error(400, f"malformed request: {exc.errors()[:3]}")

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/score", response_model=ScoreBatchResult)
    def score(batch: ScoreBatch):
        app.state.score_calls += 1
        if not batch.items:
            return _error(400, "items must be non-empty")
        results = []
        for i, item in enumerate(batch.items):
            if not item.question:
                return _error(400, f"items[{i}].question must be non-empty")
            if not item.passage:
                return _error(400, f"items[{i}].passage must be non-empty")
            try:
                if app.state.model_scorer is not None:
                    with app.state.model_lock:
                        avg, num = app.state.model_scorer.score(
                            item.question, item.passage,
                            prompt_suffix=item.prompt_suffix,
                            target_lang_tag=item.target_lang_tag,
                        )
                else:
                    avg, num = stub_score(
                        item.question, item.passage, prompt_suffix=item.prompt_suffix
                    )
            except ValueError as exc:
                status = 413 if _is_too_long(exc) else 400
                return _error(status, f"items[{i}]: {exc}")
            if not math.isfinite(avg):
                return _error(500, f"items[{i}]: model produced a non-finite score")
            results.append(ScoreValue(avg_log_likelihood=avg, num_tokens=num))
        return ScoreBatchResult(items=results)

    @app.post("/v1/translate", response_model=TranslateOut)
    def translate(request: TranslateIn):
        app.state.translate_calls += 1
        if not request.text:
            return _error(400, "text must be non-empty")
        if request.tgt == "und":
            return _error(400, "tgt must not be 'und'")
        translator = app.state.model_translator or app.state.stub_translator
        try:
            translated = translator.translate(request.text, request.src, request.tgt)
        except ValueError as exc:
            return _error(400, str(exc))
        return TranslateOut(text=translated)

    return app


def _is_too_long(exc: ValueError) -> bool:
    from importlib import import_module

    try:
        backend = import_module("xlrank_service.model_backend")
    except ImportError:  # torch-free install
        return False
    return isinstance(exc, backend.SequenceTooLong)
