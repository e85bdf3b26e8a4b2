"""Reading and writing retrieval run files.

A run file is newline-delimited UTF-8 JSON, one record per question:

    {"q_id": str, "question": str, "lang": str,
     "ctxs": [{"id": str, "title": str, "text": str,
               "score": str|number (optional), "lang": str (optional),
               "is_positive": bool}, ...],
     "total_positives": int (optional)}

Unknown fields are ignored. ``orig_rank`` is assigned from candidate
order, first = 1. The optional record-level ``total_positives`` and
ctx-level ``lang`` fields are emitted by this module's writer so that
frozen recall denominators and resolved passage languages survive a
round trip; files without them parse fine.
"""

from __future__ import annotations

import json
import os
from typing import Iterable

from .errors import ParseError, ValidationError
from .models import UND, Candidate, Passage, Question, RetrievalRun


def _require(record: dict, key: str, kind, line: int):
    value = record.get(key)
    if not isinstance(value, kind):
        raise ParseError(f"field {key!r} missing or not {kind.__name__}", line)
    return value


def _parse_score(raw, line: int, ctx_index: int) -> float | None:
    if raw is None:
        return None
    if isinstance(raw, bool):
        raise ParseError(f"ctxs[{ctx_index}].score must be a number or string", line)
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        try:
            return float(raw)
        except ValueError:
            raise ParseError(
                f"ctxs[{ctx_index}].score is not a decimal string: {raw!r}", line
            ) from None
    raise ParseError(f"ctxs[{ctx_index}].score must be a number or string", line)


def _parse_record(record: dict, line: int) -> RetrievalRun:
    q_id = _require(record, "q_id", str, line)
    q_text = _require(record, "question", str, line)
    q_lang = _require(record, "lang", str, line)
    ctxs = record.get("ctxs")
    if not isinstance(ctxs, list):
        raise ParseError("field 'ctxs' missing or not a list", line)
    if not ctxs:
        raise ValidationError(f"line {line}: run {q_id!r} has an empty candidate list")

    candidates = []
    for i, ctx in enumerate(ctxs):
        if not isinstance(ctx, dict):
            raise ParseError(f"ctxs[{i}] is not an object", line)
        p_id = ctx.get("id")
        if not isinstance(p_id, str) or not p_id:
            raise ParseError(f"ctxs[{i}].id missing or empty", line)
        text = ctx.get("text")
        if not isinstance(text, str) or not text:
            raise ParseError(f"ctxs[{i}].text missing or empty", line)
        title = ctx.get("title", "")
        if not isinstance(title, str):
            raise ParseError(f"ctxs[{i}].title must be a string", line)
        is_positive = ctx.get("is_positive")
        if not isinstance(is_positive, bool):
            raise ParseError(f"ctxs[{i}].is_positive missing or not a boolean", line)
        lang = ctx.get("lang", UND)
        if not isinstance(lang, str):
            raise ParseError(f"ctxs[{i}].lang must be a string", line)
        candidates.append(
            Candidate(
                passage=Passage(id=p_id, title=title, text=text, lang=lang),
                orig_rank=i + 1,
                is_positive=is_positive,
                retriever_score=_parse_score(ctx.get("score"), line, i),
            )
        )

    total = record.get("total_positives")
    if total is None:
        total = sum(1 for c in candidates if c.is_positive)
    elif not isinstance(total, int) or isinstance(total, bool) or total < 0:
        raise ParseError("field 'total_positives' must be a non-negative integer", line)

    try:
        return RetrievalRun(
            question=Question(id=q_id, text=q_text, lang=q_lang),
            candidates=tuple(candidates),
            total_positives=total,
        )
    except ValidationError as exc:
        raise ValidationError(f"line {line}: {exc}") from None


def parse_run_file(path: str | os.PathLike) -> list[RetrievalRun]:
    """Parse a run file into one RetrievalRun per line.

    Raises ParseError for malformed lines (with the line number),
    ValidationError for duplicate question ids or empty candidate lists.
    """
    runs: list[RetrievalRun] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
            if not isinstance(record, dict):
                raise ParseError("record is not an object", line_no)
            run = _parse_record(record, line_no)
            if run.question.id in seen:
                raise ValidationError(
                    f"line {line_no}: duplicate question id {run.question.id!r}"
                )
            seen.add(run.question.id)
            runs.append(run)
    return runs


def run_to_record(run: RetrievalRun) -> dict:
    """The JSON-serializable record for one run, in canonical field order."""
    ctxs = []
    for cand in run.candidates:
        ctx = {
            "id": cand.passage.id,
            "title": cand.passage.title,
            "text": cand.passage.text,
            "lang": cand.passage.lang,
        }
        if cand.retriever_score is not None:
            ctx["score"] = cand.retriever_score
        ctx["is_positive"] = cand.is_positive
        ctxs.append(ctx)
    return {
        "q_id": run.question.id,
        "question": run.question.text,
        "lang": run.question.lang,
        "total_positives": run.frozen_total_positives(),
        "ctxs": ctxs,
    }


def dumps_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def write_run_file(runs: Iterable[RetrievalRun], path: str | os.PathLike) -> None:
    """Write runs as newline-delimited JSON; output is byte-deterministic."""
    with open(path, "w", encoding="utf-8") as fh:
        for run in runs:
            fh.write(dumps_record(run_to_record(run)))
            fh.write("\n")
