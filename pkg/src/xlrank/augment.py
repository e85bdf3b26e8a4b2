"""Translation-based QA data augmentation and reader-input assembly.

The augmentation procedure has two steps: translate English (question,
paragraphs, answers) tuples into a target language, then keep only
examples whose translated answer still occurs verbatim in a translated
positive paragraph. The containment check is a raw substring match by
default ("as is"); an NFKC-casefolded variant is available behind the
``containment_mode`` flag for study.

Reader inputs concatenate whole passages, separated by " [SEP] ", until
the next passage would push the question + context token count over the
budget; a first passage that alone exceeds the budget is cut at token
granularity.
"""

from __future__ import annotations

import json
import os
import unicodedata
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import ParseError, TranslationError, ValidationError
from .models import AugmentedExample, Passage, QAExample, Question
from .rerank import Translator
from .runfile import parse_run_file
from .scoring import tokenize

PASSAGE_SEPARATOR = " [SEP] "
_SEPARATOR_TOKENS = len(tokenize(PASSAGE_SEPARATOR))  # "[SEP]" -> ["sep"]


@dataclass(frozen=True)
class AugmentationConfig:
    target_langs: tuple[str, ...]
    n_examples: int = 5000
    n_pos_paragraphs: int = 3
    n_neg_paragraphs: int = 3
    max_input_tokens: int = 600

    def __post_init__(self):
        object.__setattr__(self, "target_langs", tuple(self.target_langs))
        if not self.target_langs:
            raise ValidationError("target_langs must be non-empty")
        for value, name in (
            (self.n_examples, "n_examples"),
            (self.n_pos_paragraphs, "n_pos_paragraphs"),
            (self.n_neg_paragraphs, "n_neg_paragraphs"),
            (self.max_input_tokens, "max_input_tokens"),
        ):
            if value < 1:
                raise ValidationError(f"{name} must be >= 1, got {value}")


@dataclass(frozen=True)
class ReaderRecord:
    question_text: str
    context: str
    answers: tuple[str, ...]
    lang: str


def build_reader_input(
    question: Question,
    passages: list[Passage] | tuple[Passage, ...],
    answers: tuple[str, ...],
    max_input_tokens: int = 600,
) -> ReaderRecord:
    """Concatenate passages under the question + context token budget.

    Whole passages are added in the given order until the next would
    exceed ``max_input_tokens`` (reference tokenization, one token per
    " [SEP] " separator). At least one passage is always included; if the
    first alone exceeds the budget its tokens are cut to fit and rejoined
    with single spaces.
    """
    if not passages:
        raise ValidationError("build_reader_input requires at least one passage")
    question_tokens = len(tokenize(question.text))
    budget = max_input_tokens - question_tokens
    if budget <= 0:
        raise ValidationError(
            f"question alone uses {question_tokens} of {max_input_tokens} budget tokens"
        )
    blocks: list[str] = []
    used = 0
    for i, passage in enumerate(passages):
        block = passage.display_text()
        block_tokens = len(tokenize(block))
        cost = block_tokens if i == 0 else _SEPARATOR_TOKENS + block_tokens
        if used + cost > budget:
            if i == 0:
                head = tuple(tokenize(block))[:budget]
                blocks.append(" ".join(head))
                used = len(head)
            break
        blocks.append(block)
        used += cost
    return ReaderRecord(
        question_text=question.text,
        context=PASSAGE_SEPARATOR.join(blocks),
        answers=tuple(answers),
        lang=question.lang,
    )


def _fold(text: str) -> str:
    return unicodedata.normalize("NFKC", text).casefold()


def _contains(haystack: str, needle: str, containment_mode: str) -> bool:
    if containment_mode == "exact":
        return needle in haystack
    if containment_mode == "nfkc_casefold":
        return _fold(needle) in _fold(haystack)
    raise ValidationError(
        f"containment_mode must be 'exact' or 'nfkc_casefold', got {containment_mode!r}"
    )


def filter_contains_answer(example: QAExample, containment_mode: str = "exact") -> bool:
    """True iff some answer occurs as a substring of a positive paragraph."""
    return any(
        _contains(passage.text, answer, containment_mode)
        for passage in example.positives
        for answer in example.answers
    )


def _translate_field(translator: Translator, text: str, src: str, tgt: str, what: str) -> str:
    try:
        out = translator.translate(text, src, tgt)
    except Exception as exc:
        raise TranslationError(f"translating {what} failed: {exc}") from exc
    if not isinstance(out, str) or not out:
        raise TranslationError(f"translating {what} produced empty output")
    return out


def _translate_passage(translator: Translator, passage: Passage, src: str, tgt: str) -> Passage:
    title = passage.title
    if title:
        title = _translate_field(translator, title, src, tgt, f"title of {passage.id!r}")
    text = _translate_field(translator, passage.text, src, tgt, f"text of {passage.id!r}")
    return Passage(id=f"{passage.id}#{tgt}", title=title, text=text, lang=tgt)


def translate_example(example: QAExample, tgt: str, translator: Translator) -> QAExample:
    """Translate an English example into ``tgt``; ids gain a "#tgt" suffix.

    Question, every answer, and every paragraph (title and text) are
    translated independently; any failure raises TranslationError and no
    partial example is produced.
    """
    src = example.question.lang
    if src != "en":
        raise ValidationError(
            f"example {example.question.id!r}: source language must be 'en', got {src!r}"
        )
    question = Question(
        id=f"{example.question.id}#{tgt}",
        text=_translate_field(translator, example.question.text, src, tgt, "question"),
        lang=tgt,
    )
    answers = tuple(
        _translate_field(translator, a, src, tgt, f"answer {i}")
        for i, a in enumerate(example.answers)
    )
    positives = tuple(_translate_passage(translator, p, src, tgt) for p in example.positives)
    negatives = tuple(_translate_passage(translator, p, src, tgt) for p in example.negatives)
    return QAExample(question=question, answers=answers, positives=positives, negatives=negatives)


@dataclass
class LanguageAugmentStats:
    kept: int = 0
    dropped: int = 0
    errors: int = 0


@dataclass(frozen=True)
class AugmentationResult:
    kept: list[AugmentedExample]
    dropped: int
    errors: int
    report: dict[str, LanguageAugmentStats] = field(default_factory=dict)


def _truncate(example: QAExample, config: AugmentationConfig) -> QAExample:
    return QAExample(
        question=example.question,
        answers=example.answers,
        positives=example.positives[: config.n_pos_paragraphs],
        negatives=example.negatives[: config.n_neg_paragraphs],
    )


def augment_corpus(
    source: list[QAExample],
    config: AugmentationConfig,
    translator: Translator,
    policy: str = "skip",
    workers: int = 1,
    containment_mode: str = "exact",
) -> AugmentationResult:
    """Translate-then-filter augmentation over the first n_examples items.

    Each selected example is truncated to the configured paragraph
    counts, translated into every target language, and kept only when a
    translated answer still occurs verbatim in a translated positive
    paragraph. kept + dropped + errors equals selected x languages.
    Output order equals input order regardless of worker count.
    """
    if policy not in ("fail_fast", "skip"):
        raise ValidationError(f"policy must be 'fail_fast' or 'skip', got {policy!r}")
    selected = [_truncate(ex, config) for ex in source[: config.n_examples]]
    jobs = [(ex, lang) for ex in selected for lang in config.target_langs]

    def translate_job(job):
        ex, lang = job
        try:
            return translate_example(ex, lang, translator)
        except (TranslationError, ValidationError) as exc:
            if policy == "fail_fast":
                raise
            return exc

    if workers <= 1 or len(jobs) <= 1:
        outcomes = [translate_job(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(translate_job, jobs))

    report = {lang: LanguageAugmentStats() for lang in config.target_langs}
    kept: list[AugmentedExample] = []
    dropped = 0
    errors = 0
    for (ex, lang), outcome in zip(jobs, outcomes):
        stats = report[lang]
        if isinstance(outcome, Exception):
            stats.errors += 1
            errors += 1
            continue
        if filter_contains_answer(outcome, containment_mode):
            stats.kept += 1
            kept.append(
                AugmentedExample(example=outcome, source_id=ex.question.id, aug_lang=lang)
            )
        else:
            stats.dropped += 1
            dropped += 1
    return AugmentationResult(kept=kept, dropped=dropped, errors=errors, report=report)


# ---------------------------------------------------------------------------
# QA-example files


def _parse_ctx(raw, example_id: str, kind: str, index: int, line: int) -> Passage:
    if not isinstance(raw, dict):
        raise ParseError(f"{kind}_ctxs[{index}] is not an object", line)
    text = raw.get("text")
    if not isinstance(text, str) or not text:
        raise ParseError(f"{kind}_ctxs[{index}].text missing or empty", line)
    title = raw.get("title", "")
    if not isinstance(title, str):
        raise ParseError(f"{kind}_ctxs[{index}].title must be a string", line)
    return Passage(id=f"{example_id}:{kind}{index}", title=title, text=text)


def _example_from_qa_record(record: dict, line: int) -> QAExample:
    ex_id = record.get("id")
    if not isinstance(ex_id, str) or not ex_id:
        raise ParseError("field 'id' missing or empty", line)
    q_text = record.get("question")
    if not isinstance(q_text, str) or not q_text.strip():
        raise ParseError("field 'question' missing or empty", line)
    lang = record.get("lang")
    if not isinstance(lang, str):
        raise ParseError("field 'lang' missing", line)
    answers = record.get("answers")
    if not isinstance(answers, list) or not answers or not all(
        isinstance(a, str) and a for a in answers
    ):
        raise ParseError("field 'answers' must be a non-empty list of strings", line)
    positives = [
        _parse_ctx(c, ex_id, "pos", i, line)
        for i, c in enumerate(record.get("positive_ctxs", []))
    ]
    negatives = [
        _parse_ctx(c, ex_id, "neg", i, line)
        for i, c in enumerate(record.get("negative_ctxs", []))
    ]
    return QAExample(
        question=Question(id=ex_id, text=q_text, lang=lang),
        answers=tuple(answers),
        positives=tuple(positives),
        negatives=tuple(negatives),
    )


def read_qa_file(path: str | os.PathLike) -> list[QAExample]:
    """Read QA examples from the QA-example JSONL format.

    A run file (records with "ctxs" and an "answers" field) is accepted
    too: positives and negatives are derived from the is_positive flags.
    """
    examples: list[QAExample] = []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
    if first and '"ctxs"' in first:
        return _examples_from_run_file(path)
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from None
            examples.append(_example_from_qa_record(record, line_no))
    return examples


def _examples_from_run_file(path: str | os.PathLike) -> list[QAExample]:
    # Answers live in the raw records; the run parser drops unknown fields.
    answers_by_qid: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            record = json.loads(raw)
            answers = record.get("answers")
            if not isinstance(answers, list) or not answers:
                raise ParseError(
                    "run-file records need an 'answers' field to build QA examples",
                    line_no,
                )
            answers_by_qid[record["q_id"]] = answers
    examples = []
    for run in parse_run_file(path):
        positives = tuple(c.passage for c in run.candidates if c.is_positive)
        negatives = tuple(c.passage for c in run.candidates if not c.is_positive)
        examples.append(
            QAExample(
                question=run.question,
                answers=tuple(answers_by_qid[run.question.id]),
                positives=positives,
                negatives=negatives,
            )
        )
    return examples


def write_qa_file(augmented: list[AugmentedExample], path: str | os.PathLike) -> None:
    """Write augmented examples in the QA-example format plus provenance."""
    with open(path, "w", encoding="utf-8") as fh:
        for item in augmented:
            ex = item.example
            record = {
                "id": ex.question.id,
                "question": ex.question.text,
                "lang": ex.question.lang,
                "answers": list(ex.answers),
                "positive_ctxs": [{"title": p.title, "text": p.text} for p in ex.positives],
                "negative_ctxs": [{"title": p.title, "text": p.text} for p in ex.negatives],
                "source_id": item.source_id,
                "aug_lang": item.aug_lang,
            }
            fh.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def write_augment_summary(result: AugmentationResult, path: str | os.PathLike) -> None:
    summary = {
        "kept": len(result.kept),
        "dropped": result.dropped,
        "errors": result.errors,
        "per_language": {
            lang: {"kept": s.kept, "dropped": s.dropped, "errors": s.errors}
            for lang, s in sorted(result.report.items())
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")
