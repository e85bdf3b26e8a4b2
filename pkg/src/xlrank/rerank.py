"""Question-generation re-ranking of retrieval runs.

Re-scores the top-k candidates of each run by the likelihood of
generating the question from the passage and reorders by that score
alone: the retriever's own scores and ranks are never consulted, so the
re-ranker composes with output from any underlying retrieval model.

Four request-building variants are supported: prompting the scorer to
generate in the question's language, translating the passage into the
question's language, translating the question into the (detected)
passage language, and tagging the target language for models that accept
a language control tag.
"""

from __future__ import annotations

import enum
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Protocol, runtime_checkable

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import RerankError, ValidationError
from .langid import detect_language
from .models import UND, Candidate, Passage, Question, RetrievalRun
from .scoring import LikelihoodScore, UnigramScorer


class ExperimentMode(enum.Enum):
    """The four request-building variants.

    LANGUAGE_TAGGED scores the question text as-is under a target-language
    control tag; scorers wanting a translated question should use
    QUESTION_TRANSLATED instead.
    """

    DIRECT_PROMPT = "direct_prompt"
    PASSAGE_TRANSLATED = "passage_translated"
    QUESTION_TRANSLATED = "question_translated"
    LANGUAGE_TAGGED = "language_tagged"


@dataclass(frozen=True)
class ScorerRequest:
    """One scoring unit: a question paired with a candidate passage text."""

    question_text: str
    question_lang: str
    passage_text: str
    passage_lang: str
    prompt_suffix: str | None = None
    target_lang_tag: str | None = None

    def __post_init__(self):
        if not self.question_text:
            raise ValidationError("question_text must be non-empty")
        if not self.passage_text:
            raise ValidationError("passage_text must be non-empty")


@dataclass(frozen=True)
class ScoredCandidate:
    candidate: Candidate
    qg_score: float
    orig_rank: int

    def __post_init__(self):
        if not math.isfinite(self.qg_score):
            raise ValidationError(
                f"candidate {self.candidate.passage.id!r}: qg_score must be finite"
            )


@runtime_checkable
class Scorer(Protocol):
    """Scorer contract: a ScorerRequest in, a LikelihoodScore out.

    Implementations must be safe for concurrent use (both built-ins are).
    ``score_many`` exists so transports can batch; semantics equal mapping
    ``score`` over the list.
    """

    def score(self, request: ScorerRequest) -> LikelihoodScore: ...

    def score_many(self, requests: list[ScorerRequest]) -> list[LikelihoodScore]: ...


@runtime_checkable
class Translator(Protocol):
    """Translator contract: (text, src, tgt) -> translated text."""

    def translate(self, text: str, src: str, tgt: str) -> str: ...


_LANGUAGE_NAMES = {
    "ar": "Arabic",
    "bn": "Bengali",
    "de": "German",
    "en": "English",
    "es": "Spanish",
    "fi": "Finnish",
    "fr": "French",
    "hi": "Hindi",
    "it": "Italian",
    "ja": "Japanese",
    "ko": "Korean",
    "nl": "Dutch",
    "pl": "Polish",
    "pt": "Portuguese",
    "ru": "Russian",
    "sv": "Swedish",
    "te": "Telugu",
    "th": "Thai",
    "tr": "Turkish",
    "zh": "Chinese",
}


def language_name(code: str) -> str:
    """English name of a language code; the code itself when unknown."""
    return _LANGUAGE_NAMES.get(code, code)


def build_request(
    question: Question,
    passage: Passage,
    mode: ExperimentMode,
    translator: Translator | None = None,
) -> ScorerRequest:
    """Assemble the scorer input for one (question, passage) pair.

    Modes 2 and 3 require a translator; mode 3 detects the passage
    language when it is unknown and fails if detection comes back "und".
    """
    passage_text = passage.display_text()
    if mode is ExperimentMode.DIRECT_PROMPT:
        return ScorerRequest(
            question_text=question.text,
            question_lang=question.lang,
            passage_text=passage_text,
            passage_lang=passage.lang,
            prompt_suffix=(
                f"Please generate a question in {language_name(question.lang)} "
                "for this passage"
            ),
        )
    if mode is ExperimentMode.LANGUAGE_TAGGED:
        return ScorerRequest(
            question_text=question.text,
            question_lang=question.lang,
            passage_text=passage_text,
            passage_lang=passage.lang,
            target_lang_tag=question.lang,
        )
    if translator is None:
        raise ValidationError(f"mode {mode.value} requires a translator")
    if mode is ExperimentMode.PASSAGE_TRANSLATED:
        translated = translator.translate(passage_text, passage.lang, question.lang)
        return ScorerRequest(
            question_text=question.text,
            question_lang=question.lang,
            passage_text=translated,
            passage_lang=question.lang,
        )
    if mode is ExperimentMode.QUESTION_TRANSLATED:
        passage_lang = passage.lang
        if passage_lang == UND:
            passage_lang = detect_language(passage.text)
        if passage_lang == UND:
            raise ValidationError(
                f"undetectable passage language for passage {passage.id!r}"
            )
        translated = translator.translate(question.text, question.lang, passage_lang)
        return ScorerRequest(
            question_text=translated,
            question_lang=passage_lang,
            passage_text=passage_text,
            passage_lang=passage.lang,
        )
    raise ValidationError(f"unknown experiment mode {mode!r}")


def score_run(
    run: RetrievalRun,
    scorer: Scorer,
    mode: ExperimentMode,
    translator: Translator | None = None,
    k: int = 50,
) -> list[ScoredCandidate]:
    """Question-generation scores for the first min(k, n) candidates.

    Any scorer or translation failure aborts the whole run with a
    RerankError naming the offending candidate.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    head = run.candidates[: min(k, len(run.candidates))]
    requests = []
    for cand in head:
        try:
            requests.append(build_request(run.question, cand.passage, mode, translator))
        except Exception as exc:
            raise RerankError(run.question.id, cand.passage.id, str(exc)) from exc
    try:
        scores = scorer.score_many(requests)
    except Exception as exc:
        # Re-score one by one to attribute the failure to a candidate.
        for cand, req in zip(head, requests):
            try:
                scorer.score(req)
            except Exception as inner:
                raise RerankError(run.question.id, cand.passage.id, str(inner)) from inner
        raise RerankError(run.question.id, None, str(exc)) from exc
    if len(scores) != len(head):
        raise RerankError(
            run.question.id, None,
            f"scorer returned {len(scores)} scores for {len(head)} candidates",
        )
    out = []
    for cand, sc in zip(head, scores):
        try:
            out.append(ScoredCandidate(
                candidate=cand, qg_score=sc.avg_log_likelihood, orig_rank=cand.orig_rank
            ))
        except ValidationError as exc:
            raise RerankError(run.question.id, cand.passage.id, str(exc)) from exc
    return out


def order_scored(scored: Iterable[ScoredCandidate]) -> list[ScoredCandidate]:
    """Score-descending order with ties broken by ascending orig_rank."""
    return sorted(scored, key=lambda s: (-s.qg_score, s.orig_rank))


def _strip_retriever_score(candidate: Candidate) -> Candidate:
    if candidate.retriever_score is None:
        return candidate
    return Candidate(
        passage=candidate.passage,
        orig_rank=candidate.orig_rank,
        is_positive=candidate.is_positive,
        retriever_score=None,
    )


def rerank(
    run: RetrievalRun,
    scorer: Scorer,
    mode: ExperimentMode,
    translator: Translator | None = None,
    k: int = 50,
) -> RetrievalRun:
    """Reorder the first min(k, n) candidates by question-generation score.

    The output preserves each candidate's orig_rank (its new rank is its
    position) and the frozen total_positives of the input; candidates
    beyond k are dropped. Retriever scores are cleared in the output:
    the re-ranked ordering owes nothing to them, and omitting them makes
    that checkable bit for bit.
    """
    ordered = order_scored(score_run(run, scorer, mode, translator, k))
    return run.with_candidates(
        [_strip_retriever_score(s.candidate) for s in ordered]
    )


@dataclass(frozen=True)
class RerankRecord:
    """Per-run audit record: old order, new order, per-candidate scores."""

    question_id: str
    old_order: tuple[str, ...]
    new_order: tuple[str, ...]
    qg_scores: tuple[tuple[str, float], ...]  # aligned with new_order


@dataclass(frozen=True)
class RunFailure:
    question_id: str
    error: str


@dataclass(frozen=True)
class CorpusRerankResult:
    runs: list[RetrievalRun]
    records: list[RerankRecord]
    failures: list[RunFailure]


def rerank_corpus(
    runs: list[RetrievalRun],
    scorer: Scorer,
    mode: ExperimentMode,
    translator: Translator | None = None,
    k: int = 50,
    policy: str = "fail_fast",
    workers: int = 1,
) -> CorpusRerankResult:
    """Element-wise rerank of a corpus, order-stable at any worker count.

    ``policy`` is "fail_fast" (first failure propagates) or "skip"
    (failed runs are dropped from the output and reported per run).
    """
    if policy not in ("fail_fast", "skip"):
        raise ValidationError(f"policy must be 'fail_fast' or 'skip', got {policy!r}")

    def one(run: RetrievalRun):
        scored = score_run(run, scorer, mode, translator, k)
        ordered = order_scored(scored)
        out = run.with_candidates([_strip_retriever_score(s.candidate) for s in ordered])
        record = RerankRecord(
            question_id=run.question.id,
            old_order=tuple(c.passage.id for c in run.candidates[: min(k, len(run.candidates))]),
            new_order=tuple(s.candidate.passage.id for s in ordered),
            qg_scores=tuple((s.candidate.passage.id, s.qg_score) for s in ordered),
        )
        return out, record

    outcomes: list = []
    if workers <= 1 or len(runs) <= 1:
        for run in runs:
            try:
                outcomes.append(one(run))
            except RerankError as exc:
                if policy == "fail_fast":
                    raise
                outcomes.append(RunFailure(exc.question_id, str(exc)))
    else:
        def guarded(run: RetrievalRun):
            try:
                return one(run)
            except RerankError as exc:
                return RunFailure(exc.question_id, str(exc))

        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(guarded, runs))
        if policy == "fail_fast":
            for item in outcomes:
                if isinstance(item, RunFailure):
                    raise RerankError(item.question_id, None, item.error)

    out_runs: list[RetrievalRun] = []
    records: list[RerankRecord] = []
    failures: list[RunFailure] = []
    for item in outcomes:
        if isinstance(item, RunFailure):
            failures.append(item)
        else:
            run, record = item
            out_runs.append(run)
            records.append(record)
    return CorpusRerankResult(runs=out_runs, records=records, failures=failures)


def write_rerank_report(result: CorpusRerankResult, path: str | os.PathLike) -> None:
    """One JSON record per run: question id, old/new order, qg scores."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in result.records:
            fh.write(json.dumps(
                {
                    "q_id": rec.question_id,
                    "old_order": list(rec.old_order),
                    "new_order": list(rec.new_order),
                    "qg_scores": [
                        {"id": pid, "qg_score": s} for pid, s in rec.qg_scores
                    ],
                },
                ensure_ascii=False,
                separators=(",", ":"),
            ))
            fh.write("\n")
        for failure in result.failures:
            fh.write(json.dumps(
                {"q_id": failure.question_id, "error": failure.error},
                ensure_ascii=False,
                separators=(",", ":"),
            ))
            fh.write("\n")


class QuestionLikelihoodReranker(BaseEstimator, TransformerMixin):
    """Stateless transformer: runs in, re-ranked runs out.

    Parameters mirror :func:`rerank_corpus`; ``scorer=None`` selects the
    built-in unigram scorer. After ``transform``, per-run audit records
    and any skipped-run failures are available as ``records_`` and
    ``failures_``.
    """

    def __init__(
        self,
        scorer: Scorer | None = None,
        mode: ExperimentMode = ExperimentMode.LANGUAGE_TAGGED,
        translator: Translator | None = None,
        k: int = 50,
        policy: str = "fail_fast",
        workers: int = 1,
    ):
        self.scorer = scorer
        self.mode = mode
        self.translator = translator
        self.k = k
        self.policy = policy
        self.workers = workers

    def fit(self, X=None, y=None):
        return self

    def transform(self, X: list[RetrievalRun]) -> list[RetrievalRun]:
        scorer = self.scorer if self.scorer is not None else UnigramScorer()
        result = rerank_corpus(
            list(X),
            scorer=scorer,
            mode=self.mode,
            translator=self.translator,
            k=self.k,
            policy=self.policy,
            workers=self.workers,
        )
        self.records_ = result.records
        self.failures_ = result.failures
        return result.runs
