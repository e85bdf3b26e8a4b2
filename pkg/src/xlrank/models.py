"""Canonical domain types for retrieval runs and QA examples.

All types are immutable after construction and safe to share across
threads. Sequence-valued fields are stored as tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ValidationError

#: Distinguished code for an unknown / undetermined language.
UND = "und"


def is_language_code(code: str) -> bool:
    """True for a two-letter lowercase ASCII code or the "und" sentinel."""
    if code == UND:
        return True
    return len(code) == 2 and all("a" <= c <= "z" for c in code)


def check_language_code(code: str, field_name: str = "lang") -> str:
    if not isinstance(code, str) or not is_language_code(code):
        raise ValidationError(
            f"{field_name} must be a two-letter lowercase code or 'und', got {code!r}"
        )
    return code


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    lang: str

    def __post_init__(self):
        if not self.id:
            raise ValidationError("question id must be non-empty")
        if not self.text.strip():
            raise ValidationError(f"question {self.id!r}: text must be non-empty")
        check_language_code(self.lang, "question lang")


@dataclass(frozen=True)
class Passage:
    id: str
    title: str
    text: str
    lang: str = UND

    def __post_init__(self):
        if not self.id:
            raise ValidationError("passage id must be non-empty")
        if not self.text:
            raise ValidationError(f"passage {self.id!r}: text must be non-empty")
        check_language_code(self.lang, "passage lang")

    def display_text(self) -> str:
        """Title and body joined by a single space; body alone if no title."""
        return f"{self.title} {self.text}" if self.title else self.text


@dataclass(frozen=True)
class Candidate:
    """One retrieved passage with its original retriever rank and label.

    ``retriever_score`` is retained from ingestion but is never consulted
    by the re-ranker.
    """

    passage: Passage
    orig_rank: int
    is_positive: bool
    retriever_score: float | None = None

    def __post_init__(self):
        if self.orig_rank < 1:
            raise ValidationError(
                f"candidate {self.passage.id!r}: orig_rank must be >= 1, "
                f"got {self.orig_rank}"
            )


@dataclass(frozen=True)
class RetrievalRun:
    """One question with its ordered candidate passages.

    The candidate list order is the *current* ranking: parsed runs are in
    original retriever order (orig_rank ascending), re-ranked runs are in
    score order with orig_rank preserved on each candidate. The orig_rank
    values always form a contiguous 1..n permutation.

    ``total_positives`` freezes the recall denominator from the original
    (pre-rerank) candidate list; when None it is derived on demand from
    the positive flags.
    """

    question: Question
    candidates: tuple[Candidate, ...]
    total_positives: int | None = None

    def __post_init__(self):
        candidates = tuple(self.candidates)
        object.__setattr__(self, "candidates", candidates)
        if not candidates:
            raise ValidationError(
                f"run {self.question.id!r}: candidate list must be non-empty"
            )
        ranks = sorted(c.orig_rank for c in candidates)
        if ranks != list(range(1, len(candidates) + 1)):
            raise ValidationError(
                f"run {self.question.id!r}: orig_rank values must form a "
                f"contiguous 1..{len(candidates)} permutation"
            )
        ids = [c.passage.id for c in candidates]
        if len(set(ids)) != len(ids):
            dup = next(i for i in ids if ids.count(i) > 1)
            raise ValidationError(
                f"run {self.question.id!r}: duplicate passage id {dup!r}"
            )
        if self.total_positives is not None and self.total_positives < 0:
            raise ValidationError(
                f"run {self.question.id!r}: total_positives must be >= 0"
            )

    def num_positives(self) -> int:
        """Positive count of the current candidate list."""
        return sum(1 for c in self.candidates if c.is_positive)

    def frozen_total_positives(self) -> int:
        """The recall denominator: explicit if set, else derived from flags."""
        if self.total_positives is not None:
            return self.total_positives
        return self.num_positives()

    def with_candidates(self, candidates, total_positives: int | None = None) -> "RetrievalRun":
        return replace(
            self,
            candidates=tuple(candidates),
            total_positives=(
                self.frozen_total_positives() if total_positives is None else total_positives
            ),
        )


@dataclass(frozen=True)
class QAExample:
    """A (question, answers, positive/negative paragraphs) augmentation unit."""

    question: Question
    answers: tuple[str, ...]
    positives: tuple[Passage, ...] = ()
    negatives: tuple[Passage, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "answers", tuple(self.answers))
        object.__setattr__(self, "positives", tuple(self.positives))
        object.__setattr__(self, "negatives", tuple(self.negatives))
        if not self.answers:
            raise ValidationError(
                f"example {self.question.id!r}: answers must be non-empty"
            )
        if any(not a for a in self.answers):
            raise ValidationError(
                f"example {self.question.id!r}: answers must be non-empty strings"
            )


@dataclass(frozen=True)
class AugmentedExample:
    """A translated QAExample with its provenance."""

    example: QAExample
    source_id: str
    aug_lang: str
