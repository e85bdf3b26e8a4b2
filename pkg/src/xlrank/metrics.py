"""Retrieval and answer evaluation metrics.

Conventions, fixed once for the whole toolkit:

* Positives@K counts positive passages among the top K of the current
  ordering; corpus numbers are per-question means.
* Recall@K is a percentage of the run's *frozen* total positives (the
  positives found in the original pre-rerank candidate list), so a
  re-ranked run is measured against the same denominator as its
  baseline. Runs with zero total positives are excluded from recall
  aggregation, not divided by zero.
* MRR uses the current rank of the first positive whose passage language
  matches the subset predicate (same / cross / all relative to the
  question language); questions without a qualifying positive contribute
  0. ``mrr_mode="mean_all"`` instead averages reciprocal ranks of every
  qualifying positive.
* Token-level F1 compares tokenized predicted and gold answers by
  multiset overlap, taking the best score over multiple gold strings.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import ValidationError
from .langid import detect_language
from .models import UND, Candidate, Passage, RetrievalRun
from .scoring import tokenize

DEFAULT_KS = (5, 15)

_MRR_SUBSETS = ("same", "cross", "all")
_MRR_MODES = ("first", "mean_all")


def positives_at_k(run: RetrievalRun, k: int) -> int:
    """Positive passages among the first min(k, n) of the current order."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    return sum(1 for c in run.candidates[:k] if c.is_positive)


def recall_at_k(run: RetrievalRun, k: int) -> float | None:
    """Percentage of the frozen total positives found in the top k.

    Returns None for runs with zero total positives; those are excluded
    from aggregation rather than treated as division errors.
    """
    total = run.frozen_total_positives()
    if total == 0:
        return None
    return 100.0 * positives_at_k(run, k) / total


def _qualifies(candidate: Candidate, question_lang: str, subset: str) -> bool:
    if not candidate.is_positive:
        return False
    if subset == "all":
        return True
    if subset == "same":
        return candidate.passage.lang == question_lang
    return candidate.passage.lang != question_lang


def mrr(run: RetrievalRun, subset: str = "all", mrr_mode: str = "first") -> float:
    """Reciprocal-rank score of the qualifying positives in current order.

    ``subset`` restricts positives by passage language relative to the
    question: "same", "cross", or "all". With ``mrr_mode="first"`` the
    value is 1/rank of the highest-ranked qualifying positive; with
    "mean_all" it is the mean reciprocal rank over all of them. Both
    return 0.0 when no positive qualifies.
    """
    if subset not in _MRR_SUBSETS:
        raise ValidationError(f"subset must be one of {_MRR_SUBSETS}, got {subset!r}")
    if mrr_mode not in _MRR_MODES:
        raise ValidationError(f"mrr_mode must be one of {_MRR_MODES}, got {mrr_mode!r}")
    reciprocal = [
        1.0 / rank
        for rank, cand in enumerate(run.candidates, start=1)
        if _qualifies(cand, run.question.lang, subset)
    ]
    if not reciprocal:
        return 0.0
    if mrr_mode == "first":
        return reciprocal[0]
    return sum(reciprocal) / len(reciprocal)


def resolve_run_languages(run: RetrievalRun) -> RetrievalRun:
    """Fill unknown candidate passage languages via script detection.

    Passages whose text defeats detection keep lang "und"; callers decide
    how to treat such runs (aggregate excludes them from MRR).
    """
    changed = False
    candidates = []
    for cand in run.candidates:
        if cand.passage.lang == UND:
            detected = detect_language(cand.passage.text)
            if detected != UND:
                cand = Candidate(
                    passage=Passage(
                        id=cand.passage.id,
                        title=cand.passage.title,
                        text=cand.passage.text,
                        lang=detected,
                    ),
                    orig_rank=cand.orig_rank,
                    is_positive=cand.is_positive,
                    retriever_score=cand.retriever_score,
                )
                changed = True
        candidates.append(cand)
    if not changed:
        return run
    return run.with_candidates(candidates)


def has_unresolved_positive(run: RetrievalRun) -> bool:
    """True when some positive passage still has an unknown language."""
    return any(c.is_positive and c.passage.lang == UND for c in run.candidates)


# ---------------------------------------------------------------------------
# Answer metrics


@dataclass(frozen=True)
class AnswerPair:
    predicted: str
    gold: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "gold", tuple(self.gold))
        if not self.gold:
            raise ValidationError("gold answers must be non-empty")


def _f1(predicted: tuple[str, ...], gold: tuple[str, ...]) -> float:
    if not predicted and not gold:
        return 1.0
    if not predicted or not gold:
        return 0.0
    overlap = sum((Counter(predicted) & Counter(gold)).values())
    if overlap == 0:
        return 0.0
    precision = overlap / len(predicted)
    recall = overlap / len(gold)
    return 2 * precision * recall / (precision + recall)


def token_f1(pair: AnswerPair) -> float:
    """Best token-multiset F1 of the prediction against any gold answer."""
    predicted = tuple(tokenize(pair.predicted))
    return max(_f1(predicted, tuple(tokenize(g))) for g in pair.gold)


# ---------------------------------------------------------------------------
# Aggregation


@dataclass(frozen=True)
class LanguageMetrics:
    """Per-language means plus the question counts behind them."""

    positives_at: dict[int, float]
    recall_at: dict[int, float]
    mrr_same: float
    mrr_cross: float
    n_questions: int
    n_recall_questions: int
    n_mrr_questions: int

    def __post_init__(self):
        if not 0.0 <= self.mrr_same <= 1.0 or not 0.0 <= self.mrr_cross <= 1.0:
            raise ValidationError("mrr values must be within [0, 1]")
        if any(not 0.0 <= v <= 100.0 for v in self.recall_at.values()):
            raise ValidationError("recall values must be within [0, 100]")
        if any(v < 0.0 for v in self.positives_at.values()):
            raise ValidationError("positives values must be >= 0")


@dataclass(frozen=True)
class MetricsReport:
    per_language: dict[str, LanguageMetrics]
    ks: tuple[int, ...] = DEFAULT_KS
    mrr_excluded: tuple[str, ...] = field(default_factory=tuple)  # question ids

    def languages(self) -> list[str]:
        return sorted(self.per_language)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def aggregate(
    runs: list[RetrievalRun],
    ks: tuple[int, ...] = DEFAULT_KS,
    mrr_mode: str = "first",
    resolve_languages: bool = True,
) -> MetricsReport:
    """Per-language arithmetic means of every per-run metric.

    Runs with zero total positives are excluded from recall means (their
    count shows up in the gap between n_questions and n_recall_questions);
    runs with a positive passage of undetectable language are excluded
    from the MRR means and listed in ``mrr_excluded``.
    """
    ks = tuple(ks)
    if not ks or any(k < 1 for k in ks):
        raise ValidationError(f"ks must be positive integers, got {ks}")
    by_lang: dict[str, list[RetrievalRun]] = {}
    for run in runs:
        if resolve_languages:
            run = resolve_run_languages(run)
        by_lang.setdefault(run.question.lang, []).append(run)

    per_language: dict[str, LanguageMetrics] = {}
    mrr_excluded: list[str] = []
    for lang in sorted(by_lang):
        lang_runs = by_lang[lang]
        pos_means = {
            k: _mean([float(positives_at_k(r, k)) for r in lang_runs]) for k in ks
        }
        recall_values: dict[int, list[float]] = {k: [] for k in ks}
        n_recall = 0
        for r in lang_runs:
            per_run = {k: recall_at_k(r, k) for k in ks}
            if all(v is None for v in per_run.values()):
                continue
            n_recall += 1
            for k in ks:
                recall_values[k].append(per_run[k])
        mrr_runs = []
        for r in lang_runs:
            if has_unresolved_positive(r):
                mrr_excluded.append(r.question.id)
            else:
                mrr_runs.append(r)
        per_language[lang] = LanguageMetrics(
            positives_at=pos_means,
            recall_at={k: _mean(recall_values[k]) for k in ks},
            mrr_same=_mean([mrr(r, "same", mrr_mode) for r in mrr_runs]),
            mrr_cross=_mean([mrr(r, "cross", mrr_mode) for r in mrr_runs]),
            n_questions=len(lang_runs),
            n_recall_questions=n_recall,
            n_mrr_questions=len(mrr_runs),
        )
    return MetricsReport(
        per_language=per_language, ks=ks, mrr_excluded=tuple(mrr_excluded)
    )


# ---------------------------------------------------------------------------
# Row differences ("Gain" rows between two result tables)

MetricRow = dict[str, dict[int, float]]


def gain(row_a: MetricRow, row_b: MetricRow) -> MetricRow:
    """Element-wise row_b - row_a over matching (language, K) keys."""
    if set(row_a) != set(row_b):
        raise ValidationError(
            f"rows cover different languages: {sorted(row_a)} vs {sorted(row_b)}"
        )
    out: MetricRow = {}
    for lang in row_a:
        if set(row_a[lang]) != set(row_b[lang]):
            raise ValidationError(
                f"rows cover different Ks for {lang!r}: "
                f"{sorted(row_a[lang])} vs {sorted(row_b[lang])}"
            )
        out[lang] = {k: row_b[lang][k] - row_a[lang][k] for k in row_a[lang]}
    return out


def recall_row(report: MetricsReport) -> MetricRow:
    return {lang: dict(m.recall_at) for lang, m in report.per_language.items()}


def positives_row(report: MetricsReport) -> MetricRow:
    return {lang: dict(m.positives_at) for lang, m in report.per_language.items()}
