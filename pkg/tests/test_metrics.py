"""Evaluation metrics against brute-force recomputation and frozen table values."""

import random

import pytest

from xlrank.errors import ValidationError
from xlrank.metrics import (
    AnswerPair,
    aggregate,
    gain,
    mrr,
    positives_at_k,
    recall_at_k,
    recall_row,
    resolve_run_languages,
    token_f1,
)
from xlrank.models import Candidate, Passage, Question, RetrievalRun, UND
from xlrank.reports import format_gain, render_gain_row

from helpers import make_run

LANGS = ["ko", "ja", "fi", "bn", "en"]


def random_run(rng: random.Random, q_id: str, n_max: int = 20) -> RetrievalRun:
    n = rng.randint(1, n_max)
    q_lang = rng.choice(LANGS)
    candidates = tuple(
        Candidate(
            passage=Passage(
                id=f"{q_id}-p{i}",
                title="",
                text=f"text {i}",
                lang=rng.choice(LANGS),
            ),
            orig_rank=i + 1,
            is_positive=rng.random() < 0.3,
        )
        for i in range(n)
    )
    return RetrievalRun(
        question=Question(id=q_id, text="q text", lang=q_lang),
        candidates=candidates,
    )


# Brute-force oracles, written straight from the definitions.

def brute_positives_at_k(run, k):
    count = 0
    for i, cand in enumerate(run.candidates):
        if i < k and cand.is_positive:
            count += 1
    return count


def brute_recall_at_k(run, k):
    total = run.total_positives
    if total is None:
        total = sum(1 for c in run.candidates if c.is_positive)
    if total == 0:
        return None
    return 100.0 * brute_positives_at_k(run, k) / total


def brute_mrr(run, subset, mode):
    ranks = []
    for i, cand in enumerate(run.candidates):
        if not cand.is_positive:
            continue
        same = cand.passage.lang == run.question.lang
        if subset == "same" and not same:
            continue
        if subset == "cross" and same:
            continue
        ranks.append(i + 1)
    if not ranks:
        return 0.0
    if mode == "first":
        return 1.0 / ranks[0]
    return sum(1.0 / r for r in ranks) / len(ranks)


class TestPositivesAtK:
    def test_counts_by_definition(self):
        run = make_run(passages=[
            ("t", True), ("t", False), ("t", True), ("t", False),
            ("t", False), ("t", False), ("t", True),
        ])
        assert positives_at_k(run, 5) == 2

    def test_no_positives(self):
        run = make_run(passages=[("t", False), ("t", False)])
        assert positives_at_k(run, 5) == 0

    def test_k_beyond_length(self):
        run = make_run(passages=[("t", True), ("t", True)])
        assert positives_at_k(run, 50) == 2

    def test_non_decreasing_in_k(self):
        rng = random.Random(0)
        run = random_run(rng, "q")
        values = [positives_at_k(run, k) for k in range(1, len(run.candidates) + 2)]
        assert values == sorted(values)


class TestRecallAtK:
    def test_quarter(self):
        # Oracle: 1 positive in top-5 of 4 total -> 25.0.
        run = make_run(
            passages=[("t", True)] + [("t", False)] * 6,
            total_positives=4,
        )
        assert recall_at_k(run, 5) == 25.0

    def test_full(self):
        run = make_run(passages=[("t", True)] * 4 + [("t", False)], total_positives=4)
        assert recall_at_k(run, 5) == 100.0

    def test_zero_total_positives_is_excluded_sentinel(self):
        run = make_run(passages=[("t", False)], total_positives=0)
        assert recall_at_k(run, 5) is None

    def test_recall_at_50_of_unreranked_50_run_is_100(self):
        rng = random.Random(1)
        for i in range(20):
            run = random_run(rng, f"q{i}", n_max=20)
            if run.frozen_total_positives() > 0:
                assert recall_at_k(run, len(run.candidates)) == 100.0


class TestMrr:
    def test_first_same_language_positive_at_rank_two(self):
        run = make_run(
            q_lang="ko",
            passages=[("t", False), ("t", True), ("t", True)],
            langs=["ko", "ko", "ko"],
        )
        assert mrr(run, "same") == 0.5

    def test_no_cross_language_positive(self):
        run = make_run(q_lang="ko", passages=[("t", True)], langs=["ko"])
        assert mrr(run, "cross") == 0.0

    def test_mean_all_averages_qualifying_positives(self):
        run = make_run(
            q_lang="en",
            passages=[("t", True), ("t", False), ("t", True)],
            langs=["en", "en", "en"],
        )
        assert mrr(run, "same", "mean_all") == pytest.approx((1.0 + 1 / 3) / 2)

    def test_invariant_under_reordering_below_first_qualifying(self):
        run = make_run(
            q_lang="en",
            passages=[("a", False), ("b", True), ("c", False), ("d", False)],
            langs=["en"] * 4,
        )
        value = mrr(run, "same")
        swapped = run.with_candidates([
            run.candidates[0], run.candidates[1], run.candidates[3], run.candidates[2]
        ])
        assert mrr(swapped, "same") == value

    def test_brute_force_equivalence(self):
        rng = random.Random(2)
        for i in range(300):
            run = random_run(rng, f"q{i}")
            for subset in ("same", "cross", "all"):
                for mode in ("first", "mean_all"):
                    assert mrr(run, subset, mode) == brute_mrr(run, subset, mode)


class TestResolveLanguages:
    def test_detects_unknown_candidate_languages(self):
        run = make_run(passages=[("서울은 수도이다", True)], langs=[UND])
        resolved = resolve_run_languages(run)
        assert resolved.candidates[0].passage.lang == "ko"

    def test_known_languages_untouched(self):
        run = make_run(passages=[("text", True)], langs=["fi"])
        assert resolve_run_languages(run) is run

    def test_undetectable_stays_und(self):
        run = make_run(passages=[("1234 5678", True)], langs=[UND])
        assert resolve_run_languages(run).candidates[0].passage.lang == UND


class TestTokenF1:
    def test_identity(self):
        assert token_f1(AnswerPair(predicted="Obama", gold=("Obama",))) == 1.0

    def test_partial_overlap(self):
        # P = 1/2, R = 1/1 -> F1 = 2/3.
        value = token_f1(AnswerPair(predicted="Barack Obama", gold=("Obama",)))
        assert value == pytest.approx(2 / 3)

    def test_disjoint(self):
        assert token_f1(AnswerPair(predicted="x", gold=("y",))) == 0.0

    def test_best_over_multiple_golds(self):
        pair = AnswerPair(predicted="Barack Obama", gold=("nothing", "Barack Obama"))
        assert token_f1(pair) == 1.0

    def test_both_empty_tokenizations(self):
        assert token_f1(AnswerPair(predicted="!!!", gold=("...",))) == 1.0

    def test_one_empty_tokenization(self):
        assert token_f1(AnswerPair(predicted="!!!", gold=("word",))) == 0.0

    def test_swap_symmetry_single_gold(self):
        a, b = "sejong the great", "great king sejong"
        assert token_f1(AnswerPair(predicted=a, gold=(b,))) == pytest.approx(
            token_f1(AnswerPair(predicted=b, gold=(a,)))
        )

    def test_multiset_semantics(self):
        # "a a b" vs "a b b": overlap = a + b = 2, P = R = 2/3.
        value = token_f1(AnswerPair(predicted="a a b", gold=("a b b",)))
        assert value == pytest.approx(2 / 3)


class TestGain:
    # Values from the recall table this toolkit mirrors.
    BASELINE = {"ko": {5: 12.1, 15: 21.4}, "ja": {5: 5.5, 15: 9.1}}
    RERANKED = {"ko": {5: 16.0, 15: 25.6}, "ja": {5: 5.6, 15: 9.7}}

    def test_known_gain_row_rendering(self):
        diffs = gain(self.BASELINE, self.RERANKED)
        rendered = render_gain_row(diffs)
        assert rendered == {
            "ko": {5: "+3.9", 15: "+4.2"},
            "ja": {5: "+0.1", 15: "+0.6"},
        }

    def test_identical_rows_are_zero(self):
        diffs = gain(self.BASELINE, self.BASELINE)
        assert all(v == 0.0 for row in diffs.values() for v in row.values())
        assert render_gain_row(diffs)["ko"][5] == "+0.0"

    def test_mismatched_languages_rejected(self):
        with pytest.raises(ValidationError, match="languages"):
            gain(self.BASELINE, {"ko": {5: 1.0, 15: 2.0}})

    def test_mismatched_ks_rejected(self):
        with pytest.raises(ValidationError, match="Ks"):
            gain({"ko": {5: 1.0}}, {"ko": {10: 1.0}})

    def test_format_gain_has_explicit_sign(self):
        assert format_gain(-4.46) == "-4.5"
        assert format_gain(0.0) == "+0.0"


class TestAggregate:
    def test_mean_of_two_runs(self):
        runs = [
            make_run(q_id="a", passages=[("t", True), ("t", False)]),
            make_run(q_id="b", passages=[("t", False), ("t", False)], total_positives=1),
        ]
        report = aggregate(runs, ks=(5,))
        assert report.per_language["en"].positives_at[5] == 0.5

    def test_single_run_report_equals_run_values(self):
        run = make_run(passages=[("t", True), ("t", False)], langs=["en", "en"])
        report = aggregate([run], ks=(1, 2))
        metrics = report.per_language["en"]
        assert metrics.positives_at[1] == 1.0
        assert metrics.recall_at[2] == 100.0
        assert metrics.mrr_same == 1.0
        assert metrics.n_questions == 1

    def test_exclusion_counted_separately(self):
        runs = [
            make_run(q_id="a", passages=[("t", True)]),
            make_run(q_id="b", passages=[("t", True)]),
            make_run(q_id="c", passages=[("t", False)], total_positives=0),
        ]
        report = aggregate(runs, ks=(5,))
        metrics = report.per_language["en"]
        # Oracle: recall means over 2 runs, positives over all 3.
        assert metrics.n_questions == 3
        assert metrics.n_recall_questions == 2
        assert metrics.positives_at[5] == pytest.approx(2 / 3)
        assert metrics.recall_at[5] == 100.0

    def test_mrr_exclusion_for_undetectable_positive_language(self):
        runs = [
            make_run(q_id="a", passages=[("1234 99", True)], langs=[UND]),
            make_run(q_id="b", passages=[("plain words", True)], langs=[UND]),
        ]
        report = aggregate(runs, ks=(5,))
        assert report.mrr_excluded == ("a",)
        assert report.per_language["en"].n_mrr_questions == 1

    def test_groups_by_question_language(self):
        runs = [
            make_run(q_id="a", q_lang="ko", passages=[("t", True)]),
            make_run(q_id="b", q_lang="ja", passages=[("t", False)], total_positives=1),
        ]
        report = aggregate(runs, ks=(5,))
        assert set(report.per_language) == {"ko", "ja"}

    def test_recall_row_extraction(self):
        run = make_run(passages=[("t", True)])
        report = aggregate([run], ks=(5, 15))
        assert recall_row(report) == {"en": {5: 100.0, 15: 100.0}}

    def test_brute_force_equivalence_on_random_runs(self):
        rng = random.Random(3)
        runs = [random_run(rng, f"q{i}") for i in range(100)]
        report = aggregate(runs, ks=(3, 7), resolve_languages=False)
        by_lang = {}
        for run in runs:
            by_lang.setdefault(run.question.lang, []).append(run)
        for lang, lang_runs in by_lang.items():
            metrics = report.per_language[lang]
            for k in (3, 7):
                expected = sum(brute_positives_at_k(r, k) for r in lang_runs) / len(lang_runs)
                assert metrics.positives_at[k] == pytest.approx(expected, abs=1e-12)
                recalls = [brute_recall_at_k(r, k) for r in lang_runs]
                included = [v for v in recalls if v is not None]
                if included:
                    assert metrics.recall_at[k] == pytest.approx(
                        sum(included) / len(included), abs=1e-12
                    )
            same = [brute_mrr(r, "same", "first") for r in lang_runs]
            assert metrics.mrr_same == pytest.approx(sum(same) / len(same), abs=1e-12)
