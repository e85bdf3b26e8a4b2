"""Reference tokenizer and unigram likelihood scorer."""

import math

import pytest
from hypothesis import given, strategies as st

from xlrank.errors import ValidationError
from xlrank.rerank import ScorerRequest
from xlrank.scoring import LikelihoodScore, TokenSequence, UnigramScorer, score, tokenize

WORDS = ["alpha", "beta", "gamma", "delta", "data", "a", "b", "c"]
tokens_strategy = st.lists(st.sampled_from(WORDS), min_size=1, max_size=12)


class TestTokenize:
    def test_whitespace_split_and_lowercase(self):
        assert tokenize("Barack  Obama").tokens == ("barack", "obama")

    def test_hangul_per_character(self):
        assert tokenize("서울은").tokens == ("서", "울", "은")

    def test_mixed_scripts_with_punctuation(self):
        # Oracle: apply the rules by hand; trailing "!" strips to nothing.
        assert tokenize("Hello, 世界!").tokens == ("hello", "世", "界")

    def test_thai_per_character(self):
        assert tokenize("ไทย").tokens == ("ไ", "ท", "ย")

    def test_nfkc_normalization(self):
        assert tokenize("Ｆｕｌｌ　ｗｉｄｔｈ").tokens == ("full", "width")

    def test_internal_punctuation_kept(self):
        assert tokenize("3.14 mother-in-law don't").tokens == ("3.14", "mother-in-law", "don't")

    def test_empty_and_whitespace(self):
        assert tokenize("").tokens == ()
        assert tokenize("  \t\n ").tokens == ()

    def test_punctuation_only_yields_no_tokens(self):
        assert tokenize("!! ... ??").tokens == ()

    @given(st.text(max_size=80))
    def test_never_produces_empty_tokens(self, text):
        assert all(tokenize(text).tokens)

    @given(st.text(max_size=80))
    def test_deterministic(self, text):
        assert tokenize(text).tokens == tokenize(text).tokens

    def test_token_sequence_rejects_empty_tokens(self):
        with pytest.raises(ValidationError):
            TokenSequence(("a", ""))


class TestScore:
    def test_hand_computed_two_token_question(self):
        # (ln(3/6) + ln(1/6)) / 2 with |z|=3, distinct=2.
        result = score(TokenSequence(("a", "c")), TokenSequence(("a", "b", "a")))
        assert result.avg_log_likelihood == pytest.approx(-1.2424533248940002, abs=1e-12)
        assert result.num_tokens == 2

    def test_hand_computed_single_token(self):
        result = score(TokenSequence(("a",)), TokenSequence(("a",)))
        assert result.avg_log_likelihood == pytest.approx(math.log(2 / 3), abs=1e-15)

    @pytest.mark.parametrize("n", [1, 2, 5, 17])
    def test_closed_form_identical_distinct_sequences(self, n):
        toks = TokenSequence(tuple(f"w{i}" for i in range(n)))
        result = score(toks, toks)
        assert result.avg_log_likelihood == pytest.approx(math.log(2 / (2 * n + 1)), rel=1e-12)

    def test_empty_question_rejected(self):
        with pytest.raises(ValidationError):
            score(TokenSequence(()), TokenSequence(("a",)))

    def test_empty_passage_rejected(self):
        with pytest.raises(ValidationError):
            score(TokenSequence(("a",)), TokenSequence(()))

    @given(q=tokens_strategy, z=tokens_strategy)
    def test_score_is_strictly_negative(self, q, z):
        assert score(TokenSequence(q), TokenSequence(z)).avg_log_likelihood < 0.0

    @given(q=tokens_strategy, z=tokens_strategy, seed=st.integers(0, 2**31))
    def test_permutation_invariance_exact(self, q, z, seed):
        import random

        rng = random.Random(seed)
        q_perm, z_perm = list(q), list(z)
        rng.shuffle(q_perm)
        rng.shuffle(z_perm)
        base = score(TokenSequence(q), TokenSequence(z)).avg_log_likelihood
        perm = score(TokenSequence(q_perm), TokenSequence(z_perm)).avg_log_likelihood
        assert base == perm

    @given(z=tokens_strategy, t=st.sampled_from(WORDS))
    def test_appending_question_token_to_passage_raises_score(self, z, t):
        before = score(TokenSequence((t,)), TokenSequence(z)).avg_log_likelihood
        after = score(TokenSequence((t,)), TokenSequence(tuple(z) + (t,))).avg_log_likelihood
        assert after > before

    def test_likelihood_score_invariants(self):
        with pytest.raises(ValidationError):
            LikelihoodScore(avg_log_likelihood=0.5, num_tokens=1)
        with pytest.raises(ValidationError):
            LikelihoodScore(avg_log_likelihood=float("nan"), num_tokens=1)
        with pytest.raises(ValidationError):
            LikelihoodScore(avg_log_likelihood=-1.0, num_tokens=0)


class TestUnigramScorer:
    def test_matches_raw_score_on_plain_request(self):
        scorer = UnigramScorer()
        request = ScorerRequest(
            question_text="a c", question_lang="en",
            passage_text="a b a", passage_lang="en",
        )
        assert scorer.score(request).avg_log_likelihood == pytest.approx(
            -1.2424533248940002, abs=1e-12
        )

    def test_prompt_suffix_extends_conditioning_text(self):
        scorer = UnigramScorer()
        base = ScorerRequest(
            question_text="a", question_lang="en",
            passage_text="a b", passage_lang="en",
        )
        prompted = ScorerRequest(
            question_text="a", question_lang="en",
            passage_text="a b", passage_lang="en",
            prompt_suffix="please respond",
        )
        expected = score(tokenize("a"), tokenize("a b please respond"))
        assert scorer.score(prompted).avg_log_likelihood == expected.avg_log_likelihood
        assert scorer.score(prompted).avg_log_likelihood != scorer.score(base).avg_log_likelihood

    def test_language_tag_is_ignored_by_unigram_model(self):
        scorer = UnigramScorer()
        plain = ScorerRequest(
            question_text="a", question_lang="ko",
            passage_text="a b", passage_lang="en",
        )
        tagged = ScorerRequest(
            question_text="a", question_lang="ko",
            passage_text="a b", passage_lang="en",
            target_lang_tag="ko",
        )
        assert scorer.score(plain) == scorer.score(tagged)

    def test_score_many_matches_elementwise(self):
        scorer = UnigramScorer()
        requests = [
            ScorerRequest(question_text="a", question_lang="en",
                          passage_text=f"a b {w}", passage_lang="en")
            for w in WORDS
        ]
        assert scorer.score_many(requests) == [scorer.score(r) for r in requests]
