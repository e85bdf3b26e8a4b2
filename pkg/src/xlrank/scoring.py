"""Built-in question-likelihood scorer over a smoothed passage-unigram model.

This is the deterministic stand-in for a neural question-generation
scorer: it keeps the same interface and the same averaging over question
tokens, but estimates each token's probability from add-one-smoothed
passage counts instead of an autoregressive model. It makes the whole
pipeline testable to the last bit without any model weights; it is a
stand-in, not a claim of equivalence.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import ValidationError
from .langid import char_script

if TYPE_CHECKING:  # pragma: no cover
    from .rerank import ScorerRequest

# Scripts whose characters each form their own token.
_CHAR_TOKEN_SCRIPTS = frozenset({"han", "hiragana", "katakana", "hangul", "thai"})


@dataclass(frozen=True)
class TokenSequence:
    tokens: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if any(not t for t in self.tokens):
            raise ValidationError("token sequence must not contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


@dataclass(frozen=True)
class LikelihoodScore:
    """Average natural-log likelihood of the question tokens, always <= 0."""

    avg_log_likelihood: float
    num_tokens: int

    def __post_init__(self):
        if not math.isfinite(self.avg_log_likelihood):
            raise ValidationError("avg_log_likelihood must be finite")
        if self.avg_log_likelihood > 0.0:
            raise ValidationError(
                f"avg_log_likelihood must be <= 0, got {self.avg_log_likelihood}"
            )
        if self.num_tokens < 1:
            raise ValidationError("num_tokens must be >= 1")


def _strip_edge_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def tokenize(text: str) -> TokenSequence:
    """Reference tokenization: NFKC, lowercase, script-aware splitting.

    Characters in Han, Hiragana, Katakana, Hangul, and Thai each become
    their own token; everything else splits on Unicode whitespace with
    punctuation stripped from token edges. Input with no tokenizable
    content (empty, whitespace, or punctuation-only) yields an empty
    sequence.
    """
    norm = unicodedata.normalize("NFKC", text).lower()
    tokens: list[str] = []
    buf: list[str] = []

    def flush():
        if buf:
            word = _strip_edge_punct("".join(buf))
            buf.clear()
            if word:
                tokens.append(word)

    for ch in norm:
        if ch.isspace():
            flush()
        elif char_script(ch) in _CHAR_TOKEN_SCRIPTS:
            flush()
            tokens.append(ch)
        else:
            buf.append(ch)
    flush()
    return TokenSequence(tuple(tokens))


def score(question_tokens: TokenSequence, passage_tokens: TokenSequence) -> LikelihoodScore:
    """Average log likelihood of the question tokens given the passage.

    Each token's probability is add-one smoothed over passage counts:
    p(t | z) = (count(t, z) + 1) / (|z| + distinct(z) + 1). The result is
    the mean natural log over question tokens, which is strictly negative
    for any non-empty inputs. Per-token logs are combined with exact
    summation (math.fsum), so the score is invariant under reordering of
    either sequence and identical across platforms and thread schedules.
    """
    q = tuple(question_tokens)
    z = tuple(passage_tokens)
    if not q:
        raise ValidationError("question tokens must be non-empty")
    if not z:
        raise ValidationError("passage tokens must be non-empty")
    counts: dict[str, int] = {}
    for t in z:
        counts[t] = counts.get(t, 0) + 1
    denom = len(z) + len(counts) + 1
    logs = [math.log((counts.get(t, 0) + 1) / denom) for t in q]
    return LikelihoodScore(
        avg_log_likelihood=math.fsum(logs) / len(q),
        num_tokens=len(q),
    )


class UnigramScorer:
    """Scorer handle backed by :func:`score` over reference tokenization.

    The conditioning text is the passage text with any prompt suffix
    appended; a target-language tag has no effect on a unigram model and
    is ignored. Stateless and safe for unrestricted concurrent use.
    """

    def score(self, request: "ScorerRequest") -> LikelihoodScore:
        passage_text = request.passage_text
        if request.prompt_suffix:
            passage_text = f"{passage_text} {request.prompt_suffix}"
        return score(tokenize(request.question_text), tokenize(passage_text))

    def score_many(self, requests) -> list[LikelihoodScore]:
        return [self.score(r) for r in requests]
