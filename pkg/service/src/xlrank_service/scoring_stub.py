"""Deterministic stub scorer: add-one passage-unigram question likelihood.

Tokenizer contract (shared with the client side): NFKC-normalize and
lowercase; characters in Han, Hiragana, Katakana, Hangul, or Thai each
become one token; everything else splits on Unicode whitespace with
punctuation stripped from token edges. The score is the mean natural-log
add-one-smoothed unigram probability of the question tokens given the
passage tokens, with the prompt suffix (when present) appended to the
conditioning text and the target-language tag ignored.
"""

from __future__ import annotations

import math
import unicodedata
from bisect import bisect_right

# Codepoint ranges whose characters tokenize one-per-character, sorted by
# range start for bisect lookup.
_CHAR_TOKEN_RANGES = sorted([
    (0x0E00, 0x0E7F),   # Thai
    (0x1100, 0x11FF),   # Hangul jamo
    (0x3040, 0x309F),   # Hiragana
    (0x30A0, 0x30FF),   # Katakana
    (0x3130, 0x318F),   # Hangul compatibility jamo
    (0x31F0, 0x31FF),   # Katakana phonetic extensions
    (0x3400, 0x4DBF),   # CJK extension A
    (0x4E00, 0x9FFF),   # CJK unified
    (0xAC00, 0xD7AF),   # Hangul syllables
    (0xF900, 0xFAFF),   # CJK compatibility ideographs
    (0x20000, 0x2EBEF),  # CJK extensions B..F
])
_RANGE_STARTS = [lo for lo, _ in _CHAR_TOKEN_RANGES]


def _is_char_token(ch: str) -> bool:
    cp = ord(ch)
    idx = bisect_right(_RANGE_STARTS, cp) - 1
    return idx >= 0 and cp <= _CHAR_TOKEN_RANGES[idx][1]


def _strip_punct(word: str) -> str:
    while word and unicodedata.category(word[0]).startswith("P"):
        word = word[1:]
    while word and unicodedata.category(word[-1]).startswith("P"):
        word = word[:-1]
    return word


def stub_tokenize(text: str) -> list[str]:
    norm = unicodedata.normalize("NFKC", text).lower()
    tokens: list[str] = []
    word: list[str] = []

    def close_word():
        if word:
            cleaned = _strip_punct("".join(word))
            word.clear()
            if cleaned:
                tokens.append(cleaned)

    for ch in norm:
        if ch.isspace():
            close_word()
        elif _is_char_token(ch):
            close_word()
            tokens.append(ch)
        else:
            word.append(ch)
    close_word()
    return tokens


def stub_score_tokens(question: list[str], passage: list[str]) -> float:
    """Mean ln((count(t) + 1) / (|z| + distinct(z) + 1)) over question tokens."""
    if not question:
        raise ValueError("question has no tokens")
    if not passage:
        raise ValueError("passage has no tokens")
    counts: dict[str, int] = {}
    for token in passage:
        counts[token] = counts.get(token, 0) + 1
    denominator = len(passage) + len(counts) + 1
    return math.fsum(
        math.log((counts.get(token, 0) + 1) / denominator) for token in question
    ) / len(question)


def stub_score(
    question_text: str,
    passage_text: str,
    prompt_suffix: str | None = None,
) -> tuple[float, int]:
    """(average log likelihood, question token count) for one request.

    The prompt suffix joins the conditioning side; a language tag has no
    meaning for a unigram model and is not an argument here.
    """
    conditioning = passage_text
    if prompt_suffix:
        conditioning = f"{conditioning} {prompt_suffix}"
    question = stub_tokenize(question_text)
    passage = stub_tokenize(conditioning)
    if not question:
        raise ValueError("question has no tokens")
    if not passage:
        raise ValueError("passage has no tokens")
    return stub_score_tokens(question, passage), len(question)
