"""Script-bucket language identification.

A deterministic stand-in for an off-the-shelf language detector: each
character is assigned to a Unicode-script bucket and the bucket covering
the plurality of non-space characters names the language. Latin-script
languages are not distinguished (the Latin bucket resolves to "en");
callers needing finer resolution should carry explicit language codes or
plug an external detector behind the translator/scorer services.
"""

from __future__ import annotations

from .errors import ValidationError
from .models import UND

# Inclusive codepoint ranges per script. Han is folded into the Japanese
# bucket: the supported corpus languages include Japanese but not Chinese,
# and kanji-heavy text must still resolve.
_SCRIPT_RANGES: dict[str, tuple[tuple[int, int], ...]] = {
    "hangul": ((0x1100, 0x11FF), (0x3130, 0x318F), (0xAC00, 0xD7AF)),
    "hiragana": ((0x3040, 0x309F),),
    "katakana": ((0x30A0, 0x30FF), (0x31F0, 0x31FF)),
    "han": ((0x3400, 0x4DBF), (0x4E00, 0x9FFF), (0xF900, 0xFAFF), (0x20000, 0x2EBEF)),
    "thai": ((0x0E00, 0x0E7F),),
    "bengali": ((0x0980, 0x09FF),),
    "arabic": ((0x0600, 0x06FF), (0x0750, 0x077F), (0x08A0, 0x08FF)),
    "telugu": ((0x0C00, 0x0C7F),),
    "cyrillic": ((0x0400, 0x04FF), (0x0500, 0x052F)),
    "latin": ((0x41, 0x5A), (0x61, 0x7A), (0xC0, 0x24F), (0x1E00, 0x1EFF)),
}

# Bucket order fixes tie-breaking; plurality ties resolve to the first entry.
_BUCKET_LANGS: tuple[tuple[str, tuple[str, ...]], ...] = (
    ("ko", ("hangul",)),
    ("ja", ("hiragana", "katakana", "han")),
    ("bn", ("bengali",)),
    ("ar", ("arabic",)),
    ("te", ("telugu",)),
    ("ru", ("cyrillic",)),
    ("en", ("latin",)),
)

_script_cache: dict[int, str | None] = {}


def char_script(ch: str) -> str | None:
    """Script name for a single character, or None if unbucketed."""
    cp = ord(ch)
    try:
        return _script_cache[cp]
    except KeyError:
        pass
    found = None
    for script, ranges in _SCRIPT_RANGES.items():
        for lo, hi in ranges:
            if lo <= cp <= hi:
                found = script
                break
        if found:
            break
    if found == "latin" and not ch.isalpha():
        found = None
    _script_cache[cp] = found
    return found


_SCRIPT_TO_LANG = {
    script: lang for lang, scripts in _BUCKET_LANGS for script in scripts
}


def detect_language(text: str) -> str:
    """Language code of the plurality script bucket; "und" below 30% cover.

    Counts non-space characters only; characters outside every bucket
    (digits, punctuation) dilute the cover ratio but name no language.
    Pure function: same input always yields the same output.
    """
    if not text:
        raise ValidationError("detect_language: text must be non-empty")
    counts = {lang: 0 for lang, _ in _BUCKET_LANGS}
    total = 0
    for ch in text:
        if ch.isspace():
            continue
        total += 1
        script = char_script(ch)
        if script is not None:
            counts[_SCRIPT_TO_LANG[script]] += 1
    if total == 0:
        return UND
    best_lang = max(counts, key=counts.get)  # ties: first bucket in order
    # "Reaches 30%" compared exactly in integers: count/total >= 3/10.
    if counts[best_lang] * 10 < 3 * total:
        return UND
    return best_lang
