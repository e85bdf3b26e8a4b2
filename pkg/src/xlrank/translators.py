"""Local translator handles: identity and mapping-file lookup.

Both satisfy the Translator contract and exist so the pipeline is fully
exercisable without a translation service.
"""

from __future__ import annotations

import json
import os

from .errors import ValidationError


class IdentityTranslator:
    """Returns the input text unchanged; useful as a test double."""

    def translate(self, text: str, src: str, tgt: str) -> str:
        return text


class MappingTranslator:
    """Deterministic lookup translator.

    The mapping is a flat JSON object from source text to translated
    text; texts without an entry pass through unchanged. Language codes
    are accepted for contract compatibility but do not key the lookup.
    """

    def __init__(self, mapping: dict[str, str]):
        if not all(isinstance(k, str) and isinstance(v, str) for k, v in mapping.items()):
            raise ValidationError("mapping must be str -> str")
        self.mapping = dict(mapping)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "MappingTranslator":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError("mapping file must hold a JSON object")
        return cls(data)

    def translate(self, text: str, src: str, tgt: str) -> str:
        return self.mapping.get(text, text)
