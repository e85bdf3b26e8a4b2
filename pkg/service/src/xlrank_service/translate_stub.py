"""Mapping-file stub translator: exact-text lookup with identity fallback."""

from __future__ import annotations

import json


class StubTranslator:
    def __init__(self, mapping: dict[str, str] | None = None):
        self.mapping = dict(mapping or {})

    @classmethod
    def from_file(cls, path: str) -> "StubTranslator":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in data.items()
        ):
            raise ValueError(f"mapping file {path} must hold a flat str->str JSON object")
        return cls(data)

    def translate(self, text: str, src: str, tgt: str) -> str:
        return self.mapping.get(text, text)
