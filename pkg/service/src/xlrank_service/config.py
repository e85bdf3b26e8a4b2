"""Service configuration."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8600
    mode: str = "stub"  # "stub" or "model"
    score_model: str | None = None
    translation_model: str | None = None
    mapping_file: str | None = None

    def __post_init__(self):
        if not 1024 <= self.port <= 65535:
            raise ValueError(f"port must be in 1024..65535, got {self.port}")
        if self.mode not in ("stub", "model"):
            raise ValueError(f"mode must be 'stub' or 'model', got {self.mode!r}")
        if self.mode == "model" and not self.score_model:
            raise ValueError("model mode requires a score_model identifier")
