"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .models import RetrievalRun, check_language_code

__all__ = ["check_language_code", "check_runs", "check_k", "check_query_array"]


def check_runs(runs) -> list[RetrievalRun]:
    runs = list(runs)
    for run in runs:
        if not isinstance(run, RetrievalRun):
            raise ValidationError(f"expected RetrievalRun, got {type(run).__name__}")
    return runs


def check_k(k: int) -> int:
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise ValidationError(f"k must be an integer >= 1, got {k!r}")
    return k


def check_query_array(X, dim: int) -> np.ndarray:
    """Coerce one query vector or a stack of them to float64."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise ValidationError(f"queries must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[-1] != dim:
        raise ValidationError(
            f"query dimension {arr.shape[-1]} does not match matrix dim {dim}"
        )
    return arr
