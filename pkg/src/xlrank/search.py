"""Exact top-k maximum-inner-product search over precomputed embeddings.

Scores are bit-reproducible: every dot product accumulates in 64-bit
floats in left-to-right dimension order regardless of worker count, so
``top_k`` and the full-sort oracle agree exactly and repeated runs are
byte-stable. Ties are broken by ascending passage id, which makes every
downstream metric reproducible.
"""

from __future__ import annotations

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import MatrixFormatError, ValidationError

_MAGIC = b"XLEM"
_VERSION = 1


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Id-indexed dense vectors, one float32 row per passage id."""

    ids: tuple[str, ...]
    vectors: np.ndarray  # shape (n, dim), float32, row-major

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        object.__setattr__(self, "vectors", vectors)
        if vectors.ndim != 2:
            raise ValidationError(f"vectors must be 2-D, got shape {vectors.shape}")
        if len(self.ids) != vectors.shape[0]:
            raise ValidationError(
                f"{len(self.ids)} ids for {vectors.shape[0]} vector rows"
            )
        if len(set(self.ids)) != len(self.ids):
            raise ValidationError("passage ids must be unique")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class SearchResult:
    """Ranked (passage id, score) pairs: scores non-increasing, ties by id."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        entries = tuple((pid, float(s)) for pid, s in self.entries)
        object.__setattr__(self, "entries", entries)
        for (id_a, s_a), (id_b, s_b) in zip(entries, entries[1:]):
            if s_b > s_a or (s_b == s_a and id_b <= id_a):
                raise ValidationError(
                    f"entries out of order at {id_a!r}/{id_b!r}"
                )

    def ids(self) -> tuple[str, ...]:
        return tuple(pid for pid, _ in self.entries)


# ---------------------------------------------------------------------------
# Matrix file formats


def save_matrix(matrix: EmbeddingMatrix, path: str | os.PathLike) -> None:
    """Write the binary format: XLEM magic, v1 header, length-prefixed rows."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQI", _VERSION, len(matrix), matrix.dim))
        for pid, row in zip(matrix.ids, matrix.vectors):
            raw = pid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(row.astype("<f4", copy=False).tobytes())


def _load_binary(data: bytes) -> EmbeddingMatrix:
    if data[:4] != _MAGIC:
        raise MatrixFormatError(f"bad magic {data[:4]!r}, expected {_MAGIC!r}", offset=0)
    if len(data) < 20:
        raise MatrixFormatError("truncated header", offset=len(data))
    version, n_rows, dim = struct.unpack_from("<IQI", data, 4)
    if version != _VERSION:
        raise MatrixFormatError(f"unsupported format version {version}", offset=4)
    offset = 20
    ids: list[str] = []
    rows: list[np.ndarray] = []
    row_bytes = dim * 4
    for _ in range(n_rows):
        if offset + 2 > len(data):
            raise MatrixFormatError("truncated row: missing id length", offset=offset)
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len + row_bytes > len(data):
            raise MatrixFormatError("truncated row", offset=offset)
        ids.append(data[offset : offset + id_len].decode("utf-8"))
        offset += id_len
        rows.append(np.frombuffer(data, dtype="<f4", count=dim, offset=offset))
        offset += row_bytes
    if offset != len(data):
        raise MatrixFormatError("trailing bytes after last row", offset=offset)
    vectors = np.vstack(rows) if rows else np.empty((0, dim), dtype=np.float32)
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate id in matrix file")
    return EmbeddingMatrix(ids=tuple(ids), vectors=vectors)


def _load_text(text: str) -> EmbeddingMatrix:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("dim="):
        raise MatrixFormatError("text matrix must start with a 'dim=<d>' line", offset=0)
    try:
        dim = int(lines[0][4:])
    except ValueError:
        raise MatrixFormatError(f"invalid dim header {lines[0]!r}", offset=0) from None
    ids: list[str] = []
    rows: list[list[float]] = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        pid, sep, values = line.partition("\t")
        if not sep or not pid:
            raise MatrixFormatError(f"line {line_no}: expected 'id<TAB>values'")
        try:
            row = [float(v) for v in values.split(",")] if values else []
        except ValueError:
            raise MatrixFormatError(f"line {line_no}: non-numeric value") from None
        if len(row) != dim:
            raise MatrixFormatError(
                f"line {line_no}: row has {len(row)} values, header says dim={dim}"
            )
        ids.append(pid)
        rows.append(row)
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate id in matrix file")
    vectors = (
        np.asarray(rows, dtype=np.float32) if rows else np.empty((0, dim), dtype=np.float32)
    )
    return EmbeddingMatrix(ids=tuple(ids), vectors=vectors)


def load_matrix(path: str | os.PathLike) -> EmbeddingMatrix:
    """Load either matrix format, sniffing the binary magic bytes."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] == _MAGIC:
        return _load_binary(data)
    try:
        return _load_text(data.decode("utf-8"))
    except UnicodeDecodeError:
        raise MatrixFormatError("not a binary matrix and not valid UTF-8 text", offset=0) from None


# ---------------------------------------------------------------------------
# Search kernels


def inner_products(vectors_t64: np.ndarray, query64: np.ndarray) -> np.ndarray:
    """Dot products of the query against every row, left-to-right in f64.

    ``vectors_t64`` is the (dim, n) float64 transpose of the row matrix.
    Accumulating one dimension at a time reproduces scalar left-to-right
    summation bit for bit: float32 inputs are exact in float64 and each
    product has at most 48 significand bits, so the only rounding happens
    at each addition, in fixed order.
    """
    dim, n = vectors_t64.shape
    acc = np.zeros(n, dtype=np.float64)
    for j in range(dim):
        acc += vectors_t64[j] * query64[j]
    return acc


def _prepare(matrix: EmbeddingMatrix) -> np.ndarray:
    return np.ascontiguousarray(matrix.vectors.T, dtype=np.float64)


def _check_query(query, dim: int) -> np.ndarray:
    q = np.asarray(query, dtype=np.float64)
    if q.ndim != 1 or q.shape[0] != dim:
        raise ValidationError(
            f"query must be a 1-D vector of length {dim}, got shape {q.shape}"
        )
    return q


def _order_selection(scores: np.ndarray, indices: np.ndarray, ids, k: int):
    """Final (score desc, id asc) ordering of preselected row indices."""
    chosen = sorted(indices.tolist(), key=lambda i: (-scores[i], ids[i]))
    return [(ids[i], float(scores[i])) for i in chosen[:k]]


def _select_top(scores: np.ndarray, ids, k: int) -> list[int]:
    """Indices of the k best rows by (score desc, id asc), via partial selection."""
    n = scores.shape[0]
    if k >= n:
        return list(range(n))
    # k-th largest score is the selection threshold; ties at the threshold
    # are resolved by ascending id.
    threshold = np.partition(scores, n - k)[n - k]
    above = np.flatnonzero(scores > threshold)
    needed = k - above.shape[0]
    at = np.flatnonzero(scores == threshold)
    tied = sorted(at.tolist(), key=lambda i: ids[i])[:needed]
    return above.tolist() + tied


def top_k(query, matrix: EmbeddingMatrix, k: int, workers: int = 1) -> SearchResult:
    """Exactly the k largest inner products, ordered per SearchResult.

    Row scanning may be partitioned across ``workers`` threads; the
    per-row accumulation order never changes, so output is identical at
    any worker count.
    """
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    q = _check_query(query, matrix.dim)
    vt = _prepare(matrix)
    n = len(matrix)
    if n == 0:
        return SearchResult(entries=())
    k_eff = min(k, n)
    ids = matrix.ids

    if workers <= 1 or n < 2 * workers:
        scores = inner_products(vt, q)
        picked = _select_top(scores, ids, k_eff)
        return SearchResult(entries=tuple(_order_selection(scores, np.asarray(picked), ids, k_eff)))

    bounds = np.linspace(0, n, workers + 1, dtype=int)
    scores = np.empty(n, dtype=np.float64)

    def scan(lo: int, hi: int) -> list[int]:
        scores[lo:hi] = inner_products(vt[:, lo:hi], q)
        local_ids = ids[lo:hi]
        local = _select_top(scores[lo:hi], local_ids, min(k_eff, hi - lo))
        return [lo + i for i in local]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda b: scan(*b), zip(bounds[:-1], bounds[1:])))
    merged = np.asarray([i for part in parts for i in part])
    return SearchResult(entries=tuple(_order_selection(scores, merged, ids, k_eff)))


def full_sort_search(query, matrix: EmbeddingMatrix, k: int) -> SearchResult:
    """Oracle: score every row, fully sort by (score desc, id asc), truncate."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    q = _check_query(query, matrix.dim)
    if len(matrix) == 0:
        return SearchResult(entries=())
    scores = inner_products(_prepare(matrix), q)
    ranked = sorted(range(len(matrix)), key=lambda i: (-scores[i], matrix.ids[i]))
    return SearchResult(
        entries=tuple((matrix.ids[i], float(scores[i])) for i in ranked[: min(k, len(matrix))])
    )


class InnerProductSearcher(BaseEstimator):
    """Exact inner-product retrieval with a fit/search estimator surface.

    Parameters
    ----------
    k : int, default=50
        Result depth used when ``search`` is called without an override.
    workers : int, default=1
        Thread count for row scanning; results are worker-invariant.
    """

    def __init__(self, k: int = 50, workers: int = 1):
        self.k = k
        self.workers = workers

    def fit(self, X, ids=None):
        """Index an EmbeddingMatrix, or an (n, dim) array plus ids."""
        if isinstance(X, EmbeddingMatrix):
            self.matrix_ = X
        else:
            if ids is None:
                raise ValidationError("ids are required when fitting a raw array")
            self.matrix_ = EmbeddingMatrix(ids=tuple(ids), vectors=np.asarray(X))
        return self

    def search(self, X, k: int | None = None):
        """Top-k ids and scores for one query vector or a stack of them.

        Returns a single SearchResult for 1-D input, else one per row.
        """
        if not hasattr(self, "matrix_"):
            raise ValidationError("searcher is not fitted; call fit first")
        k_eff = self.k if k is None else k
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 1:
            return top_k(arr, self.matrix_, k_eff, workers=self.workers)
        if arr.ndim == 2:
            return [top_k(row, self.matrix_, k_eff, workers=self.workers) for row in arr]
        raise ValidationError(f"queries must be 1-D or 2-D, got shape {arr.shape}")
