"""Vector codebooks: random-sample and k-means dictionaries.

Assignment scores are negated Euclidean distances, so "larger = closer"
and the top-N interface is shared with autoencoder codebooks. Ties break
toward the lowest index everywhere.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, MalformedRow, NonFiniteData, NotEnoughDistinctRows

CODEBOOK_MAGIC = b"BOAWCB1"


class CodebookMethod(enum.Enum):
    RANDOM_SAMPLE = "random"
    KMEANS = "kmeans"


@dataclass
class VectorCodebook:
    codewords: np.ndarray  # K x D
    method: CodebookMethod | None = None
    seed: int = 0
    inertia_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self.codewords = np.asarray(self.codewords, dtype=np.float64)
        if self.codewords.ndim != 2 or self.codewords.shape[0] < 1:
            raise MalformedRow(f"codewords must be a K x D matrix, got {self.codewords.shape}")
        if not np.isfinite(self.codewords).all():
            raise NonFiniteData("codebook contains non-finite codewords")
        if self.method is CodebookMethod.RANDOM_SAMPLE:
            if np.unique(self.codewords, axis=0).shape[0] != self.codewords.shape[0]:
                raise NotEnoughDistinctRows("random-sample codebook has duplicate codewords")

    @property
    def size(self) -> int:
        return self.codewords.shape[0]

    @property
    def dim(self) -> int:
        return self.codewords.shape[1]


def _sample_distinct_rows(data: np.ndarray, k: int, seed: int) -> np.ndarray:
    unique = np.unique(np.asarray(data, dtype=np.float64), axis=0)
    if unique.shape[0] < k:
        raise NotEnoughDistinctRows(
            f"need {k} distinct rows, data has only {unique.shape[0]}"
        )
    rng = np.random.default_rng(seed)
    idx = rng.choice(unique.shape[0], size=k, replace=False)
    return unique[idx]


def fit_random(data: np.ndarray, k: int, seed: int = 0) -> VectorCodebook:
    """Codebook of K distinct data rows sampled without replacement."""
    return VectorCodebook(
        _sample_distinct_rows(data, k, seed), method=CodebookMethod.RANDOM_SAMPLE, seed=seed
    )


def _squared_distances(data: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances, M x K, clipped at zero."""
    d2 = (
        np.sum(data * data, axis=1)[:, None]
        - 2.0 * data @ centroids.T
        + np.sum(centroids * centroids, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def fit_kmeans(
    data: np.ndarray,
    k: int,
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-6,
) -> VectorCodebook:
    """Lloyd's algorithm with random-sample initialization.

    Stops when the largest centroid displacement drops to tol, or after
    max_iters. Empty clusters are re-seeded with the point currently
    farthest from its centroid. The per-iteration inertia (total
    within-cluster SSE, measured after each centroid update) is kept on
    the returned codebook; it is non-increasing by construction.
    """
    data = np.asarray(data, dtype=np.float64)
    centroids = _sample_distinct_rows(data, k, seed)
    history: list[float] = []
    for _ in range(max_iters):
        d2 = _squared_distances(data, centroids)
        labels = np.argmin(d2, axis=1)
        point_d2 = d2[np.arange(data.shape[0]), labels]

        empty = [j for j in range(k) if not np.any(labels == j)]
        for j in empty:
            far = int(np.argmax(point_d2))
            centroids[j] = data[far]
            labels[far] = j
            point_d2[far] = 0.0

        new_centroids = centroids.copy()
        for j in range(k):
            members = data[labels == j]
            if members.shape[0]:
                new_centroids[j] = members.mean(axis=0)
        shift = float(np.sqrt(np.sum((new_centroids - centroids) ** 2, axis=1)).max())
        centroids = new_centroids
        history.append(float(_squared_distances(data, centroids).min(axis=1).sum()))
        if shift <= tol:
            break
    return VectorCodebook(
        centroids, method=CodebookMethod.KMEANS, seed=seed, inertia_history=history
    )


def assign_scores(cb: VectorCodebook, frame: np.ndarray) -> np.ndarray:
    """Score vector for one frame: negated Euclidean distance per codeword."""
    frame = np.asarray(frame, dtype=np.float64).ravel()
    if frame.size != cb.dim:
        raise DimensionMismatch(f"frame has dim {frame.size}, codebook expects {cb.dim}")
    return -np.sqrt(np.sum((cb.codewords - frame) ** 2, axis=1))


def assign_scores_batch(cb: VectorCodebook, frames: np.ndarray) -> np.ndarray:
    """Scores for many frames at once (F x K)."""
    frames = np.asarray(frames, dtype=np.float64)
    if frames.shape[1] != cb.dim:
        raise DimensionMismatch(f"frames have dim {frames.shape[1]}, codebook expects {cb.dim}")
    return -np.sqrt(_squared_distances(frames, cb.codewords))


def save_codebook(cb: VectorCodebook, path: str | Path) -> None:
    """Binary layout: magic, K and D as u64 LE, then K*D f64 LE row-major."""
    with open(path, "wb") as fh:
        fh.write(CODEBOOK_MAGIC)
        fh.write(struct.pack("<QQ", cb.size, cb.dim))
        fh.write(cb.codewords.astype("<f8").tobytes())


def load_codebook(path: str | Path) -> VectorCodebook:
    raw = Path(path).read_bytes()
    if not raw.startswith(CODEBOOK_MAGIC):
        raise MalformedRow(f"{path}: not a codebook file (bad magic)")
    k, d = struct.unpack_from("<QQ", raw, len(CODEBOOK_MAGIC))
    offset = len(CODEBOOK_MAGIC) + 16
    expected = offset + k * d * 8
    if len(raw) != expected:
        raise MalformedRow(f"{path}: expected {expected} bytes, got {len(raw)}")
    codewords = np.frombuffer(raw, dtype="<f8", count=k * d, offset=offset).reshape(k, d)
    return VectorCodebook(codewords.copy())
