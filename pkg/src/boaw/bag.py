"""Segment histograms over codeword assignments.

A codebook scores every stacked frame against each of its K entries;
each frame is then assigned either to its N best-scoring entries
(multiple assignment) or to every entry whose activation clears a
threshold (soft assignment, autoencoder codebooks only). Counting the
assignments of all frames inside a window centered on each annotation
step yields one L2-normalized histogram per step.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autoencoder import AeModel, encode
from .codebook import VectorCodebook, assign_scores_batch
from .errors import ConfigError, MalformedRow, NonNumericValue, SoftOnDistanceScores
from .framestack import StackedSequence

Codebook = VectorCodebook | AeModel


@dataclass(frozen=True)
class MultipleN:
    """Assign each frame to its n best-scoring codewords."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError("multiple assignment needs n >= 1")


@dataclass(frozen=True)
class SoftThreshold:
    """Assign each frame to every codeword with activation >= theta."""

    theta: float

    def __post_init__(self) -> None:
        if self.theta < 0:
            raise ConfigError("soft-assignment threshold must be >= 0")


AssignmentStrategy = MultipleN | SoftThreshold


@dataclass
class BagHistogram:
    counts: np.ndarray
    segment_center: float = 0.0
    normalized: bool = False

    def __post_init__(self) -> None:
        self.counts = np.asarray(self.counts, dtype=np.float64).ravel()
        if (self.counts < 0).any():
            raise ConfigError("histogram counts must be nonnegative")


@dataclass
class SegmenterConfig:
    window: float = 6.0  # seconds
    hop: float = 0.1

    def __post_init__(self) -> None:
        if self.window <= 0 or self.hop <= 0:
            raise ConfigError("window and hop must be positive")


def assign_top_n(scores: np.ndarray, n: int) -> np.ndarray:
    """Indices of the n largest scores, ties to the lowest index; n >= K gives all."""
    if n < 1:
        raise ConfigError("n must be >= 1")
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if n >= scores.size:
        return np.arange(scores.size)
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:n])


def assign_soft(scores: np.ndarray, theta: float) -> np.ndarray:
    """Indices with score >= theta; possibly empty."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    return np.flatnonzero(scores >= theta)


def _assignment_matrix(scores: np.ndarray, strategy: AssignmentStrategy) -> np.ndarray:
    """Boolean F x K matrix: frame f assigned to codeword k."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    n_frames, k = scores.shape
    if isinstance(strategy, SoftThreshold):
        return scores >= strategy.theta
    if strategy.n >= k:
        return np.ones((n_frames, k), dtype=bool)
    order = np.argsort(-scores, axis=1, kind="stable")
    assigned = np.zeros((n_frames, k), dtype=bool)
    rows = np.repeat(np.arange(n_frames), strategy.n)
    assigned[rows, order[:, : strategy.n].ravel()] = True
    return assigned


def build_histogram(
    scores: np.ndarray | list[np.ndarray],
    strategy: AssignmentStrategy,
    size: int | None = None,
    segment_center: float = 0.0,
) -> BagHistogram:
    """Unnormalized counts of codeword assignments over a set of frames.

    `size` is only needed when `scores` is empty (zero-frame segment).
    """
    if isinstance(scores, list) and not scores:
        if size is None:
            raise ConfigError("empty score list needs an explicit histogram size")
        return BagHistogram(np.zeros(size), segment_center=segment_center)
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    if scores.shape[0] == 0:
        return BagHistogram(np.zeros(scores.shape[1]), segment_center=segment_center)
    counts = _assignment_matrix(scores, strategy).sum(axis=0).astype(np.float64)
    return BagHistogram(counts, segment_center=segment_center)


def l2_normalize(h: BagHistogram) -> BagHistogram:
    """Unit-L2 counts; the all-zero histogram passes through unchanged."""
    norm = float(np.linalg.norm(h.counts))
    counts = h.counts / norm if norm > 0 else h.counts.copy()
    return BagHistogram(counts, segment_center=h.segment_center, normalized=True)


def score_frames(cb: Codebook, frames: np.ndarray) -> np.ndarray:
    """F x K assignment scores from either codebook kind."""
    if isinstance(cb, AeModel):
        return encode(cb, frames)
    return assign_scores_batch(cb, frames)


def validate_strategy(cb: Codebook, strategy: AssignmentStrategy) -> None:
    if isinstance(strategy, SoftThreshold):
        if isinstance(cb, VectorCodebook):
            raise SoftOnDistanceScores(
                "soft-threshold assignment is only defined for autoencoder "
                "codebooks; vector codebooks score by negated distance"
            )
        if strategy.theta > cb.config.activation_cap:
            raise ConfigError(
                f"theta {strategy.theta} exceeds the activation cap "
                f"{cb.config.activation_cap}"
            )


def extract_segment_features(
    seq: StackedSequence,
    cb: Codebook,
    strategy: AssignmentStrategy,
    seg: SegmenterConfig,
    target_times: np.ndarray,
) -> list[BagHistogram]:
    """One L2-normalized histogram per target time.

    The window around each target time t covers frames with timestamps in
    [t - window/2, t + window/2), truncated at the sequence boundaries and
    never empty: a window past the edges falls back to the frame nearest t.
    """
    validate_strategy(cb, strategy)
    scores = score_frames(cb, seq.frames)
    assigned = _assignment_matrix(scores, strategy)
    # prefix sums make every window sum an O(K) subtraction
    prefix = np.vstack([np.zeros(assigned.shape[1]), np.cumsum(assigned, axis=0)])

    times = seq.times()
    half = seg.window / 2.0
    histograms: list[BagHistogram] = []
    for t in np.asarray(target_times, dtype=np.float64):
        lo = int(np.searchsorted(times, t - half, side="left"))
        hi = int(np.searchsorted(times, t + half, side="left"))
        if lo >= hi:  # window misses every frame; use the nearest one
            lo = int(np.argmin(np.abs(times - t)))
            hi = lo + 1
        counts = prefix[hi] - prefix[lo]
        histograms.append(
            l2_normalize(BagHistogram(counts, segment_center=float(t)))
        )
    return histograms


# --- feature CSV interchange ------------------------------------------------


def write_feature_csv(histograms: list[BagHistogram], path: str | Path) -> None:
    """One histogram per row, comma-delimited."""
    lines = [",".join(repr(float(v)) for v in h.counts) for h in histograms]
    Path(path).write_text("\n".join(lines) + "\n")


def read_feature_csv(path: str | Path) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise MalformedRow(f"{path}: no feature rows")
    try:
        rows = [[float(v) for v in ln.split(",")] for ln in lines]
    except ValueError as exc:
        raise NonNumericValue(f"{path}: {exc}") from None
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise MalformedRow(f"{path}: ragged feature rows (widths {sorted(widths)})")
    return np.array(rows, dtype=np.float64)
