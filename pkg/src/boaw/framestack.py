"""Context stacking and speaker-turn conditioning.

Each frame is concatenated with its `c` past and `c` future neighbours
(edge rows replicated by default), after which one of four turn strategies
conditions the stacked stream: mixed (no-op), purified (non-target rows
zeroed), doubled (target rows become [x, 0], others [0, x]) or as-feature
(one trailing 0/1 speaker bit). Turn intervals are half-open
[t_start, t_end); frames outside every segment are treated as interlocutor
speech by the conditioning strategies.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, StrategyAlreadyApplied
from .ingest import FrameSequence, Role, TurnTrack


class TurnStrategy(enum.Enum):
    MIXED = "mixed"
    PURIFIED = "purified"
    DOUBLED = "doubled"
    AS_FEATURE = "as_feature"


class EdgeMode(enum.Enum):
    CLAMP = "clamp"
    ZERO = "zero"


@dataclass
class StackedSequence:
    """Stacked context frames for one session, possibly turn-conditioned."""

    session_id: str
    frames: np.ndarray  # F x D
    base_dim: int  # d of the source FrameSequence
    context_radius: int
    turn_strategy: TurnStrategy = TurnStrategy.MIXED
    frame_period: float = 0.010
    start_time: float = 0.0

    def __post_init__(self) -> None:
        stacked = self.base_dim * (2 * self.context_radius + 1)
        expected = {
            TurnStrategy.MIXED: stacked,
            TurnStrategy.PURIFIED: stacked,
            TurnStrategy.DOUBLED: 2 * stacked,
            TurnStrategy.AS_FEATURE: stacked + 1,
        }[self.turn_strategy]
        if self.frames.shape[1] != expected:
            raise ConfigError(
                f"{self.session_id}: {self.turn_strategy.value} sequence should be "
                f"{expected}-dim, got {self.frames.shape[1]}"
            )

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_frames) * self.frame_period


def stack_frames(
    seq: FrameSequence, context_radius: int, edge: EdgeMode = EdgeMode.CLAMP
) -> StackedSequence:
    """Concatenate each frame with its 2c neighbours (rows t-c .. t+c).

    Out-of-range neighbours are either the nearest valid row (CLAMP) or
    zero vectors (ZERO). Row count is preserved.
    """
    if context_radius < 0:
        raise ConfigError("context_radius must be >= 0")
    n, d = seq.frames.shape
    offsets = np.arange(-context_radius, context_radius + 1)
    idx = np.arange(n)[:, None] + offsets[None, :]
    clamped = np.clip(idx, 0, n - 1)
    stacked = seq.frames[clamped]  # F x (2c+1) x d
    if edge is EdgeMode.ZERO:
        stacked = np.where(((idx < 0) | (idx >= n))[:, :, None], 0.0, stacked)
    return StackedSequence(
        session_id=seq.session_id,
        frames=stacked.reshape(n, d * (2 * context_radius + 1)),
        base_dim=d,
        context_radius=context_radius,
        frame_period=seq.frame_period,
        start_time=seq.start_time,
    )


def frame_role(turns: TurnTrack, t: float) -> Role:
    """Role of the half-open segment containing t, else UNLABELLED."""
    for seg in turns.segments:
        if seg.t_start <= t < seg.t_end:
            return seg.role
    return Role.UNLABELLED


def target_mask(turns: TurnTrack, times: np.ndarray) -> np.ndarray:
    """Boolean mask of timestamps falling inside a Target segment."""
    times = np.asarray(times, dtype=np.float64)
    mask = np.zeros(times.shape, dtype=bool)
    for seg in turns.segments:
        if seg.role is Role.TARGET:
            mask |= (times >= seg.t_start) & (times < seg.t_end)
    return mask


def apply_turn_strategy(
    seq: StackedSequence, turns: TurnTrack, strategy: TurnStrategy
) -> StackedSequence:
    """Condition a stacked sequence on speaker turns.

    Frames at times without a Target segment (interlocutor or unlabelled)
    get the non-target treatment of the chosen strategy.
    """
    if seq.turn_strategy is not TurnStrategy.MIXED:
        raise StrategyAlreadyApplied(
            f"{seq.session_id}: sequence already conditioned with {seq.turn_strategy.value}"
        )
    if strategy is TurnStrategy.MIXED:
        frames = seq.frames
    else:
        is_target = target_mask(turns, seq.times())
        if strategy is TurnStrategy.PURIFIED:
            frames = np.where(is_target[:, None], seq.frames, 0.0)
        elif strategy is TurnStrategy.DOUBLED:
            n, d = seq.frames.shape
            frames = np.zeros((n, 2 * d))
            frames[is_target, :d] = seq.frames[is_target]
            frames[~is_target, d:] = seq.frames[~is_target]
        else:  # AS_FEATURE
            frames = np.hstack([seq.frames, is_target[:, None].astype(np.float64)])
    return StackedSequence(
        session_id=seq.session_id,
        frames=frames,
        base_dim=seq.base_dim,
        context_radius=seq.context_radius,
        turn_strategy=strategy,
        frame_period=seq.frame_period,
        start_time=seq.start_time,
    )
