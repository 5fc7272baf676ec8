"""Context stacking and speaker-turn conditioning."""

import numpy as np
import pytest

from boaw.errors import StrategyAlreadyApplied
from boaw.framestack import (
    EdgeMode,
    TurnStrategy,
    apply_turn_strategy,
    frame_role,
    stack_frames,
    target_mask,
)
from boaw.ingest import FrameSequence, Role, Segment, TurnTrack


def _seq(frames, period=1.0):
    return FrameSequence("s", np.asarray(frames, dtype=float), frame_period=period)


def test_stack_middle_row():
    stacked = stack_frames(_seq([[1, 2], [3, 4], [5, 6]]), context_radius=1)
    assert np.array_equal(stacked.frames[1], [1, 2, 3, 4, 5, 6])


def test_stack_edge_replication():
    stacked = stack_frames(_seq([[1, 2], [3, 4], [5, 6]]), context_radius=1)
    assert np.array_equal(stacked.frames[0], [1, 2, 1, 2, 3, 4])
    assert np.array_equal(stacked.frames[2], [3, 4, 5, 6, 5, 6])


def test_stack_zero_edge():
    stacked = stack_frames(
        _seq([[1, 2], [3, 4], [5, 6]]), context_radius=1, edge=EdgeMode.ZERO
    )
    assert np.array_equal(stacked.frames[0], [0, 0, 1, 2, 3, 4])
    assert np.array_equal(stacked.frames[2], [3, 4, 5, 6, 0, 0])


def test_stack_zero_radius_is_identity():
    rng = np.random.default_rng(0)
    frames = rng.standard_normal((6, 4))
    stacked = stack_frames(_seq(frames), context_radius=0)
    assert np.array_equal(stacked.frames, frames)


def test_stack_shape_and_center_block():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(1, 12))
        d = int(rng.integers(1, 5))
        c = int(rng.integers(0, 4))
        frames = rng.standard_normal((n, d))
        stacked = stack_frames(_seq(frames), context_radius=c)
        assert stacked.frames.shape == (n, d * (2 * c + 1))
        for t in range(c, n - c):
            assert np.array_equal(stacked.frames[t, c * d : (c + 1) * d], frames[t])


def test_frame_role_half_open():
    turns = TurnTrack([Segment(0.0, 1.0, Role.TARGET)])
    assert frame_role(turns, 0.0) is Role.TARGET
    assert frame_role(turns, 0.5) is Role.TARGET
    assert frame_role(turns, 1.0) is Role.UNLABELLED
    assert frame_role(TurnTrack([]), 3.0) is Role.UNLABELLED


TURNS = TurnTrack(
    [Segment(0.0, 2.0, Role.TARGET), Segment(2.0, 4.0, Role.INTERLOCUTOR)]
)


def test_doubled_layout():
    stacked = stack_frames(_seq([[1, 2], [1, 2], [1, 2], [1, 2], [1, 2]]), 0)
    out = apply_turn_strategy(stacked, TURNS, TurnStrategy.DOUBLED)
    assert np.array_equal(out.frames[0], [1, 2, 0, 0])  # target time
    assert np.array_equal(out.frames[2], [0, 0, 1, 2])  # interlocutor time
    assert np.array_equal(out.frames[4], [0, 0, 1, 2])  # unlabelled time


def test_purified_zeroes_non_target():
    stacked = stack_frames(_seq([[1, 2], [1, 2], [1, 2], [1, 2], [1, 2]]), 0)
    out = apply_turn_strategy(stacked, TURNS, TurnStrategy.PURIFIED)
    assert np.array_equal(out.frames[0], [1, 2])
    assert np.array_equal(out.frames[2], [0, 0])
    assert np.array_equal(out.frames[4], [0, 0])


def test_as_feature_bit():
    stacked = stack_frames(_seq([[1, 2], [1, 2], [1, 2]]), 0)
    out = apply_turn_strategy(stacked, TURNS, TurnStrategy.AS_FEATURE)
    assert np.array_equal(out.frames[0], [1, 2, 1.0])
    assert np.array_equal(out.frames[2], [1, 2, 0.0])


def test_mixed_is_identity():
    rng = np.random.default_rng(2)
    stacked = stack_frames(_seq(rng.standard_normal((5, 3))), 1)
    out = apply_turn_strategy(stacked, TURNS, TurnStrategy.MIXED)
    assert np.array_equal(out.frames, stacked.frames)


def test_strategy_already_applied():
    stacked = stack_frames(_seq([[1.0], [2.0]]), 0)
    once = apply_turn_strategy(stacked, TURNS, TurnStrategy.PURIFIED)
    with pytest.raises(StrategyAlreadyApplied):
        apply_turn_strategy(once, TURNS, TurnStrategy.DOUBLED)


def _random_session(rng):
    n = int(rng.integers(5, 40))
    d = int(rng.integers(1, 6))
    c = int(rng.integers(0, 3))
    # offset keeps every source row nonzero so zero rows are diagnostic
    frames = rng.standard_normal((n, d)) + 5.0
    period = float(rng.uniform(0.05, 0.3))
    segments, t = [], 0.0
    role = Role.TARGET if rng.integers(2) else Role.INTERLOCUTOR
    while t < n * period:
        length = float(rng.uniform(0.3, 1.5))
        if rng.uniform() < 0.8:  # leave occasional unlabelled gaps
            segments.append(Segment(t, t + length, role))
        role = Role.INTERLOCUTOR if role is Role.TARGET else Role.TARGET
        t += length
    stacked = stack_frames(_seq(frames, period), c)
    return stacked, TurnTrack(segments)


def test_strategy_dimensions_randomized():
    rng = np.random.default_rng(3)
    for _ in range(25):
        stacked, turns = _random_session(rng)
        base = stacked.dim
        assert apply_turn_strategy(stacked, turns, TurnStrategy.MIXED).dim == base
        assert apply_turn_strategy(stacked, turns, TurnStrategy.PURIFIED).dim == base
        assert apply_turn_strategy(stacked, turns, TurnStrategy.DOUBLED).dim == 2 * base
        assert (
            apply_turn_strategy(stacked, turns, TurnStrategy.AS_FEATURE).dim == base + 1
        )


def test_purified_rows_match_mask():
    rng = np.random.default_rng(7)
    for _ in range(25):
        stacked, turns = _random_session(rng)
        mask = target_mask(turns, stacked.times())
        out = apply_turn_strategy(stacked, turns, TurnStrategy.PURIFIED)
        zero_rows = ~out.frames.any(axis=1)
        assert np.array_equal(zero_rows, ~mask)
        assert np.array_equal(out.frames[mask], stacked.frames[mask])


def test_doubled_zero_budget_and_as_feature_bit_range():
    rng = np.random.default_rng(8)
    for _ in range(25):
        stacked, turns = _random_session(rng)
        doubled = apply_turn_strategy(stacked, turns, TurnStrategy.DOUBLED)
        zeros_per_row = (doubled.frames == 0).sum(axis=1)
        assert (zeros_per_row >= stacked.dim).all()
        bits = apply_turn_strategy(stacked, turns, TurnStrategy.AS_FEATURE).frames[:, -1]
        assert set(np.unique(bits)) <= {0.0, 1.0}
