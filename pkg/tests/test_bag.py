"""Assignment strategies and segment histograms."""

import numpy as np
import pytest

from boaw.autoencoder import AeConfig, init_model
from boaw.bag import (
    BagHistogram,
    MultipleN,
    SegmenterConfig,
    SoftThreshold,
    assign_soft,
    assign_top_n,
    build_histogram,
    extract_segment_features,
    l2_normalize,
    read_feature_csv,
    validate_strategy,
    write_feature_csv,
)
from boaw.codebook import VectorCodebook, fit_random
from boaw.errors import ConfigError, SoftOnDistanceScores
from boaw.framestack import stack_frames
from boaw.ingest import FrameSequence


def test_top_n_basic():
    assert list(assign_top_n([0.1, 0.9, 0.5], 2)) == [1, 2]


def test_top_n_tie_lowest_index():
    assert list(assign_top_n([0.5, 0.5], 1)) == [0]
    assert list(assign_top_n([0.3, 0.5, 0.5, 0.1], 2)) == [1, 2]


def test_top_n_saturates():
    assert list(assign_top_n([0.1, 0.2], 5)) == [0, 1]


def test_soft_threshold_basic():
    assert list(assign_soft([0.9, 0.04, 0.06], 0.05)) == [0, 2]
    assert list(assign_soft([0.2, 0.3], 0.0)) == [0, 1]
    assert list(assign_soft([0.01, 0.02], 0.5)) == []


def test_strategy_validation():
    with pytest.raises(ConfigError):
        MultipleN(0)
    with pytest.raises(ConfigError):
        SoftThreshold(-0.1)


def test_soft_rejected_on_vector_codebook():
    cb = fit_random(np.array([[0.0], [1.0]]), 2, seed=0)
    with pytest.raises(SoftOnDistanceScores):
        validate_strategy(cb, SoftThreshold(0.05))


def test_soft_theta_above_cap_rejected():
    model = init_model(AeConfig(input_dim=2, hidden_dims=[3], code_layer_index=1))
    with pytest.raises(ConfigError):
        validate_strategy(model, SoftThreshold(1.5))


def test_histogram_mass_multiple_n():
    scores = np.random.default_rng(0).uniform(size=(3, 5))
    h = build_histogram(scores, MultipleN(2))
    assert h.counts.sum() == 6.0


def test_histogram_empty_segment():
    h = build_histogram([], MultipleN(2), size=4)
    assert np.array_equal(h.counts, np.zeros(4))
    with pytest.raises(ConfigError):
        build_histogram([], MultipleN(2))


def test_histogram_soft_counts():
    scores = np.array([[0.9, 0.01], [0.8, 0.02]])
    h = build_histogram(scores, SoftThreshold(0.5))
    assert np.array_equal(h.counts, [2.0, 0.0])


def test_l2_normalize_cases():
    h = l2_normalize(BagHistogram(np.array([3.0, 4.0])))
    assert np.allclose(h.counts, [0.6, 0.8])
    assert h.normalized
    zero = l2_normalize(BagHistogram(np.zeros(3)))
    assert not zero.counts.any() and zero.normalized
    unit = l2_normalize(BagHistogram(np.array([1.0, 0.0])))
    assert np.array_equal(unit.counts, [1.0, 0.0])


def _stacked(frames, period=0.010):
    return stack_frames(FrameSequence("s", frames, frame_period=period), 0)


def test_extract_one_histogram_per_target_time():
    rng = np.random.default_rng(1)
    frames = rng.standard_normal((1000, 3))  # 10 s at 10 ms
    seq = _stacked(frames)
    cb = fit_random(frames, 5, seed=0)
    times = np.arange(100) * 0.1
    histograms = extract_segment_features(seq, cb, MultipleN(2), SegmenterConfig(), times)
    assert len(histograms) == 100
    for h, t in zip(histograms, times):
        assert h.counts.size == 5
        assert h.segment_center == t
        assert h.normalized


def test_extract_window_covering_everything():
    rng = np.random.default_rng(2)
    frames = rng.standard_normal((50, 2))  # 0.5 s session, 60 s window
    seq = _stacked(frames)
    cb = fit_random(frames, 4, seed=0)
    histograms = extract_segment_features(
        seq, cb, MultipleN(1), SegmenterConfig(window=60.0), np.array([0.0, 0.2, 0.4])
    )
    for h in histograms[1:]:
        assert np.array_equal(h.counts, histograms[0].counts)


def test_extract_window_off_the_edge_uses_nearest_frame():
    rng = np.random.default_rng(3)
    frames = rng.standard_normal((20, 2))
    seq = _stacked(frames)
    cb = fit_random(frames, 3, seed=0)
    histograms = extract_segment_features(
        seq, cb, MultipleN(1), SegmenterConfig(window=0.05), np.array([99.0])
    )
    assert len(histograms) == 1
    assert np.linalg.norm(histograms[0].counts) == pytest.approx(1.0, abs=1e-12)


def test_extract_k_345():
    rng = np.random.default_rng(4)
    frames = rng.standard_normal((400, 4))
    seq = _stacked(frames)
    cb = fit_random(frames, 345, seed=0)
    histograms = extract_segment_features(
        seq, cb, MultipleN(20), SegmenterConfig(), np.array([1.0, 2.0])
    )
    assert all(h.counts.size == 345 for h in histograms)


def test_histogram_mass_property():
    rng = np.random.default_rng(5)
    for _ in range(30):
        k = int(rng.integers(2, 15))
        f = int(rng.integers(1, 40))
        n = int(rng.integers(1, k + 1))
        scores = rng.uniform(size=(f, k))
        h = build_histogram(scores, MultipleN(n))
        assert h.counts.sum() == pytest.approx(n * f, abs=1e-9)
        norm = np.linalg.norm(l2_normalize(h).counts)
        assert norm == pytest.approx(1.0, abs=1e-12)


def test_histogram_permutation_equivariance():
    rng = np.random.default_rng(6)
    frames = rng.standard_normal((120, 3))
    seq = _stacked(frames)
    cb = fit_random(frames, 6, seed=1)
    perm = rng.permutation(6)
    permuted = VectorCodebook(cb.codewords[perm])
    times = np.array([0.3, 0.6])
    base = extract_segment_features(seq, cb, MultipleN(2), SegmenterConfig(window=0.5), times)
    shuffled = extract_segment_features(
        seq, permuted, MultipleN(2), SegmenterConfig(window=0.5), times
    )
    for h_base, h_perm in zip(base, shuffled):
        assert np.allclose(h_perm.counts, h_base.counts[perm], atol=1e-12)


def test_soft_assignment_with_ae_codebook():
    rng = np.random.default_rng(7)
    frames = rng.standard_normal((200, 3))
    seq = _stacked(frames)
    model = init_model(AeConfig(input_dim=3, hidden_dims=[4], code_layer_index=1, seed=0))
    histograms = extract_segment_features(
        seq, model, SoftThreshold(0.05), SegmenterConfig(window=1.0), np.array([0.5, 1.0])
    )
    assert len(histograms) == 2
    for h in histograms:
        assert h.counts.size == 4
        norm = np.linalg.norm(h.counts)
        assert norm == pytest.approx(1.0, abs=1e-12) or norm == 0.0


def test_feature_csv_round_trip(tmp_path):
    rng = np.random.default_rng(8)
    histograms = [
        l2_normalize(BagHistogram(rng.uniform(size=6))) for _ in range(5)
    ]
    path = tmp_path / "features.csv"
    write_feature_csv(histograms, path)
    matrix = read_feature_csv(path)
    assert matrix.shape == (5, 6)
    for row, h in zip(matrix, histograms):
        assert np.array_equal(row, h.counts)
