"""Acceptance gate: one test per release criterion.

Every test prints a single PASS/FAIL line (visible with `pytest -s` or in
captured output) and asserts the same condition, including its runtime
budget.
"""

import time

import numpy as np

from boaw.autoencoder import AeConfig, init_model, loss_and_grads, train
from boaw.bag import MultipleN, SoftThreshold, build_histogram, l2_normalize
from boaw.codebook import fit_kmeans
from boaw.experiment import CodebookKind, ExperimentConfig, Split, run_experiment
from boaw.framestack import TurnStrategy, apply_turn_strategy, stack_frames, target_mask
from boaw.ingest import (
    Dimension,
    FrameSequence,
    Role,
    Segment,
    SyntheticSpec,
    TurnTrack,
    generate_synthetic,
    write_corpus,
)
from boaw.metrics import SdDirection, ccc, pearson, scale_min_max, scale_sd_ratio
from boaw.regress import SvrConfig, svr_fit, svr_objective


def _verdict(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'}: {name} ({detail})")
    assert ok, f"{name}: {detail}"


def _naive_ccc(y: np.ndarray, gold: np.ndarray) -> float:
    """Independent direct evaluation via the correlation form."""
    my, mg = y.mean(), gold.mean()
    sy, sg = y.std(), gold.std()
    rho = ((y - my) * (gold - mg)).mean() / (sy * sg)
    return 2.0 * rho * sy * sg / (sy**2 + sg**2 + (my - mg) ** 2)


def test_ccc_oracle():
    start = time.perf_counter()
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        y = rng.standard_normal(100)
        gold = rng.standard_normal(100)
        worst = max(worst, abs(ccc(y, gold) - _naive_ccc(y, gold)))
    anti = abs(ccc([1.0, 2.0, 3.0], [3.0, 2.0, 1.0]) + 1.0)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-12 and anti <= 1e-12 and elapsed < 1.0
    _verdict(
        "ccc-oracle",
        ok,
        f"max |delta| {worst:.2e}, antisymmetric |ccc+1| {anti:.2e}, {elapsed:.2f} s",
    )


def test_mean_shift_penalization():
    rng = np.random.default_rng(1)
    checked = 0
    ok = True
    worst_pearson_drift = 0.0
    while checked < 100:
        gold = rng.standard_normal(80)
        y = gold + 0.4 * rng.standard_normal(80)
        base = ccc(y, gold)
        if base <= 0.3:
            continue
        checked += 1
        shifted = ccc(y + 0.5, gold)
        drift = abs(pearson(y + 0.5, gold) - pearson(y, gold))
        worst_pearson_drift = max(worst_pearson_drift, drift)
        ok = ok and shifted < base and drift <= 1e-12
    _verdict(
        "mean-shift-penalization",
        ok,
        f"{checked} pairs, max pearson drift {worst_pearson_drift:.2e}",
    )


def test_kmeans_convergence():
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    monotone = True
    for seed in range(100):
        data = rng.standard_normal((50, 3))
        history = fit_kmeans(data, 5, seed=seed).inertia_history
        for prev, cur in zip(history, history[1:]):
            # slack absorbs float round-off only; Lloyd is exactly monotone
            monotone = monotone and cur <= prev + 1e-9
    canonical = np.array([[0.0], [1.0], [10.0], [11.0]])
    worst_gap = 0.0
    for seed in range(100):
        centroids = np.sort(fit_kmeans(canonical, 2, seed=seed).codewords.ravel())
        worst_gap = max(worst_gap, float(np.abs(centroids - [0.5, 10.5]).max()))
    elapsed = time.perf_counter() - start
    ok = monotone and worst_gap <= 1e-9 and elapsed < 1.0
    _verdict(
        "kmeans-convergence",
        ok,
        f"monotone {monotone}, centroid gap {worst_gap:.2e}, {elapsed:.2f} s",
    )


def _kink_margin(model, batch):
    cap = model.config.activation_cap
    x = batch
    worst = np.inf
    for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = x @ w.T + b
        if layer < len(model.weights) - 1:
            worst = min(worst, float(np.abs(z).min()), float(np.abs(z - cap).min()))
            x = np.minimum(np.maximum(z, 0.0), cap)
        else:
            x = z
    return worst


def test_autoencoder_gradient_check():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    h = 1e-5
    worst = 0.0
    checked = 0
    while checked < 50:
        config = AeConfig(
            input_dim=int(rng.integers(2, 7)),
            hidden_dims=[int(rng.integers(2, 6)) for _ in range(int(rng.integers(1, 3)))],
            code_layer_index=1,
            seed=int(rng.integers(10000)),
        )
        model = init_model(config)
        for p in model.parameters():
            p += rng.normal(0, 0.3, size=p.shape)
        batch = rng.standard_normal((3, config.input_dim))
        if _kink_margin(model, batch) < 1e-3:
            continue  # sample again: finite differences need kink clearance
        checked += 1
        _, grads = loss_and_grads(model, batch)
        for p, g in zip(model.parameters(), grads):
            for idx in range(p.size):
                p.flat[idx] += h
                up, _ = loss_and_grads(model, batch)
                p.flat[idx] -= 2 * h
                down, _ = loss_and_grads(model, batch)
                p.flat[idx] += h
                fd = (up - down) / (2 * h)
                denom = max(abs(fd) + abs(g.flat[idx]), 1e-8)
                worst = max(worst, abs(fd - g.flat[idx]) / denom)
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and elapsed < 10.0
    _verdict(
        "autoencoder-gradient-check",
        ok,
        f"50 models, max relative error {worst:.2e}, {elapsed:.2f} s",
    )


def test_autoencoder_training_progress():
    start = time.perf_counter()
    spec = SyntheticSpec(n_sessions=1, duration=2.0, d=23, seed=4, signal_strength=0.8)
    session = generate_synthetic(spec)[0]
    stacked = stack_frames(session.frames, 7)
    assert stacked.frames.shape == (200, 345)
    config = AeConfig(epochs=50, seed=11)
    _, history = train(stacked.frames, config)
    _, repeat = train(stacked.frames, config)
    elapsed = time.perf_counter() - start
    ratio = history[-1] / history[0]
    ok = ratio < 0.5 and history == repeat and elapsed < 120.0
    _verdict(
        "autoencoder-training",
        ok,
        f"final/first MSE {ratio:.3f}, deterministic {history == repeat}, {elapsed:.1f} s",
    )


def _grid_oracle(X, y, config):
    # gentle zoom (/4 per round) so narrow diagonal valleys stay inside the box
    d = X.shape[1]
    zero_obj = svr_objective(np.zeros(d), X, y, config)
    half = float(np.sqrt(2.0 * zero_obj)) + 1e-9
    center = np.zeros(d)
    best = zero_obj
    for _ in range(14):
        axes = [np.linspace(c - half, c + half, 41) for c in center]
        mesh = np.meshgrid(*axes, indexing="ij")
        grid_w = np.stack([m.ravel() for m in mesh], axis=1)
        pred = grid_w @ X.T
        loss = np.maximum(np.abs(pred - y) - config.epsilon, 0.0).sum(axis=1)
        objs = 0.5 * np.sum(grid_w * grid_w, axis=1) + config.C * loss
        arg = int(np.argmin(objs))
        if float(objs[arg]) < best:
            best = float(objs[arg])
            center = grid_w[arg]
        half /= 4.0
    return best


def test_svr_optimality():
    start = time.perf_counter()
    config = SvrConfig(C=10.0, epsilon=0.1, bias_scale=0.0, max_iters=50000, tol=1e-10)
    canonical = svr_fit(np.array([[1.0], [2.0]]), np.array([1.0, 2.0]), config)
    canonical_gap = abs(canonical.objective - 0.45125)

    rng = np.random.default_rng(5)
    worst = 0.0
    for trial in range(100):
        m = int(rng.integers(1, 7))
        d = int(rng.integers(1, 3))
        X = rng.uniform(-1, 1, size=(m, d))
        y = rng.uniform(-1, 1, size=m)
        trial_config = SvrConfig(
            C=float(rng.uniform(0.1, 10.0)),
            epsilon=float(rng.uniform(0.0, 0.3)),
            bias_scale=0.0,
            max_iters=20000,
            seed=trial,
        )
        model = svr_fit(X, y, trial_config)
        worst = max(worst, abs(model.objective - _grid_oracle(X, y, trial_config)))
    elapsed = time.perf_counter() - start
    ok = canonical_gap <= 1e-6 and worst <= 1e-4 and elapsed < 30.0
    _verdict(
        "svr-optimality",
        ok,
        f"|obj - 0.45125| {canonical_gap:.2e}, worst oracle gap {worst:.2e}, {elapsed:.1f} s",
    )


def test_histogram_mass():
    rng = np.random.default_rng(6)
    ok = True
    for _ in range(200):
        k = int(rng.integers(2, 30))
        f = int(rng.integers(1, 60))
        n = int(rng.integers(1, k + 1))
        scores = rng.uniform(size=(f, k))
        h = build_histogram(scores, MultipleN(n))
        ok = ok and abs(h.counts.sum() - n * f) < 1e-9
        ok = ok and abs(np.linalg.norm(l2_normalize(h).counts) - 1.0) <= 1e-12
        soft = l2_normalize(build_histogram(scores, SoftThreshold(float(rng.uniform(0, 1.2)))))
        norm = np.linalg.norm(soft.counts)
        ok = ok and (norm == 0.0 or abs(norm - 1.0) <= 1e-12)
    _verdict("histogram-mass", ok, "200 random frame/codebook draws")


def test_turn_strategy_dimensions():
    rng = np.random.default_rng(7)
    ok = True
    for _ in range(50):
        n = int(rng.integers(4, 30))
        d = int(rng.integers(1, 6))
        c = int(rng.integers(0, 3))
        frames = FrameSequence(
            "s", rng.standard_normal((n, d)) + 3.0, frame_period=float(rng.uniform(0.05, 0.2))
        )
        segments, t = [], 0.0
        role = Role.TARGET
        while t < n * frames.frame_period:
            length = float(rng.uniform(0.2, 1.0))
            if rng.uniform() < 0.85:
                segments.append(Segment(t, t + length, role))
            role = Role.INTERLOCUTOR if role is Role.TARGET else Role.TARGET
            t += length
        turns = TurnTrack(segments)
        stacked = stack_frames(frames, c)
        base = stacked.dim
        doubled = apply_turn_strategy(stacked, turns, TurnStrategy.DOUBLED)
        tagged = apply_turn_strategy(stacked, turns, TurnStrategy.AS_FEATURE)
        purified = apply_turn_strategy(stacked, turns, TurnStrategy.PURIFIED)
        mask = target_mask(turns, stacked.times())
        ok = ok and doubled.dim == 2 * base and tagged.dim == base + 1
        ok = ok and np.array_equal(~purified.frames.any(axis=1), ~mask)
        ok = ok and np.array_equal(purified.frames[mask], stacked.frames[mask])
    _verdict("turn-strategy-dimensions", ok, "50 randomized sessions")


def test_end_to_end_synthetic(tmp_path):
    start = time.perf_counter()
    spec = SyntheticSpec(n_sessions=8, duration=30.0, d=23, seed=8, signal_strength=0.8)
    write_corpus(generate_synthetic(spec), tmp_path)
    split = Split(
        train=("s000", "s001", "s002", "s003"),
        dev=("s004", "s005"),
        test=("s006", "s007"),
    )
    ae_config = ExperimentConfig(
        data_root=tmp_path,
        split=split,
        codebook_kind=CodebookKind.AUTOENCODER,
        codebook_size=345,
        assignment=SoftThreshold(0.05),
        turn_strategy=TurnStrategy.DOUBLED,
        seed=8,
    )
    ae_rows = {r.dimension: r for r in run_experiment(ae_config)}
    baseline_config = ExperimentConfig(
        data_root=tmp_path,
        split=split,
        codebook_kind=CodebookKind.RANDOM,
        codebook_size=345,
        assignment=MultipleN(20),
        turn_strategy=TurnStrategy.DOUBLED,
        seed=8,
    )
    baseline_rows = {r.dimension: r for r in run_experiment(baseline_config)}
    ae_ccc = ae_rows[Dimension.AROUSAL].ccc_dev
    baseline_ccc = baseline_rows[Dimension.AROUSAL].ccc_dev
    n_features = 345  # codebook size fixes the histogram width
    elapsed = time.perf_counter() - start
    ok = ae_ccc >= 0.5 and ae_ccc >= baseline_ccc and elapsed < 300.0
    _verdict(
        "end-to-end-synthetic",
        ok,
        f"AE dev CCC {ae_ccc:.3f} vs random-codebook {baseline_ccc:.3f}, "
        f"K={n_features}, {elapsed:.0f} s",
    )


def test_scaling_oracles():
    rng = np.random.default_rng(9)
    ok = True
    worst_sd = 0.0
    for _ in range(100):
        y = rng.standard_normal(30) * rng.uniform(0.2, 5)
        label_std = float(rng.uniform(0.1, 3))
        scaled = scale_sd_ratio(y, label_std, SdDirection.MATCH_GOLD)
        worst_sd = max(worst_sd, abs(float(np.std(scaled)) - label_std))
        lo, hi = sorted(rng.uniform(-2, 2, size=2))
        mapped = scale_min_max(y, lo, hi)
        ok = ok and mapped.min() == lo and mapped.max() == hi
    ok = ok and worst_sd <= 1e-12
    _verdict(
        "scaling-oracles", ok, f"max deviation error {worst_sd:.2e}, extrema exact {ok}"
    )
