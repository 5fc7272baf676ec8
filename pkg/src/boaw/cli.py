"""Command-line front end.

Verbs: synth, fit-codebook, extract, train-svr, predict, eval, sweep,
report. Exit codes: 0 success, 2 configuration error, 3 data error,
4 numerical failure (divergence or an SVR that hit its iteration cap).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .autoencoder import MODEL_MAGIC, AeConfig, load_model, save_model, train
from .bag import (
    SegmenterConfig,
    extract_segment_features,
    read_feature_csv,
    write_feature_csv,
)
from .codebook import (
    CODEBOOK_MAGIC,
    fit_kmeans,
    fit_random,
    load_codebook,
    save_codebook,
)
from .errors import (
    BoawError,
    ConfigError,
    DataError,
    MalformedRow,
    NumericalError,
)
from .experiment import (
    CONFIG_KEYS,
    SweepCache,
    config_from_mapping,
    parse_assignment_token,
    parse_config_file,
    run_sweep,
    write_config_file,
)
from .framestack import EdgeMode, TurnStrategy, apply_turn_strategy, stack_frames
from .ingest import (
    Dimension,
    SyntheticSpec,
    TurnTrack,
    generate_synthetic,
    load_session,
    parse_annotations,
    parse_frames,
    parse_turns,
    write_corpus,
)
from .metrics import Scaling, SdDirection, apply_scaling, ccc, pearson
from .regress import SvrConfig, load_svr, save_svr, svr_fit, svr_predict
from .report import build_provenance, emit_report, read_report_csv


def _ids(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def _load_any_codebook(path: str | Path):
    """Dispatch on the file magic: vector codebook or autoencoder model."""
    head = Path(path).read_bytes()[:8]
    if head.startswith(MODEL_MAGIC):
        return load_model(path)
    if head.startswith(CODEBOOK_MAGIC):
        return load_codebook(path)
    raise MalformedRow(f"{path}: not a codebook or autoencoder model file")


# --- verbs -------------------------------------------------------------------


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        n_sessions=args.sessions,
        duration=args.duration,
        d=args.dim,
        seed=args.seed,
        signal_strength=args.signal_strength,
    )
    sessions = generate_synthetic(
        spec, frame_period=args.frame_period, rate_period=args.rate_period
    )
    write_corpus(sessions, args.out)
    print(f"wrote {len(sessions)} sessions to {args.out}")
    return 0


def _conditioned_matrix(args, session_ids: list[str]) -> np.ndarray:
    strategy = TurnStrategy(args.turn_strategy)
    mats = []
    for sid in session_ids:
        session = load_session(Path(args.data) / sid, frame_period=args.frame_period)
        stacked = stack_frames(session.frames, args.context_radius, EdgeMode(args.edge))
        mats.append(apply_turn_strategy(stacked, session.turns, strategy).frames)
    return np.vstack(mats)


def _cmd_fit_codebook(args) -> int:
    data = _conditioned_matrix(args, _ids(args.train))
    if args.method == "autoencoder":
        size = args.size if args.size is not None else 345
        hidden = [int(h) for h in _ids(args.ae_hidden)] if args.ae_hidden else [size, size]
        if hidden[args.ae_code_layer - 1] != size:
            raise ConfigError(
                f"code layer width {hidden[args.ae_code_layer - 1]} disagrees "
                f"with --size {size}"
            )
        config = AeConfig(
            input_dim=data.shape[1],
            hidden_dims=hidden,
            code_layer_index=args.ae_code_layer,
            activation_cap=args.ae_cap,
            epochs=args.ae_epochs,
            batch_size=args.ae_batch,
            learning_rate=args.ae_lr,
            rms_decay=args.ae_decay,
            rms_epsilon=args.ae_eps,
            seed=args.seed,
        )
        model, history = train(data, config)
        for epoch, mse in enumerate(history, start=1):
            print(f"epoch {epoch} mse {mse:.6f}")
        save_model(model, args.out)
        print(f"wrote autoencoder codebook ({config.code_dim} codewords) to {args.out}")
        return 0
    size = args.size if args.size is not None else 1000
    if args.method == "random":
        cb = fit_random(data, size, seed=args.seed)
    else:
        cb = fit_kmeans(
            data,
            size,
            seed=args.seed,
            max_iters=args.kmeans_max_iters,
            tol=args.kmeans_tol,
        )
    save_codebook(cb, args.out)
    print(f"wrote {args.method} codebook ({cb.size} codewords) to {args.out}")
    return 0


def _cmd_extract(args) -> int:
    seq = parse_frames(args.frames, header=args.header, frame_period=args.frame_period)
    stacked = stack_frames(seq, args.context_radius, EdgeMode(args.edge))
    strategy = TurnStrategy(args.turn_strategy)
    if strategy is not TurnStrategy.MIXED and not args.turns:
        raise ConfigError(f"--turns is required for turn strategy {strategy.value}")
    turns = parse_turns(args.turns) if args.turns else TurnTrack([])
    conditioned = apply_turn_strategy(stacked, turns, strategy)
    cb = _load_any_codebook(args.codebook)
    assignment = parse_assignment_token(args.assignment)
    if args.annotations:
        times = parse_annotations(
            args.annotations, Dimension.AROUSAL, rate_period=args.rate_period
        ).times()
    else:
        duration = seq.n_frames * seq.frame_period
        steps = max(1, int(round(duration / args.hop)))
        times = seq.start_time + np.arange(steps) * args.hop
    segmenter = SegmenterConfig(window=args.window, hop=args.hop)
    histograms = extract_segment_features(conditioned, cb, assignment, segmenter, times)
    write_feature_csv(histograms, args.out)
    print(
        f"wrote {len(histograms)} histograms "
        f"({histograms[0].counts.size} codewords) to {args.out}"
    )
    return 0


def _cmd_train_svr(args) -> int:
    X = read_feature_csv(args.features)
    y = parse_annotations(args.labels, Dimension.AROUSAL).values
    config = SvrConfig(
        C=args.svr_c,
        epsilon=args.svr_epsilon,
        bias_scale=args.svr_bias,
        max_iters=args.svr_max_iters,
        tol=args.svr_tol,
        seed=args.seed,
    )
    model = svr_fit(X, y, config)
    save_svr(model, args.out)
    print(f"objective {model.objective!r} converged {model.converged}")
    if not model.converged:
        print(
            "warning: iteration cap reached before the duality gap closed; "
            "best iterate saved",
            file=sys.stderr,
        )
        return 4
    return 0


def _cmd_predict(args) -> int:
    model = load_svr(args.model)
    X = read_feature_csv(args.features)
    pred = svr_predict(model, X)
    Path(args.out).write_text("\n".join(repr(float(v)) for v in pred) + "\n")
    print(f"wrote {pred.size} predictions to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    pred = parse_annotations(args.pred, Dimension.AROUSAL, rate_period=args.rate_period).values
    gold = parse_annotations(args.gold, Dimension.AROUSAL, rate_period=args.rate_period).values
    scaling = Scaling(args.scaling)
    if scaling is not Scaling.NONE:
        if not args.train_labels:
            raise ConfigError(f"--train-labels is required for scaling {scaling.value}")
        train_labels = parse_annotations(args.train_labels, Dimension.AROUSAL).values
        pred = apply_scaling(pred, scaling, train_labels, SdDirection(args.sd_direction))
    ccc_value = ccc(pred, gold)
    pearson_value = pearson(pred, gold)
    print(f"ccc={ccc_value!r}")
    print(f"pearson={pearson_value!r}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.format == "markdown":
            text = (
                "| metric | value |\n| --- | --- |\n"
                f"| ccc | {ccc_value!r} |\n| pearson | {pearson_value!r} |\n"
            )
            (out / "metrics.md").write_text(text)
        else:
            (out / "metrics.csv").write_text(
                f"metric,value\nccc,{ccc_value!r}\npearson,{pearson_value!r}\n"
            )
        if not args.no_figures:
            from . import figures

            figures.prediction_overlay(
                gold, pred, args.rate_period, out / "prediction_overlay.png"
            )
    return 0


def _cmd_sweep(args) -> int:
    mapping = parse_config_file(args.config) if args.config else {}
    for key in CONFIG_KEYS:
        override = getattr(args, key, None)
        if override is not None:
            mapping[key] = override
    config = config_from_mapping(mapping)
    turns = (
        [TurnStrategy(t) for t in _ids(args.turn_strategies)]
        if args.turn_strategies
        else list(TurnStrategy)
    )
    scalings = (
        [Scaling(s) for s in _ids(args.scalings)] if args.scalings else list(Scaling)
    )
    assignments = (
        [parse_assignment_token(t) for t in _ids(args.assignments)]
        if args.assignments
        else [config.assignment]
    )
    cache = SweepCache(config.cache_dir)
    result = run_sweep(config, turns, scalings, assignments, cache=cache)

    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    for failure in result.failures:
        print(
            f"failed cell {failure.turn_strategy.value}/{failure.assignment}"
            f"/{failure.scaling.value}: {failure.error}",
            file=sys.stderr,
        )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config_file(config, out / "config_used.cfg")
    if result.failures:
        with open(out / "failures.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["turn_strategy", "assignment", "scaling", "error"])
            for failure in result.failures:
                writer.writerow(
                    [
                        failure.turn_strategy.value,
                        failure.assignment,
                        failure.scaling.value,
                        failure.error,
                    ]
                )
    if not result.rows:
        print("error: every sweep cell failed", file=sys.stderr)
        return {"config": 2, "data": 3, "numerical": 4}[result.failures[0].kind]
    provenance = build_provenance(config)
    emit_report(result.rows, "csv", out / "results.csv", provenance)
    report_name = "report.md" if args.format == "markdown" else "report.csv"
    emit_report(result.rows, args.format, out / report_name, provenance)
    if not args.no_figures:
        from . import figures

        figures.ccc_bar_charts(result.rows, out)
    print(
        f"{len(result.rows)} result rows, {len(result.failures)} failed cells, "
        f"cache {cache.memory_hits + cache.disk_hits} hits / {cache.misses} misses "
        f"-> {out}"
    )
    return 0


def _cmd_report(args) -> int:
    rows, provenance = read_report_csv(args.results)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report_name = "report.md" if args.format == "markdown" else "report.csv"
    path = emit_report(rows, args.format, out / report_name, provenance)
    if not args.no_figures:
        from . import figures

        figures.ccc_bar_charts(rows, out)
    print(f"wrote {path}")
    return 0


# --- parser ------------------------------------------------------------------


def _enum_choices(enum_cls) -> list[str]:
    return [e.value for e in enum_cls]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boaw",
        description="Bag-of-audio-words continuous affect prediction pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic planted-signal corpus")
    p.add_argument("--out", required=True, help="output corpus directory")
    p.add_argument("--sessions", type=int, default=8)
    p.add_argument("--duration", type=float, default=60.0, help="seconds per session")
    p.add_argument("--dim", type=int, default=23, help="frame feature dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--signal-strength", type=float, default=0.8)
    p.add_argument("--frame-period", type=float, default=0.010)
    p.add_argument("--rate-period", type=float, default=0.100)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("fit-codebook", help="fit a codebook on training sessions")
    p.add_argument("--data", required=True, help="corpus root directory")
    p.add_argument("--train", required=True, help="comma-separated session ids")
    p.add_argument(
        "--method", required=True, choices=["random", "kmeans", "autoencoder"]
    )
    p.add_argument("--size", type=int, help="codewords (default 1000; 345 for autoencoder)")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--turn-strategy", default="mixed", choices=_enum_choices(TurnStrategy))
    p.add_argument("--context-radius", type=int, default=7)
    p.add_argument("--edge", default="clamp", choices=_enum_choices(EdgeMode))
    p.add_argument("--frame-period", type=float, default=0.010)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmeans-max-iters", type=int, default=100)
    p.add_argument("--kmeans-tol", type=float, default=1e-6)
    p.add_argument("--ae-hidden", help="comma-separated hidden widths (default size,size)")
    p.add_argument("--ae-code-layer", type=int, default=2)
    p.add_argument("--ae-cap", type=float, default=1.0)
    p.add_argument("--ae-epochs", type=int, default=20)
    p.add_argument("--ae-batch", type=int, default=64)
    p.add_argument("--ae-lr", type=float, default=0.001)
    p.add_argument("--ae-decay", type=float, default=0.9)
    p.add_argument("--ae-eps", type=float, default=1e-7)
    p.set_defaults(func=_cmd_fit_codebook)

    p = sub.add_parser("extract", help="turn one session into histogram features")
    p.add_argument("--frames", required=True, help="frame CSV file")
    p.add_argument("--header", action="store_true", help="skip the first CSV line")
    p.add_argument("--codebook", required=True, help="codebook or autoencoder file")
    p.add_argument("--assignment", required=True, help="top<N> or soft<theta>")
    p.add_argument("--turns", help="turn CSV, required for non-mixed strategies")
    p.add_argument("--turn-strategy", default="mixed", choices=_enum_choices(TurnStrategy))
    p.add_argument("--context-radius", type=int, default=7)
    p.add_argument("--edge", default="clamp", choices=_enum_choices(EdgeMode))
    p.add_argument("--frame-period", type=float, default=0.010)
    p.add_argument("--annotations", help="annotation CSV supplying the target times")
    p.add_argument("--rate-period", type=float, default=0.100)
    p.add_argument("--window", type=float, default=6.0)
    p.add_argument("--hop", type=float, default=0.1)
    p.add_argument("--out", required=True, help="output feature CSV")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train-svr", help="fit a linear epsilon-SVR on features")
    p.add_argument("--features", required=True, help="feature CSV from extract")
    p.add_argument("--labels", required=True, help="one label per row")
    p.add_argument("--out", required=True, help="output model file")
    p.add_argument("--svr-c", type=float, default=1.0)
    p.add_argument("--svr-epsilon", type=float, default=0.1)
    p.add_argument("--svr-bias", type=float, default=1.0, help="0 disables the bias")
    p.add_argument("--svr-max-iters", type=int, default=1000)
    p.add_argument("--svr-tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train_svr)

    p = sub.add_parser("predict", help="apply a trained SVR to features")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True, help="output predictions CSV")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="score predictions against a gold track")
    p.add_argument("--pred", required=True, help="predictions, one value per row")
    p.add_argument("--gold", required=True, help="gold track, one value per row")
    p.add_argument("--scaling", default="none", choices=_enum_choices(Scaling))
    p.add_argument("--train-labels", help="label CSV supplying scaling parameters")
    p.add_argument("--sd-direction", default="match_gold", choices=_enum_choices(SdDirection))
    p.add_argument("--rate-period", type=float, default=0.100)
    p.add_argument("--out", help="directory for metrics file and overlay figure")
    p.add_argument("--format", default="csv", choices=["csv", "markdown"])
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="run the turn x scaling x assignment grid")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", default="markdown", choices=["csv", "markdown"])
    p.add_argument("--turn-strategies", help="comma list (default: all four)")
    p.add_argument("--scalings", help="comma list (default: all three)")
    p.add_argument("--assignments", help="comma list of top<N>/soft<theta> tokens")
    p.add_argument("--no-figures", action="store_true")
    for key in CONFIG_KEYS:
        flag = "--" + key.replace("_", "-")
        if flag in ("--config",):
            continue
        p.add_argument(flag, dest=key, metavar="V", help=f"override config key {key}")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="re-render report and figures from results.csv")
    p.add_argument("--results", required=True, help="results.csv from a sweep")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", default="markdown", choices=["csv", "markdown"])
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail(2, exc)
    except NumericalError as exc:
        return _fail(4, exc)
    except DataError as exc:
        return _fail(3, exc)
    except BoawError as exc:
        return _fail(3, exc)
    except OSError as exc:
        return _fail(3, exc)


def _fail(code: int, exc: Exception) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
