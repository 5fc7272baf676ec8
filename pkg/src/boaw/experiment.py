"""Experiment orchestration: typed configuration, the end-to-end pipeline,
and a sweep runner with content-addressed caching.

The pipeline per run: load sessions, stack context frames, condition on
speaker turns, fit a codebook on training frames only, turn each session
into per-annotation-step histograms, fit one linear SVR per affect
dimension, predict, scale, score with CCC. Expensive artifacts (codebooks,
histogram matrices, raw predictions) are memoized in memory and optionally
on disk, keyed by content hashes of their exact inputs, so sweep cells
sharing upstream settings never recompute them.
"""

from __future__ import annotations

import dataclasses
import enum
import hashlib
import os
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .autoencoder import AeConfig, AeModel, load_model, save_model, train
from .bag import (
    AssignmentStrategy,
    Codebook,
    MultipleN,
    SegmenterConfig,
    SoftThreshold,
    extract_segment_features,
)
from .codebook import fit_kmeans, fit_random, load_codebook, save_codebook
from .errors import (
    BoawError,
    ConfigError,
    DataError,
    DimensionMismatch,
    EmptyGrid,
    SoftOnDistanceScores,
)
from .framestack import EdgeMode, TurnStrategy, apply_turn_strategy, stack_frames
from .ingest import (
    FRAME_PERIOD_DEFAULT,
    RATE_PERIOD_DEFAULT,
    Dimension,
    SyntheticSession,
    load_session,
)
from .metrics import Scaling, SdDirection, apply_scaling, ccc
from .regress import SvrConfig, svr_fit, svr_predict


class CodebookKind(enum.Enum):
    RANDOM = "random"
    KMEANS = "kmeans"
    AUTOENCODER = "autoencoder"


@dataclass
class Split:
    """Train/dev/test session id lists; pairwise disjoint, test optional."""

    train: tuple[str, ...]
    dev: tuple[str, ...]
    test: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.train = tuple(self.train)
        self.dev = tuple(self.dev)
        self.test = tuple(self.test)
        if not self.train:
            raise ConfigError("train split is empty")
        if not self.dev:
            raise ConfigError("dev split is empty")
        all_ids = [*self.train, *self.dev, *self.test]
        seen: set[str] = set()
        shared = sorted({sid for sid in all_ids if sid in seen or seen.add(sid)})
        if shared:
            raise ConfigError(f"split lists must be disjoint; shared sessions: {shared}")

    def all_ids(self) -> tuple[str, ...]:
        return self.train + self.dev + self.test


@dataclass
class ExperimentConfig:
    data_root: Path
    split: Split
    codebook_kind: CodebookKind = CodebookKind.RANDOM
    codebook_size: int = 1000
    assignment: AssignmentStrategy = field(default_factory=lambda: MultipleN(20))
    turn_strategy: TurnStrategy = TurnStrategy.MIXED
    scaling: Scaling = Scaling.NONE
    sd_direction: SdDirection = SdDirection.MATCH_GOLD
    svr: SvrConfig = field(default_factory=SvrConfig)
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    context_radius: int = 7
    edge: EdgeMode = EdgeMode.CLAMP
    frame_period: float = FRAME_PERIOD_DEFAULT
    rate_period: float = RATE_PERIOD_DEFAULT
    kmeans_max_iters: int = 100
    kmeans_tol: float = 1e-6
    ae_hidden: tuple[int, ...] | None = None  # None: [codebook_size, codebook_size]
    ae_code_layer: int = 2
    ae_cap: float = 1.0
    ae_epochs: int = 20
    ae_batch: int = 64
    ae_lr: float = 0.001
    ae_decay: float = 0.9
    ae_eps: float = 1e-7
    seed: int = 0
    cache_dir: Path | None = None

    def __post_init__(self) -> None:
        self.data_root = Path(self.data_root)
        if self.cache_dir is not None:
            self.cache_dir = Path(self.cache_dir)
        if self.context_radius < 0:
            raise ConfigError("context_radius must be >= 0")
        if self.codebook_size < 1:
            raise ConfigError("codebook_size must be >= 1")
        if self.ae_hidden is not None:
            self.ae_hidden = tuple(int(h) for h in self.ae_hidden)
        hidden_count = len(self.ae_hidden) if self.ae_hidden is not None else 2
        if not 1 <= self.ae_code_layer <= hidden_count:
            raise ConfigError(
                f"ae_code_layer {self.ae_code_layer} outside 1..{hidden_count}"
            )
        if (
            self.codebook_kind is CodebookKind.AUTOENCODER
            and self.ae_hidden is not None
            and self.ae_hidden[self.ae_code_layer - 1] != self.codebook_size
        ):
            raise ConfigError(
                f"code layer width {self.ae_hidden[self.ae_code_layer - 1]} "
                f"disagrees with codebook_size {self.codebook_size}"
            )

    def resolved_ae_config(self, input_dim: int) -> AeConfig:
        hidden = (
            list(self.ae_hidden)
            if self.ae_hidden is not None
            else [self.codebook_size, self.codebook_size]
        )
        return AeConfig(
            input_dim=input_dim,
            hidden_dims=hidden,
            code_layer_index=self.ae_code_layer,
            activation_cap=self.ae_cap,
            epochs=self.ae_epochs,
            batch_size=self.ae_batch,
            learning_rate=self.ae_lr,
            rms_decay=self.ae_decay,
            rms_epsilon=self.ae_eps,
            seed=self.seed,
        )

    @property
    def features_label(self) -> str:
        return f"{self.codebook_kind.value}-K{self.codebook_size}+" + assignment_token(
            self.assignment
        )

    def validate_paths(self) -> None:
        if not self.data_root.is_dir():
            raise ConfigError(f"data_root {self.data_root} is not a directory")
        missing = [
            sid
            for sid in self.split.all_ids()
            if not (self.data_root / sid / "frames.csv").is_file()
        ]
        if missing:
            raise ConfigError(f"sessions missing under {self.data_root}: {missing}")


@dataclass
class ResultRow:
    features: str
    dimension: Dimension
    turn_strategy: TurnStrategy
    scaling: Scaling
    ccc_dev: float
    ccc_test: float | None = None

    def __post_init__(self) -> None:
        for value in (self.ccc_dev, self.ccc_test):
            if value is not None and abs(value) > 1.0 + 1e-9:
                raise DataError(f"CCC {value} outside [-1, 1]")


@dataclass
class ExperimentRun:
    """Full output of one pipeline run; `rows` is the reportable part."""

    config: ExperimentConfig
    rows: list[ResultRow]
    codebook: Codebook
    fit_hashes: dict[str, str]
    predictions: dict[str, np.ndarray]  # "<Dimension>:dev" / "<Dimension>:test"
    gold: dict[str, np.ndarray]
    svr_converged: dict[str, bool]
    ae_loss_history: list[float] | None = None


@dataclass
class CellFailure:
    turn_strategy: TurnStrategy
    scaling: Scaling
    assignment: str
    error: str
    kind: str = "data"  # config | data | numerical, for exit-code mapping


@dataclass
class SweepResult:
    rows: list[ResultRow]
    failures: list[CellFailure]
    warnings: list[str] = field(default_factory=list)


# --- assignment token grammar ----------------------------------------------


def assignment_token(strategy: AssignmentStrategy) -> str:
    if isinstance(strategy, MultipleN):
        return f"top{strategy.n}"
    return f"soft{strategy.theta:g}"


def parse_assignment_token(token: str) -> AssignmentStrategy:
    token = token.strip()
    if token.startswith("top"):
        try:
            return MultipleN(int(token[3:]))
        except ValueError:
            raise ConfigError(f"bad assignment token {token!r}") from None
    if token.startswith("soft"):
        try:
            return SoftThreshold(float(token[4:]))
        except ValueError:
            raise ConfigError(f"bad assignment token {token!r}") from None
    raise ConfigError(
        f"assignment must look like top<N> or soft<theta>, got {token!r}"
    )


# --- flat key=value config files --------------------------------------------

CONFIG_KEYS = [
    "data_root",
    "train",
    "dev",
    "test",
    "codebook",
    "codebook_size",
    "assignment",
    "turn_strategy",
    "scaling",
    "sd_direction",
    "context_radius",
    "edge",
    "window",
    "hop",
    "frame_period",
    "rate_period",
    "svr_c",
    "svr_epsilon",
    "svr_bias",
    "svr_max_iters",
    "svr_tol",
    "kmeans_max_iters",
    "kmeans_tol",
    "ae_hidden",
    "ae_code_layer",
    "ae_cap",
    "ae_epochs",
    "ae_batch",
    "ae_lr",
    "ae_decay",
    "ae_eps",
    "seed",
    "cache_dir",
]


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment; blank lines ignored."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        mapping[key.strip()] = value.strip()
    return mapping


def _to_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


def _to_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}") from None


def _to_enum(key: str, value: str, enum_cls):
    try:
        return enum_cls(value)
    except ValueError:
        choices = ", ".join(e.value for e in enum_cls)
        raise ConfigError(f"{key}: expected one of {choices}, got {value!r}") from None


def _id_list(value: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in value.split(",") if part.strip())


def config_from_mapping(mapping: dict[str, str]) -> ExperimentConfig:
    """Build a typed config from string keys (file grammar or CLI overrides)."""
    unknown = sorted(set(mapping) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    for required in ("data_root", "train", "dev"):
        if not mapping.get(required):
            raise ConfigError(f"config is missing required key {required!r}")

    get = mapping.get
    kind = _to_enum("codebook", get("codebook", "random"), CodebookKind)
    default_k = "345" if kind is CodebookKind.AUTOENCODER else "1000"
    seed = _to_int("seed", get("seed", "0"))
    ae_hidden = None
    if get("ae_hidden"):
        ae_hidden = tuple(_to_int("ae_hidden", h) for h in _id_list(get("ae_hidden")))
    return ExperimentConfig(
        data_root=Path(get("data_root")),
        split=Split(
            train=_id_list(get("train")),
            dev=_id_list(get("dev")),
            test=_id_list(get("test", "")),
        ),
        codebook_kind=kind,
        codebook_size=_to_int("codebook_size", get("codebook_size", default_k)),
        assignment=parse_assignment_token(get("assignment", "top20")),
        turn_strategy=_to_enum("turn_strategy", get("turn_strategy", "mixed"), TurnStrategy),
        scaling=_to_enum("scaling", get("scaling", "none"), Scaling),
        sd_direction=_to_enum("sd_direction", get("sd_direction", "match_gold"), SdDirection),
        svr=SvrConfig(
            C=_to_float("svr_c", get("svr_c", "1.0")),
            epsilon=_to_float("svr_epsilon", get("svr_epsilon", "0.1")),
            bias_scale=_to_float("svr_bias", get("svr_bias", "1.0")),
            max_iters=_to_int("svr_max_iters", get("svr_max_iters", "1000")),
            tol=_to_float("svr_tol", get("svr_tol", "1e-6")),
            seed=seed,
        ),
        segmenter=SegmenterConfig(
            window=_to_float("window", get("window", "6.0")),
            hop=_to_float("hop", get("hop", "0.1")),
        ),
        context_radius=_to_int("context_radius", get("context_radius", "7")),
        edge=_to_enum("edge", get("edge", "clamp"), EdgeMode),
        frame_period=_to_float("frame_period", get("frame_period", "0.010")),
        rate_period=_to_float("rate_period", get("rate_period", "0.100")),
        kmeans_max_iters=_to_int("kmeans_max_iters", get("kmeans_max_iters", "100")),
        kmeans_tol=_to_float("kmeans_tol", get("kmeans_tol", "1e-6")),
        ae_hidden=ae_hidden,
        ae_code_layer=_to_int("ae_code_layer", get("ae_code_layer", "2")),
        ae_cap=_to_float("ae_cap", get("ae_cap", "1.0")),
        ae_epochs=_to_int("ae_epochs", get("ae_epochs", "20")),
        ae_batch=_to_int("ae_batch", get("ae_batch", "64")),
        ae_lr=_to_float("ae_lr", get("ae_lr", "0.001")),
        ae_decay=_to_float("ae_decay", get("ae_decay", "0.9")),
        ae_eps=_to_float("ae_eps", get("ae_eps", "1e-7")),
        seed=seed,
        cache_dir=Path(get("cache_dir")) if get("cache_dir") else None,
    )


def config_to_mapping(config: ExperimentConfig) -> dict[str, str]:
    """Canonical string form of every effective setting, in CONFIG_KEYS."""
    values = {
        "data_root": str(config.data_root),
        "train": ",".join(config.split.train),
        "dev": ",".join(config.split.dev),
        "test": ",".join(config.split.test),
        "codebook": config.codebook_kind.value,
        "codebook_size": str(config.codebook_size),
        "assignment": assignment_token(config.assignment),
        "turn_strategy": config.turn_strategy.value,
        "scaling": config.scaling.value,
        "sd_direction": config.sd_direction.value,
        "context_radius": str(config.context_radius),
        "edge": config.edge.value,
        "window": repr(config.segmenter.window),
        "hop": repr(config.segmenter.hop),
        "frame_period": repr(config.frame_period),
        "rate_period": repr(config.rate_period),
        "svr_c": repr(config.svr.C),
        "svr_epsilon": repr(config.svr.epsilon),
        "svr_bias": repr(config.svr.bias_scale),
        "svr_max_iters": str(config.svr.max_iters),
        "svr_tol": repr(config.svr.tol),
        "kmeans_max_iters": str(config.kmeans_max_iters),
        "kmeans_tol": repr(config.kmeans_tol),
        "ae_hidden": ",".join(str(h) for h in config.ae_hidden) if config.ae_hidden else "",
        "ae_code_layer": str(config.ae_code_layer),
        "ae_cap": repr(config.ae_cap),
        "ae_epochs": str(config.ae_epochs),
        "ae_batch": str(config.ae_batch),
        "ae_lr": repr(config.ae_lr),
        "ae_decay": repr(config.ae_decay),
        "ae_eps": repr(config.ae_eps),
        "seed": str(config.seed),
        "cache_dir": str(config.cache_dir) if config.cache_dir else "",
    }
    return {key: values[key] for key in CONFIG_KEYS}


def config_hash(config: ExperimentConfig) -> str:
    """Short identity hash over everything except cache_dir (results-neutral)."""
    mapping = config_to_mapping(config)
    del mapping["cache_dir"]
    text = "\n".join(f"{k}={v}" for k, v in sorted(mapping.items()))
    return hashlib.sha256(text.encode()).hexdigest()[:12]


def write_config_file(config: ExperimentConfig, path: str | Path) -> None:
    lines = [f"{k} = {v}" for k, v in config_to_mapping(config).items()]
    Path(path).write_text("\n".join(lines) + "\n")


# --- content hashing ---------------------------------------------------------


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def hash_array(a: np.ndarray) -> str:
    a = np.ascontiguousarray(np.asarray(a, dtype=np.float64))
    digest = hashlib.sha256(str(a.shape).encode())
    digest.update(a.tobytes())
    return digest.hexdigest()


def hash_file(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def combine_hashes(*parts: str) -> str:
    return _sha("|".join(parts))


# --- cache -------------------------------------------------------------------


class SweepCache:
    """Two-level memo: in-process dict, plus optional on-disk entries.

    Disk entries are written to a temp name and published with an atomic
    rename, so concurrent writers can only ever observe complete files.
    """

    def __init__(self, cache_dir: str | Path | None = None):
        self.cache_dir = Path(cache_dir) if cache_dir is not None else None
        if self.cache_dir is not None:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._memory: dict[str, object] = {}
        self.memory_hits = 0
        self.disk_hits = 0
        self.misses = 0

    def fetch(self, key: str, build, suffix: str | None = None, save=None, load=None):
        """Return the cached value for key, building (and storing) on miss."""
        if key in self._memory:
            self.memory_hits += 1
            return self._memory[key]
        path = None
        if self.cache_dir is not None and suffix is not None:
            path = self.cache_dir / f"{key}{suffix}"
            if path.is_file() and load is not None:
                value = load(path)
                self._memory[key] = value
                self.disk_hits += 1
                return value
        value = build()
        self._memory[key] = value
        self.misses += 1
        if path is not None and save is not None:
            tmp = path.with_name(f"{path.name}.{os.getpid()}.tmp{suffix}")
            save(value, tmp)
            os.replace(tmp, path)
        return value


def _save_npz(bundle: dict[str, np.ndarray], path: Path) -> None:
    np.savez(path, **bundle)


def _load_npz(path: Path) -> dict[str, np.ndarray]:
    with np.load(path) as archive:
        return {name: archive[name] for name in archive.files}


# --- pipeline ----------------------------------------------------------------


@contextmanager
def _stage(name: str):
    """Annotate any package error with the pipeline stage it came from."""
    try:
        yield
    except BoawError as exc:
        exc.args = (f"[{name}] {exc}",)
        raise


def _session_files(config: ExperimentConfig, sid: str) -> list[Path]:
    root = config.data_root / sid
    files = [root / "frames.csv", root / "turns.csv"]
    files += [root / dim.filename for dim in Dimension if (root / dim.filename).exists()]
    return files


def _sessions_hash(config: ExperimentConfig, cache: SweepCache, ids: tuple[str, ...]) -> str:
    lines = []
    for sid in ids:
        for path in _session_files(config, sid):
            file_hash = cache.fetch(f"filehash:{path}", lambda p=path: hash_file(p))
            lines.append(f"{sid}:{path.name}:{file_hash}")
    return _sha("\n".join(lines))


def _condition_key(config: ExperimentConfig) -> str:
    return (
        f"c{config.context_radius}|{config.edge.value}|{config.turn_strategy.value}"
        f"|fp{config.frame_period!r}"
    )


def _load_sessions(
    config: ExperimentConfig, cache: SweepCache, files_hash: str
) -> dict[str, SyntheticSession]:
    ids = config.split.all_ids()
    key = "sessions-" + _sha(
        f"{config.data_root}|{','.join(ids)}|{files_hash}"
        f"|fp{config.frame_period!r}|rp{config.rate_period!r}"
    )

    def build() -> dict[str, SyntheticSession]:
        sessions = {
            sid: load_session(
                config.data_root / sid,
                frame_period=config.frame_period,
                rate_period=config.rate_period,
            )
            for sid in ids
        }
        dims_seen = {s.frames.dim for s in sessions.values()}
        if len(dims_seen) > 1:
            raise DimensionMismatch(
                f"sessions disagree on frame dimension: {sorted(dims_seen)}"
            )
        return sessions

    return cache.fetch(key, build)


def _conditioned_sequences(
    config: ExperimentConfig,
    cache: SweepCache,
    sessions: dict[str, SyntheticSession],
    files_hash: str,
):
    ids = config.split.all_ids()
    key = "cond-" + _sha(
        f"{config.data_root}|{','.join(ids)}|{files_hash}|{_condition_key(config)}"
    )

    def build():
        out = {}
        for sid in ids:
            session = sessions[sid]
            stacked = stack_frames(session.frames, config.context_radius, config.edge)
            out[sid] = apply_turn_strategy(stacked, session.turns, config.turn_strategy)
        return out

    return cache.fetch(key, build)


def _codebook_descriptor(config: ExperimentConfig) -> str:
    kind = config.codebook_kind
    if kind is CodebookKind.RANDOM:
        return f"random|K{config.codebook_size}|seed{config.seed}"
    if kind is CodebookKind.KMEANS:
        return (
            f"kmeans|K{config.codebook_size}|seed{config.seed}"
            f"|it{config.kmeans_max_iters}|tol{config.kmeans_tol!r}"
        )
    hidden = config.ae_hidden or (config.codebook_size, config.codebook_size)
    return (
        f"ae|h{','.join(str(h) for h in hidden)}|code{config.ae_code_layer}"
        f"|cap{config.ae_cap!r}|ep{config.ae_epochs}|bs{config.ae_batch}"
        f"|lr{config.ae_lr!r}|dec{config.ae_decay!r}|eps{config.ae_eps!r}"
        f"|seed{config.seed}"
    )


def _fit_codebook(config: ExperimentConfig, cache: SweepCache, conditioned, train_hash: str):
    """Fit (or re-load) the codebook on training frames only."""
    key = f"{config.codebook_kind.value}-" + _sha(
        f"{_codebook_descriptor(config)}|{_condition_key(config)}|{train_hash}"
    )
    holder: dict[str, np.ndarray] = {}

    def train_matrix() -> np.ndarray:
        if "mat" not in holder:
            holder["mat"] = np.vstack(
                [conditioned[sid].frames for sid in config.split.train]
            )
        return holder["mat"]

    def build():
        mat = train_matrix()
        if config.codebook_kind is CodebookKind.RANDOM:
            return fit_random(mat, config.codebook_size, seed=config.seed), None
        if config.codebook_kind is CodebookKind.KMEANS:
            return (
                fit_kmeans(
                    mat,
                    config.codebook_size,
                    seed=config.seed,
                    max_iters=config.kmeans_max_iters,
                    tol=config.kmeans_tol,
                ),
                None,
            )
        model, history = train(mat, config.resolved_ae_config(mat.shape[1]))
        return model, history

    if config.codebook_kind is CodebookKind.AUTOENCODER:

        def save(value, path):
            save_model(value[0], path)

        def load(path):
            return load_model(path), None

        suffix = ".ae"
    else:

        def save(value, path):
            save_codebook(value[0], path)

        def load(path):
            return load_codebook(path), None

        suffix = ".cb"
    cb, history = cache.fetch(key, build, suffix=suffix, save=save, load=load)
    fit_hash = cache.fetch(f"{key}|fithash", lambda: hash_array(train_matrix()))
    return cb, history, fit_hash, key


def _histogram_matrix(
    config: ExperimentConfig,
    cache: SweepCache,
    conditioned,
    cb: Codebook,
    cb_key: str,
    sid: str,
    times: np.ndarray,
) -> np.ndarray:
    key = "hist-" + _sha(
        f"{cb_key}|{assignment_token(config.assignment)}"
        f"|w{config.segmenter.window!r}|h{config.segmenter.hop!r}"
        f"|{sid}|{hash_array(times)}"
    )

    def build() -> dict[str, np.ndarray]:
        histograms = extract_segment_features(
            conditioned[sid], cb, config.assignment, config.segmenter, times
        )
        return {"counts": np.vstack([h.counts for h in histograms])}

    return cache.fetch(key, build, suffix=".npz", save=_save_npz, load=_load_npz)["counts"]


def _split_features(config, cache, conditioned, sessions, cb, cb_key, dim):
    """Per-split feature matrices and gold vectors for one affect dimension."""
    X: dict[str, np.ndarray] = {}
    y: dict[str, np.ndarray] = {}
    for split_name, ids in (
        ("train", config.split.train),
        ("dev", config.split.dev),
        ("test", config.split.test),
    ):
        if not ids:
            continue
        mats, golds = [], []
        for sid in ids:
            track = sessions[sid].annotations[dim]
            mats.append(
                _histogram_matrix(
                    config, cache, conditioned, cb, cb_key, sid, track.times()
                )
            )
            golds.append(track.values)
        X[split_name] = np.vstack(mats)
        y[split_name] = np.concatenate(golds)
    return X, y


def _svr_descriptor(svr: SvrConfig) -> str:
    return (
        f"C{svr.C!r}|e{svr.epsilon!r}|B{svr.bias_scale!r}"
        f"|it{svr.max_iters}|tol{svr.tol!r}|seed{svr.seed}"
    )


def _raw_predictions(config, cache, dim, X, y):
    parts = [hash_array(X["train"]), hash_array(y["train"]), hash_array(X["dev"])]
    if "test" in X:
        parts.append(hash_array(X["test"]))
    key = "pred-" + _sha("|".join(parts) + f"|{_svr_descriptor(config.svr)}|{dim.value}")

    def build() -> dict[str, np.ndarray]:
        model = svr_fit(X["train"], y["train"], config.svr)
        return {
            "pred_dev": svr_predict(model, X["dev"]),
            "pred_test": svr_predict(model, X["test"]) if "test" in X else np.zeros(0),
            "converged": np.array([1.0 if model.converged else 0.0]),
            "objective": np.array([model.objective]),
        }

    bundle = cache.fetch(key, build, suffix=".npz", save=_save_npz, load=_load_npz)
    fit_hash = combine_hashes(parts[0], parts[1])
    return bundle, fit_hash


def run_experiment_detailed(
    config: ExperimentConfig, cache: SweepCache | None = None
) -> ExperimentRun:
    """Run the full pipeline once; see module docstring for the stages."""
    if cache is None:
        cache = SweepCache(config.cache_dir)
    with _stage("config"):
        if (
            isinstance(config.assignment, SoftThreshold)
            and config.codebook_kind is not CodebookKind.AUTOENCODER
        ):
            raise SoftOnDistanceScores(
                "soft-threshold assignment requires an autoencoder codebook"
            )
        config.validate_paths()
    with _stage("ingest"):
        files_hash = _sessions_hash(config, cache, config.split.all_ids())
        sessions = _load_sessions(config, cache, files_hash)
    with _stage("framestack"):
        conditioned = _conditioned_sequences(config, cache, sessions, files_hash)
    with _stage("codebook-fit"):
        train_hash = _sessions_hash(config, cache, config.split.train)
        cb, ae_history, cb_fit_hash, cb_key = _fit_codebook(
            config, cache, conditioned, train_hash
        )

    dims = [
        dim
        for dim in Dimension
        if all(dim in sessions[sid].annotations for sid in config.split.all_ids())
    ]
    if not dims:
        with _stage("extract"):
            raise DataError("no affect dimension is annotated in every session")

    fit_hashes = {"codebook": cb_fit_hash}
    rows: list[ResultRow] = []
    predictions: dict[str, np.ndarray] = {}
    gold: dict[str, np.ndarray] = {}
    converged: dict[str, bool] = {}
    for dim in dims:
        with _stage("extract"):
            X, y = _split_features(config, cache, conditioned, sessions, cb, cb_key, dim)
        with _stage("svr-fit"):
            bundle, svr_hash = _raw_predictions(config, cache, dim, X, y)
            fit_hashes[f"svr:{dim.value}"] = svr_hash
            converged[dim.value] = bool(bundle["converged"][0] > 0.5)
        with _stage("scaling"):
            scaled_dev = apply_scaling(
                bundle["pred_dev"], config.scaling, y["train"], config.sd_direction
            )
            scaled_test = None
            if "test" in X:
                scaled_test = apply_scaling(
                    bundle["pred_test"], config.scaling, y["train"], config.sd_direction
                )
            if config.scaling is not Scaling.NONE:
                fit_hashes[f"scaling:{dim.value}"] = hash_array(y["train"])
        with _stage("eval"):
            ccc_dev = ccc(scaled_dev, y["dev"])
            ccc_test = ccc(scaled_test, y["test"]) if scaled_test is not None else None
        rows.append(
            ResultRow(
                features=config.features_label,
                dimension=dim,
                turn_strategy=config.turn_strategy,
                scaling=config.scaling,
                ccc_dev=ccc_dev,
                ccc_test=ccc_test,
            )
        )
        predictions[f"{dim.value}:dev"] = scaled_dev
        gold[f"{dim.value}:dev"] = y["dev"]
        if scaled_test is not None:
            predictions[f"{dim.value}:test"] = scaled_test
            gold[f"{dim.value}:test"] = y["test"]
    return ExperimentRun(
        config=config,
        rows=rows,
        codebook=cb,
        fit_hashes=fit_hashes,
        predictions=predictions,
        gold=gold,
        svr_converged=converged,
        ae_loss_history=ae_history,
    )


def run_experiment(
    config: ExperimentConfig, cache: SweepCache | None = None
) -> list[ResultRow]:
    return run_experiment_detailed(config, cache).rows


def run_sweep(
    base: ExperimentConfig,
    turn_strategies: list[TurnStrategy],
    scalings: list[Scaling],
    assignments: list[AssignmentStrategy],
    cache: SweepCache | None = None,
) -> SweepResult:
    """Run every grid cell; failed cells are collected, not fatal.

    The cache is shared across cells, so cells differing only in scaling
    reuse identical raw predictions, and cells differing only downstream of
    the codebook reuse the codebook.
    """
    if not turn_strategies or not scalings or not assignments:
        raise EmptyGrid("sweep grid needs at least one value per axis")
    turn_strategies = list(dict.fromkeys(turn_strategies))
    scalings = list(dict.fromkeys(scalings))
    assignments = list(dict.fromkeys(assignments))
    if cache is None:
        cache = SweepCache(base.cache_dir)
    result = SweepResult(rows=[], failures=[])
    for turn in turn_strategies:
        for assignment in assignments:
            for scaling in scalings:
                config = dataclasses.replace(
                    base, turn_strategy=turn, assignment=assignment, scaling=scaling
                )
                token = assignment_token(assignment)
                try:
                    run = run_experiment_detailed(config, cache)
                except BoawError as exc:
                    if isinstance(exc, ConfigError):
                        kind = "config"
                    elif isinstance(exc, DataError):
                        kind = "data"
                    else:
                        kind = "numerical"
                    result.failures.append(
                        CellFailure(
                            turn_strategy=turn,
                            scaling=scaling,
                            assignment=token,
                            error=f"{type(exc).__name__}: {exc}",
                            kind=kind,
                        )
                    )
                    continue
                result.rows.extend(run.rows)
                for dim_name, ok in run.svr_converged.items():
                    if not ok:
                        result.warnings.append(
                            f"{turn.value}/{token}/{scaling.value}: SVR hit its "
                            f"iteration cap on {dim_name} (best iterate kept)"
                        )
    return result
