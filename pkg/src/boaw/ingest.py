"""Frame/turn/annotation ingestion and the synthetic corpus generator.

All inputs are plain numeric CSV. Timestamps are implicit: row index times
the sampling period, offset by a start time. The synthetic generator plants
a slow sinusoidal signal that drives both a subset of feature dimensions
and the arousal annotation track, so the full pipeline has a recoverable
target without any real corpus.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    ConfigError,
    DimensionMismatch,
    InvertedSegment,
    MalformedRow,
    NonNumericValue,
    OverlappingSegments,
)

FRAME_PERIOD_DEFAULT = 0.010
RATE_PERIOD_DEFAULT = 0.100


class Role(enum.Enum):
    TARGET = "T"
    INTERLOCUTOR = "I"
    UNLABELLED = "U"


class Dimension(enum.Enum):
    AROUSAL = "Arousal"
    VALENCE = "Valence"
    LIKING = "Liking"

    @property
    def filename(self) -> str:
        return self.value.lower() + ".csv"


class Segment(NamedTuple):
    t_start: float
    t_end: float
    role: Role


@dataclass
class FrameSequence:
    """Time-ordered matrix of fixed-dimension feature frames for one session."""

    session_id: str
    frames: np.ndarray  # F x d
    frame_period: float = FRAME_PERIOD_DEFAULT
    start_time: float = 0.0

    def __post_init__(self) -> None:
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 2 or self.frames.shape[0] < 1 or self.frames.shape[1] < 1:
            raise MalformedRow(
                f"{self.session_id}: frames must be a non-empty 2-D matrix, "
                f"got shape {self.frames.shape}"
            )
        if self.frame_period <= 0:
            raise ConfigError(f"frame_period must be positive, got {self.frame_period}")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def dim(self) -> int:
        return self.frames.shape[1]

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.n_frames) * self.frame_period


@dataclass
class TurnTrack:
    """Sorted, non-overlapping speaker-turn segments."""

    segments: list[Segment] = field(default_factory=list)

    def __post_init__(self) -> None:
        segs = [Segment(float(s[0]), float(s[1]), Role(s[2])) for s in self.segments]
        for seg in segs:
            if seg.t_end <= seg.t_start:
                raise InvertedSegment(f"segment ({seg.t_start}, {seg.t_end}) has t_end <= t_start")
        segs.sort(key=lambda s: s.t_start)
        for prev, cur in zip(segs, segs[1:]):
            if cur.t_start < prev.t_end:
                raise OverlappingSegments(
                    f"segment starting at {cur.t_start} overlaps one ending at {prev.t_end}"
                )
        self.segments = segs


@dataclass
class AnnotationTrack:
    """Gold-standard values for one affect dimension at a fixed rate."""

    dimension: Dimension
    values: np.ndarray
    rate_period: float = RATE_PERIOD_DEFAULT
    start_time: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64).ravel()
        if self.values.size < 1:
            raise MalformedRow(f"{self.dimension.value}: annotation track is empty")
        if not np.isfinite(self.values).all():
            raise NonNumericValue(f"{self.dimension.value}: non-finite annotation values")
        if self.rate_period <= 0:
            raise ConfigError(f"rate_period must be positive, got {self.rate_period}")

    def times(self) -> np.ndarray:
        return self.start_time + np.arange(self.values.size) * self.rate_period


@dataclass
class SyntheticSpec:
    n_sessions: int
    duration: float  # seconds
    d: int = 23
    seed: int = 0
    signal_strength: float = 0.8

    def __post_init__(self) -> None:
        if self.n_sessions < 1:
            raise ConfigError("n_sessions must be >= 1")
        if self.duration <= 0:
            raise ConfigError("duration must be positive")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ConfigError("signal_strength must lie in [0, 1]")


@dataclass
class SyntheticSession:
    frames: FrameSequence
    turns: TurnTrack
    annotations: dict[Dimension, AnnotationTrack]


# --- CSV parsing ----------------------------------------------------------


def _detect_delimiter(line: str) -> str:
    return ";" if ";" in line else ","


def _numeric_rows(path: Path, skip_header: bool) -> list[list[float]]:
    lines = path.read_text().splitlines()
    if skip_header and lines:
        lines = lines[1:]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MalformedRow(f"{path}: no data rows")
    delim = _detect_delimiter(lines[0])
    rows: list[list[float]] = []
    for lineno, line in enumerate(lines, start=1):
        fields = line.split(delim)
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise NonNumericValue(f"{path}:{lineno}: {exc}") from None
        if len(rows[-1]) != len(rows[0]):
            raise MalformedRow(
                f"{path}:{lineno}: row has {len(rows[-1])} fields, expected {len(rows[0])}"
            )
    return rows


def parse_frames(
    path: str | Path,
    expected_dim: int | None = None,
    header: bool = False,
    session_id: str | None = None,
    frame_period: float = FRAME_PERIOD_DEFAULT,
    start_time: float = 0.0,
) -> FrameSequence:
    """Parse a frame-feature CSV (one frame per row, `;` or `,` delimited)."""
    path = Path(path)
    rows = _numeric_rows(path, skip_header=header)
    frames = np.array(rows, dtype=np.float64)
    if expected_dim is not None and frames.shape[1] != expected_dim:
        raise DimensionMismatch(
            f"{path}: expected {expected_dim}-dim frames, got {frames.shape[1]}"
        )
    if session_id is None:
        session_id = path.parent.name if path.name == "frames.csv" else path.stem
    return FrameSequence(session_id, frames, frame_period=frame_period, start_time=start_time)


def parse_turns(path: str | Path) -> TurnTrack:
    """Parse a turn CSV of `t_start,t_end,role` rows with role in {T, I}."""
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    segments: list[Segment] = []
    for lineno, line in enumerate(lines, start=1):
        fields = line.split(_detect_delimiter(line))
        if len(fields) != 3:
            raise MalformedRow(f"{path}:{lineno}: expected t_start,t_end,role")
        try:
            t_start, t_end = float(fields[0]), float(fields[1])
        except ValueError as exc:
            raise NonNumericValue(f"{path}:{lineno}: {exc}") from None
        role_code = fields[2].strip()
        if role_code not in ("T", "I"):
            raise MalformedRow(f"{path}:{lineno}: role must be T or I, got {role_code!r}")
        segments.append(Segment(t_start, t_end, Role(role_code)))
    return TurnTrack(segments)


def parse_annotations(
    path: str | Path,
    dimension: Dimension,
    rate_period: float = RATE_PERIOD_DEFAULT,
    start_time: float = 0.0,
) -> AnnotationTrack:
    """Parse a one-value-per-row annotation CSV."""
    rows = _numeric_rows(Path(path), skip_header=False)
    if any(len(r) != 1 for r in rows):
        raise MalformedRow(f"{path}: annotation rows must hold exactly one value")
    values = np.array([r[0] for r in rows], dtype=np.float64)
    return AnnotationTrack(dimension, values, rate_period=rate_period, start_time=start_time)


# --- CSV serialization (exact float round-trip via repr) -------------------


def write_frames(seq: FrameSequence, path: str | Path, delimiter: str = ",") -> None:
    lines = [delimiter.join(repr(float(v)) for v in row) for row in seq.frames]
    Path(path).write_text("\n".join(lines) + "\n")


def write_turns(track: TurnTrack, path: str | Path) -> None:
    lines = [
        f"{float(s.t_start)!r},{float(s.t_end)!r},{s.role.value}" for s in track.segments
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def write_annotations(track: AnnotationTrack, path: str | Path) -> None:
    Path(path).write_text("\n".join(repr(float(v)) for v in track.values) + "\n")


# --- synthetic corpus ------------------------------------------------------


def _latent_signal(rng: np.random.Generator, duration: float) -> "_Sinusoids":
    """Random mixture of up to 3 slow sinusoids, normalized into [-1, 1]."""
    n = int(rng.integers(1, 4))
    periods = rng.uniform(5.0, max(10.0, duration), size=n)
    amps = rng.uniform(0.3, 1.0, size=n)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return _Sinusoids(periods, amps, phases)


class _Sinusoids:
    # slight overscale before the clamp so the track actually uses the range
    _GAIN = 1.3

    def __init__(self, periods: np.ndarray, amps: np.ndarray, phases: np.ndarray):
        self.periods = periods
        self.amps = amps
        self.phases = phases

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        raw = np.zeros_like(t)
        for period, amp, phase in zip(self.periods, self.amps, self.phases):
            raw += amp * np.sin(2.0 * np.pi * t / period + phase)
        return np.clip(self._GAIN * raw / self.amps.sum(), -1.0, 1.0)


def _alternating_turns(rng: np.random.Generator, duration: float) -> TurnTrack:
    segments: list[Segment] = []
    t = 0.0
    role = Role.TARGET if rng.random() < 0.5 else Role.INTERLOCUTOR
    while t < duration - 1e-9:
        length = float(rng.uniform(2.0, 6.0))
        end = min(t + length, duration)
        if end - t > 1e-6:
            segments.append(Segment(t, end, role))
        t = end
        role = Role.INTERLOCUTOR if role is Role.TARGET else Role.TARGET
    return TurnTrack(segments)


def generate_synthetic(
    spec: SyntheticSpec,
    frame_period: float = FRAME_PERIOD_DEFAULT,
    rate_period: float = RATE_PERIOD_DEFAULT,
) -> list[SyntheticSession]:
    """Build a deterministic corpus with a planted arousal signal.

    Per session, a latent slow signal z(t) shifts the mean of a seeded
    quarter of the frame dimensions by signal_strength * z(t) and is
    sampled at rate_period as the arousal track. Valence and liking get
    independent sinusoid tracks uncorrelated with the frames.
    """
    rng = np.random.default_rng(spec.seed)
    sessions: list[SyntheticSession] = []
    n_frames = max(1, int(round(spec.duration / frame_period)))
    n_ann = max(1, int(round(spec.duration / rate_period)))
    # one corpus-wide choice, so the frame-to-label mapping transfers across sessions
    n_affected = max(1, spec.d // 4)
    affected = rng.choice(spec.d, size=n_affected, replace=False)

    for i in range(spec.n_sessions):
        session_id = f"s{i:03d}"
        z = _latent_signal(rng, spec.duration)

        frames = rng.standard_normal((n_frames, spec.d))
        frame_times = np.arange(n_frames) * frame_period
        frames[:, affected] += spec.signal_strength * z(frame_times)[:, None]

        ann_times = np.arange(n_ann) * rate_period
        annotations = {
            Dimension.AROUSAL: AnnotationTrack(
                Dimension.AROUSAL, z(ann_times), rate_period=rate_period
            )
        }
        for dim in (Dimension.VALENCE, Dimension.LIKING):
            extra = _latent_signal(rng, spec.duration)
            annotations[dim] = AnnotationTrack(dim, extra(ann_times), rate_period=rate_period)

        sessions.append(
            SyntheticSession(
                frames=FrameSequence(session_id, frames, frame_period=frame_period),
                turns=_alternating_turns(rng, spec.duration),
                annotations=annotations,
            )
        )
    return sessions


def write_corpus(sessions: list[SyntheticSession], out_dir: str | Path) -> None:
    """Write sessions as `<out>/<id>/{frames,turns,arousal,valence,liking}.csv`."""
    out_dir = Path(out_dir)
    for session in sessions:
        session_dir = out_dir / session.frames.session_id
        session_dir.mkdir(parents=True, exist_ok=True)
        write_frames(session.frames, session_dir / "frames.csv")
        write_turns(session.turns, session_dir / "turns.csv")
        for dim, track in session.annotations.items():
            write_annotations(track, session_dir / dim.filename)


def load_session(
    session_dir: str | Path,
    expected_dim: int | None = None,
    frame_period: float = FRAME_PERIOD_DEFAULT,
    rate_period: float = RATE_PERIOD_DEFAULT,
) -> SyntheticSession:
    """Read one `<session>/` directory written by write_corpus."""
    session_dir = Path(session_dir)
    frames = parse_frames(
        session_dir / "frames.csv", expected_dim=expected_dim, frame_period=frame_period
    )
    turns = parse_turns(session_dir / "turns.csv")
    annotations = {
        dim: parse_annotations(session_dir / dim.filename, dim, rate_period=rate_period)
        for dim in Dimension
        if (session_dir / dim.filename).exists()
    }
    return SyntheticSession(frames=frames, turns=turns, annotations=annotations)
