"""Result tables in CSV and markdown.

The CSV is the machine-readable artifact: one flat row per result with full
float precision, plus `# key = value` provenance footer lines, so a report
can be regenerated from it byte-for-byte. The markdown view pivots each
affect dimension into a Features x Speaker-Turn table with one column per
scaling method.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping

from .errors import ConfigError, MalformedRow
from .experiment import ExperimentConfig, ResultRow, config_hash
from .framestack import TurnStrategy
from .ingest import Dimension
from .metrics import Scaling, SdDirection

CSV_HEADER = ["dimension", "features", "speaker_turn", "scaling", "ccc_dev", "ccc_test"]

SCALING_LABELS = {
    Scaling.NONE: "No-Scaling",
    Scaling.SD_RATIO: "SD-Ratio",
    Scaling.MIN_MAX: "Min-Max",
}

_SD_NOTES = {
    SdDirection.MATCH_GOLD: (
        "predictions are rescaled so their standard deviation matches the "
        "training labels'"
    ),
    SdDirection.AS_PRINTED: (
        "predictions are multiplied by the prediction-to-label deviation "
        "ratio (the inverse of match_gold)"
    ),
}

_MIN_MAX_NOTE = (
    "prediction range mapped linearly onto the training-label range; "
    "constant predictions map to its midpoint"
)


def build_provenance(config: ExperimentConfig) -> dict[str, str]:
    return {
        "seed": str(config.seed),
        "config": config_hash(config),
        "sd_ratio_direction": config.sd_direction.value,
        "sd_ratio_note": _SD_NOTES[config.sd_direction],
        "min_max_note": _MIN_MAX_NOTE,
    }


def _sorted_rows(rows: list[ResultRow]) -> list[ResultRow]:
    if not rows:
        raise ConfigError("report requested with no result rows")
    dim_order = {dim: i for i, dim in enumerate(Dimension)}
    turn_order = {turn: i for i, turn in enumerate(TurnStrategy)}
    scaling_order = {scaling: i for i, scaling in enumerate(Scaling)}
    ordered = sorted(
        rows,
        key=lambda r: (
            dim_order[r.dimension],
            r.features,
            turn_order[r.turn_strategy],
            scaling_order[r.scaling],
        ),
    )
    seen: set[tuple] = set()
    for row in ordered:
        cell = (row.dimension, row.features, row.turn_strategy, row.scaling)
        if cell in seen:
            raise ConfigError(
                f"duplicate result cell: {row.dimension.value}/{row.features}"
                f"/{row.turn_strategy.value}/{row.scaling.value}"
            )
        seen.add(cell)
    return ordered


def render_csv(rows: list[ResultRow], provenance: Mapping[str, str]) -> str:
    lines = [",".join(CSV_HEADER)]
    for row in _sorted_rows(rows):
        test = repr(float(row.ccc_test)) if row.ccc_test is not None else "-"
        lines.append(
            ",".join(
                [
                    row.dimension.value,
                    row.features,
                    row.turn_strategy.value,
                    row.scaling.value,
                    repr(float(row.ccc_dev)),
                    test,
                ]
            )
        )
    for key, value in provenance.items():
        lines.append(f"# {key} = {value}")
    return "\n".join(lines) + "\n"


def _markdown_table(rows: list[ResultRow], use_test: bool) -> list[str]:
    """Pivot one dimension's rows into Features x Speaker-Turn x scaling."""
    cells: dict[tuple[str, TurnStrategy], dict[Scaling, ResultRow]] = {}
    for row in rows:
        cells.setdefault((row.features, row.turn_strategy), {})[row.scaling] = row
    header = ["Features", "Speaker-Turn"] + [SCALING_LABELS[s] for s in Scaling]
    lines = ["| " + " | ".join(header) + " |", "|" + " --- |" * len(header)]
    for (features, turn), per_scaling in cells.items():
        values = []
        for scaling in Scaling:
            row = per_scaling.get(scaling)
            value = None
            if row is not None:
                value = row.ccc_test if use_test else row.ccc_dev
            values.append("-" if value is None else f"{value:.3f}")
        lines.append("| " + " | ".join([features, turn.value] + values) + " |")
    return lines


def render_markdown(rows: list[ResultRow], provenance: Mapping[str, str]) -> str:
    ordered = _sorted_rows(rows)
    lines = ["# Continuous-affect results (CCC)", ""]
    for dim in Dimension:
        dim_rows = [r for r in ordered if r.dimension is dim]
        if not dim_rows:
            continue
        lines += [f"## {dim.value}", ""]
        lines += _markdown_table(dim_rows, use_test=False)
        lines.append("")
        if any(r.ccc_test is not None for r in dim_rows):
            lines += [f"## {dim.value} (test)", ""]
            lines += _markdown_table(dim_rows, use_test=True)
            lines.append("")
    lines += ["## Provenance", ""]
    for key, value in provenance.items():
        lines.append(f"- {key}: {value}")
    return "\n".join(lines) + "\n"


def emit_report(
    rows: list[ResultRow],
    fmt: str,
    path: str | Path,
    provenance: Mapping[str, str],
) -> Path:
    """Write the results table; fmt is `csv` or `markdown`."""
    if fmt == "csv":
        text = render_csv(rows, provenance)
    elif fmt == "markdown":
        text = render_markdown(rows, provenance)
    else:
        raise ConfigError(f"format must be csv or markdown, got {fmt!r}")
    path = Path(path)
    path.write_text(text)
    return path


def read_report_csv(path: str | Path) -> tuple[list[ResultRow], dict[str, str]]:
    """Parse rows and provenance back out of a render_csv artifact."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].split(",") != CSV_HEADER:
        raise MalformedRow(f"{path}: missing results header")
    rows: list[ResultRow] = []
    provenance: dict[str, str] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(" = ")
            if not sep:
                raise MalformedRow(f"{path}:{lineno}: bad provenance line {line!r}")
            provenance[key.strip()] = value
            continue
        fields = line.split(",")
        if len(fields) != len(CSV_HEADER):
            raise MalformedRow(
                f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(fields)}"
            )
        try:
            rows.append(
                ResultRow(
                    dimension=Dimension(fields[0]),
                    features=fields[1],
                    turn_strategy=TurnStrategy(fields[2]),
                    scaling=Scaling(fields[3]),
                    ccc_dev=float(fields[4]),
                    ccc_test=None if fields[5] == "-" else float(fields[5]),
                )
            )
        except ValueError as exc:
            raise MalformedRow(f"{path}:{lineno}: {exc}") from None
    return rows, provenance
