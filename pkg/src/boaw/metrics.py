"""Agreement metrics and prediction-scaling transforms.

All statistics are population (1/M) moments; sample variants would change
the concordance value, so one convention is fixed here and used everywhere
including the scaling transforms.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import ConfigError, DegenerateInputs, LengthMismatch, NonFiniteData, ZeroVariance


class Scaling(enum.Enum):
    NONE = "none"
    SD_RATIO = "sd_ratio"
    MIN_MAX = "min_max"


class SdDirection(enum.Enum):
    """Which way the sd-ratio scaling multiplies.

    MATCH_GOLD rescales predictions so their standard deviation equals the
    training labels' (factor sd_labels / sd_predictions). AS_PRINTED applies
    the inverse factor. MATCH_GOLD is the default.
    """

    MATCH_GOLD = "match_gold"
    AS_PRINTED = "as_printed"


def _checked_pair(y: np.ndarray, gold: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64).ravel()
    gold = np.asarray(gold, dtype=np.float64).ravel()
    if y.size != gold.size:
        raise LengthMismatch(f"prediction length {y.size} != gold length {gold.size}")
    if y.size < 2:
        raise LengthMismatch("correlation needs at least 2 samples")
    if not (np.isfinite(y).all() and np.isfinite(gold).all()):
        raise NonFiniteData("non-finite values in prediction/gold pair")
    return y, gold


def pearson(y: np.ndarray, gold: np.ndarray) -> float:
    """Pearson correlation; 0 by convention when either side is constant."""
    y, gold = _checked_pair(y, gold)
    sy = float(np.std(y))
    sg = float(np.std(gold))
    if sy == 0.0 or sg == 0.0:
        return 0.0
    cov = float(np.mean((y - y.mean()) * (gold - gold.mean())))
    return cov / (sy * sg)


def ccc(y: np.ndarray, gold: np.ndarray) -> float:
    """Concordance correlation coefficient in covariance form.

    2*cov / (var_y + var_gold + (mean_y - mean_gold)^2); this avoids the
    0/0 of the correlation form when one side is constant. The only
    undefined case is both sides constant with equal means.
    """
    y, gold = _checked_pair(y, gold)
    mu_y, mu_g = float(np.mean(y)), float(np.mean(gold))
    var_y, var_g = float(np.var(y)), float(np.var(gold))
    denom = var_y + var_g + (mu_y - mu_g) ** 2
    if denom == 0.0:
        raise DegenerateInputs("both vectors constant with equal means")
    cov = float(np.mean((y - mu_y) * (gold - mu_g)))
    return 2.0 * cov / denom


def scale_sd_ratio(
    y: np.ndarray,
    label_std: float,
    direction: SdDirection = SdDirection.MATCH_GOLD,
) -> np.ndarray:
    """Rescale predictions by the ratio of prediction and label deviations."""
    y = np.asarray(y, dtype=np.float64).ravel()
    pred_std = float(np.std(y))
    if pred_std == 0.0 or label_std == 0.0:
        raise ZeroVariance("sd-ratio scaling needs nonzero deviations on both sides")
    if direction is SdDirection.MATCH_GOLD:
        return y * (label_std / pred_std)
    return y * (pred_std / label_std)


def scale_min_max(y: np.ndarray, label_min: float, label_max: float) -> np.ndarray:
    """Map the prediction range linearly onto [label_min, label_max].

    Computed as a lerp so the output extrema hit the label extrema exactly.
    Constant predictions map to the midpoint.
    """
    if label_max < label_min:
        raise ConfigError(f"label_max {label_max} < label_min {label_min}")
    y = np.asarray(y, dtype=np.float64).ravel()
    y_min, y_max = float(np.min(y)), float(np.max(y))
    if y_max == y_min:
        return np.full_like(y, (label_min + label_max) / 2.0)
    u = (y - y_min) / (y_max - y_min)
    return (1.0 - u) * label_min + u * label_max


def apply_scaling(
    y: np.ndarray,
    method: Scaling,
    train_labels: np.ndarray,
    sd_direction: SdDirection = SdDirection.MATCH_GOLD,
) -> np.ndarray:
    """Scale predictions with parameters estimated from training labels only."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if method is Scaling.NONE:
        return y.copy()
    train_labels = np.asarray(train_labels, dtype=np.float64).ravel()
    if method is Scaling.SD_RATIO:
        return scale_sd_ratio(y, float(np.std(train_labels)), sd_direction)
    return scale_min_max(y, float(np.min(train_labels)), float(np.max(train_labels)))
