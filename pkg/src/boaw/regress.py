"""Linear epsilon-insensitive support vector regression.

Solves min_w 0.5*w'w + C * sum_i max(|w'x_i - y_i| - eps, 0) by coordinate
descent on the box-constrained dual (one multiplier beta_i in [-C, C] per
sample, w = X' beta). The stopping rule is the duality gap: once
primal(w) - dual(beta) <= tol, w is certifiably within tol of the optimal
objective. A bias term is handled by appending a constant feature of value
bias_scale.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatch, MalformedRow, NonFiniteData

SVR_MAGIC = b"BOAWSVR1"


@dataclass
class SvrConfig:
    C: float = 1.0
    epsilon: float = 0.1
    bias_scale: float = 1.0  # 0 disables the bias feature
    max_iters: int = 1000
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.C <= 0:
            raise ConfigError("C must be positive")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be nonnegative")
        if self.max_iters < 1 or self.tol <= 0:
            raise ConfigError("max_iters must be >= 1 and tol positive")

    @property
    def has_bias(self) -> bool:
        return self.bias_scale != 0.0


@dataclass
class SvrModel:
    w: np.ndarray  # raw dim, or raw dim + 1 with bias augmentation
    config: SvrConfig
    converged: bool = True
    objective: float = 0.0
    objective_history: list[float] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=np.float64).ravel()
        if not np.isfinite(self.w).all():
            raise NonFiniteData("SVR weights contain non-finite values")

    @property
    def raw_dim(self) -> int:
        return self.w.size - (1 if self.config.has_bias else 0)


def _augment(X: np.ndarray, config: SvrConfig) -> np.ndarray:
    if not config.has_bias:
        return X
    return np.hstack([X, np.full((X.shape[0], 1), config.bias_scale)])


def svr_objective(w: np.ndarray, X: np.ndarray, y: np.ndarray, config: SvrConfig) -> float:
    """0.5*||w||^2 + C * total epsilon-insensitive loss, on X as given."""
    w = np.asarray(w, dtype=np.float64).ravel()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[1] != w.size:
        raise DimensionMismatch(f"X has {X.shape[1]} columns, w has {w.size}")
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, y has {y.size}")
    residuals = X @ w - y
    loss = np.maximum(np.abs(residuals) - config.epsilon, 0.0).sum()
    return 0.5 * float(w @ w) + config.C * float(loss)


def _dual_objective(w: np.ndarray, beta: np.ndarray, y: np.ndarray, eps: float) -> float:
    return -0.5 * float(w @ w) - eps * float(np.abs(beta).sum()) + float(y @ beta)


def svr_fit(X: np.ndarray, y: np.ndarray, config: SvrConfig) -> SvrModel:
    """Fit by dual coordinate descent; deterministic given config.seed.

    Samples are visited in a freshly seeded random order each pass. After
    every pass the primal objective of the best iterate so far is recorded;
    the run stops when the duality gap falls to config.tol. Hitting
    max_iters first returns the best iterate with converged=False.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] < 1:
        raise ConfigError(f"X must be a non-empty M x D matrix, got shape {X.shape}")
    if X.shape[0] != y.size:
        raise DimensionMismatch(f"X has {X.shape[0]} rows, y has {y.size}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise NonFiniteData("training data contains non-finite values")

    Xa = _augment(X, config)
    m, d = Xa.shape
    c, eps = config.C, config.epsilon
    q_diag = np.einsum("ij,ij->i", Xa, Xa)
    beta = np.zeros(m)
    w = np.zeros(d)
    rng = np.random.default_rng(config.seed)

    best_w = w.copy()
    best_obj = svr_objective(w, Xa, y, config)
    history = [best_obj]
    converged = False
    for _ in range(config.max_iters):
        for i in rng.permutation(m):
            qi = q_diag[i]
            if qi == 0.0:  # zero row: no effect on w, leave beta_i at 0
                continue
            g = float(w @ Xa[i]) - y[i]
            gp = g + eps
            gn = g - eps
            b = beta[i]
            if gp < qi * b:
                step = -gp / qi
            elif gn > qi * b:
                step = -gn / qi
            else:
                step = -b
            new_b = min(max(b + step, -c), c)
            delta = new_b - b
            if delta != 0.0:
                w += delta * Xa[i]
                beta[i] = new_b
        obj = svr_objective(w, Xa, y, config)
        if obj < best_obj:
            best_obj = obj
            best_w = w.copy()
        history.append(best_obj)
        gap = best_obj - _dual_objective(w, beta, y, eps)
        if gap <= config.tol:
            converged = True
            break
    return SvrModel(
        w=best_w,
        config=config,
        converged=converged,
        objective=best_obj,
        objective_history=history,
    )


def svr_predict(model: SvrModel, X: np.ndarray) -> np.ndarray:
    """Row-wise inner products; the bias constant is appended automatically."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.raw_dim:
        raise DimensionMismatch(
            f"X has {X.shape[1]} columns, model expects {model.raw_dim}"
        )
    return _augment(X, model.config) @ model.w


def save_svr(model: SvrModel, path: str | Path) -> None:
    """Binary layout: magic, w length as u64 LE, bias flag u64 + scale f64, then w."""
    with open(path, "wb") as fh:
        fh.write(SVR_MAGIC)
        fh.write(struct.pack("<QQd", model.w.size, int(model.config.has_bias),
                             model.config.bias_scale))
        fh.write(model.w.astype("<f8").tobytes())


def load_svr(path: str | Path) -> SvrModel:
    raw = Path(path).read_bytes()
    if not raw.startswith(SVR_MAGIC):
        raise MalformedRow(f"{path}: not an SVR model file (bad magic)")
    n, has_bias, bias_scale = struct.unpack_from("<QQd", raw, len(SVR_MAGIC))
    offset = len(SVR_MAGIC) + 24
    if len(raw) != offset + 8 * n:
        raise MalformedRow(f"{path}: expected {offset + 8 * n} bytes, got {len(raw)}")
    w = np.frombuffer(raw, dtype="<f8", count=n, offset=offset).copy()
    config = SvrConfig(bias_scale=bias_scale if has_bias else 0.0)
    return SvrModel(w=w, config=config)
