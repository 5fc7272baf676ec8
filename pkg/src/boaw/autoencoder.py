"""Dense autoencoder codebook: training, encoding, persistence.

The code layer doubles as the dictionary: each code neuron is a codeword
and its activation is the frame-to-word assignment score. Hidden layers
use a capped ReLU, min(max(z, 0), cap), so scores live in [0, cap]; the
output layer is linear. Training minimizes mean squared reconstruction
error with RMSprop. Inputs are z-scored with training-set statistics that
persist with the model and are re-applied at encode time.

Backpropagation uses subgradient 0 at both activation kinks (z = 0 and
z = cap).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DimensionMismatch, MalformedRow, NonFiniteData, NonFiniteLoss

MODEL_MAGIC = b"BOAWAE1"


@dataclass
class AeConfig:
    input_dim: int = 345
    hidden_dims: list[int] = field(default_factory=lambda: [345, 345])
    code_layer_index: int = 2  # 1-based index into hidden_dims
    activation_cap: float = 1.0
    epochs: int = 20
    batch_size: int = 64
    learning_rate: float = 0.001
    rms_decay: float = 0.9
    rms_epsilon: float = 1e-7
    seed: int = 0

    def __post_init__(self) -> None:
        if self.input_dim < 1 or any(h < 1 for h in self.hidden_dims) or not self.hidden_dims:
            raise ConfigError("all layer dimensions must be >= 1")
        if not 1 <= self.code_layer_index <= len(self.hidden_dims):
            raise ConfigError(
                f"code_layer_index {self.code_layer_index} out of range "
                f"1..{len(self.hidden_dims)}"
            )
        if self.activation_cap <= 0:
            raise ConfigError("activation_cap must be positive")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError("epochs must be >= 0 and batch_size >= 1")

    @property
    def layer_dims(self) -> list[int]:
        """Unit counts from input to output: input, hidden..., input."""
        return [self.input_dim, *self.hidden_dims, self.input_dim]

    @property
    def code_dim(self) -> int:
        return self.hidden_dims[self.code_layer_index - 1]


@dataclass
class AeModel:
    config: AeConfig
    weights: list[np.ndarray]  # W_l: out x in
    biases: list[np.ndarray]  # b_l: out
    input_mean: np.ndarray = None  # type: ignore[assignment]
    input_std: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.input_mean is None:
            self.input_mean = np.zeros(self.config.input_dim)
        if self.input_std is None:
            self.input_std = np.ones(self.config.input_dim)

    @property
    def code_dim(self) -> int:
        return self.config.code_dim

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list alternating weight matrix, bias vector."""
        out: list[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def set_parameters(self, params: list[np.ndarray]) -> None:
        self.weights = params[0::2]
        self.biases = params[1::2]

    def standardize(self, x: np.ndarray) -> np.ndarray:
        return (x - self.input_mean) / self.input_std


def init_model(config: AeConfig, rng: np.random.Generator | None = None) -> AeModel:
    """Glorot-uniform weights, zero biases, deterministic given the seed."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    weights, biases = [], []
    dims = config.layer_dims
    for fan_in, fan_out in zip(dims, dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return AeModel(config=config, weights=weights, biases=biases)


def _capped_relu(z: np.ndarray, cap: float) -> np.ndarray:
    return np.minimum(np.maximum(z, 0.0), cap)


def _forward_all(model: AeModel, x: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Pre-activations and activations per layer; activations[0] is the input."""
    cap = model.config.activation_cap
    n_layers = len(model.weights)
    pre: list[np.ndarray] = []
    acts: list[np.ndarray] = [x]
    for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = acts[-1] @ w.T + b
        pre.append(z)
        acts.append(z if layer == n_layers - 1 else _capped_relu(z, cap))
    return pre, acts


def _check_input(model: AeModel, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != model.config.input_dim:
        raise DimensionMismatch(
            f"input has dim {x.shape[1]}, model expects {model.config.input_dim}"
        )
    if not np.isfinite(x).all():
        raise NonFiniteData("autoencoder input contains non-finite values")
    return x


def forward(model: AeModel, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """All layer activations plus the reconstruction, for one network-space vector.

    The code is activations[config.code_layer_index].
    """
    single = np.asarray(x).ndim == 1
    x = _check_input(model, x)
    _, acts = _forward_all(model, x)
    if single:
        acts = [a[0] for a in acts]
    return acts, acts[-1]


def encode(model: AeModel, x: np.ndarray) -> np.ndarray:
    """Code-layer activations for raw input; standardization applied first."""
    single = np.asarray(x).ndim == 1
    x = _check_input(model, x)
    _, acts = _forward_all(model, model.standardize(x))
    code = acts[model.config.code_layer_index]
    return code[0] if single else code


def loss_and_grads(
    model: AeModel, batch: np.ndarray
) -> tuple[float, list[np.ndarray]]:
    """Mean squared reconstruction error and its parameter gradients.

    The batch is taken as network-space input (already standardized).
    Gradients come back as a flat list matching model.parameters().
    """
    batch = _check_input(model, batch)
    n, d = batch.shape
    cap = model.config.activation_cap
    pre, acts = _forward_all(model, batch)
    err = acts[-1] - batch
    mse = float(np.mean(err * err))
    if not np.isfinite(mse):
        raise NonFiniteLoss(f"reconstruction loss is {mse}")

    grads: list[np.ndarray] = []
    delta = 2.0 * err / (n * d)  # linear output layer
    for layer in range(len(model.weights) - 1, -1, -1):
        grads.append(delta.sum(axis=0))  # bias
        grads.append(delta.T @ acts[layer])  # weights
        if layer > 0:
            z = pre[layer - 1]
            delta = (delta @ model.weights[layer]) * ((z > 0.0) & (z < cap))
    grads.reverse()
    return mse, grads


def rmsprop_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: list[np.ndarray],
    lr: float,
    decay: float,
    eps: float,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """One RMSprop update: v <- decay*v + (1-decay)*g^2; p <- p - lr*g/(sqrt(v)+eps)."""
    new_state = [decay * v + (1.0 - decay) * g * g for v, g in zip(state, grads)]
    new_params = [
        p - lr * g / (np.sqrt(v) + eps) for p, g, v in zip(params, grads, new_state)
    ]
    return new_params, new_state


def train(data: np.ndarray, config: AeConfig) -> tuple[AeModel, list[float]]:
    """Train an autoencoder on raw frames; returns the model and per-epoch MSE.

    One seeded generator drives both initialization and the per-epoch
    shuffles, so results are bitwise reproducible. The z-score statistics
    are computed on `data` before training and stored on the model.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 1:
        raise ConfigError(f"training data must be M x input_dim, got shape {data.shape}")
    if not np.isfinite(data).all():
        raise NonFiniteData("training data contains non-finite values")
    if data.shape[1] != config.input_dim:
        raise DimensionMismatch(
            f"training data has dim {data.shape[1]}, config expects {config.input_dim}"
        )

    rng = np.random.default_rng(config.seed)
    model = init_model(config, rng)
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    std = np.where(std < 1e-12, 1.0, std)
    model.input_mean = mean
    model.input_std = std
    standardized = (data - mean) / std

    params = model.parameters()
    state = [np.zeros_like(p) for p in params]
    history: list[float] = []
    m = standardized.shape[0]
    for _ in range(config.epochs):
        order = rng.permutation(m)
        epoch_sse = 0.0
        for start in range(0, m, config.batch_size):
            batch = standardized[order[start : start + config.batch_size]]
            model.set_parameters(params)
            mse, grads = loss_and_grads(model, batch)
            epoch_sse += mse * batch.shape[0]
            params, state = rmsprop_step(
                params, grads, state, config.learning_rate, config.rms_decay, config.rms_epsilon
            )
        history.append(epoch_sse / m)
    model.set_parameters(params)
    return model, history


# --- persistence -----------------------------------------------------------


def save_model(model: AeModel, path: str | Path) -> None:
    """Binary layout: magic, architecture block, z-score stats, layer params.

    Architecture block: input_dim, hidden count, hidden dims, code index as
    u64 LE, then the activation cap as f64. Parameters follow row-major as
    f64 LE in layer order, weights before biases.
    """
    cfg = model.config
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<QQ", cfg.input_dim, len(cfg.hidden_dims)))
        fh.write(struct.pack(f"<{len(cfg.hidden_dims)}Q", *cfg.hidden_dims))
        fh.write(struct.pack("<Qd", cfg.code_layer_index, cfg.activation_cap))
        fh.write(model.input_mean.astype("<f8").tobytes())
        fh.write(model.input_std.astype("<f8").tobytes())
        for w, b in zip(model.weights, model.biases):
            fh.write(w.astype("<f8").tobytes())
            fh.write(b.astype("<f8").tobytes())


def load_model(path: str | Path) -> AeModel:
    raw = Path(path).read_bytes()
    if not raw.startswith(MODEL_MAGIC):
        raise MalformedRow(f"{path}: not an autoencoder model file (bad magic)")
    off = len(MODEL_MAGIC)
    input_dim, n_hidden = struct.unpack_from("<QQ", raw, off)
    off += 16
    hidden = list(struct.unpack_from(f"<{n_hidden}Q", raw, off))
    off += 8 * n_hidden
    code_index, cap = struct.unpack_from("<Qd", raw, off)
    off += 16
    config = AeConfig(
        input_dim=input_dim,
        hidden_dims=hidden,
        code_layer_index=code_index,
        activation_cap=cap,
    )

    def take(count: int) -> np.ndarray:
        nonlocal off
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).copy()
        off += 8 * count
        return arr

    mean = take(input_dim)
    std = take(input_dim)
    weights, biases = [], []
    dims = config.layer_dims
    for fan_in, fan_out in zip(dims, dims[1:]):
        weights.append(take(fan_out * fan_in).reshape(fan_out, fan_in))
        biases.append(take(fan_out))
    if off != len(raw):
        raise MalformedRow(f"{path}: {len(raw) - off} trailing bytes")
    return AeModel(config=config, weights=weights, biases=biases, input_mean=mean, input_std=std)


def clone_config(config: AeConfig, **overrides) -> AeConfig:
    """Copy an AeConfig with field overrides (hidden_dims list deep-copied)."""
    cfg = replace(config, **overrides)
    cfg.hidden_dims = list(cfg.hidden_dims)
    return cfg
