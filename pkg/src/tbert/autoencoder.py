"""Dense autoencoder with hand-written forward and backward passes.

One hidden layer: input -> latent (ReLU) -> input (linear).  Training
minimizes mean-squared reconstruction error plus optional L1/L2 weight
penalties with mini-batch Adam.  Inverted dropout is applied to the
encoder activations during training only.  Everything runs in float64
so the analytic gradients can be checked against central finite
differences.
"""

from __future__ import annotations

import csv
import json
import zlib
from dataclasses import dataclass, field

import numpy as np

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999


class AutoencoderError(ValueError):
    """Raised for invalid configuration or incompatible data."""


class AeDivergenceError(RuntimeError):
    """Raised when the training loss blows up past the divergence guard."""


@dataclass(frozen=True)
class AeConfig:
    latent_dim: int = 64
    epochs: int = 50
    batch_size: int = 128
    learning_rate: float = 1e-3
    l1: float = 1e-4
    l2: float = 0.0
    dropout: float = 0.01
    seed: int = 0
    allow_expansion: bool = False

    def __post_init__(self):
        if self.latent_dim < 1:
            raise AutoencoderError("latent_dim must be at least 1")
        if self.epochs < 1 or self.batch_size < 1:
            raise AutoencoderError("epochs and batch_size must be at least 1")
        if not self.learning_rate > 0:
            raise AutoencoderError("learning_rate must be positive")
        if self.l1 < 0 or self.l2 < 0:
            raise AutoencoderError("l1 and l2 must be nonnegative")
        if not 0.0 <= self.dropout < 1.0:
            raise AutoencoderError("dropout must be in [0, 1)")


@dataclass
class AdamState:
    """Bias-corrected first/second moment accumulators per parameter."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0
    epsilon: float = 1e-8

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray], epsilon: float = 1e-8) -> "AdamState":
        return cls(
            m={k: np.zeros_like(p) for k, p in params.items()},
            v={k: np.zeros_like(p) for k, p in params.items()},
            step=0,
            epsilon=epsilon,
        )


def adam_step(
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected Adam update, applied in place."""
    if set(params) != set(grads):
        raise AutoencoderError("params and grads carry different keys")
    state.step += 1
    t = state.step
    for key, p in params.items():
        g = grads[key]
        if g.shape != p.shape:
            raise AutoencoderError(f"gradient shape mismatch for {key}")
        state.m[key] = _ADAM_BETA1 * state.m[key] + (1 - _ADAM_BETA1) * g
        state.v[key] = _ADAM_BETA2 * state.v[key] + (1 - _ADAM_BETA2) * g * g
        m_hat = state.m[key] / (1 - _ADAM_BETA1**t)
        v_hat = state.v[key] / (1 - _ADAM_BETA2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return params, state


@dataclass
class AeModel:
    """Trained encoder/decoder weights plus per-epoch loss history."""

    w_enc: np.ndarray
    b_enc: np.ndarray
    w_dec: np.ndarray
    b_dec: np.ndarray
    config: AeConfig
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)

    @property
    def input_dim(self) -> int:
        return self.w_enc.shape[0]

    @property
    def latent_dim(self) -> int:
        return self.w_enc.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        return {
            "w_enc": self.w_enc,
            "b_enc": self.b_enc,
            "w_dec": self.w_dec,
            "b_dec": self.b_dec,
        }

    def save(self, path) -> None:
        payload = {
            "input_dim": self.input_dim,
            "latent_dim": self.latent_dim,
            "config": {
                "latent_dim": self.config.latent_dim,
                "epochs": self.config.epochs,
                "batch_size": self.config.batch_size,
                "learning_rate": self.config.learning_rate,
                "l1": self.config.l1,
                "l2": self.config.l2,
                "dropout": self.config.dropout,
                "seed": self.config.seed,
                "allow_expansion": self.config.allow_expansion,
            },
            "w_enc": [float(x) for x in self.w_enc.ravel()],
            "b_enc": [float(x) for x in self.b_enc],
            "w_dec": [float(x) for x in self.w_dec.ravel()],
            "b_dec": [float(x) for x in self.b_dec],
            "train_loss": self.train_loss,
            "val_loss": self.val_loss,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "AeModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        config = AeConfig(**payload["config"])
        d, latent = int(payload["input_dim"]), int(payload["latent_dim"])
        return cls(
            w_enc=np.array(payload["w_enc"], dtype=np.float64).reshape(d, latent),
            b_enc=np.array(payload["b_enc"], dtype=np.float64),
            w_dec=np.array(payload["w_dec"], dtype=np.float64).reshape(latent, d),
            b_dec=np.array(payload["b_dec"], dtype=np.float64),
            config=config,
            train_loss=[float(x) for x in payload["train_loss"]],
            val_loss=[float(x) for x in payload["val_loss"]],
        )


def write_loss_csv(model: AeModel, path) -> None:
    """Per-epoch train/validation loss for plotting."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for epoch, (tr, va) in enumerate(zip(model.train_loss, model.val_loss), start=1):
            writer.writerow([epoch, repr(tr), repr(va)])


def _penalty(model_params: dict[str, np.ndarray], l1: float, l2: float) -> float:
    w_e, w_d = model_params["w_enc"], model_params["w_dec"]
    value = 0.0
    if l1:
        value += l1 * (np.abs(w_e).sum() + np.abs(w_d).sum())
    if l2:
        value += l2 * ((w_e * w_e).sum() + (w_d * w_d).sum())
    return float(value)


def _forward(x, params, mask=None):
    h_pre = x @ params["w_enc"] + params["b_enc"]
    h = np.maximum(h_pre, 0.0)
    h_kept = h if mask is None else h * mask
    recon = h_kept @ params["w_dec"] + params["b_dec"]
    return h_pre, h_kept, recon


def _loss_value(x, params, l1, l2) -> float:
    _, _, recon = _forward(x, params)
    mse = float(np.mean((recon - x) ** 2))
    return mse + _penalty(params, l1, l2)


def _gradients(x, params, l1, l2, mask=None):
    b, d = x.shape
    h_pre, h_kept, recon = _forward(x, params, mask)
    r = recon - x
    d_recon = 2.0 * r / (b * d)
    g_w_dec = h_kept.T @ d_recon
    g_b_dec = d_recon.sum(axis=0)
    d_h_kept = d_recon @ params["w_dec"].T
    d_h = d_h_kept if mask is None else d_h_kept * mask
    d_h_pre = d_h * (h_pre > 0)
    g_w_enc = x.T @ d_h_pre
    g_b_enc = d_h_pre.sum(axis=0)
    if l1:
        g_w_enc = g_w_enc + l1 * np.sign(params["w_enc"])
        g_w_dec = g_w_dec + l1 * np.sign(params["w_dec"])
    if l2:
        g_w_enc = g_w_enc + 2.0 * l2 * params["w_enc"]
        g_w_dec = g_w_dec + 2.0 * l2 * params["w_dec"]
    return {"w_enc": g_w_enc, "b_enc": g_b_enc, "w_dec": g_w_dec, "b_dec": g_b_dec}


def validation_split(ids: list[str]) -> np.ndarray:
    """Boolean mask of validation rows: crc32(id) % 10 == 0."""
    return np.array(
        [zlib.crc32(doc_id.encode("utf-8")) % 10 == 0 for doc_id in ids],
        dtype=bool,
    )


def train_autoencoder(data, config: AeConfig, ids: list[str] | None = None) -> AeModel:
    """Train the autoencoder with mini-batch Adam, deterministically.

    Accepts a plain matrix or any object with data/ids attributes (a
    fused matrix).  Rows whose id hashes into the 10% bucket form the
    validation split; per-epoch losses are evaluated after the epoch
    with dropout off, so the final entry is the loss of the returned
    weights.
    """
    if hasattr(data, "data"):
        if ids is None and getattr(data, "ids", None) is not None:
            ids = list(data.ids)
        data = data.data
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise AutoencoderError("training data must be a nonempty 2-D matrix")
    n, d = x.shape
    if config.latent_dim >= d and not config.allow_expansion:
        raise AutoencoderError(
            f"latent_dim {config.latent_dim} does not compress input dim {d}; "
            "set allow_expansion to override"
        )
    if ids is None:
        ids = [str(i) for i in range(n)]
    if len(ids) != n:
        raise AutoencoderError("ids do not align with data rows")

    rng = np.random.default_rng(config.seed)
    limit_e = np.sqrt(6.0 / (d + config.latent_dim))
    params = {
        "w_enc": rng.uniform(-limit_e, limit_e, (d, config.latent_dim)),
        "b_enc": np.zeros(config.latent_dim),
        "w_dec": rng.uniform(-limit_e, limit_e, (config.latent_dim, d)),
        "b_dec": np.zeros(d),
    }
    state = AdamState.for_params(params)

    val_mask = validation_split(ids)
    if val_mask.all():
        val_mask[:] = False
    train_idx = np.flatnonzero(~val_mask)
    val_idx = np.flatnonzero(val_mask)
    x_train = x[train_idx]
    x_val = x[val_idx] if val_idx.size else None

    initial = _loss_value(x_train, params, config.l1, config.l2)
    guard = 1e6 * max(initial, 1e-12)
    keep = 1.0 - config.dropout

    train_hist: list[float] = []
    val_hist: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(x_train.shape[0])
        for start in range(0, order.size, config.batch_size):
            batch = x_train[order[start : start + config.batch_size]]
            mask = None
            if config.dropout > 0.0:
                mask = (
                    rng.random((batch.shape[0], config.latent_dim)) >= config.dropout
                ) / keep
            grads = _gradients(batch, params, config.l1, config.l2, mask)
            adam_step(params, grads, state, config.learning_rate)
        epoch_train = _loss_value(x_train, params, config.l1, config.l2)
        epoch_val = (
            _loss_value(x_val, params, config.l1, config.l2)
            if x_val is not None
            else epoch_train
        )
        if not np.isfinite(epoch_train) or epoch_train > guard:
            raise AeDivergenceError(
                f"training diverged at epoch {epoch + 1}: loss {epoch_train:.3e} "
                f"exceeds guard {guard:.3e} (initial {initial:.3e}); "
                "lower the learning rate"
            )
        train_hist.append(epoch_train)
        val_hist.append(epoch_val)

    return AeModel(
        w_enc=params["w_enc"],
        b_enc=params["b_enc"],
        w_dec=params["w_dec"],
        b_dec=params["b_dec"],
        config=config,
        train_loss=train_hist,
        val_loss=val_hist,
    )


def encode(model: AeModel, data) -> np.ndarray:
    """ReLU(X W_e + b_e) with dropout always off."""
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.input_dim:
        raise AutoencoderError(
            f"expected {model.input_dim} columns, got {x.shape}"
        )
    return np.maximum(x @ model.w_enc + model.b_enc, 0.0)


def reconstruct(model: AeModel, data) -> np.ndarray:
    """Decoder applied to the encoded representation."""
    return encode(model, data) @ model.w_dec + model.b_dec


def reconstruction_mse(model: AeModel, data) -> float:
    x = np.asarray(data, dtype=np.float64)
    return float(np.mean((reconstruct(model, x) - x) ** 2))


def gradient_check(model: AeModel, sample, h: float = 1e-5) -> float:
    """Max relative error between analytic and numeric gradients.

    Central differences with step h over every parameter coordinate of
    the total loss (reconstruction + penalties) on one input row.
    When l1 > 0 the penalty is non-differentiable at zero, so weight
    coordinates within 1e-6 of zero are skipped.
    """
    x = np.asarray(sample, dtype=np.float64).reshape(1, -1)
    if x.shape[1] != model.input_dim:
        raise AutoencoderError("sample dimension does not match model input")
    l1, l2 = model.config.l1, model.config.l2
    params = {k: p.copy() for k, p in model.params().items()}
    analytic = _gradients(x, params, l1, l2)
    worst = 0.0
    for key, p in params.items():
        is_weight = key in ("w_enc", "w_dec")
        flat = p.ravel()
        g_flat = analytic[key].ravel()
        for i in range(flat.size):
            if l1 > 0 and is_weight and abs(flat[i]) < 1e-6:
                continue
            orig = flat[i]
            flat[i] = orig + h
            plus = _loss_value(x, params, l1, l2)
            flat[i] = orig - h
            minus = _loss_value(x, params, l1, l2)
            flat[i] = orig
            numeric = (plus - minus) / (2.0 * h)
            denom = max(abs(g_flat[i]), abs(numeric), 1e-8)
            worst = max(worst, abs(g_flat[i] - numeric) / denom)
    return worst
