"""Classical baseline: a small MLP generator trained on the sample MMD."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .data import BinningSpec, discretize
from .distributions import DiscreteDistribution
from .metrics import KernelConfig, total_variance
from .optimize import AdamState, EpochRecord, TrainingDivergedError, adam_step, learning_rate

__all__ = [
    "MlpSpec",
    "GmmdConfig",
    "init_weights",
    "forward",
    "flatten_weights",
    "unflatten_weights",
    "gmmd_batch_loss",
    "gmmd_loss_and_grad",
    "train_gmmd",
    "save_weights",
    "load_weights",
]


@dataclass(frozen=True)
class MlpSpec:
    """Fully connected generator: sigmoid hidden layers, linear output."""

    latent_dim: int
    hidden: tuple[int, ...]
    output_dim: int

    def __post_init__(self):
        if self.latent_dim < 1 or self.output_dim < 1 or any(h < 1 for h in self.hidden):
            raise ValueError("all layer sizes must be >= 1")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.latent_dim, *self.hidden, self.output_dim)


@dataclass(frozen=True)
class GmmdConfig:
    initial_lr: float = 0.01
    lr_halving_period: int = 20
    batches_per_epoch: int = 10
    batch_size: int = 512
    max_epochs: int = 100
    seed: int = 0
    kernel: KernelConfig = field(default_factory=KernelConfig)


def init_weights(spec: MlpSpec, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    sizes = spec.layer_sizes
    weights = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(
            (rng.uniform(-limit, limit, size=(fan_in, fan_out)), np.zeros(fan_out))
        )
    return weights


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _forward_cache(weights, z):
    acts = [np.atleast_2d(np.asarray(z, dtype=float))]
    for i, (w, b) in enumerate(weights):
        pre = acts[-1] @ w + b
        acts.append(pre if i == len(weights) - 1 else _sigmoid(pre))
    return acts


def forward(weights, z: np.ndarray) -> np.ndarray:
    """Map a latent batch to a feature sample batch."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    if z.shape[1] != weights[0][0].shape[0]:
        raise ValueError("latent dimension mismatch")
    return _forward_cache(weights, z)[-1]


def flatten_weights(weights) -> np.ndarray:
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in weights])


def unflatten_weights(flat: np.ndarray, spec: MlpSpec):
    weights = []
    pos = 0
    sizes = spec.layer_sizes
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        w = flat[pos : pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = flat[pos : pos + fan_out]
        pos += fan_out
        weights.append((w.copy(), b.copy()))
    return weights


def _kernel_terms(x: np.ndarray, y: np.ndarray, config: KernelConfig):
    """Mean kernel value and the gradient sum d/dx_i of sum_j K(x_i, y_j)."""
    diff = x[:, None, :] - y[None, :, :]
    sq = (diff**2).sum(axis=-1)
    value = np.zeros_like(sq)
    grad = np.zeros_like(diff)
    for s in config.bandwidths:
        k = np.exp(-sq / (2.0 * s))
        value += k
        grad += k[:, :, None] * (-diff / s)
    return value, grad.sum(axis=1)


def gmmd_batch_loss(generated: np.ndarray, data: np.ndarray, config: KernelConfig) -> float:
    """Biased sample MMD between a generated and a data batch."""
    g = np.atleast_2d(np.asarray(generated, dtype=float))
    d = np.atleast_2d(np.asarray(data, dtype=float))
    kgg, _ = _kernel_terms(g, g, config)
    kgd, _ = _kernel_terms(g, d, config)
    kdd, _ = _kernel_terms(d, d, config)
    return float(kgg.mean() - 2.0 * kgd.mean() + kdd.mean())


def gmmd_loss_and_grad(weights, z: np.ndarray, data: np.ndarray, config: KernelConfig):
    """Loss of one batch and its backpropagated gradient per layer."""
    d = np.atleast_2d(np.asarray(data, dtype=float))
    acts = _forward_cache(weights, z)
    g = acts[-1]
    b_size, m = len(g), len(d)
    kgg, grad_gg = _kernel_terms(g, g, config)
    kgd, grad_gd = _kernel_terms(g, d, config)
    kdd, _ = _kernel_terms(d, d, config)
    loss = float(kgg.mean() - 2.0 * kgd.mean() + kdd.mean())
    # d loss / d g_i: both gg terms contribute equally by symmetry
    delta = 2.0 / b_size**2 * grad_gg - 2.0 / (b_size * m) * grad_gd

    grads = [None] * len(weights)
    for i in reversed(range(len(weights))):
        w, _ = weights[i]
        a_in = acts[i]
        grads[i] = (a_in.T @ delta, delta.sum(axis=0))
        if i > 0:
            delta = (delta @ w.T) * acts[i] * (1.0 - acts[i])
    return loss, grads


def train_gmmd(
    spec: MlpSpec,
    dataset: np.ndarray,
    config: GmmdConfig,
    binning: Optional[BinningSpec] = None,
    val_dataset: Optional[np.ndarray] = None,
):
    """Train the generator with ADAM on batched sample-MMD; returns the
    best-validation weights and the per-epoch trace."""
    data = np.atleast_2d(np.asarray(dataset, dtype=float))
    if data.shape[1] != spec.output_dim:
        raise ValueError("dataset feature count does not match the net output")
    val = data if val_dataset is None else np.atleast_2d(np.asarray(val_dataset, dtype=float))

    rng = np.random.default_rng(config.seed)
    weights = init_weights(spec, config.seed)
    adam_state = AdamState.init(len(flatten_weights(weights)))
    eval_latent = rng.standard_normal((2048, spec.latent_dim))
    val_batch = val[rng.choice(len(val), size=min(len(val), 2048), replace=False)]
    val_dist = discretize(val, binning) if binning is not None else None

    lr_cfg = _as_train_schedule(config)
    best_val = np.inf
    best_weights = weights
    trace: list[EpochRecord] = []
    for epoch in range(config.max_epochs):
        start = time.perf_counter()
        lr = learning_rate(lr_cfg, epoch)
        grad_norm = 0.0
        epoch_loss = 0.0
        for _ in range(config.batches_per_epoch):
            z = rng.standard_normal((config.batch_size, spec.latent_dim))
            batch = data[rng.integers(0, len(data), size=config.batch_size)]
            loss, grads = gmmd_loss_and_grad(weights, z, batch, config.kernel)
            if not np.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
            epoch_loss += loss / config.batches_per_epoch
            flat_grad = flatten_weights(grads)
            grad_norm = float(np.linalg.norm(flat_grad))
            flat, adam_state = adam_step(
                flatten_weights(weights), flat_grad, adam_state, lr
            )
            weights = unflatten_weights(flat, spec)

        generated = forward(weights, eval_latent)
        val_loss = gmmd_batch_loss(generated, val_batch, config.kernel)
        tv = (
            total_variance(discretize(generated, binning), val_dist)
            if binning is not None
            else 0.0
        )
        if val_loss < best_val:
            best_val = val_loss
            best_weights = [(w.copy(), b.copy()) for w, b in weights]
        trace.append(
            EpochRecord(
                epoch,
                epoch_loss,
                val_loss,
                tv,
                lr,
                time.perf_counter() - start,
                grad_norm,
                "adam",
            )
        )
    return best_weights, trace


def _as_train_schedule(config: GmmdConfig):
    from .optimize import TrainConfig

    return TrainConfig(
        initial_lr=config.initial_lr,
        lr_halving_period=config.lr_halving_period,
        max_epochs=config.max_epochs,
    )


def save_weights(weights, spec: MlpSpec, path) -> None:
    payload = {
        "spec": {
            "latent_dim": spec.latent_dim,
            "hidden": list(spec.hidden),
            "output_dim": spec.output_dim,
        },
        "weights": [[w.tolist(), b.tolist()] for w, b in weights],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)


def load_weights(path):
    with open(path) as fh:
        payload = json.load(fh)
    spec = MlpSpec(
        payload["spec"]["latent_dim"],
        tuple(payload["spec"]["hidden"]),
        payload["spec"]["output_dim"],
    )
    weights = [(np.asarray(w), np.asarray(b)) for w, b in payload["weights"]]
    return weights, spec
