"""Minimal dense-network engine: forward/backward, ELU, MSE, Adam.

Everything runs in 64-bit numpy so analytic gradients can be checked
against central finite differences to tight tolerances. Only the fixed
MLP topologies the relighting models need are supported: stacks of dense
layers with ELU or identity activations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyTrainingSet

ACTIVATIONS = ("elu", "identity")


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out_dim, in_dim)
    biases: np.ndarray  # (out_dim,)
    activation: str = "elu"

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.activation!r}")
        if self.weights.ndim != 2 or self.biases.shape != (self.weights.shape[0],):
            raise DimensionMismatch(
                f"weights {self.weights.shape} / biases {self.biases.shape}"
            )

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class Network:
    layers: list[DenseLayer]

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise DimensionMismatch(
                    f"layer output {a.out_dim} feeds layer input {b.in_dim}"
                )

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def layer_sizes(self) -> list[int]:
        return [self.in_dim] + [layer.out_dim for layer in self.layers]

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list, weights then biases per layer."""
        params = []
        for layer in self.layers:
            params.append(layer.weights)
            params.append(layer.biases)
        return params

    def n_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def copy(self) -> "Network":
        return Network(
            [
                DenseLayer(l.weights.copy(), l.biases.copy(), l.activation)
                for l in self.layers
            ]
        )


def elu(x: np.ndarray) -> np.ndarray:
    # clamp the negative branch before expm1: np.where evaluates both sides
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def elu_grad(pre: np.ndarray) -> np.ndarray:
    # d/dx elu(x) = 1 for x > 0, elu(x) + 1 = exp(x) for x <= 0
    return np.where(pre > 0, 1.0, np.exp(np.minimum(pre, 0.0)))


def _activate(pre: np.ndarray, activation: str) -> np.ndarray:
    return elu(pre) if activation == "elu" else pre


def build_network(layer_sizes, activations, seed: int = 0) -> Network:
    """Construct a network with zero biases and uniform weights scaled per
    role: variance-preserving (limit sqrt(3/fan_in)) for ELU hidden layers,
    conservative (limit 1/sqrt(fan_in)) for identity layers.

    Both scales matter empirically. The deep encoders attenuate or blow up
    signals unless hidden layers preserve variance, while the latent and
    output projections drift too much early in training under Adam at the
    recipe's learning rate unless they start small.
    """
    if len(activations) != len(layer_sizes) - 1:
        raise ValueError("need one activation per layer transition")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(layer_sizes, layer_sizes[1:], activations):
        if act == "elu":
            limit = np.sqrt(3.0 / fan_in)
        else:
            limit = 1.0 / np.sqrt(fan_in)
        weights = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        layers.append(DenseLayer(weights, np.zeros(fan_out), act))
    return Network(layers)


def forward(net: Network, x: np.ndarray):
    """Run the network; returns (output, caches) with caches sufficient
    for backward. Accepts a single vector or a (B, in_dim) batch."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != net.in_dim:
        raise DimensionMismatch(f"input dim {x.shape[1]}, expected {net.in_dim}")
    caches = []
    out = x
    for layer in net.layers:
        pre = out @ layer.weights.T + layer.biases
        caches.append((out, pre))
        out = _activate(pre, layer.activation)
    return (out[0] if single else out), caches


def backward(net: Network, caches, output_grad: np.ndarray):
    """Backpropagate d(loss)/d(output) through the cached forward pass.

    Returns (grads, input_grad) where grads is a list of (dW, db) aligned
    with net.layers and input_grad is d(loss)/d(input) — needed to chain
    a decoder's gradient back into an encoder.
    """
    grad = np.asarray(output_grad, dtype=np.float64)
    single = grad.ndim == 1
    if single:
        grad = grad[None, :]
    if len(caches) != len(net.layers):
        raise DimensionMismatch("cache does not match network depth")
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(net.layers)
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        x_in, pre = caches[i]
        if grad.shape[1] != layer.out_dim:
            raise DimensionMismatch(
                f"gradient dim {grad.shape[1]} at layer {i}, expected {layer.out_dim}"
            )
        dpre = grad * elu_grad(pre) if layer.activation == "elu" else grad
        grads[i] = (dpre.T @ x_in, dpre.sum(axis=0))
        grad = dpre @ layer.weights
    return grads, (grad[0] if single else grad)


@dataclass
class AdamState:
    """First/second moment accumulators plus step counter for Adam."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.99
    eps: float = 1e-8

    @staticmethod
    def for_params(params, lr=0.01, beta1=0.9, beta2=0.99, eps=1e-8) -> "AdamState":
        return AdamState(
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
        )


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update; mutates params and state in place."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionMismatch("params/grads/state length mismatch")
    state.t += 1
    b1t = 1.0 - state.beta1**state.t
    b2t = 1.0 - state.beta2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * np.square(g)
        p -= state.lr * (m / b1t) / (np.sqrt(v / b2t) + state.eps)
    return params, state


@dataclass
class TrainConfig:
    """Optimizer and loop settings; defaults follow the published recipe
    (batch 64, Adam at a fixed 0.01 with decay factors 0.9/0.99, 10%
    validation, early stopping on the validation loss).

    lr_floor < 1 switches on cosine annealing from `lr` down to
    `lr * lr_floor` across `max_epochs`. The fixed rate is the default:
    Adam then hovers in a limit cycle whose best-validation snapshot the
    trainer returns. Annealing reaches lower loss floors on easy targets
    but is opt-in, not the recipe.
    """

    batch_size: int = 64
    lr: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.99
    max_epochs: int = 150
    val_fraction: float = 0.1
    patience: int = 15
    patience_steps: int | None = None  # step-based staleness when set
    seed: int = 0
    lr_floor: float = 1.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError("val_fraction must lie in (0, 1)")
        if not (0.0 < self.lr_floor <= 1.0):
            raise ValueError("lr_floor must lie in (0, 1]")

    def epoch_lr(self, epoch: int) -> float:
        if self.lr_floor >= 1.0 or self.max_epochs <= 1:
            return self.lr
        lo = self.lr * self.lr_floor
        t = epoch / (self.max_epochs - 1)
        return lo + 0.5 * (self.lr - lo) * (1.0 + np.cos(np.pi * t))


@dataclass
class TrainResult:
    network: Network
    history: list[tuple[float, float]]  # (train_loss, val_loss) per epoch
    best_epoch: int
    epochs_run: int

    @property
    def best_val_loss(self) -> float:
        return self.history[self.best_epoch][1]


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over every element; returns (value, grad)."""
    diff = pred - target
    n = diff.size
    return float(np.mean(np.square(diff))), (2.0 / n) * diff


def train_val_split(n_rows: int, val_fraction: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle, then hold out the tail fraction for validation.

    Always keeps at least one row on each side when n_rows >= 2.
    """
    order = rng.permutation(n_rows)
    n_val = int(round(val_fraction * n_rows))
    n_val = min(max(n_val, 1 if n_rows >= 2 else 0), n_rows - 1)
    return order[n_val:], order[:n_val]


class EarlyStopper:
    """Tracks best validation loss; stops after `patience` epochs without
    improvement (patience=0 stops right after the first non-improving epoch).

    With `patience_steps` set, staleness is measured in optimizer steps
    instead: small datasets get the many cheap epochs their few rows need
    before the same budget runs out, so one setting serves every training
    fraction.
    """

    def __init__(self, patience: int, patience_steps: int | None = None):
        self.patience = patience
        self.patience_steps = patience_steps
        self.best = np.inf
        self.best_epoch = -1
        self.stale = 0
        self.stale_steps = 0

    def update(self, epoch: int, val_loss: float, steps: int = 1) -> bool:
        """Record one epoch (of `steps` optimizer updates); returns True
        when training should stop."""
        if val_loss < self.best:
            self.best = val_loss
            self.best_epoch = epoch
            self.stale = 0
            self.stale_steps = 0
            return False
        self.stale += 1
        self.stale_steps += steps
        if self.patience_steps is not None:
            return self.stale_steps > self.patience_steps
        return self.stale > self.patience


def train(net: Network, x, y, cfg: TrainConfig, loss=mse_loss) -> TrainResult:
    """Mini-batch Adam training of a plain supervised network.

    Rows are reshuffled every epoch from the config seed; the best
    validation snapshot is returned. Loss history is deterministic for a
    fixed (seed, data, config).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[0] == 0:
        raise EmptyTrainingSet("no training rows")
    if x.shape[0] != y.shape[0]:
        raise DimensionMismatch("x and y row counts differ")

    rng = np.random.default_rng(cfg.seed)
    train_idx, val_idx = train_val_split(x.shape[0], cfg.val_fraction, rng)
    if train_idx.size == 0:
        raise EmptyTrainingSet("validation split consumed every row")

    params = net.parameters()
    state = AdamState.for_params(params, cfg.lr, cfg.beta1, cfg.beta2)
    stopper = EarlyStopper(cfg.patience, cfg.patience_steps)
    best_net = net.copy()
    history: list[tuple[float, float]] = []

    for epoch in range(cfg.max_epochs):
        state.lr = cfg.epoch_lr(epoch)
        order = train_idx[rng.permutation(train_idx.size)]
        epoch_loss = 0.0
        steps = 0
        for start in range(0, order.size, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            pred, caches = forward(net, x[batch])
            value, grad = loss(pred, y[batch])
            grads, _ = backward(net, caches, grad)
            flat = [g for pair in grads for g in pair]
            adam_step(params, flat, state)
            epoch_loss += value * batch.size
            steps += 1
        epoch_loss /= order.size

        val_pred, _ = forward(net, x[val_idx])
        val_loss, _ = loss(val_pred, y[val_idx])
        history.append((epoch_loss, float(val_loss)))

        improved = val_loss < stopper.best
        stop = stopper.update(epoch, val_loss, steps)
        if improved:
            best_net = net.copy()
        if stop:
            break

    net.layers = best_net.layers
    return TrainResult(
        network=net,
        history=history,
        best_epoch=stopper.best_epoch,
        epochs_run=len(history),
    )


def finite_difference_grads(loss_fn, params, h: float = 1e-4):
    """Central finite differences of a scalar loss over parameter arrays.

    loss_fn takes no arguments and reads the (mutated) params; used as the
    independent oracle for every analytic gradient in the test suite.
    """
    grads = []
    for p in params:
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            original = p[idx]
            p[idx] = original + h
            hi = loss_fn()
            p[idx] = original - h
            lo = loss_fn()
            p[idx] = original
            g[idx] = (hi - lo) / (2.0 * h)
            it.iternext()
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor: float = 1e-8) -> float:
    """Max |a - n| / max(|a|, |n|, floor) across parameter arrays."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def clone_params(params) -> list[np.ndarray]:
    return [p.copy() for p in params]


def set_params(params, values) -> None:
    for p, v in zip(params, values):
        p[...] = v


__all__ = [
    "ACTIVATIONS",
    "AdamState",
    "DenseLayer",
    "EarlyStopper",
    "Network",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "backward",
    "build_network",
    "clone_params",
    "elu",
    "elu_grad",
    "finite_difference_grads",
    "forward",
    "max_relative_error",
    "mse_loss",
    "set_params",
    "train",
    "train_val_split",
]
