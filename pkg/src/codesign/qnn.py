"""Quantization-aware training of tiny MLP amplitude regressors.

Weights, biases and activations live on a symmetric uniform fixed-point
grid with a static scale of 1 (inputs are pre-normalized into the unit
range). Training keeps full-precision shadow weights, quantizes on
every forward pass and routes gradients through the quantizers with a
straight-through estimator: identity inside the clamp range, zero
outside.

Networks here are small enough (at most 9 -> 18 -> 18 -> 18 -> 1) that
plain numpy batch backprop outruns any framework dispatch overhead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pulsegen import Dataset

MAX_HIDDEN_LAYERS = 3
WIDTH_RANGE = (2, 18)
BITS_RANGE = (2, 16)


class TrainingDiverged(RuntimeError):
    """Raised when a minibatch loss stops being finite."""


def _quant_grid(bits: int, scale: float):
    if bits < 1:
        raise ValueError("bits must be >= 1")
    if scale <= 0:
        raise ValueError("scale must be positive")
    step = scale * 2.0 ** (1 - bits)
    return step, -scale, scale - step


def quantize(x, bits: int, scale: float = 1.0):
    """Symmetric uniform fixed-point quantizer.

    Grid step is scale * 2^(1-bits); values are rounded to the grid and
    clamped to [-scale, scale - step]. Idempotent: grid points map to
    themselves exactly.
    """
    step, lo, hi = _quant_grid(bits, scale)
    return np.clip(np.round(np.asarray(x, dtype=np.float64) / step) * step, lo, hi)


def ste_mask(x, bits: int, scale: float = 1.0):
    """Straight-through gradient mask: 1.0 inside the clamp range."""
    _, lo, hi = _quant_grid(bits, scale)
    x = np.asarray(x, dtype=np.float64)
    return ((x >= lo) & (x <= hi)).astype(np.float64)


@dataclass(frozen=True)
class MlpSpec:
    """Architecture + per-tensor bit-widths of one candidate regressor.

    ``weight_bits`` has one entry per weight matrix (hidden layers plus
    the output layer); biases share their matrix's width. Hidden
    activations are quantized at the producing layer's bits, network
    input and output at ``io_bits``.
    """

    hidden_layer_widths: tuple[int, ...]
    weight_bits: tuple[int, ...]
    io_bits: int
    input_width: int = 9

    def __post_init__(self):
        object.__setattr__(self, "hidden_layer_widths", tuple(int(w) for w in self.hidden_layer_widths))
        object.__setattr__(self, "weight_bits", tuple(int(b) for b in self.weight_bits))
        if len(self.weight_bits) != len(self.hidden_layer_widths) + 1:
            raise ValueError(
                "weight_bits needs one entry per weight matrix "
                f"({len(self.hidden_layer_widths) + 1}), got {len(self.weight_bits)}"
            )
        if self.input_width < 1:
            raise ValueError("input_width must be >= 1")

    def validate(self) -> None:
        """Range checks for specs entering from configs or search."""
        depth = len(self.hidden_layer_widths)
        if not 1 <= depth <= MAX_HIDDEN_LAYERS:
            raise ValueError(f"hidden layer count must be in 1..{MAX_HIDDEN_LAYERS}, got {depth}")
        for w in self.hidden_layer_widths:
            if not WIDTH_RANGE[0] <= w <= WIDTH_RANGE[1]:
                raise ValueError(f"hidden width {w} outside {WIDTH_RANGE}")
        for b in self.weight_bits:
            if not BITS_RANGE[0] <= b <= BITS_RANGE[1]:
                raise ValueError(f"weight bits {b} outside {BITS_RANGE}")
        if not BITS_RANGE[0] <= self.io_bits <= BITS_RANGE[1]:
            raise ValueError(f"io_bits {self.io_bits} outside {BITS_RANGE}")

    def layer_dims(self) -> list[tuple[int, int]]:
        widths = [self.input_width, *self.hidden_layer_widths, 1]
        return list(zip(widths[:-1], widths[1:]))

    def activation_in_bits(self) -> list[int]:
        """Bit-width of each layer's input activations."""
        return [self.io_bits, *self.weight_bits[:-1]]

    def activation_out_bits(self) -> list[int]:
        """Bit-width of each layer's output activations."""
        return [*self.weight_bits[:-1], self.io_bits]

    def to_dict(self) -> dict:
        return {
            "hidden_layer_widths": list(self.hidden_layer_widths),
            "weight_bits": list(self.weight_bits),
            "io_bits": self.io_bits,
            "input_width": self.input_width,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlpSpec":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown MlpSpec keys: {sorted(unknown)}")
        return cls(
            hidden_layer_widths=tuple(d["hidden_layer_widths"]),
            weight_bits=tuple(d["weight_bits"]),
            io_bits=int(d["io_bits"]),
            input_width=int(d.get("input_width", 9)),
        )


@dataclass(frozen=True)
class TrainingParams:
    epochs: int = 30
    batch_size: int = 256
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")


@dataclass
class TrainReport:
    weights: list  # quantized (W, b) pairs at the best epoch
    val_mse: float
    train_mse: float
    epochs_run: int
    best_epoch: int
    baseline_mse: float

    def to_dict(self) -> dict:
        return {
            "val_mse": self.val_mse,
            "train_mse": self.train_mse,
            "epochs_run": self.epochs_run,
            "best_epoch": self.best_epoch,
            "baseline_mse": self.baseline_mse,
        }


def init_weights(spec: MlpSpec, rng: np.random.Generator) -> list:
    """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for weights and biases."""
    weights = []
    for n_in, n_out in spec.layer_dims():
        bound = 1.0 / np.sqrt(n_in)
        w = rng.uniform(-bound, bound, size=(n_in, n_out))
        b = rng.uniform(-bound, bound, size=n_out)
        weights.append((w, b))
    return weights


def forward(spec: MlpSpec, weights: list, x: np.ndarray, quantized: bool = True) -> np.ndarray:
    """Batch inference; returns predictions of shape (n,).

    ``quantized=False`` bypasses every quantizer (used for float
    reference checks); the computation graph is otherwise identical.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    last = len(weights) - 1
    a = quantize(x, spec.io_bits) if quantized else x
    for i, (w, b) in enumerate(weights):
        if quantized:
            w = quantize(w, spec.weight_bits[i])
            b = quantize(b, spec.weight_bits[i])
        z = a @ w + b
        if i < last:
            h = np.maximum(z, 0.0)
            a = quantize(h, spec.weight_bits[i]) if quantized else h
        else:
            out = quantize(z, spec.io_bits) if quantized else z
    return out[:, 0]


def _forward_backward(spec: MlpSpec, weights: list, x, y, quantized: bool = True):
    """One batch of MSE backprop with straight-through quantizers.

    Returns (loss, grads) where grads mirrors the weights structure.
    """
    last = len(weights) - 1
    a = quantize(x, spec.io_bits) if quantized else x
    acts = [a]  # quantized inputs to each layer
    zs = []
    hs = []  # pre-quantization rectifier outputs, hidden only
    for i, (w, b) in enumerate(weights):
        if quantized:
            wq = quantize(w, spec.weight_bits[i])
            bq = quantize(b, spec.weight_bits[i])
        else:
            wq, bq = w, b
        z = acts[-1] @ wq + bq
        zs.append(z)
        if i < last:
            h = np.maximum(z, 0.0)
            hs.append(h)
            a = quantize(h, spec.weight_bits[i]) if quantized else h
            acts.append(a)
        else:
            out = quantize(z, spec.io_bits) if quantized else z

    pred = out[:, 0]
    err = pred - y
    loss = float(np.mean(err * err))

    dz = (2.0 * err / err.size)[:, None]
    if quantized:
        dz = dz * ste_mask(zs[last], spec.io_bits)
    grads = [None] * len(weights)
    for i in range(last, -1, -1):
        w, b = weights[i]
        dw = acts[i].T @ dz
        db = dz.sum(axis=0)
        if quantized:
            dw *= ste_mask(w, spec.weight_bits[i])
            db *= ste_mask(b, spec.weight_bits[i])
        grads[i] = (dw, db)
        if i > 0:
            wq = quantize(w, spec.weight_bits[i]) if quantized else w
            da = dz @ wq.T
            if quantized:
                da = da * ste_mask(hs[i - 1], spec.weight_bits[i - 1])
            dz = da * (zs[i - 1] > 0)
    return loss, grads


def baseline_mse(dataset: Dataset) -> float:
    """Validation MSE of the best constant predictor fit on train."""
    mean_label = float(np.mean(dataset.train.labels, dtype=np.float64))
    val = dataset.val.labels.astype(np.float64)
    return float(np.mean((val - mean_label) ** 2))


def _mse(pred: np.ndarray, y: np.ndarray) -> float:
    d = pred - y
    return float(np.mean(d * d))


def train(spec: MlpSpec, dataset: Dataset, hp: TrainingParams = TrainingParams()) -> TrainReport:
    """Minibatch SGD with momentum on shadow weights, STE through every
    quantizer, best-epoch checkpointing on validation MSE.

    Deterministic given (spec, dataset, hp.seed). Raises
    :class:`TrainingDiverged` naming the epoch if a batch loss goes
    non-finite. With epochs=0 the report describes the freshly
    initialized net.
    """
    if dataset.train.samples.shape[1] != spec.input_width:
        raise ValueError(
            f"spec input_width {spec.input_width} != dataset window length "
            f"{dataset.train.samples.shape[1]}"
        )
    x_train = dataset.train.samples.astype(np.float64)
    y_train = dataset.train.labels.astype(np.float64)
    x_val = dataset.val.samples.astype(np.float64)
    y_val = dataset.val.labels.astype(np.float64)

    rng = np.random.default_rng(hp.seed)
    weights = init_weights(spec, rng)
    velocity = [(np.zeros_like(w), np.zeros_like(b)) for w, b in weights]

    def snapshot():
        return [
            (quantize(w, spec.weight_bits[i]), quantize(b, spec.weight_bits[i]))
            for i, (w, b) in enumerate(weights)
        ]

    best_val = _mse(forward(spec, weights, x_val), y_val)
    best_train = _mse(forward(spec, weights, x_train), y_train)
    best_weights = snapshot()
    best_epoch = 0

    n = len(y_train)
    for epoch in range(1, hp.epochs + 1):
        perm = rng.permutation(n)
        for start in range(0, n, hp.batch_size):
            idx = perm[start : start + hp.batch_size]
            loss, grads = _forward_backward(spec, weights, x_train[idx], y_train[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            new_w, new_v = [], []
            for (w, b), (vw, vb), (gw, gb) in zip(weights, velocity, grads):
                vw = hp.momentum * vw + gw
                vb = hp.momentum * vb + gb
                new_w.append((w - hp.learning_rate * vw, b - hp.learning_rate * vb))
                new_v.append((vw, vb))
            weights, velocity = new_w, new_v
        val_mse = _mse(forward(spec, weights, x_val), y_val)
        if val_mse < best_val:
            best_val = val_mse
            best_train = _mse(forward(spec, weights, x_train), y_train)
            best_weights = snapshot()
            best_epoch = epoch

    return TrainReport(
        weights=best_weights,
        val_mse=best_val,
        train_mse=best_train,
        epochs_run=hp.epochs,
        best_epoch=best_epoch,
        baseline_mse=baseline_mse(dataset),
    )
