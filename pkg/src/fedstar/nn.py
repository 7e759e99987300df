"""Feed-forward classifier with exact gradients and a functional Adam.

The model is a plain ReLU multilayer perceptron evaluated in float64.
Matrix products go through np.einsum rather than BLAS gemm: einsum uses a
fixed reduction order per output element, which makes the forward pass
bitwise independent of batch composition (the same row gives the same
logits whether it appears alone or inside a larger batch). All operations
are pure functions; optimizer state is passed and returned by value.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import Dataset
from .errors import ParameterError, ShapeError
from .rngutil import derive_rng

PROB_FLOOR = 1e-12

Layer = tuple[np.ndarray, np.ndarray]  # (weight [out x in], bias [out])


@dataclass(frozen=True)
class ArchSpec:
    """Network shape: input width, hidden widths, and class count."""

    input_dim: int
    hidden_dims: tuple[int, ...]
    num_classes: int

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(self.hidden_dims))
        if self.input_dim < 1:
            raise ParameterError("input_dim must be >= 1")
        if any(h < 1 for h in self.hidden_dims):
            raise ParameterError("hidden dims must be >= 1")
        if self.num_classes < 2:
            raise ParameterError("num_classes must be >= 2")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.num_classes)


@dataclass(eq=False)
class ModelParams:
    """Ordered (weight, bias) pairs chaining input_dim through to num_classes."""

    layers: list[Layer]
    arch: ArchSpec

    def __post_init__(self):
        dims = self.arch.layer_dims
        if len(self.layers) != len(dims) - 1:
            raise ShapeError(
                f"expected {len(dims) - 1} layers, got {len(self.layers)}"
            )
        for i, (w, b) in enumerate(self.layers):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ShapeError(
                    f"layer {i}: weight {w.shape} / bias {b.shape} do not "
                    f"chain {dims[i]} -> {dims[i + 1]}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ParameterError(f"layer {i} contains NaN or Inf")

    def copy(self) -> "ModelParams":
        return ModelParams(
            [(w.copy(), b.copy()) for w, b in self.layers], self.arch
        )


@dataclass(eq=False)
class Gradient:
    """Same layered shape as the ModelParams it differentiates."""

    layers: list[Layer]


@dataclass(frozen=True)
class OptimizerState:
    """Adam accumulators plus hyperparameters; advanced functionally."""

    m: tuple[Layer, ...]
    v: tuple[Layer, ...]
    step: int
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    weight_decay: float = 0.0


def params_equal(a: ModelParams, b: ModelParams) -> bool:
    return a.arch == b.arch and all(
        np.array_equal(wa, wb) and np.array_equal(ba, bb)
        for (wa, ba), (wb, bb) in zip(a.layers, b.layers)
    )


def max_param_diff(a: ModelParams, b: ModelParams) -> float:
    return max(
        max(np.abs(wa - wb).max(initial=0.0), np.abs(ba - bb).max(initial=0.0))
        for (wa, ba), (wb, bb) in zip(a.layers, b.layers)
    )


def init_params(arch: ArchSpec, seed: int) -> ModelParams:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    rng = derive_rng(seed, "init")
    dims = arch.layer_dims
    layers = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, (fan_out, fan_in))
        layers.append((w, np.zeros(fan_out)))
    return ModelParams(layers, arch)


def _affine(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    # einsum keeps per-row reductions independent of batch size
    return np.einsum("bi,oi->bo", x, w) + b


def _forward_cached(layers: list[Layer], batch: np.ndarray):
    """Logits plus the per-layer inputs and pre-activations for backprop."""
    inputs = []
    pres = []
    h = batch
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        inputs.append(h)
        z = _affine(h, w, b)
        pres.append(z)
        h = z if i == last else np.maximum(z, 0.0)
    return h, inputs, pres


def forward(params: ModelParams, batch: np.ndarray) -> np.ndarray:
    """Logits [B x C] for a batch [B x input_dim]."""
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != params.arch.input_dim:
        raise ShapeError(
            f"batch must be [B x {params.arch.input_dim}], got {batch.shape}"
        )
    logits, _, _ = _forward_cached(params.layers, batch)
    return logits


def softmax_temperature(logits: np.ndarray, temperature: float) -> np.ndarray:
    """Temperature-scaled softmax of a single logit vector.

    Dividing logits by the temperature before normalizing flattens the
    distribution while leaving the argmax unchanged. Computed with
    max-subtraction for stability.
    """
    if temperature <= 0:
        raise ParameterError(f"temperature must be > 0, got {temperature}")
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ShapeError("logits must be a 1-D vector")
    scaled = z / temperature
    scaled = scaled - scaled.max()
    e = np.exp(scaled)
    return e / e.sum()


def softmax_rows(logits: np.ndarray, temperature: float = 1.0) -> np.ndarray:
    """Row-wise stable softmax for a logits matrix."""
    if temperature <= 0:
        raise ParameterError(f"temperature must be > 0, got {temperature}")
    scaled = logits / temperature
    scaled = scaled - scaled.max(axis=1, keepdims=True)
    e = np.exp(scaled)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(probs: np.ndarray, targets: np.ndarray) -> float:
    """Mean negative log-probability of the target classes.

    Probabilities are floored at PROB_FLOOR before the log so degenerate
    predictions yield a large finite loss instead of -inf.
    """
    probs = np.asarray(probs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    if probs.ndim != 2:
        raise ShapeError("probs must be [B x C]")
    if probs.shape[0] == 0:
        raise ParameterError("cross_entropy over an empty batch is undefined")
    if targets.shape != (probs.shape[0],):
        raise ShapeError("targets must have one entry per probs row")
    if targets.min() < 0 or targets.max() >= probs.shape[1]:
        raise ParameterError("targets out of class range")
    picked = probs[np.arange(probs.shape[0]), targets]
    return float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))


@dataclass(frozen=True)
class LossSpec:
    """Inputs of one combined training step.

    The loss is CE(labeled) + beta * CE(accepted pseudo-labeled); each term
    is a per-sample mean over its own batch. An absent or empty pseudo
    batch contributes exactly zero.
    """

    labeled_x: np.ndarray
    labeled_y: np.ndarray
    beta: float = 0.0
    pseudo_x: np.ndarray | None = None
    pseudo_y: np.ndarray | None = None

    def has_pseudo(self) -> bool:
        return self.pseudo_x is not None and self.pseudo_x.shape[0] > 0


def _ce_term(layers: list[Layer], x, y):
    """Loss value and dL/dlogits for a mean cross-entropy term."""
    logits, inputs, pres = _forward_cached(layers, x)
    probs = softmax_rows(logits)
    n = x.shape[0]
    picked = probs[np.arange(n), y]
    loss = float(-np.mean(np.log(np.maximum(picked, PROB_FLOOR))))
    dlogits = probs.copy()
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    return loss, dlogits, inputs, pres


def _backprop(layers: list[Layer], inputs, pres, dlogits) -> list[Layer]:
    grads: list[Layer | None] = [None] * len(layers)
    d = dlogits
    for i in reversed(range(len(layers))):
        w, _ = layers[i]
        dw = np.einsum("bo,bi->oi", d, inputs[i])
        db = np.einsum("bo->o", d)
        grads[i] = (dw, db)
        if i > 0:
            d = np.einsum("bo,oi->bi", d, w) * (pres[i - 1] > 0)
    return grads  # type: ignore[return-value]


def _accumulate(into: list[Layer] | None, grads: list[Layer], scale: float):
    if into is None:
        return [(scale * dw, scale * db) for dw, db in grads]
    return [
        (acc_w + scale * dw, acc_b + scale * db)
        for (acc_w, acc_b), (dw, db) in zip(into, grads)
    ]


def loss_and_grad(params: ModelParams, spec: LossSpec) -> tuple[float, Gradient]:
    """Scalar combined loss and its exact gradient in one pass."""
    x = np.asarray(spec.labeled_x, dtype=np.float64)
    y = np.asarray(spec.labeled_y, dtype=np.int64)
    if x.ndim != 2 or x.shape[1] != params.arch.input_dim:
        raise ShapeError("labeled batch does not match input_dim")
    if x.shape[0] == 0:
        raise ParameterError("labeled batch must be non-empty")
    loss, dlogits, inputs, pres = _ce_term(params.layers, x, y)
    grads = _backprop(params.layers, inputs, pres, dlogits)
    grads = _accumulate(None, grads, 1.0)
    if spec.beta != 0.0 and spec.has_pseudo():
        px = np.asarray(spec.pseudo_x, dtype=np.float64)
        py = np.asarray(spec.pseudo_y, dtype=np.int64)
        if px.shape[1] != params.arch.input_dim:
            raise ShapeError("pseudo batch does not match input_dim")
        u_loss, u_dlogits, u_inputs, u_pres = _ce_term(params.layers, px, py)
        loss += spec.beta * u_loss
        grads = _accumulate(
            grads,
            _backprop(params.layers, u_inputs, u_pres, u_dlogits),
            spec.beta,
        )
    return loss, Gradient(grads)


def backward(params: ModelParams, spec: LossSpec) -> Gradient:
    """Exact gradient of the combined labeled + weighted pseudo loss."""
    return loss_and_grad(params, spec)[1]


def loss_value(params: ModelParams, spec: LossSpec) -> float:
    return loss_and_grad(params, spec)[0]


def fresh_adam_state(
    params: ModelParams,
    learning_rate: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
    weight_decay: float = 0.0,
) -> OptimizerState:
    zeros = tuple(
        (np.zeros_like(w), np.zeros_like(b)) for w, b in params.layers
    )
    return OptimizerState(
        m=zeros,
        v=tuple((z[0].copy(), z[1].copy()) for z in zeros),
        step=0,
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
        weight_decay=weight_decay,
    )


def adam_array_update(theta, g, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam update for a single array; shared with the
    contrastive pretraining loop."""
    m = beta1 * m + (1.0 - beta1) * g
    v = beta2 * v + (1.0 - beta2) * g * g
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    theta = theta - lr * m_hat / (np.sqrt(v_hat) + eps)
    return theta, m, v


def adam_step(
    params: ModelParams, grad: Gradient, state: OptimizerState
) -> tuple[ModelParams, OptimizerState]:
    """Standard Adam with bias correction; optional L2 decay on weights."""
    if len(grad.layers) != len(params.layers):
        raise ShapeError("gradient layer count does not match params")
    t = state.step + 1
    new_layers = []
    new_m = []
    new_v = []
    for (w, b), (dw, db), (mw, mb), (vw, vb) in zip(
        params.layers, grad.layers, state.m, state.v
    ):
        if dw.shape != w.shape or db.shape != b.shape:
            raise ShapeError("gradient shape does not match params")
        if state.weight_decay:
            dw = dw + state.weight_decay * w
        w2, mw2, vw2 = adam_array_update(
            w, dw, mw, vw, t, state.learning_rate,
            state.beta1, state.beta2, state.epsilon,
        )
        b2, mb2, vb2 = adam_array_update(
            b, db, mb, vb, t, state.learning_rate,
            state.beta1, state.beta2, state.epsilon,
        )
        new_layers.append((w2, b2))
        new_m.append((mw2, mb2))
        new_v.append((vw2, vb2))
    new_state = replace(
        state, m=tuple(new_m), v=tuple(new_v), step=t
    )
    return ModelParams(new_layers, params.arch), new_state


def evaluate(params: ModelParams, dataset: Dataset) -> float:
    """Fraction of samples whose argmax logit matches the label; argmax
    ties break toward the lowest class index."""
    if dataset.n == 0:
        raise ParameterError("cannot evaluate on an empty dataset")
    logits = forward(params, dataset.features)
    pred = np.argmax(logits, axis=1)
    return float(np.mean(pred == dataset.labels))


def save_params(path, params: ModelParams):
    """Plain-text parameter file; %.17g values round-trip float64 exactly."""
    arch = params.arch
    hidden = ",".join(str(h) for h in arch.hidden_dims) or "-"
    lines = [f"arch {arch.input_dim} {hidden} {arch.num_classes}"]
    for w, b in params.layers:
        lines.append(f"layer {w.shape[0]} {w.shape[1]}")
        for row in w:
            lines.append(" ".join(f"{v:.17g}" for v in row))
        lines.append("bias")
        lines.append(" ".join(f"{v:.17g}" for v in b))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_params(path) -> ModelParams:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not lines or not lines[0].startswith("arch "):
        raise ParameterError(f"{path}: not a parameter file")
    _, in_dim, hidden, n_classes = lines[0].split()
    hidden_dims = (
        tuple(int(h) for h in hidden.split(",")) if hidden != "-" else ()
    )
    arch = ArchSpec(int(in_dim), hidden_dims, int(n_classes))
    layers = []
    i = 1
    while i < len(lines):
        head = lines[i].split()
        if head[0] != "layer" or len(head) != 3:
            raise ParameterError(f"{path}: malformed layer header at line {i + 1}")
        out_dim, in_dim = int(head[1]), int(head[2])
        w = np.array(
            [[float(v) for v in lines[i + 1 + r].split()] for r in range(out_dim)]
        )
        if w.shape != (out_dim, in_dim):
            raise ParameterError(f"{path}: bad weight block at line {i + 1}")
        i += 1 + out_dim
        if lines[i] != "bias":
            raise ParameterError(f"{path}: expected bias marker at line {i + 1}")
        b = np.array([float(v) for v in lines[i + 1].split()])
        i += 2
        layers.append((w, b))
    return ModelParams(layers, arch)
