"""Contrastive pretraining of encoder weights for faster federated starts.

Two noise-perturbed views of each sample form a positive pair; the other
samples in the batch act as negatives. Pairs are scored with a learned
bilinear form a^T W b and trained with an InfoNCE-style objective: for
each anchor, cross-entropy over its B similarity scores against the
positive's index. The projection head and W are discarded afterwards;
only the encoder layers transfer to the downstream classifier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError
from .nn import (
    ArchSpec,
    ModelParams,
    _backprop,
    _forward_cached,
    adam_array_update,
    init_params,
    softmax_rows,
)
from .rngutil import derive_rng, derive_seed


@dataclass(frozen=True)
class ContrastiveConfig:
    # augment_noise should sit near the data's within-cluster scale so
    # positive pairs bridge cluster-sized neighborhoods
    batch_size: int = 64
    epochs: int = 50
    embedding_dim: int = 32
    augment_noise: float = 1.5
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2:
            raise ParameterError(
                "batch_size must be >= 2: positives need in-batch negatives"
            )
        if self.epochs < 1:
            raise ParameterError("epochs must be >= 1")
        if self.embedding_dim < 2:
            raise ParameterError("embedding_dim must be >= 2")
        if self.augment_noise < 0:
            raise ParameterError("augment_noise must be >= 0")


@dataclass
class EncoderWithHead:
    """Encoder stack plus projection head and bilinear scoring matrix.

    ``net`` is the downstream architecture truncated before its
    classification layer, with one extra dense layer of embedding_dim
    units on top. That head and the bilinear matrix exist only for
    pretraining; downstream models keep the encoder layers and append a
    freshly initialized classification layer.
    """

    net: ModelParams
    bilinear: np.ndarray
    downstream_arch: ArchSpec

    @property
    def encoder_layers(self):
        return self.net.layers[:-1]

    @property
    def head(self):
        return self.net.layers[-1]


def init_encoder(arch: ArchSpec, cfg: ContrastiveConfig) -> EncoderWithHead:
    """Random encoder+head for the given downstream architecture.

    The bilinear matrix starts at scale 1/embedding_dim so initial scores
    sit in the linear regime of the softmax (chance-level loss ~ ln B).
    """
    net_arch = ArchSpec(arch.input_dim, arch.hidden_dims, cfg.embedding_dim)
    net = init_params(net_arch, derive_seed(cfg.seed, "encoder"))
    rng = derive_rng(cfg.seed, "bilinear")
    w = rng.normal(0.0, 1.0 / cfg.embedding_dim, (cfg.embedding_dim, cfg.embedding_dim))
    return EncoderWithHead(net=net, bilinear=w, downstream_arch=arch)


def sample_positive_pair(
    x: np.ndarray, noise: float, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Two independent Gaussian perturbations of one feature vector."""
    if noise < 0:
        raise ParameterError("noise must be >= 0")
    x = np.asarray(x, dtype=np.float64)
    rng = derive_rng(seed, "pair")
    view_a = x + noise * rng.standard_normal(x.shape)
    view_b = x + noise * rng.standard_normal(x.shape)
    return view_a, view_b


def bilinear_similarity(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> float:
    """s = a^T W b."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if w.shape != (a.shape[0], b.shape[0]):
        raise ShapeError(
            f"bilinear matrix {w.shape} incompatible with {a.shape} x {b.shape}"
        )
    return float(np.einsum("i,ij,j->", a, w, b))


def _score_matrix(emb_a, bil, emb_b):
    # two 2-operand einsums; a single 3-operand call loops naively
    projected = np.einsum("bm,mn->bn", emb_a, bil)
    return np.einsum("bn,cn->bc", projected, emb_b)


def contrastive_batch_loss(
    encoder: EncoderWithHead, view_a: np.ndarray, view_b: np.ndarray
) -> float:
    """Mean InfoNCE loss of one batch of paired views (no update)."""
    emb_a, _, _ = _forward_cached(encoder.net.layers, view_a)
    emb_b, _, _ = _forward_cached(encoder.net.layers, view_b)
    scores = _score_matrix(emb_a, encoder.bilinear, emb_b)
    probs = softmax_rows(scores)
    n = scores.shape[0]
    return float(-np.mean(np.log(probs[np.arange(n), np.arange(n)])))


def contrastive_pretrain(
    unlabeled: np.ndarray,
    cfg: ContrastiveConfig,
    init: EncoderWithHead,
    return_history: bool = False,
):
    """Train the encoder contrastively and return downstream-ready weights.

    Adam updates the encoder, head, and bilinear matrix jointly. Epochs
    walk full batches only (a trailing partial batch is skipped and
    reshuffled into the next epoch). The returned ModelParams carry the
    trained encoder layers with a freshly initialized classification
    layer, shaped exactly like a cold-start downstream model. With
    return_history=True, also returns the per-epoch mean losses.
    """
    features = np.asarray(unlabeled, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != init.downstream_arch.input_dim:
        raise ShapeError("features must be [N x input_dim]")
    if features.shape[0] < cfg.batch_size:
        raise ParameterError("need at least one full batch of samples")
    rng_order = derive_rng(cfg.seed, "order")
    rng_noise = derive_rng(cfg.seed, "noise")
    n_layers = len(init.net.layers)
    arrays = [a.copy() for pair in init.net.layers for a in pair]
    arrays.append(init.bilinear.copy())
    m = [np.zeros_like(a) for a in arrays]
    v = [np.zeros_like(a) for a in arrays]
    t = 0
    lr, beta1, beta2, eps = 1e-3, 0.9, 0.999, 1e-8
    n = features.shape[0]
    b = cfg.batch_size
    epoch_losses = []
    for _ in range(cfg.epochs):
        order = rng_order.permutation(n)
        losses = []
        for start in range(0, n - b + 1, b):
            layers = [
                (arrays[2 * i], arrays[2 * i + 1]) for i in range(n_layers)
            ]
            bil = arrays[-1]
            batch = features[order[start: start + b]]
            view_a = batch + cfg.augment_noise * rng_noise.standard_normal(batch.shape)
            view_b = batch + cfg.augment_noise * rng_noise.standard_normal(batch.shape)
            emb_a, in_a, pre_a = _forward_cached(layers, view_a)
            emb_b, in_b, pre_b = _forward_cached(layers, view_b)
            projected_a = np.einsum("bm,mn->bn", emb_a, bil)
            scores = np.einsum("bn,cn->bc", projected_a, emb_b)
            probs = softmax_rows(scores)
            idx = np.arange(b)
            losses.append(float(-np.mean(np.log(probs[idx, idx]))))
            dscores = probs.copy()
            dscores[idx, idx] -= 1.0
            dscores /= b
            d_emb_a = np.einsum(
                "bc,cm->bm", dscores, np.einsum("cn,mn->cm", emb_b, bil)
            )
            d_emb_b = np.einsum("bc,bn->cn", dscores, projected_a)
            d_bil = np.einsum(
                "mc,cn->mn", np.einsum("bm,bc->mc", emb_a, dscores), emb_b
            )
            grads_a = _backprop(layers, in_a, pre_a, d_emb_a)
            grads_b = _backprop(layers, in_b, pre_b, d_emb_b)
            flat_grads = [
                g for ga, gb in zip(grads_a, grads_b)
                for g in (ga[0] + gb[0], ga[1] + gb[1])
            ] + [d_bil]
            t += 1
            for j, g in enumerate(flat_grads):
                arrays[j], m[j], v[j] = adam_array_update(
                    arrays[j], g, m[j], v[j], t, lr, beta1, beta2, eps
                )
        epoch_losses.append(float(np.mean(losses)))
    trained = ModelParams(
        [(arrays[2 * i], arrays[2 * i + 1]) for i in range(n_layers)],
        init.net.arch,
    )
    params = _to_downstream(trained, init.downstream_arch, cfg)
    if return_history:
        return params, epoch_losses
    return params


def _to_downstream(
    net: ModelParams, arch: ArchSpec, cfg: ContrastiveConfig
) -> ModelParams:
    """Drop the projection head; append a fresh classification layer."""
    fresh = init_params(arch, derive_seed(cfg.seed, "classifier"))
    layers = [
        (w.copy(), b.copy()) for w, b in net.layers[:-1]
    ] + [fresh.layers[-1]]
    return ModelParams(layers, arch)
