"""Self-training locals: pseudo-labels, threshold schedule, client update.

A client turns its own predictions on unlabeled samples into training
targets. Logits are softened by a fixed temperature before reading off
the confidence, and predictions below the round's confidence threshold
are discarded. The threshold rises from tau_min toward tau_max over the
course of training on a cosine curve, so early rounds explore the
unlabeled pool and late rounds keep only high-confidence labels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ClientDataset, Dataset
from .errors import ParameterError
from .nn import (
    LossSpec,
    ModelParams,
    forward,
    fresh_adam_state,
    adam_step,
    loss_and_grad,
    softmax_rows,
    softmax_temperature,
)
from .rngutil import derive_rng


@dataclass(frozen=True)
class SelfTrainConfig:
    """Local-training knobs shared by every client.

    beta weighs the pseudo-label loss term, temperature softens the
    softmax used to read prediction confidence, and [tau_min, tau_max] is
    the confidence-threshold range swept over the federation rounds.
    threshold_on_scaled picks which confidence meets the threshold: the
    temperature-scaled softmax maximum (default) or the unscaled one.
    """

    beta: float = 0.5
    temperature: float = 4.0
    tau_min: float = 0.5
    tau_max: float = 0.9
    batch_size: int = 32
    local_epochs: int = 1
    threshold_on_scaled: bool = True
    weight_decay: float = 0.0

    def __post_init__(self):
        if self.beta < 0:
            raise ParameterError("beta must be >= 0")
        if self.temperature <= 0:
            raise ParameterError("temperature must be > 0")
        if not 0.0 < self.tau_min < 1.0:
            raise ParameterError("tau_min must be in (0, 1)")
        if not self.tau_min < self.tau_max <= 1.0:
            raise ParameterError("tau_max must be in (tau_min, 1]")
        if self.batch_size < 1:
            raise ParameterError("batch_size must be >= 1")
        if self.local_epochs < 1:
            raise ParameterError("local_epochs must be >= 1")
        if self.weight_decay < 0:
            raise ParameterError("weight_decay must be >= 0")


@dataclass(frozen=True)
class PseudoLabelOutcome:
    sample_index: int
    predicted_class: int
    confidence: float
    accepted: bool


@dataclass(frozen=True)
class ClientStats:
    """Per-update training stats reported back to the orchestrator."""

    mean_loss: float
    n_pseudo_candidates: int
    n_pseudo_accepted: int

    @property
    def acceptance_rate(self) -> float:
        if self.n_pseudo_candidates == 0:
            return 0.0
        return self.n_pseudo_accepted / self.n_pseudo_candidates


def pseudo_label(
    logits: np.ndarray,
    temperature: float,
    tau: float,
    index: int = 0,
    threshold_on_scaled: bool = True,
) -> PseudoLabelOutcome:
    """Pseudo-label one sample from its logits.

    The predicted class is the argmax of the temperature-scaled softmax
    (ties to the lowest index); the sample is accepted iff its confidence
    reaches tau. Rejection never alters the predicted class.
    """
    probs = softmax_temperature(logits, temperature)
    predicted = int(np.argmax(probs))
    if threshold_on_scaled:
        confidence = float(probs[predicted])
    else:
        confidence = float(softmax_temperature(logits, 1.0)[predicted])
    return PseudoLabelOutcome(
        sample_index=index,
        predicted_class=predicted,
        confidence=confidence,
        accepted=bool(confidence >= tau),
    )


def pseudo_label_batch(
    logits: np.ndarray,
    temperature: float,
    tau: float,
    threshold_on_scaled: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized pseudo-labeling: (predicted, confidence, accepted) arrays."""
    probs = softmax_rows(logits, temperature)
    predicted = np.argmax(probs, axis=1)
    rows = np.arange(logits.shape[0])
    if threshold_on_scaled:
        confidence = probs[rows, predicted]
    else:
        confidence = softmax_rows(logits, 1.0)[rows, predicted]
    return predicted, confidence, confidence >= tau


def threshold_at(
    round_index: int, total_rounds: int, tau_min: float = 0.5, tau_max: float = 0.9
) -> float:
    """Cosine confidence-threshold schedule.

    tau(r) = tau_max - (tau_max - tau_min) * (1 + cos(pi * r / R)) / 2,
    non-decreasing in r with tau(0) = tau_min and tau(R) = tau_max. The
    endpoints are returned exactly (no floating-point residue).
    """
    if total_rounds < 1:
        raise ParameterError("total_rounds must be >= 1")
    if not 0 <= round_index <= total_rounds:
        raise ParameterError(
            f"round {round_index} outside [0, {total_rounds}]"
        )
    if round_index == 0:
        return tau_min
    if round_index == total_rounds:
        return tau_max
    frac = (1.0 + np.cos(np.pi * round_index / total_rounds)) / 2.0
    return float(tau_max - (tau_max - tau_min) * frac)


def _batch_stream(n: int, batch_size: int, rng):
    """Endless index batches: permute, chunk, reshuffle on wrap."""
    while True:
        order = rng.permutation(n)
        for i in range(0, n, batch_size):
            yield order[i: i + batch_size]


def client_update(
    params: ModelParams,
    client: ClientDataset,
    cfg: SelfTrainConfig,
    tau: float,
    seed: int,
) -> tuple[ModelParams, ClientStats]:
    """One local training pass: paired labeled/pseudo-labeled batches.

    Each epoch walks every unlabeled batch once while labeled batches
    cycle (reshuffled on wrap), so over rounds the unlabeled pool meets
    all available labeled data. Per step the current parameters produce
    pseudo-labels for the unlabeled batch, rejected samples are dropped,
    and a single Adam step is taken on CE(labeled) + beta * CE(accepted).
    A client with no unlabeled samples simply makes one labeled pass per
    epoch. The Adam state is created fresh here, so the update is a pure
    function of (params, data, config, tau, seed).
    """
    if client.n_labeled == 0:
        raise ParameterError("client_update requires at least 1 labeled sample")
    x_lab = client.labeled.features
    y_lab = client.labeled.labels
    x_unlab = client.unlabeled_features
    n_lab, n_unlab = client.n_labeled, client.n_unlabeled
    rng_lab = derive_rng(seed, "labeled-order")
    rng_unlab = derive_rng(seed, "unlabeled-order")
    labeled_stream = _batch_stream(n_lab, cfg.batch_size, rng_lab)
    state = fresh_adam_state(params, weight_decay=cfg.weight_decay)
    losses = []
    candidates = 0
    accepted_total = 0
    labeled_passes = (n_lab + cfg.batch_size - 1) // cfg.batch_size
    for _ in range(cfg.local_epochs):
        if n_unlab > 0:
            order = rng_unlab.permutation(n_unlab)
            unlab_batches = [
                order[i: i + cfg.batch_size]
                for i in range(0, n_unlab, cfg.batch_size)
            ]
        else:
            unlab_batches = [None] * labeled_passes
        for u_idx in unlab_batches:
            l_idx = next(labeled_stream)
            pseudo_x = pseudo_y = None
            if u_idx is not None and cfg.beta > 0.0:
                logits_u = forward(params, x_unlab[u_idx])
                pred, _, keep = pseudo_label_batch(
                    logits_u, cfg.temperature, tau, cfg.threshold_on_scaled
                )
                candidates += int(u_idx.size)
                accepted_total += int(keep.sum())
                if keep.any():
                    pseudo_x = x_unlab[u_idx][keep]
                    pseudo_y = pred[keep]
            spec = LossSpec(
                labeled_x=x_lab[l_idx],
                labeled_y=y_lab[l_idx],
                beta=cfg.beta,
                pseudo_x=pseudo_x,
                pseudo_y=pseudo_y,
            )
            loss, grad = loss_and_grad(params, spec)
            losses.append(loss)
            params, state = adam_step(params, grad, state)
    stats = ClientStats(
        mean_loss=float(np.mean(losses)),
        n_pseudo_candidates=candidates,
        n_pseudo_accepted=accepted_total,
    )
    return params, stats


def supervised_update(
    params: ModelParams, labeled: Dataset, cfg: SelfTrainConfig, seed: int
) -> ModelParams:
    """Labeled-only counterpart: E epochs of minibatch Adam on the
    supervised cross-entropy. Identical code path to client_update with an
    empty unlabeled set, so the two agree bitwise for equal seeds."""
    if labeled.n == 0:
        raise ParameterError("supervised_update requires a non-empty dataset")
    view = ClientDataset(
        labeled, np.zeros((0, labeled.dim)), client_id=-1
    )
    new_params, _ = client_update(params, view, cfg, tau=1.0, seed=seed)
    return new_params
