"""Server loop: client sampling, local updates, weighted averaging.

Each round broadcasts the global parameters to a uniformly sampled cohort,
runs every selected client's local update independently, and aggregates
the results by a sample-count-weighted mean. All per-round and per-client
randomness derives hierarchically from the federation seed, so runs are
bitwise reproducible and independent of client execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import ClientDataset, Dataset
from .errors import ParameterError, ShapeError
from .nn import ModelParams, evaluate
from .rngutil import derive_rng, derive_seed
from .selftrain import (
    ClientStats,
    SelfTrainConfig,
    client_update,
    supervised_update,
    threshold_at,
)

MODE_SUPERVISED = "supervised_fl"
MODE_FEDSTAR = "fedstar"
MODES = (MODE_SUPERVISED, MODE_FEDSTAR)


@dataclass(frozen=True)
class FederationConfig:
    num_clients: int
    rounds: int
    participation: float
    selftrain: SelfTrainConfig
    mode: str
    seed: int = 0

    def __post_init__(self):
        if self.num_clients < 1:
            raise ParameterError("num_clients must be >= 1")
        if self.rounds < 0:
            raise ParameterError("rounds must be >= 0")
        if not 0.0 < self.participation <= 1.0:
            raise ParameterError("participation must be in (0, 1]")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass(frozen=True)
class RoundRecord:
    round: int
    participating: tuple[int, ...]
    global_test_accuracy: float
    mean_train_loss: float
    pseudo_acceptance_rate: float
    tau: float


@dataclass
class FederationHistory:
    records: list[RoundRecord]
    final_params: ModelParams
    config: FederationConfig

    def accuracies(self) -> list[float]:
        return [r.global_test_accuracy for r in self.records]

    @property
    def final_accuracy(self) -> float:
        if not self.records:
            raise ParameterError("empty history has no final accuracy")
        return self.records[-1].global_test_accuracy


def cohort_size(num_clients: int, participation: float) -> int:
    return max(1, int(np.floor(participation * num_clients + 0.5)))


def sample_clients(
    num_clients: int, participation: float, round_seed: int
) -> tuple[int, ...]:
    """Uniformly sample max(1, round(q*N)) distinct client ids."""
    if num_clients < 1:
        raise ParameterError("num_clients must be >= 1")
    rng = derive_rng(round_seed, "cohort")
    size = cohort_size(num_clients, participation)
    ids = rng.choice(num_clients, size=size, replace=False)
    return tuple(int(i) for i in np.sort(ids))


def fedavg_aggregate(
    updates: list[tuple[ModelParams, int]]
) -> ModelParams:
    """Coordinatewise mean of client parameters weighted by sample counts.

    Weights are n_k / sum(n_k) over the given updates; summation runs
    left-to-right, so callers fix the order (ascending client id in
    run_federation) for bitwise reproducibility.
    """
    if not updates:
        raise ParameterError("cannot aggregate an empty update list")
    ref = updates[0][0]
    for p, n_k in updates:
        if n_k < 1:
            raise ParameterError("aggregation weights must be >= 1")
        if p.arch != ref.arch:
            raise ShapeError("client parameter shapes differ")
    total = float(sum(n for _, n in updates))
    acc = None
    for p, n_k in updates:
        w = n_k / total
        if acc is None:
            acc = [(w * lw, w * lb) for lw, lb in p.layers]
        else:
            acc = [
                (aw + w * lw, ab + w * lb)
                for (aw, ab), (lw, lb) in zip(acc, p.layers)
            ]
    return ModelParams(acc, ref.arch)


def _labeled_only(client: ClientDataset) -> ClientDataset:
    return ClientDataset(
        client.labeled,
        np.zeros((0, client.labeled.dim)),
        client_id=client.client_id,
    )


def run_federation(
    cfg: FederationConfig,
    clients: list[ClientDataset],
    test: Dataset,
    init: ModelParams,
) -> FederationHistory:
    """Run R rounds of federated training from the given initial weights.

    Round r uses confidence threshold threshold_at(r, R): the first round
    trains at tau_min and the threshold climbs toward tau_max. In fedstar
    mode clients train on labeled plus pseudo-labeled data and aggregate
    with weight n_labeled + n_unlabeled; in supervised_fl mode clients see
    only their labeled data and weigh in with n_labeled.
    """
    if len(clients) != cfg.num_clients:
        raise ParameterError(
            f"expected {cfg.num_clients} clients, got {len(clients)}"
        )
    ids = [c.client_id for c in clients]
    if sorted(ids) != list(range(cfg.num_clients)):
        raise ParameterError("client ids must be exactly 0..N-1 and unique")
    for c in clients:
        if c.n_labeled == 0:
            raise ParameterError(
                f"client {c.client_id} has no labeled data; the supervised "
                "loss term is undefined"
            )
    by_id = {c.client_id: c for c in clients}
    st = cfg.selftrain
    params = init
    records = []
    for r in range(cfg.rounds):
        tau = threshold_at(r, cfg.rounds, st.tau_min, st.tau_max)
        cohort = sample_clients(
            cfg.num_clients, cfg.participation, derive_seed(cfg.seed, "round", r)
        )
        updates: list[tuple[ModelParams, int]] = []
        stats: list[ClientStats] = []
        for k in cohort:
            client = by_id[k]
            client_seed = derive_seed(cfg.seed, "client", r, k)
            if cfg.mode == MODE_FEDSTAR:
                new_params, stat = client_update(params, client, st, tau, client_seed)
                weight = client.n_total
            else:
                new_params, stat = client_update(
                    params, _labeled_only(client), st, tau, client_seed
                )
                weight = client.n_labeled
            updates.append((new_params, weight))
            stats.append(stat)
        params = fedavg_aggregate(updates)
        total_cand = sum(s.n_pseudo_candidates for s in stats)
        total_acc = sum(s.n_pseudo_accepted for s in stats)
        records.append(
            RoundRecord(
                round=r,
                participating=cohort,
                global_test_accuracy=evaluate(params, test),
                mean_train_loss=float(np.mean([s.mean_loss for s in stats])),
                pseudo_acceptance_rate=(
                    total_acc / total_cand if total_cand else 0.0
                ),
                tau=tau,
            )
        )
    return FederationHistory(records=records, final_params=params, config=cfg)


def centralized_train(
    dataset: Dataset, cfg: FederationConfig, init: ModelParams
) -> ModelParams:
    """Pooled-data baseline: R repetitions of an E-epoch minibatch Adam
    pass (R*E epochs total), with the optimizer state and batch order
    reseeded per repetition exactly as a single-client federation would,
    so the two produce identical parameters."""
    if dataset.n == 0:
        raise ParameterError("centralized_train requires a non-empty dataset")
    params = init
    for r in range(cfg.rounds):
        params = supervised_update(
            params, dataset, cfg.selftrain, derive_seed(cfg.seed, "client", r, 0)
        )
    return params
