"""Synthetic datasets, labeled/unlabeled splitting, and client partitioning.

Two partition regimes are provided: quantity skew (clients receive random
shares of the data whose imbalance grows with ``sigma``) and class
availability skew (each client holds labeled samples from only a few
classes). Both conserve samples: every input row lands on exactly one
client.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError, ShapeError
from .rngutil import derive_rng

_CLASS_DRAW_MAX_TRIES = 1000


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


@dataclass
class Dataset:
    """Feature matrix with integer class labels.

    ``features`` is [N x d] float64, ``labels`` is [N] int64 with values in
    [0, num_classes). N may be zero for the empty dataset (used e.g. as the
    labeled part of an all-unlabeled client).
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise ShapeError("features must be a 2-D matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise ShapeError("labels must have one entry per feature row")
        if self.num_classes < 1:
            raise ParameterError("num_classes must be >= 1")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.num_classes
        ):
            raise ParameterError("labels must lie in [0, num_classes)")
        if self.features.size and not np.isfinite(self.features).all():
            raise ParameterError("features contain NaN or Inf")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def per_class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def subset(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.num_classes)


def empty_dataset(dim: int, num_classes: int) -> Dataset:
    return Dataset(
        np.zeros((0, dim)), np.zeros(0, dtype=np.int64), num_classes
    )


@dataclass(frozen=True)
class SplitSpec:
    """Labeled fraction L and utilized-unlabeled fraction U, both in (0, 1]."""

    L: float
    U: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.L <= 1.0:
            raise ParameterError(f"L must be in (0, 1], got {self.L}")
        if not 0.0 < self.U <= 1.0:
            raise ParameterError(f"U must be in (0, 1], got {self.U}")


@dataclass(frozen=True)
class PartitionSpec:
    """How to distribute data across clients.

    sigma controls quantity skew: client share weights are drawn from
    Uniform[1 - 2*sigma, 1 + 2*sigma] and normalized, so sigma=0 gives
    equal shares. class_mu/class_sigma_c configure class-availability
    skew: each client draws a class count uniformly from
    [mu*(1 - sigma_c), mu*(1 + sigma_c)], rounded and clamped to [1, C].
    """

    n_clients: int
    sigma: float = 0.0
    class_mu: int | None = None
    class_sigma_c: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_clients < 1:
            raise ParameterError("n_clients must be >= 1")
        if not 0.0 <= self.sigma <= 0.5:
            raise ParameterError(f"sigma must be in [0, 0.5], got {self.sigma}")
        if not 0.0 <= self.class_sigma_c <= 0.5:
            raise ParameterError(
                f"class_sigma_c must be in [0, 0.5], got {self.class_sigma_c}"
            )
        if self.class_mu is not None and self.class_mu < 1:
            raise ParameterError("class_mu must be >= 1 when present")


@dataclass
class ClientDataset:
    """One client's local data: a labeled set plus raw unlabeled features."""

    labeled: Dataset
    unlabeled_features: np.ndarray
    client_id: int

    def __post_init__(self):
        self.unlabeled_features = np.asarray(
            self.unlabeled_features, dtype=np.float64
        )
        if self.unlabeled_features.ndim != 2:
            raise ShapeError("unlabeled_features must be a 2-D matrix")
        if (
            self.labeled.n
            and self.unlabeled_features.shape[1] != self.labeled.dim
        ):
            raise ShapeError("labeled and unlabeled feature dims differ")

    @property
    def n_labeled(self) -> int:
        return self.labeled.n

    @property
    def n_unlabeled(self) -> int:
        return self.unlabeled_features.shape[0]

    @property
    def n_total(self) -> int:
        return self.n_labeled + self.n_unlabeled


def make_blobs(
    n: int, num_classes: int, dim: int, spread: float, seed: int
) -> Dataset:
    """Balanced Gaussian-cluster classification data.

    Cluster centers are drawn standard-normal per seed; each sample is its
    class center plus isotropic noise of scale ``spread``. Class sizes are
    balanced to within one sample, samples grouped by class.
    """
    if num_classes < 1:
        raise ParameterError("num_classes must be >= 1")
    if n < num_classes:
        raise ParameterError(f"need n >= num_classes, got n={n}, C={num_classes}")
    if dim < 2:
        raise ParameterError("dim must be >= 2")
    if spread < 0:
        raise ParameterError("spread must be >= 0")
    rng = derive_rng(seed, "blobs")
    centers = rng.standard_normal((num_classes, dim))
    counts = np.full(num_classes, n // num_classes, dtype=np.int64)
    counts[: n % num_classes] += 1
    feats = []
    labels = []
    for c in range(num_classes):
        feats.append(centers[c] + spread * rng.standard_normal((counts[c], dim)))
        labels.append(np.full(counts[c], c, dtype=np.int64))
    return Dataset(np.vstack(feats), np.concatenate(labels), num_classes)


def split_labeled(
    dataset: Dataset, spec: SplitSpec, seed: int
) -> tuple[Dataset, Dataset]:
    """Carve a class-ratio-preserving labeled subset out of a dataset.

    Each class contributes round(L * N_c) samples (at least one) to the
    labeled part. From the leftover pool a fraction U is kept as the
    unlabeled part, sampled uniformly; the rest is discarded.
    """
    if spec.L * dataset.n < dataset.num_classes:
        raise ParameterError(
            "labeled fraction too small: L*N must be >= num_classes"
        )
    rng = derive_rng(seed, "split")
    labeled_idx = []
    rest_idx = []
    for c in range(dataset.num_classes):
        members = np.flatnonzero(dataset.labels == c)
        if members.size == 0:
            continue
        take = max(1, _round_half_up(spec.L * members.size))
        take = min(take, members.size)
        perm = rng.permutation(members)
        labeled_idx.append(perm[:take])
        rest_idx.append(perm[take:])
    labeled_idx = np.sort(np.concatenate(labeled_idx))
    rest_idx = np.concatenate(rest_idx) if rest_idx else np.zeros(0, np.int64)
    n_unlab = _round_half_up(spec.U * rest_idx.size)
    unlabeled_idx = np.sort(rng.permutation(rest_idx)[:n_unlab])
    return dataset.subset(labeled_idx), dataset.subset(unlabeled_idx)


def split_holdout(
    dataset: Dataset, fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Stratified train/test split; ``fraction`` of each class goes to test."""
    if not 0.0 < fraction < 1.0:
        raise ParameterError("holdout fraction must be in (0, 1)")
    rng = derive_rng(seed, "holdout")
    test_idx = []
    train_idx = []
    for c in range(dataset.num_classes):
        members = np.flatnonzero(dataset.labels == c)
        take = max(1, _round_half_up(fraction * members.size))
        take = min(take, members.size)
        perm = rng.permutation(members)
        test_idx.append(perm[:take])
        train_idx.append(perm[take:])
    train = dataset.subset(np.sort(np.concatenate(train_idx)))
    test = dataset.subset(np.sort(np.concatenate(test_idx)))
    return train, test


def _share_counts(total: int, weights: np.ndarray) -> np.ndarray:
    # Floor each share, then hand the rounding residue to clients in
    # ascending id order, one sample each.
    base = np.floor(weights * total).astype(np.int64)
    residue = total - int(base.sum())
    base[:residue] += 1
    return base


def _skew_weights(n_clients: int, sigma: float, rng) -> np.ndarray:
    w = rng.uniform(1.0 - 2.0 * sigma, 1.0 + 2.0 * sigma, n_clients)
    return w / w.sum()


def partition_quantity_skew(
    labeled: Dataset, unlabeled: Dataset, spec: PartitionSpec
) -> list[ClientDataset]:
    """Distribute labeled and unlabeled data independently across clients.

    Share weights are drawn per client from Uniform[1-2s, 1+2s] and
    normalized (one independent draw per subset), so sigma=0 yields equal
    shares. Every sample is assigned to exactly one client.
    """
    rng = derive_rng(spec.seed, "qskew")
    dim = labeled.dim if labeled.n else unlabeled.dim

    def _slices(ds: Dataset):
        weights = _skew_weights(spec.n_clients, spec.sigma, rng)
        counts = _share_counts(ds.n, weights)
        order = rng.permutation(ds.n)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        return [order[bounds[k]: bounds[k + 1]] for k in range(spec.n_clients)]

    lab_parts = _slices(labeled)
    unlab_parts = _slices(unlabeled)
    clients = []
    for k in range(spec.n_clients):
        lab = labeled.subset(np.sort(lab_parts[k])) if labeled.n else empty_dataset(
            dim, labeled.num_classes
        )
        unlab = unlabeled.features[np.sort(unlab_parts[k])]
        clients.append(ClientDataset(lab, unlab, client_id=k))
    return clients


def partition_class_availability(
    labeled: Dataset, spec: PartitionSpec
) -> list[ClientDataset]:
    """Give each client labeled samples from only a few classes.

    Per client a class count is drawn uniformly from
    [mu*(1-sigma_c), mu*(1+sigma_c)], rounded, clamped to [1, C], and that
    many distinct classes are chosen uniformly. Each class's samples are
    then split evenly among the clients holding it. The class assignment
    is redrawn (deterministically) until every class with samples has at
    least one holder, so the partition conserves all input samples.
    Unlabeled data is not handled here; pair with partition_quantity_skew.
    """
    if spec.class_mu is None:
        raise ParameterError("class_mu must be set for class-availability skew")
    c_total = labeled.num_classes
    mu = spec.class_mu
    if mu > c_total:
        raise ParameterError(f"class_mu={mu} exceeds num_classes={c_total}")
    lo = mu * (1.0 - spec.class_sigma_c)
    hi = mu * (1.0 + spec.class_sigma_c)
    hi_count = min(c_total, max(1, _round_half_up(hi)))
    present = np.flatnonzero(labeled.per_class_counts() > 0)
    if spec.n_clients * hi_count < present.size:
        raise ParameterError(
            "clients cannot cover every class: n_clients * max_count < classes"
        )
    rng = derive_rng(spec.seed, "classskew")
    class_sets = None
    for _ in range(_CLASS_DRAW_MAX_TRIES):
        draws = rng.uniform(lo, hi, spec.n_clients)
        counts = np.clip(
            np.floor(draws + 0.5).astype(np.int64), 1, c_total
        )
        candidate = [
            np.sort(rng.choice(c_total, size=int(m), replace=False))
            for m in counts
        ]
        covered = np.zeros(c_total, dtype=bool)
        for cs in candidate:
            covered[cs] = True
        if covered[present].all():
            class_sets = candidate
            break
    if class_sets is None:
        raise ParameterError(
            "could not draw a class assignment covering every class; "
            "raise class_mu or n_clients"
        )
    assignments: list[list[np.ndarray]] = [[] for _ in range(spec.n_clients)]
    for c in present:
        holders = [k for k in range(spec.n_clients) if c in class_sets[k]]
        members = rng.permutation(np.flatnonzero(labeled.labels == c))
        shares = np.full(len(holders), members.size // len(holders), np.int64)
        shares[: members.size % len(holders)] += 1
        bounds = np.concatenate([[0], np.cumsum(shares)])
        for pos, k in enumerate(holders):
            assignments[k].append(members[bounds[pos]: bounds[pos + 1]])
    clients = []
    for k in range(spec.n_clients):
        idx = (
            np.sort(np.concatenate(assignments[k]))
            if assignments[k]
            else np.zeros(0, np.int64)
        )
        clients.append(
            ClientDataset(
                labeled.subset(idx),
                np.zeros((0, labeled.dim)),
                client_id=k,
            )
        )
    return clients


def partition_clients(
    labeled: Dataset, unlabeled: Dataset, spec: PartitionSpec
) -> list[ClientDataset]:
    """Dispatch on the spec: class-availability skew when class_mu is set,
    plain quantity skew otherwise. Unlabeled data always follows quantity
    skew with no class restriction."""
    if spec.class_mu is None:
        return partition_quantity_skew(labeled, unlabeled, spec)
    by_class = partition_class_availability(labeled, spec)
    unlab_only = partition_quantity_skew(
        empty_dataset(labeled.dim, labeled.num_classes), unlabeled, spec
    )
    return [
        ClientDataset(lab.labeled, un.unlabeled_features, client_id=k)
        for k, (lab, un) in enumerate(zip(by_class, unlab_only))
    ]


def save_columnar(path, features: np.ndarray, labels: np.ndarray, num_classes: int):
    """Write the columnar text format: header "n d C", then one sample per
    line as d floats plus a label (-1 marks an unlabeled row)."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    lines = [f"{features.shape[0]} {features.shape[1]} {num_classes}"]
    for row, lab in zip(features, labels):
        lines.append(
            " ".join(f"{v:.17g}" for v in row) + f" {int(lab)}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_columnar(path) -> tuple[np.ndarray, np.ndarray, int]:
    text = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not text:
        raise ParameterError(f"{path}: empty dataset file")
    head = text[0].split()
    if len(head) != 3:
        raise ParameterError(f"{path}: header must be 'n d C'")
    n, d, c = (int(x) for x in head)
    if len(text) - 1 != n:
        raise ParameterError(f"{path}: expected {n} rows, found {len(text) - 1}")
    feats = np.zeros((n, d))
    labels = np.zeros(n, dtype=np.int64)
    for i, line in enumerate(text[1:]):
        parts = line.split()
        if len(parts) != d + 1:
            raise ParameterError(f"{path}: row {i} has {len(parts)} fields, wanted {d + 1}")
        feats[i] = [float(x) for x in parts[:d]]
        labels[i] = int(parts[d])
    return feats, labels, c


def save_dataset(path, dataset: Dataset):
    save_columnar(path, dataset.features, dataset.labels, dataset.num_classes)


def load_dataset(path) -> Dataset:
    feats, labels, c = load_columnar(path)
    if (labels < 0).any():
        raise ParameterError(f"{path}: unlabeled rows (-1) not allowed here")
    return Dataset(feats, labels, c)


def save_client(path, client: ClientDataset):
    """Serialize a client's labeled + unlabeled data in one columnar file."""
    feats = np.vstack([client.labeled.features, client.unlabeled_features])
    labels = np.concatenate(
        [client.labeled.labels, np.full(client.n_unlabeled, -1, np.int64)]
    )
    save_columnar(path, feats, labels, client.labeled.num_classes)


def load_client(path, client_id: int = 0) -> ClientDataset:
    feats, labels, c = load_columnar(path)
    lab_mask = labels >= 0
    labeled = Dataset(feats[lab_mask], labels[lab_mask], c)
    return ClientDataset(labeled, feats[~lab_mask], client_id=client_id)
