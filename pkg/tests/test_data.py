"""Unit tests for dataset generation, splitting, and client partitioning."""

import numpy as np
import pytest

from fedstar import (
    Dataset,
    ParameterError,
    PartitionSpec,
    SplitSpec,
    load_dataset,
    make_blobs,
    partition_class_availability,
    partition_clients,
    partition_quantity_skew,
    save_dataset,
    split_holdout,
    split_labeled,
)
from fedstar.data import (
    empty_dataset,
    load_client,
    load_columnar,
    save_client,
    save_columnar,
)


def _row_multiset(features, labels):
    return sorted(
        (feat.tobytes(), int(lab)) for feat, lab in zip(features, labels)
    )


# ---------------------------------------------------------------- blobs

def test_blobs_balanced_exactly():
    ds = make_blobs(100, 10, 4, spread=1.0, seed=0)
    assert list(ds.per_class_counts()) == [10] * 10


def test_blobs_balanced_within_one():
    ds = make_blobs(103, 10, 4, spread=1.0, seed=0)
    counts = ds.per_class_counts()
    assert counts.sum() == 103
    assert counts.max() - counts.min() == 1


def test_blobs_deterministic():
    a = make_blobs(50, 5, 3, spread=0.7, seed=9)
    b = make_blobs(50, 5, 3, spread=0.7, seed=9)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(a.labels, b.labels)


def test_blobs_zero_spread_centroid_classifier_is_perfect():
    ds = make_blobs(200, 8, 5, spread=1e-9, seed=4)
    centroids = np.vstack(
        [ds.features[ds.labels == c].mean(axis=0) for c in range(8)]
    )
    dists = ((ds.features[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    pred = np.argmin(dists, axis=1)
    assert np.mean(pred == ds.labels) == 1.0


def test_blobs_validation():
    with pytest.raises(ParameterError):
        make_blobs(5, 10, 4, spread=1.0, seed=0)
    with pytest.raises(ParameterError):
        make_blobs(50, 10, 1, spread=1.0, seed=0)


# ---------------------------------------------------------------- split_labeled

def test_split_full_labeled_boundary():
    ds = make_blobs(60, 6, 3, spread=1.0, seed=1)
    labeled, unlabeled = split_labeled(ds, SplitSpec(L=1.0), seed=2)
    assert labeled.n == 60
    assert unlabeled.n == 0


def test_split_per_class_counts():
    ds = make_blobs(1000, 10, 4, spread=1.0, seed=2)
    labeled, _ = split_labeled(ds, SplitSpec(L=0.03), seed=3)
    assert labeled.n == 30
    assert list(labeled.per_class_counts()) == [3] * 10


def test_split_ratio_preserved_within_one_sample():
    ds = make_blobs(900, 9, 4, spread=1.0, seed=5)
    for seed in range(20):
        labeled, _ = split_labeled(ds, SplitSpec(L=0.07), seed=seed)
        for c in range(9):
            frac = labeled.per_class_counts()[c] / labeled.n
            assert abs(frac - ds.per_class_counts()[c] / ds.n) <= 1.0 / labeled.n


def test_split_disjoint_and_u_fraction():
    ds = make_blobs(400, 4, 3, spread=1.0, seed=6)
    labeled, unlabeled = split_labeled(ds, SplitSpec(L=0.1, U=0.5), seed=7)
    assert labeled.n == 40
    assert unlabeled.n == 180  # half of the 360 leftovers
    lab_rows = {f.tobytes() for f in labeled.features}
    unlab_rows = {f.tobytes() for f in unlabeled.features}
    assert not lab_rows & unlab_rows


def test_split_too_small_errors():
    ds = make_blobs(100, 10, 4, spread=1.0, seed=8)
    with pytest.raises(ParameterError):
        split_labeled(ds, SplitSpec(L=0.05), seed=0)  # L*N = 5 < C = 10


def test_split_spec_validation():
    with pytest.raises(ParameterError):
        SplitSpec(L=0.0)
    with pytest.raises(ParameterError):
        SplitSpec(L=0.5, U=1.5)


def test_split_holdout_stratified():
    ds = make_blobs(500, 5, 4, spread=1.0, seed=9)
    train, test = split_holdout(ds, 0.2, seed=10)
    assert train.n + test.n == 500
    assert list(test.per_class_counts()) == [20] * 5


# ---------------------------------------------------------------- quantity skew

def test_quantity_skew_equal_shares_at_sigma_zero():
    labeled = make_blobs(100, 5, 3, spread=1.0, seed=11)
    unlabeled = make_blobs(200, 5, 3, spread=1.0, seed=12)
    spec = PartitionSpec(n_clients=4, sigma=0.0, seed=13)
    clients = partition_quantity_skew(labeled, unlabeled, spec)
    assert [c.n_labeled for c in clients] == [25] * 4
    assert [c.n_unlabeled for c in clients] == [50] * 4


def test_quantity_skew_conserves_everything():
    labeled = make_blobs(97, 5, 3, spread=1.0, seed=14)
    unlabeled = make_blobs(143, 5, 3, spread=1.0, seed=15)
    for seed in range(10):
        spec = PartitionSpec(n_clients=6, sigma=0.4, seed=seed)
        clients = partition_quantity_skew(labeled, unlabeled, spec)
        got_lab = _row_multiset(
            np.vstack([c.labeled.features for c in clients]),
            np.concatenate([c.labeled.labels for c in clients]),
        )
        assert got_lab == _row_multiset(labeled.features, labeled.labels)
        got_unlab = sorted(
            row.tobytes()
            for c in clients
            for row in c.unlabeled_features
        )
        assert got_unlab == sorted(row.tobytes() for row in unlabeled.features)


def test_quantity_skew_single_client_gets_all():
    labeled = make_blobs(40, 4, 3, spread=1.0, seed=16)
    unlabeled = make_blobs(60, 4, 3, spread=1.0, seed=17)
    clients = partition_quantity_skew(
        labeled, unlabeled, PartitionSpec(n_clients=1, sigma=0.5, seed=1)
    )
    assert len(clients) == 1
    assert clients[0].n_labeled == 40
    assert clients[0].n_unlabeled == 60
    assert clients[0].n_total == 100


def test_quantity_skew_deterministic():
    labeled = make_blobs(80, 4, 3, spread=1.0, seed=18)
    unlabeled = empty_dataset(3, 4)
    spec = PartitionSpec(n_clients=5, sigma=0.3, seed=44)
    a = partition_quantity_skew(labeled, unlabeled, spec)
    b = partition_quantity_skew(labeled, unlabeled, spec)
    for ca, cb in zip(a, b):
        assert np.array_equal(ca.labeled.features, cb.labeled.features)


def test_sigma_monotonic_size_variance():
    labeled = make_blobs(600, 6, 3, spread=1.0, seed=19)
    unlabeled = empty_dataset(3, 6)
    variances = []
    for sigma in (0.0, 0.125, 0.25, 0.375, 0.5):
        sizes = []
        for seed in range(100):
            clients = partition_quantity_skew(
                labeled, unlabeled, PartitionSpec(n_clients=8, sigma=sigma, seed=seed)
            )
            sizes.extend(c.n_labeled for c in clients)
        variances.append(np.var(sizes))
    assert all(a <= b + 1e-9 for a, b in zip(variances, variances[1:]))


# ---------------------------------------------------------------- class skew

def test_class_availability_full_coverage_degenerate():
    labeled = make_blobs(240, 12, 4, spread=1.0, seed=20)
    spec = PartitionSpec(n_clients=5, class_mu=12, class_sigma_c=0.0, seed=21)
    clients = partition_class_availability(labeled, spec)
    for c in clients:
        assert (c.labeled.per_class_counts() > 0).all()


def test_class_availability_exact_three_classes():
    labeled = make_blobs(600, 12, 4, spread=1.0, seed=22)
    for seed in range(10):
        spec = PartitionSpec(n_clients=15, class_mu=3, class_sigma_c=0.0, seed=seed)
        clients = partition_class_availability(labeled, spec)
        for c in clients:
            assert (c.labeled.per_class_counts() > 0).sum() == 3


def test_class_availability_count_bounds():
    labeled = make_blobs(480, 12, 4, spread=1.0, seed=23)
    lo = round(3 * (1 - 0.5))
    hi = round(3 * (1 + 0.5))
    counts = []
    for seed in range(1000):
        spec = PartitionSpec(
            n_clients=6, class_mu=3, class_sigma_c=0.5, seed=seed
        )
        clients = partition_class_availability(labeled, spec)
        counts.extend(
            int((c.labeled.per_class_counts() > 0).sum()) for c in clients
        )
    assert min(counts) >= lo
    assert max(counts) <= hi
    assert len(set(counts)) > 1  # the draw actually varies


def test_class_availability_conserves_samples():
    labeled = make_blobs(333, 9, 4, spread=1.0, seed=24)
    for seed in range(10):
        spec = PartitionSpec(n_clients=7, class_mu=3, class_sigma_c=0.25, seed=seed)
        clients = partition_class_availability(labeled, spec)
        got = _row_multiset(
            np.vstack([c.labeled.features for c in clients]),
            np.concatenate([c.labeled.labels for c in clients]),
        )
        assert got == _row_multiset(labeled.features, labeled.labels)


def test_class_availability_validation():
    labeled = make_blobs(60, 6, 3, spread=1.0, seed=25)
    with pytest.raises(ParameterError):
        partition_class_availability(
            labeled, PartitionSpec(n_clients=4, class_mu=7, seed=0)
        )
    with pytest.raises(ParameterError):
        partition_class_availability(
            labeled, PartitionSpec(n_clients=4, seed=0)
        )


def test_partition_clients_dispatch():
    labeled = make_blobs(200, 10, 4, spread=1.0, seed=26)
    unlabeled = make_blobs(300, 10, 4, spread=1.0, seed=27)
    plain = partition_clients(
        labeled, unlabeled, PartitionSpec(n_clients=5, sigma=0.25, seed=28)
    )
    assert sum(c.n_unlabeled for c in plain) == 300
    skewed = partition_clients(
        labeled,
        unlabeled,
        PartitionSpec(n_clients=5, sigma=0.25, class_mu=3, seed=28),
    )
    assert sum(c.n_unlabeled for c in skewed) == 300
    assert sum(c.n_labeled for c in skewed) == 200
    for c in skewed:
        # labeled data restricted to a few classes, unlabeled unrestricted
        assert (c.labeled.per_class_counts() > 0).sum() <= 5
    assert [c.client_id for c in skewed] == list(range(5))


# ---------------------------------------------------------------- columnar io

def test_dataset_roundtrip(tmp_path):
    ds = make_blobs(37, 4, 5, spread=0.9, seed=29)
    path = tmp_path / "data.txt"
    save_dataset(path, ds)
    back = load_dataset(path)
    assert np.array_equal(back.features, ds.features)
    assert np.array_equal(back.labels, ds.labels)
    assert back.num_classes == 4


def test_columnar_header_and_unlabeled_rows(tmp_path):
    path = tmp_path / "mixed.txt"
    feats = np.array([[1.5, -2.0], [0.25, 3.5], [0.0, 1.0]])
    labels = np.array([2, -1, 0])
    save_columnar(path, feats, labels, 3)
    first = path.read_text().splitlines()[0]
    assert first == "3 2 3"
    f2, l2, c2 = load_columnar(path)
    assert np.array_equal(f2, feats) and np.array_equal(l2, labels) and c2 == 3
    with pytest.raises(ParameterError):
        load_dataset(path)  # -1 rows rejected for plain datasets


def test_client_roundtrip(tmp_path):
    labeled = make_blobs(20, 4, 3, spread=1.0, seed=30)
    clients = partition_quantity_skew(
        labeled,
        make_blobs(30, 4, 3, spread=1.0, seed=31),
        PartitionSpec(n_clients=2, seed=32),
    )
    path = tmp_path / "client.txt"
    save_client(path, clients[0])
    back = load_client(path, client_id=0)
    assert np.array_equal(back.labeled.features, clients[0].labeled.features)
    assert np.array_equal(back.unlabeled_features, clients[0].unlabeled_features)


def test_dataset_type_validation():
    with pytest.raises(ParameterError):
        Dataset(np.zeros((2, 3)), np.array([0, 5]), 3)
    with pytest.raises(ParameterError):
        Dataset(np.array([[np.inf, 0.0]]), np.array([0]), 2)
